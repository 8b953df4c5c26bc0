#pragma once

#include <sfmap/mesh.hpp>
#include <sfmap/operators.hpp>
#include <sfmap/spectrum.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace sfmap {

/// Default basis sizes (m = n = 7).
inline constexpr Eigen::Index kDefaultBasisSize = 7;
/// Largest regular basis size sign_align() will search exhaustively.
inline constexpr Eigen::Index kMaxAlignColumns = 20;

///
/// Self functional map of one surface: C(p, q) = <phi~_p, phi_q> in the
/// K*A inner product, rows over the scale-invariant basis, columns over
/// the regular basis.
///
struct SelfFunctionalMap
{
    Eigen::MatrixXd C; ///< m x n
    double epsilon = 0.0;
    std::string mesh_id;

    Eigen::Index m() const { return C.rows(); }
    Eigen::Index n() const { return C.cols(); }
};

/// Sign flips of rows (a) and columns (b); gauge fixed so that a[0] = +1.
struct SignVectors
{
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    double residual = 0.0; ///< entrywise L1 misfit achieved
};

struct SfmOptions
{
    Eigen::Index n = kDefaultBasisSize;
    Eigen::Index m = kDefaultBasisSize;
    EpsilonPolicy epsilon;
    SolverOptions solver;
};

/// C = Phi~^T (K A) Phi from two bases of the same operator set.
Eigen::MatrixXd interaction_matrix(const SpectralBasis& scale_invariant, const SpectralBasis& regular);

/// All intermediate products of one signature computation.
struct SfmComputation
{
    OperatorSet operators;
    SpectralBasis regular;
    SpectralBasis scale_invariant;
    SelfFunctionalMap map;
};

SfmComputation compute_sfm_full(const TriMesh& mesh, const SfmOptions& options, std::string mesh_id = {});
SelfFunctionalMap compute_sfm(const TriMesh& mesh, const SfmOptions& options = {}, std::string mesh_id = {});

///
/// Exact minimizer of ||reference - (a b^T) o C||_L1 over sign vectors.
///
/// Enumerates the 2^(n-1) column patterns with b[0] = +1; for each, every
/// row sign follows in closed form (ties pick +1). The result is reported
/// in the a[0] = +1 gauge. Cost O(2^n m n); refuses n > kMaxAlignColumns.
///
SignVectors sign_align(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& C);

/// (a b^T) o C.
Eigen::MatrixXd apply_signs(const Eigen::MatrixXd& C, const SignVectors& signs);

/// Squared L1 misfit after optimal sign alignment. Symmetric, zero on the
/// diagonal, invariant under rank-one sign flips of either argument.
double sfm_distance(const SelfFunctionalMap& x, const SelfFunctionalMap& y);
double sfm_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Aligns maps[i] against maps[reference[i]]; maps that reference
/// themselves are returned unchanged, and every alignment uses the
/// unaligned reference.
std::vector<SelfFunctionalMap> align_to_reference(
    const std::vector<SelfFunctionalMap>& maps,
    const std::vector<size_t>& reference);

/// Entrywise sum of absolute values.
double l1_norm(const Eigen::MatrixXd& C);

// ---------------------------------------------------------------------------
// Signature files

/// "m,n,epsilon,mesh_id" line, then m rows of n values at 17 digits.
void write_signature_csv(std::ostream& out, const SelfFunctionalMap& map);
SelfFunctionalMap read_signature_csv(std::istream& in);
void save_signature_csv(const std::filesystem::path& path, const SelfFunctionalMap& map);
SelfFunctionalMap load_signature_csv(const std::filesystem::path& path);

/// Binary PGM (P5), entries mapped affinely from [-1, 1] to [0, 255], each
/// entry drawn as a cell x cell block.
void write_signature_pgm(std::ostream& out, const SelfFunctionalMap& map, int cell = 1);
void save_signature_pgm(const std::filesystem::path& path, const SelfFunctionalMap& map, int cell = 1);

} // namespace sfmap
