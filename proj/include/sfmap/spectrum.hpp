#pragma once

#include <sfmap/operators.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace sfmap {

enum class Pencil {
    regular,         ///< (W, A)
    scale_invariant, ///< (W, K*A)
};

std::string_view to_string(Pencil pencil);
Pencil pencil_from_string(std::string_view text);

/// Largest problem sent to the dense LAPACK path by default. The dense
/// solve is O(|V|^3) and, on reference BLAS, already takes seconds near
/// 2500 unknowns where the iterative path needs a fraction of a second.
inline constexpr Eigen::Index kDefaultDenseThreshold = 1000;

struct SolverOptions
{
    /// Problems with at most this many unknowns use the dense LAPACK path.
    Eigen::Index dense_threshold = kDefaultDenseThreshold;
    /// Relative residual target for the iterative path.
    double tolerance = 1e-10;
    /// Iteration cap for the iterative path; 0 means 300 * k.
    int max_iterations = 0;
    /// Seed of the iterative path's starting block.
    std::uint64_t seed = 0x5eedULL;
};

/// Ascending eigenvalues and mass-orthonormal eigenvectors (one per column).
struct Eigenpairs
{
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

///
/// The k algebraically smallest eigenpairs of W x = lambda B x with
/// B = diag(mass).
///
/// Both paths work on the similar matrix S = B^-1/2 W B^-1/2 and map the
/// eigenvectors back, so that X^T B X = I. Columns follow the sign
/// convention of apply_sign_convention().
///
Eigenpairs smallest_eigenpairs(
    const SparseMatrix& W,
    const Eigen::VectorXd& mass,
    Eigen::Index k,
    const SolverOptions& options = {});

/// Dense symmetric solve (LAPACK dsyevr, index range 1..k).
Eigenpairs dense_smallest_eigenpairs(const SparseMatrix& W, const Eigen::VectorXd& mass, Eigen::Index k);

/// Shift-invert block subspace iteration with Rayleigh-Ritz extraction and
/// a full re-orthogonalization of the block at every step. Block size is
/// max(2k, k + 8), capped at the problem size.
///
/// Throws NumericalError carrying the worst residual if the cap is hit.
Eigenpairs iterative_smallest_eigenpairs(
    const SparseMatrix& W,
    const Eigen::VectorXd& mass,
    Eigen::Index k,
    const SolverOptions& options = {});

/// Flips columns so that each column's largest-magnitude entry is positive.
void apply_sign_convention(Eigen::MatrixXd& vectors);

/// Per-column ||W x - lambda B x||.
Eigen::VectorXd pencil_residuals(const SparseMatrix& W, const Eigen::VectorXd& mass, const Eigen::VectorXd& values,
    const Eigen::MatrixXd& vectors);

struct SpectralBasis
{
    Eigen::VectorXd eigenvalues;  ///< ascending
    Eigen::MatrixXd eigenvectors; ///< |V| x k, unit norm under norm_mass
    Eigen::VectorXd norm_mass;    ///< diagonal used for normalization (K*A)
    Pencil pencil = Pencil::regular;

    Eigen::Index size() const { return eigenvalues.size(); }
    Eigen::Index num_vertices() const { return eigenvectors.rows(); }
};

///
/// Eigenbasis of one pencil of @p ops. Columns of both pencils are rescaled
/// to unit norm in the K*A inner product (a no-op for the scale-invariant
/// pencil), then the sign convention is applied.
///
SpectralBasis build_basis(const OperatorSet& ops, Pencil pencil, Eigen::Index k, const SolverOptions& options = {});

/// Basis dump: "k,pencil,|V|", then the eigenvalues, then |V| rows of k
/// eigenvector entries. The normalization mass is not stored.
void write_basis_csv(std::ostream& out, const SpectralBasis& basis);
SpectralBasis read_basis_csv(std::istream& in);
void save_basis_csv(const std::filesystem::path& path, const SpectralBasis& basis);
SpectralBasis load_basis_csv(const std::filesystem::path& path);

} // namespace sfmap
