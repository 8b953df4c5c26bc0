#pragma once

#include <sfmap/sfm.hpp>
#include <sfmap/spectrum.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sfmap {

// ---------------------------------------------------------------------------
// Distances

struct DistanceMatrix
{
    Eigen::MatrixXd D; ///< symmetric, zero diagonal
    std::vector<std::string> shape_ids;

    Eigen::Index size() const { return D.rows(); }
};

/// Pairwise sfm_distance(); evaluated once per unordered pair.
DistanceMatrix distance_matrix(const std::vector<SelfFunctionalMap>& maps);

/// Header row ",id_0,...,id_{N-1}", then one row per shape led by its id.
void write_distance_csv(std::ostream& out, const DistanceMatrix& dm);
DistanceMatrix read_distance_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Classification

struct Labeling
{
    std::vector<int> predicted;                  ///< cluster per shape, in [0, k)
    std::optional<std::vector<int>> true_labels; ///< class per shape
    std::optional<Eigen::MatrixXd> confusion;    ///< k x k, row-stochastic
};

struct KMeansOptions
{
    int restarts = 200;
    int max_iterations = 100;
    std::uint64_t seed = 0;
};

struct KMeansResult
{
    Labeling labeling;
    double cost = 0.0;                 ///< sum of aligned L1 misfits to centroids
    std::vector<double> cost_history;  ///< per Lloyd iteration of the winning restart
    std::vector<Eigen::MatrixXd> centroids;
};

///
/// Lloyd iteration in flattened-matrix space under the sign-invariant L1
/// misfit: each map is sign-aligned to every centroid and assigned to the
/// closest; centroids are coordinate-wise medians of their aligned members.
/// Initialization is k-means++ over the pairwise squared-L1 distances. The
/// best restart by (cost, restart index) wins. Cluster ids are numbered by
/// first appearance.
///
KMeansResult kmeans_classify(const std::vector<SelfFunctionalMap>& maps, int k, const KMeansOptions& options = {});

struct ConfusionResult
{
    Eigen::MatrixXd matrix;            ///< row i: fraction of class-i shapes per matched class
    std::vector<int> cluster_to_class; ///< matching used
};

///
/// Maps clusters to classes by the permutation that maximizes the diagonal
/// count (exhaustive for k <= 8, Hungarian algorithm above), then
/// normalizes each row by the class size.
///
ConfusionResult confusion_matrix(const std::vector<int>& predicted, const std::vector<int>& true_labels, int k);

/// Maximum-weight perfect assignment; result[r] is the column for row r.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight);

/// Mean silhouette coefficient of @p points (rows) under @p labels.
double silhouette_score(const Eigen::MatrixXd& points, const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Embedding

enum class MdsMode { nonmetric, metric };

struct MdsOptions
{
    MdsMode mode = MdsMode::nonmetric;
    int random_restarts = 4;
    int max_iterations = 500;
    double tolerance = 1e-6;
    std::uint64_t seed = 0;
};

struct Embedding
{
    Eigen::MatrixXd points; ///< N x d
    double stress = 0.0;    ///< normalized stress of the final configuration
    int d = 0;
    std::vector<double> stress_history; ///< per iteration of the winning run
    std::vector<std::vector<double>> run_histories; ///< every start, classical first
};

/// Classical (Torgerson) scaling of a distance matrix.
Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& D, int d);

/// Weighted-free pool-adjacent-violators fit: nondecreasing sequence
/// closest to @p values in least squares.
Eigen::VectorXd isotonic_regression(const Eigen::VectorXd& values);

///
/// SMACOF stress majorization. Nonmetric mode alternates Guttman transforms
/// with a normalized monotone regression of disparities on the dissimilarity
/// order (ties may be broken); metric mode uses the dissimilarities as
/// fixed disparities. Stress is sqrt(sum (dhat - d)^2 / sum dhat^2), with
/// sum dhat^2 held fixed, and never increases between iterations. Starts
/// from classical MDS plus seeded random configurations; the lowest final
/// stress wins, ties to the earlier start.
///
Embedding mds_embed(const DistanceMatrix& dm, int d, const MdsOptions& options = {});

// ---------------------------------------------------------------------------
// Matching

/// Spectral data of one shape needed for matching.
struct ShapeBases
{
    SpectralBasis regular;
    SpectralBasis scale_invariant;
    Eigen::VectorXd mass; ///< K*A of the shape
};

struct MatchResult
{
    std::vector<VertexIndex> correspondence; ///< Q-vertex per S-vertex
    Eigen::MatrixXd soft_map;                ///< |V_Q| x |V_S|
    Eigen::MatrixXd consistency;             ///< <phi^Q_i, P phi~^S_j> in the Q mass
    double consistency_error = 0.0;          ///< max |consistency - rho|
};

///
/// Transfers functions from S to Q through the self functional map of S:
/// P = Phi^Q G^-1 rho Phi~^S^T D_S, with rho = C_S^T (regular x scale
/// invariant), D_S the K*A mass of S and G = Phi^Q^T D_Q Phi^Q the Gram
/// matrix of the regular basis of Q. The point map takes the largest entry
/// of every column.
///
MatchResult match_shapes(const ShapeBases& source, const ShapeBases& target, const SelfFunctionalMap& source_map);

// ---------------------------------------------------------------------------
// Report files

/// "shape_id,predicted,true"; true is empty when unknown.
void write_labels_csv(std::ostream& out, const std::vector<std::string>& ids, const Labeling& labeling);
/// Aligned plain-text table with class names on both axes.
void write_confusion_table(std::ostream& out, const Eigen::MatrixXd& confusion, const std::vector<std::string>& classes);
void write_confusion_csv(std::ostream& out, const Eigen::MatrixXd& confusion, const std::vector<std::string>& classes);
/// "shape_id,x1..xd,class".
void write_embedding_csv(std::ostream& out, const std::vector<std::string>& ids, const Embedding& embedding,
    const std::vector<std::string>& classes);
/// Scatter plot; 3D embeddings are drawn in spherical angular coordinates.
void write_embedding_svg(std::ostream& out, const std::vector<std::string>& ids, const Embedding& embedding,
    const std::vector<std::string>& classes);

} // namespace sfmap
