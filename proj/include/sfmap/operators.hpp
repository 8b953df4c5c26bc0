#pragma once

#include <sfmap/mesh.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string>
#include <string_view>
#include <vector>

namespace sfmap {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Lower bound applied to a relative epsilon, in mesh units^-2.
inline constexpr double kEpsilonFloor = 1e-8;

/// Curvature regularizer selection.
///
/// Relative mode resolves to max(value * median_i |raw K_i|, kEpsilonFloor),
/// which scales like curvature when the mesh is scaled. Absolute mode uses
/// value as-is.
struct EpsilonPolicy
{
    enum class Mode { absolute, relative };

    Mode mode = Mode::relative;
    double value = 1e-3;

    static EpsilonPolicy relative(double factor) { return {Mode::relative, factor}; }
    static EpsilonPolicy absolute(double epsilon) { return {Mode::absolute, epsilon}; }

    /// Accepts "rel:<factor>" or a bare positive number (absolute).
    static EpsilonPolicy parse(std::string_view text);
    std::string to_string() const;

    double resolve(const Eigen::VectorXd& raw_curvature) const;
};

/// Interior angles of every face, in face-corner order.
std::vector<Eigen::Vector3d> corner_angles(const TriMesh& mesh);

/// One third of the incident triangle areas per vertex.
Eigen::VectorXd vertex_areas(const TriMesh& mesh);

/// 2*pi (interior) or pi (boundary) minus the incident corner angles.
Eigen::VectorXd angle_deficits(const TriMesh& mesh);

/// Signed angle-deficit curvature, deficit_i / A_ii.
Eigen::VectorXd raw_gaussian_curvature(const TriMesh& mesh, const Eigen::VectorXd& areas);

/// Regularized absolute curvature sqrt((deficit_i / A_ii)^2 + eps^2).
Eigen::VectorXd gaussian_curvature(const TriMesh& mesh, const Eigen::VectorXd& areas, double epsilon);

/// Cotangent stiffness matrix. Off-diagonals are -(cot a + cot b)/2 (one
/// term on boundary edges), the diagonal makes every row sum to zero.
/// Obtuse triangles yield negative weights, which are kept.
///
/// Throws ValidationError if any corner angle is below 1e-6 rad.
SparseMatrix cotan_weights(const TriMesh& mesh);

struct OperatorSet
{
    SparseMatrix W;     ///< cotangent stiffness
    Eigen::VectorXd A;  ///< lumped vertex areas
    Eigen::VectorXd K;  ///< regularized |Gaussian curvature|
    double epsilon = 0; ///< regularizer baked into K

    /// Diagonal of K*A, the scale-invariant mass.
    Eigen::VectorXd scale_invariant_mass() const { return K.cwiseProduct(A); }
};

OperatorSet build_operators(const TriMesh& mesh, const EpsilonPolicy& policy = {});

} // namespace sfmap
