#pragma once

#include <sfmap/mesh.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sfmap {

enum class ShapeKind { icosphere, uvsphere, spherocylinder, torus, plane_patch, bent_sheet };

std::string_view to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(std::string_view text);

/// Post-processing applied to a generated shape, in this order: axis
/// stretch, normal noise, rotation, uniform scale, translation, vertex
/// relabeling.
struct ShapeTransform
{
    /// Per-axis scale factors. Not an isometry; used to break the rotational
    /// symmetry of the generated solids of revolution.
    Eigen::Vector3d stretch = Eigen::Vector3d::Ones();
    /// Displacement along vertex normals, uniform in [-noise, noise] times
    /// the mean edge length.
    double noise = 0.0;
    std::uint64_t noise_seed = 1;
    /// Uniformly random rotation drawn from this seed.
    std::optional<std::uint64_t> rotation_seed;
    double scale = 1.0;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    /// Random vertex relabeling drawn from this seed; face order is kept.
    std::optional<std::uint64_t> permutation_seed;
};

struct ShapeSpec
{
    ShapeKind kind = ShapeKind::icosphere;

    double radius = 1.0; ///< sphere radius, spherocylinder cap radius
    double height = 1.0; ///< spherocylinder tube length
    double major_radius = 1.0;
    double minor_radius = 0.4;
    double width = 2.0;  ///< sheet extent along the bending direction
    double length = 1.0; ///< sheet extent along the bending axis
    double bend_angle = 0.0;

    int level = 3;     ///< icosphere subdivisions
    int segments = 32; ///< samples around the axis (uvsphere, spherocylinder, torus)
    int rings = 16;    ///< latitude bands (uvsphere), per hemisphere (spherocylinder), tube samples (torus)
    int nx = 20;       ///< sheet cells along width
    int ny = 10;       ///< sheet cells along length

    ShapeTransform transform;
};

/// Deterministic mesh for @p spec. Throws ArgumentError on invalid
/// parameters (non-positive sizes, fewer than 12 vertices, negative noise).
MeshData generate_shape(const ShapeSpec& spec);

/// Applies @p transform to an existing mesh.
MeshData transform_mesh(MeshData data, const ShapeTransform& transform);

/// Uniform vertex relabeling v -> permutation[v] drawn from @p seed.
std::vector<VertexIndex> random_permutation(Eigen::Index size, std::uint64_t seed);
MeshData permute_vertices(const MeshData& data, const std::vector<VertexIndex>& permutation);

} // namespace sfmap
