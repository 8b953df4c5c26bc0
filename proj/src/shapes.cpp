#include <sfmap/error.hpp>
#include <sfmap/shapes.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace sfmap {

namespace {

constexpr double kPi = std::numbers::pi;

struct Ring
{
    double radius;
    double z;
};

/// Surface of revolution around z: optional poles plus rings of
/// @p segments vertices each, consecutive rings joined by quads.
MeshData revolve(const std::vector<Ring>& rings, int segments, std::optional<double> top, std::optional<double> bottom)
{
    MeshData data;
    const auto ring_start = [&](size_t r) {
        return static_cast<VertexIndex>((top ? 1 : 0) + r * static_cast<size_t>(segments));
    };
    if (top) data.vertices.emplace_back(0.0, 0.0, *top);
    for (const Ring& ring : rings) {
        for (int j = 0; j < segments; ++j) {
            const double phi = 2.0 * kPi * j / segments;
            data.vertices.emplace_back(ring.radius * std::cos(phi), ring.radius * std::sin(phi), ring.z);
        }
    }
    if (bottom) data.vertices.emplace_back(0.0, 0.0, *bottom);

    const auto at = [&](size_t r, int j) { return ring_start(r) + static_cast<VertexIndex>(j % segments); };
    if (top) {
        for (int j = 0; j < segments; ++j) data.faces.push_back({0, at(0, j), at(0, j + 1)});
    }
    for (size_t r = 0; r + 1 < rings.size(); ++r) {
        for (int j = 0; j < segments; ++j) {
            data.faces.push_back({at(r, j), at(r + 1, j), at(r + 1, j + 1)});
            data.faces.push_back({at(r, j), at(r + 1, j + 1), at(r, j + 1)});
        }
    }
    if (bottom) {
        const auto pole = static_cast<VertexIndex>(data.vertices.size() - 1);
        const size_t last = rings.size() - 1;
        for (int j = 0; j < segments; ++j) data.faces.push_back({pole, at(last, j + 1), at(last, j)});
    }
    return data;
}

MeshData icosphere(double radius, int level)
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    MeshData data;
    data.vertices = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    data.faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };
    for (auto& p : data.vertices) p.normalize();

    for (int l = 0; l < level; ++l) {
        std::map<std::pair<VertexIndex, VertexIndex>, VertexIndex> midpoints;
        const auto midpoint = [&](VertexIndex a, VertexIndex b) {
            const auto key = std::minmax(a, b);
            auto [it, inserted] = midpoints.try_emplace({key.first, key.second}, 0);
            if (inserted) {
                it->second = static_cast<VertexIndex>(data.vertices.size());
                data.vertices.push_back(
                    (data.vertices[static_cast<size_t>(a)] + data.vertices[static_cast<size_t>(b)]).normalized());
            }
            return it->second;
        };
        std::vector<Face> faces;
        faces.reserve(4 * data.faces.size());
        for (const Face& f : data.faces) {
            const VertexIndex ab = midpoint(f[0], f[1]);
            const VertexIndex bc = midpoint(f[1], f[2]);
            const VertexIndex ca = midpoint(f[2], f[0]);
            faces.push_back({f[0], ab, ca});
            faces.push_back({f[1], bc, ab});
            faces.push_back({f[2], ca, bc});
            faces.push_back({ab, bc, ca});
        }
        data.faces = std::move(faces);
    }
    for (auto& p : data.vertices) p *= radius;
    return data;
}

MeshData uvsphere(double radius, int segments, int bands)
{
    std::vector<Ring> rings;
    for (int i = 1; i < bands; ++i) {
        const double theta = kPi * i / bands;
        rings.push_back({radius * std::sin(theta), radius * std::cos(theta)});
    }
    return revolve(rings, segments, radius, -radius);
}

MeshData spherocylinder(double radius, double height, int segments, int cap_bands)
{
    const double band_arc = 0.5 * kPi * radius / cap_bands;
    const int tube_bands = height > 0 ? std::max(1, static_cast<int>(std::lround(height / band_arc))) : 0;
    const double half = 0.5 * height;

    std::vector<Ring> rings;
    for (int i = 1; i <= cap_bands; ++i) {
        const double theta = 0.5 * kPi * i / cap_bands;
        rings.push_back({radius * std::sin(theta), half + radius * std::cos(theta)});
    }
    // Tube rings below the upper equator; the lower equator closes the tube.
    for (int i = 1; i <= tube_bands; ++i) rings.push_back({radius, half - height * i / tube_bands});
    for (int i = cap_bands - 1; i >= 1; --i) {
        const double theta = 0.5 * kPi * i / cap_bands;
        rings.push_back({radius * std::sin(theta), -half - radius * std::cos(theta)});
    }
    return revolve(rings, segments, half + radius, -half - radius);
}

MeshData torus(double major, double minor, int segments, int tube_samples)
{
    MeshData data;
    for (int i = 0; i < segments; ++i) {
        const double u = 2.0 * kPi * i / segments;
        for (int j = 0; j < tube_samples; ++j) {
            const double v = 2.0 * kPi * j / tube_samples;
            const double r = major + minor * std::cos(v);
            data.vertices.emplace_back(r * std::cos(u), r * std::sin(u), minor * std::sin(v));
        }
    }
    const auto at = [&](int i, int j) {
        return static_cast<VertexIndex>((i % segments) * tube_samples + (j % tube_samples));
    };
    for (int i = 0; i < segments; ++i) {
        for (int j = 0; j < tube_samples; ++j) {
            data.faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            data.faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
    return data;
}

/// Grid of nx x ny cells. Column i sits on a polygonal arc whose segments
/// all have the flat cell width, so every cell stays a planar rectangle.
MeshData sheet(double width, double length, int nx, int ny, double bend_angle)
{
    const double dx = width / nx;
    const double turn = bend_angle / nx;
    std::vector<Eigen::Vector2d> profile{{0.0, 0.0}};
    for (int i = 0; i < nx; ++i) {
        const double heading = (i + 0.5) * turn - 0.5 * bend_angle;
        profile.push_back(profile.back() + dx * Eigen::Vector2d(std::cos(heading), std::sin(heading)));
    }
    MeshData data;
    for (int j = 0; j <= ny; ++j) {
        const double y = length * j / ny;
        for (int i = 0; i <= nx; ++i) data.vertices.emplace_back(profile[static_cast<size_t>(i)].x(), y, profile[static_cast<size_t>(i)].y());
    }
    const auto at = [&](int i, int j) { return static_cast<VertexIndex>(j * (nx + 1) + i); };
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            data.faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            data.faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
    return data;
}

double signed_volume(const MeshData& data)
{
    double volume = 0.0;
    for (const Face& f : data.faces) {
        volume += data.vertices[static_cast<size_t>(f[0])].dot(
            data.vertices[static_cast<size_t>(f[1])].cross(data.vertices[static_cast<size_t>(f[2])]));
    }
    return volume / 6.0;
}

void orient_outward(MeshData& data)
{
    if (signed_volume(data) < 0) {
        for (Face& f : data.faces) std::swap(f[1], f[2]);
    }
}

std::vector<Eigen::Vector3d> vertex_normals(const MeshData& data)
{
    std::vector<Eigen::Vector3d> normals(data.vertices.size(), Eigen::Vector3d::Zero());
    for (const Face& f : data.faces) {
        const auto& a = data.vertices[static_cast<size_t>(f[0])];
        const auto& b = data.vertices[static_cast<size_t>(f[1])];
        const auto& c = data.vertices[static_cast<size_t>(f[2])];
        const Eigen::Vector3d n = (b - a).cross(c - a);
        for (VertexIndex v : f) normals[static_cast<size_t>(v)] += n;
    }
    for (auto& n : normals) {
        if (n.norm() > 0) n.normalize();
    }
    return normals;
}

double mean_edge_length(const MeshData& data)
{
    double total = 0.0;
    for (const Face& f : data.faces) {
        for (int c = 0; c < 3; ++c) {
            total += (data.vertices[static_cast<size_t>(f[static_cast<size_t>(c)])]
                      - data.vertices[static_cast<size_t>(f[static_cast<size_t>((c + 1) % 3)])])
                         .norm();
        }
    }
    return data.faces.empty() ? 0.0 : total / (3.0 * static_cast<double>(data.faces.size()));
}

void require(bool condition, const std::string& message)
{
    if (!condition) throw ArgumentError(message);
}

} // namespace

std::string_view to_string(ShapeKind kind)
{
    switch (kind) {
    case ShapeKind::icosphere: return "icosphere";
    case ShapeKind::uvsphere: return "uvsphere";
    case ShapeKind::spherocylinder: return "spherocylinder";
    case ShapeKind::torus: return "torus";
    case ShapeKind::plane_patch: return "plane_patch";
    case ShapeKind::bent_sheet: return "bent_sheet";
    }
    return "unknown";
}

ShapeKind shape_kind_from_string(std::string_view text)
{
    for (ShapeKind kind : {ShapeKind::icosphere, ShapeKind::uvsphere, ShapeKind::spherocylinder, ShapeKind::torus,
             ShapeKind::plane_patch, ShapeKind::bent_sheet}) {
        if (to_string(kind) == text) return kind;
    }
    throw ArgumentError("unknown shape kind '" + std::string(text) + "'");
}

std::vector<VertexIndex> random_permutation(Eigen::Index size, std::uint64_t seed)
{
    std::vector<VertexIndex> perm(static_cast<size_t>(size));
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<VertexIndex>(i);
    // Fisher-Yates with an explicit draw, so the result does not depend on
    // the standard library's shuffle.
    std::mt19937_64 rng(seed);
    for (size_t i = perm.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

MeshData permute_vertices(const MeshData& data, const std::vector<VertexIndex>& permutation)
{
    if (permutation.size() != data.vertices.size()) throw ArgumentError("permutation size mismatch");
    std::vector<char> hit(permutation.size(), 0);
    for (VertexIndex p : permutation) {
        if (p < 0 || static_cast<size_t>(p) >= hit.size() || hit[static_cast<size_t>(p)]) {
            throw ArgumentError("not a permutation of the vertex indices");
        }
        hit[static_cast<size_t>(p)] = 1;
    }
    MeshData out;
    out.vertices.resize(data.vertices.size());
    for (size_t v = 0; v < data.vertices.size(); ++v) {
        out.vertices[static_cast<size_t>(permutation[v])] = data.vertices[v];
    }
    out.faces.reserve(data.faces.size());
    for (const Face& f : data.faces) {
        out.faces.push_back({permutation[static_cast<size_t>(f[0])], permutation[static_cast<size_t>(f[1])],
            permutation[static_cast<size_t>(f[2])]});
    }
    return out;
}

MeshData transform_mesh(MeshData data, const ShapeTransform& transform)
{
    require(transform.noise >= 0, "noise amplitude must be non-negative");
    require(transform.scale > 0, "scale must be positive");
    require((transform.stretch.array() > 0).all(), "stretch factors must be positive");

    if (transform.stretch != Eigen::Vector3d::Ones()) {
        for (auto& p : data.vertices) p = p.cwiseProduct(transform.stretch);
    }

    if (transform.noise > 0) {
        const double amplitude = transform.noise * mean_edge_length(data);
        const auto normals = vertex_normals(data);
        std::mt19937_64 rng(transform.noise_seed);
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        for (size_t v = 0; v < data.vertices.size(); ++v) data.vertices[v] += amplitude * uniform(rng) * normals[v];
    }
    if (transform.rotation_seed) {
        std::mt19937_64 rng(*transform.rotation_seed);
        std::normal_distribution<double> normal;
        Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
        q.normalize();
        const Eigen::Matrix3d R = q.toRotationMatrix();
        for (auto& p : data.vertices) p = R * p;
    }
    for (auto& p : data.vertices) p = transform.scale * p + transform.translation;
    if (transform.permutation_seed) {
        data = permute_vertices(data, random_permutation(static_cast<Eigen::Index>(data.vertices.size()), *transform.permutation_seed));
    }
    return data;
}

MeshData generate_shape(const ShapeSpec& spec)
{
    MeshData data;
    switch (spec.kind) {
    case ShapeKind::icosphere:
        require(spec.radius > 0, "radius must be positive");
        require(spec.level >= 0 && spec.level <= 8, "icosphere level must be in [0, 8]");
        data = icosphere(spec.radius, spec.level);
        orient_outward(data);
        break;
    case ShapeKind::uvsphere:
        require(spec.radius > 0, "radius must be positive");
        require(spec.segments >= 3 && spec.rings >= 2, "uvsphere needs segments >= 3 and rings >= 2");
        data = uvsphere(spec.radius, spec.segments, spec.rings);
        orient_outward(data);
        break;
    case ShapeKind::spherocylinder:
        require(spec.radius > 0, "radius must be positive");
        require(spec.height >= 0, "height must be non-negative");
        require(spec.segments >= 3 && spec.rings >= 1, "spherocylinder needs segments >= 3 and rings >= 1");
        data = spherocylinder(spec.radius, spec.height, spec.segments, spec.rings);
        orient_outward(data);
        break;
    case ShapeKind::torus:
        require(spec.minor_radius > 0 && spec.major_radius > spec.minor_radius,
            "torus needs 0 < minor radius < major radius");
        require(spec.segments >= 3 && spec.rings >= 3, "torus needs segments >= 3 and rings >= 3");
        data = torus(spec.major_radius, spec.minor_radius, spec.segments, spec.rings);
        orient_outward(data);
        break;
    case ShapeKind::plane_patch:
    case ShapeKind::bent_sheet: {
        require(spec.width > 0 && spec.length > 0, "sheet extents must be positive");
        require(spec.nx >= 1 && spec.ny >= 1, "sheet needs at least one cell per direction");
        const double bend = spec.kind == ShapeKind::bent_sheet ? spec.bend_angle : 0.0;
        require(std::abs(bend) < 2.0 * kPi, "bend angle must be below a full turn");
        data = sheet(spec.width, spec.length, spec.nx, spec.ny, bend);
        break;
    }
    }
    require(data.vertices.size() >= 12, "shape resolution yields fewer than 12 vertices");
    return transform_mesh(std::move(data), spec.transform);
}

} // namespace sfmap
