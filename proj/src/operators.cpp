#include <sfmap/error.hpp>
#include <sfmap/operators.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sfmap {

namespace {

constexpr double kMinAngle = 1e-6;

double angle_between(const Eigen::Vector3d& u, const Eigen::Vector3d& v)
{
    return std::atan2(u.cross(v).norm(), u.dot(v));
}

double cotangent(const Eigen::Vector3d& u, const Eigen::Vector3d& v)
{
    return u.dot(v) / u.cross(v).norm();
}

double median(std::vector<double> values)
{
    if (values.empty()) return 0.0;
    const size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

} // namespace

EpsilonPolicy EpsilonPolicy::parse(std::string_view text)
{
    EpsilonPolicy policy;
    std::string number(text);
    if (text.rfind("rel:", 0) == 0) {
        policy.mode = Mode::relative;
        number = std::string(text.substr(4));
    } else {
        policy.mode = Mode::absolute;
    }
    size_t used = 0;
    try {
        policy.value = std::stod(number, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != number.size() || !(policy.value > 0) || !std::isfinite(policy.value)) {
        throw ArgumentError("invalid epsilon '" + std::string(text) + "' (expected a positive number or rel:<factor>)");
    }
    return policy;
}

std::string EpsilonPolicy::to_string() const
{
    std::ostringstream out;
    out.precision(17);
    if (mode == Mode::relative) out << "rel:";
    out << value;
    return out.str();
}

double EpsilonPolicy::resolve(const Eigen::VectorXd& raw_curvature) const
{
    if (mode == Mode::absolute) return value;
    std::vector<double> magnitudes(static_cast<size_t>(raw_curvature.size()));
    for (Eigen::Index i = 0; i < raw_curvature.size(); ++i) magnitudes[static_cast<size_t>(i)] = std::abs(raw_curvature[i]);
    return std::max(value * median(std::move(magnitudes)), kEpsilonFloor);
}

std::vector<Eigen::Vector3d> corner_angles(const TriMesh& mesh)
{
    const auto V = mesh.vertices();
    std::vector<Eigen::Vector3d> angles;
    angles.reserve(static_cast<size_t>(mesh.num_faces()));
    for (const Face& f : mesh.faces()) {
        Eigen::Vector3d a;
        for (int c = 0; c < 3; ++c) {
            const auto& p = V[static_cast<size_t>(f[static_cast<size_t>(c)])];
            const auto& q = V[static_cast<size_t>(f[static_cast<size_t>((c + 1) % 3)])];
            const auto& r = V[static_cast<size_t>(f[static_cast<size_t>((c + 2) % 3)])];
            a[c] = angle_between(q - p, r - p);
        }
        angles.push_back(a);
    }
    return angles;
}

Eigen::VectorXd vertex_areas(const TriMesh& mesh)
{
    const auto V = mesh.vertices();
    Eigen::VectorXd areas = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (const Face& f : mesh.faces()) {
        const auto& a = V[static_cast<size_t>(f[0])];
        const auto& b = V[static_cast<size_t>(f[1])];
        const auto& c = V[static_cast<size_t>(f[2])];
        const double third = (b - a).cross(c - a).norm() / 6.0;
        for (VertexIndex v : f) areas[v] += third;
    }
    return areas;
}

Eigen::VectorXd angle_deficits(const TriMesh& mesh)
{
    Eigen::VectorXd angle_sum = Eigen::VectorXd::Zero(mesh.num_vertices());
    const auto angles = corner_angles(mesh);
    const auto faces = mesh.faces();
    for (size_t f = 0; f < faces.size(); ++f) {
        for (int c = 0; c < 3; ++c) angle_sum[faces[f][static_cast<size_t>(c)]] += angles[f][c];
    }
    Eigen::VectorXd deficit(mesh.num_vertices());
    for (Eigen::Index v = 0; v < deficit.size(); ++v) {
        const double reference = mesh.is_boundary_vertex(static_cast<VertexIndex>(v)) ? std::numbers::pi
                                                                                       : 2.0 * std::numbers::pi;
        deficit[v] = reference - angle_sum[v];
    }
    return deficit;
}

Eigen::VectorXd raw_gaussian_curvature(const TriMesh& mesh, const Eigen::VectorXd& areas)
{
    return angle_deficits(mesh).cwiseQuotient(areas);
}

Eigen::VectorXd gaussian_curvature(const TriMesh& mesh, const Eigen::VectorXd& areas, double epsilon)
{
    const Eigen::VectorXd raw = raw_gaussian_curvature(mesh, areas);
    return (raw.array().square() + epsilon * epsilon).sqrt().matrix();
}

SparseMatrix cotan_weights(const TriMesh& mesh)
{
    const auto V = mesh.vertices();
    const auto faces = mesh.faces();
    const Eigen::Index n = mesh.num_vertices();

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(6 * faces.size());
    Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(n);

    for (size_t f = 0; f < faces.size(); ++f) {
        const Face& t = faces[f];
        for (int c = 0; c < 3; ++c) {
            const VertexIndex o = t[static_cast<size_t>(c)];
            const VertexIndex i = t[static_cast<size_t>((c + 1) % 3)];
            const VertexIndex j = t[static_cast<size_t>((c + 2) % 3)];
            const Eigen::Vector3d u = V[static_cast<size_t>(i)] - V[static_cast<size_t>(o)];
            const Eigen::Vector3d v = V[static_cast<size_t>(j)] - V[static_cast<size_t>(o)];
            if (angle_between(u, v) < kMinAngle) {
                throw ValidationError(
                    "near-degenerate triangle (corner angle below 1e-6 rad)",
                    ValidationError::Element::face,
                    static_cast<std::int64_t>(f));
            }
            // Half cotangent of the angle at o, opposite edge (i, j).
            const double w = 0.5 * cotangent(u, v);
            triplets.emplace_back(i, j, -w);
            triplets.emplace_back(j, i, -w);
            diagonal[i] += w;
            diagonal[j] += w;
        }
    }
    for (Eigen::Index v = 0; v < n; ++v) triplets.emplace_back(v, v, diagonal[v]);

    SparseMatrix W(n, n);
    W.setFromTriplets(triplets.begin(), triplets.end());
    W.makeCompressed();
    return W;
}

OperatorSet build_operators(const TriMesh& mesh, const EpsilonPolicy& policy)
{
    OperatorSet ops;
    ops.W = cotan_weights(mesh);
    ops.A = vertex_areas(mesh);
    const Eigen::VectorXd raw = raw_gaussian_curvature(mesh, ops.A);
    ops.epsilon = policy.resolve(raw);
    ops.K = (raw.array().square() + ops.epsilon * ops.epsilon).sqrt().matrix();
    return ops;
}

} // namespace sfmap
