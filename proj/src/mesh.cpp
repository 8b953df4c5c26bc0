#include <sfmap/error.hpp>
#include <sfmap/mesh.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <numeric>

namespace sfmap {

namespace {

class DisjointSets
{
public:
    explicit DisjointSets(size_t n)
        : m_parent(n)
    {
        std::iota(m_parent.begin(), m_parent.end(), size_t{0});
    }

    size_t find(size_t x)
    {
        while (m_parent[x] != x) {
            m_parent[x] = m_parent[m_parent[x]];
            x = m_parent[x];
        }
        return x;
    }

    void unite(size_t a, size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        m_parent[b] = a; // root is always the smallest member
    }

private:
    std::vector<size_t> m_parent;
};

void check_indices(const MeshData& data)
{
    const auto nv = static_cast<std::int64_t>(data.vertices.size());
    for (size_t f = 0; f < data.faces.size(); ++f) {
        const Face& face = data.faces[f];
        for (VertexIndex v : face) {
            if (v < 0 || v >= nv) {
                throw ValidationError(
                    "vertex index " + std::to_string(v) + " out of range [0, " + std::to_string(nv) + ")",
                    ValidationError::Element::face,
                    static_cast<std::int64_t>(f));
            }
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            throw ValidationError("face repeats a vertex", ValidationError::Element::face, static_cast<std::int64_t>(f));
        }
    }
}

/// Root label per vertex, plus the root of the component with most vertices.
std::pair<std::vector<size_t>, size_t> label_components(const MeshData& data)
{
    DisjointSets sets(data.vertices.size());
    for (const Face& face : data.faces) {
        sets.unite(static_cast<size_t>(face[0]), static_cast<size_t>(face[1]));
        sets.unite(static_cast<size_t>(face[1]), static_cast<size_t>(face[2]));
    }
    std::vector<size_t> root(data.vertices.size());
    std::vector<size_t> size(data.vertices.size(), 0);
    for (size_t v = 0; v < root.size(); ++v) {
        root[v] = sets.find(v);
        ++size[root[v]];
    }
    size_t best = 0;
    for (size_t r = 0; r < size.size(); ++r) {
        if (size[r] > size[best]) best = r;
    }
    return {std::move(root), best};
}

MeshData extract_component(const MeshData& data, const std::vector<size_t>& root, size_t keep)
{
    MeshData out;
    std::vector<VertexIndex> remap(data.vertices.size(), -1);
    for (size_t v = 0; v < data.vertices.size(); ++v) {
        if (root[v] == keep) {
            remap[v] = static_cast<VertexIndex>(out.vertices.size());
            out.vertices.push_back(data.vertices[v]);
        }
    }
    for (const Face& face : data.faces) {
        if (root[static_cast<size_t>(face[0])] != keep) continue;
        out.faces.push_back(
            {remap[static_cast<size_t>(face[0])], remap[static_cast<size_t>(face[1])], remap[static_cast<size_t>(face[2])]});
    }
    return out;
}

} // namespace

MeshData extract_largest_component(const MeshData& data)
{
    check_indices(data);
    if (data.vertices.empty()) return data;
    const auto [root, best] = label_components(data);
    return extract_component(data, root, best);
}

TriMesh TriMesh::from_data(MeshData data, const MeshOptions& options)
{
    check_indices(data);
    if (options.largest_component && !data.vertices.empty()) {
        data = extract_largest_component(data);
    }
    if (data.faces.empty()) {
        throw ValidationError("mesh has no faces", ValidationError::Element::face, 0);
    }

    // Zero-area faces, relative to the bounding-box diagonal.
    Eigen::Vector3d lo = data.vertices.front();
    Eigen::Vector3d hi = lo;
    for (const auto& p : data.vertices) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double diag2 = (hi - lo).squaredNorm();
    for (size_t f = 0; f < data.faces.size(); ++f) {
        const Face& t = data.faces[f];
        const Eigen::Vector3d& a = data.vertices[static_cast<size_t>(t[0])];
        const Eigen::Vector3d& b = data.vertices[static_cast<size_t>(t[1])];
        const Eigen::Vector3d& c = data.vertices[static_cast<size_t>(t[2])];
        if ((b - a).cross(c - a).norm() <= 1e-12 * diag2) {
            throw ValidationError("zero-area face", ValidationError::Element::face, static_cast<std::int64_t>(f));
        }
    }

    // Edge manifoldness and orientation consistency via sorted half-edges.
    struct HalfEdge
    {
        VertexIndex lo, hi;
        std::int64_t face;
        bool forward; // stored as lo->hi in the face's winding
    };
    std::vector<HalfEdge> half_edges;
    half_edges.reserve(3 * data.faces.size());
    for (size_t f = 0; f < data.faces.size(); ++f) {
        const Face& t = data.faces[f];
        for (int c = 0; c < 3; ++c) {
            const VertexIndex i = t[static_cast<size_t>(c)];
            const VertexIndex j = t[static_cast<size_t>((c + 1) % 3)];
            half_edges.push_back({std::min(i, j), std::max(i, j), static_cast<std::int64_t>(f), i < j});
        }
    }
    std::sort(half_edges.begin(), half_edges.end(), [](const HalfEdge& x, const HalfEdge& y) {
        if (x.lo != y.lo) return x.lo < y.lo;
        if (x.hi != y.hi) return x.hi < y.hi;
        return x.face < y.face;
    });

    TriMesh mesh;
    mesh.m_boundary.assign(data.vertices.size(), 0);
    for (size_t s = 0; s < half_edges.size();) {
        size_t e = s + 1;
        while (e < half_edges.size() && half_edges[e].lo == half_edges[s].lo && half_edges[e].hi == half_edges[s].hi) {
            ++e;
        }
        const size_t count = e - s;
        if (count > 2) {
            throw ValidationError(
                "non-manifold edge (" + std::to_string(half_edges[s].lo) + ", " + std::to_string(half_edges[s].hi)
                    + ") shared by more than two faces",
                ValidationError::Element::face,
                half_edges[s + 2].face);
        }
        if (count == 2 && half_edges[s].forward == half_edges[s + 1].forward) {
            throw ValidationError(
                "inconsistent orientation across edge (" + std::to_string(half_edges[s].lo) + ", "
                    + std::to_string(half_edges[s].hi) + ")",
                ValidationError::Element::face,
                half_edges[s + 1].face);
        }
        if (count == 1) {
            mesh.m_boundary[static_cast<size_t>(half_edges[s].lo)] = 1;
            mesh.m_boundary[static_cast<size_t>(half_edges[s].hi)] = 1;
            ++mesh.m_num_boundary_edges;
        }
        ++mesh.m_num_edges;
        s = e;
    }

    const auto [root, best] = label_components(data);
    for (size_t v = 0; v < root.size(); ++v) {
        if (root[v] != best) {
            throw ValidationError(
                "mesh is not connected (vertex outside the largest component)",
                ValidationError::Element::vertex,
                static_cast<std::int64_t>(v));
        }
    }

    mesh.m_vertices = std::move(data.vertices);
    mesh.m_faces = std::move(data.faces);
    return mesh;
}

} // namespace sfmap
