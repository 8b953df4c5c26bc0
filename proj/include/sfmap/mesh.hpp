#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace sfmap {

using VertexIndex = std::int32_t;
using Face = std::array<VertexIndex, 3>;

/// Unvalidated vertex/face soup, as read from disk or produced by a generator.
struct MeshData
{
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Face> faces;
};

struct MeshOptions
{
    /// Keep only the largest connected component instead of rejecting
    /// disconnected input.
    bool largest_component = false;
};

///
/// Validated, immutable triangle mesh.
///
/// Guarantees: indices in range, no repeated vertex within a face, no
/// zero-area face, every edge shared by at most two faces with opposite
/// orientation, and a single connected component covering every vertex.
///
class TriMesh
{
public:
    /// Validates @p data and throws ValidationError naming the first
    /// offending vertex or face.
    static TriMesh from_data(MeshData data, const MeshOptions& options = {});

    std::span<const Eigen::Vector3d> vertices() const { return m_vertices; }
    std::span<const Face> faces() const { return m_faces; }
    Eigen::Index num_vertices() const { return static_cast<Eigen::Index>(m_vertices.size()); }
    Eigen::Index num_faces() const { return static_cast<Eigen::Index>(m_faces.size()); }
    Eigen::Index num_edges() const { return m_num_edges; }

    /// True for vertices incident to an edge with a single adjacent face.
    bool is_boundary_vertex(VertexIndex v) const { return m_boundary[static_cast<size_t>(v)] != 0; }
    bool is_closed() const { return m_num_boundary_edges == 0; }

    /// V - E + F.
    Eigen::Index euler_characteristic() const
    {
        return num_vertices() - num_edges() + num_faces();
    }

    MeshData to_data() const { return {m_vertices, m_faces}; }

private:
    TriMesh() = default;

    std::vector<Eigen::Vector3d> m_vertices;
    std::vector<Face> m_faces;
    std::vector<std::uint8_t> m_boundary;
    Eigen::Index m_num_edges = 0;
    Eigen::Index m_num_boundary_edges = 0;
};

/// Keeps the faces of the connected component with the most vertices and
/// drops unreferenced vertices, preserving relative order.
MeshData extract_largest_component(const MeshData& data);

// ---------------------------------------------------------------------------
// File I/O

enum class MeshFormat { off, ply };

/// Picks the format from the file extension (.off / .ply, case-insensitive).
MeshFormat format_from_path(const std::filesystem::path& path);

MeshData read_off(std::istream& in);
MeshData read_ply(std::istream& in);

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format, const MeshOptions& options = {});
TriMesh load_mesh(const std::filesystem::path& path, const MeshOptions& options = {});

/// ASCII OFF with 17 significant digits; byte-stable for identical input.
void write_off(std::ostream& out, const MeshData& data);
void save_off(const std::filesystem::path& path, const MeshData& data);

} // namespace sfmap
