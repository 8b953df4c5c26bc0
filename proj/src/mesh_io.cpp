#include <sfmap/error.hpp>
#include <sfmap/mesh.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

namespace sfmap {

namespace {

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> tokens;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) tokens.push_back(line.substr(i, j - i));
        i = j;
    }
    return tokens;
}

template <typename T>
bool parse_number(std::string_view token, T& out)
{
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && token.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

/// Line reader that strips '#' comments and skips blank lines.
class OffLines
{
public:
    explicit OffLines(std::istream& in)
        : m_in(in)
    {}

    /// False at end of input.
    bool next(std::vector<std::string_view>& tokens)
    {
        while (std::getline(m_in, m_line)) {
            ++m_number;
            if (auto hash = m_line.find('#'); hash != std::string::npos) m_line.resize(hash);
            tokens = split_ws(m_line);
            if (!tokens.empty()) return true;
        }
        ++m_number;
        return false;
    }

    std::int64_t number() const { return m_number; }

private:
    std::istream& m_in;
    std::string m_line;
    std::int64_t m_number = 0;
};

} // namespace

MeshData read_off(std::istream& in)
{
    OffLines lines(in);
    std::vector<std::string_view> tok;
    if (!lines.next(tok)) throw ParseError("empty OFF file", lines.number());
    if (tok[0] != "OFF") throw ParseError("expected OFF header, found '" + std::string(tok[0]) + "'", lines.number());
    tok.erase(tok.begin());
    if (tok.empty() && !lines.next(tok)) throw ParseError("missing counts line", lines.number());
    if (tok.size() < 2) throw ParseError("counts line needs vertex and face counts", lines.number());

    std::int64_t nv = 0;
    std::int64_t nf = 0;
    if (!parse_number(tok[0], nv) || !parse_number(tok[1], nf) || nv < 0 || nf < 0) {
        throw ParseError("malformed counts line", lines.number());
    }

    MeshData data;
    data.vertices.reserve(static_cast<size_t>(nv));
    for (std::int64_t v = 0; v < nv; ++v) {
        if (!lines.next(tok)) {
            throw ParseError(
                "unexpected end of file: " + std::to_string(nv) + " vertices declared, " + std::to_string(v) + " found",
                lines.number());
        }
        Eigen::Vector3d p;
        if (tok.size() != 3 || !parse_number(tok[0], p.x()) || !parse_number(tok[1], p.y())
            || !parse_number(tok[2], p.z())) {
            throw ParseError(
                "vertex " + std::to_string(v) + " of " + std::to_string(nv) + ": expected 3 coordinates",
                lines.number());
        }
        data.vertices.push_back(p);
    }

    data.faces.reserve(static_cast<size_t>(nf));
    for (std::int64_t f = 0; f < nf; ++f) {
        if (!lines.next(tok)) {
            throw ParseError(
                "unexpected end of file: " + std::to_string(nf) + " faces declared, " + std::to_string(f) + " found",
                lines.number());
        }
        std::int64_t arity = 0;
        if (!parse_number(tok[0], arity)) throw ParseError("malformed face line", lines.number());
        if (arity != 3) {
            throw ValidationError(
                "non-triangle face with " + std::to_string(arity) + " vertices",
                ValidationError::Element::face,
                f);
        }
        Face face{};
        if (tok.size() < 4 || !parse_number(tok[1], face[0]) || !parse_number(tok[2], face[1])
            || !parse_number(tok[3], face[2])) {
            throw ParseError("malformed face line", lines.number());
        }
        data.faces.push_back(face);
    }
    return data;
}

// ---------------------------------------------------------------------------
// PLY

namespace {

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

PlyType ply_type(std::string_view name, std::int64_t line)
{
    if (name == "char" || name == "int8") return PlyType::i8;
    if (name == "uchar" || name == "uint8") return PlyType::u8;
    if (name == "short" || name == "int16") return PlyType::i16;
    if (name == "ushort" || name == "uint16") return PlyType::u16;
    if (name == "int" || name == "int32") return PlyType::i32;
    if (name == "uint" || name == "uint32") return PlyType::u32;
    if (name == "float" || name == "float32") return PlyType::f32;
    if (name == "double" || name == "float64") return PlyType::f64;
    throw ParseError("unknown PLY property type '" + std::string(name) + "'", line);
}

size_t type_size(PlyType t)
{
    switch (t) {
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
    }
    return 0;
}

struct PlyProperty
{
    std::string name;
    PlyType type = PlyType::f32;
    bool is_list = false;
    PlyType count_type = PlyType::u8;
};

struct PlyElement
{
    std::string name;
    std::int64_t count = 0;
    std::vector<PlyProperty> properties;
};

template <typename T>
T load_le(const char* bytes)
{
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto* p = reinterpret_cast<unsigned char*>(&value);
        std::reverse(p, p + sizeof(T));
    }
    return value;
}

class BinaryReader
{
public:
    explicit BinaryReader(std::istream& in)
        : m_in(in)
    {}

    void start_record() {}

    double read(PlyType type)
    {
        char buf[8];
        const size_t n = type_size(type);
        if (!m_in.read(buf, static_cast<std::streamsize>(n))) throw ParseError("unexpected end of binary PLY data");
        switch (type) {
        case PlyType::i8: return load_le<std::int8_t>(buf);
        case PlyType::u8: return load_le<std::uint8_t>(buf);
        case PlyType::i16: return load_le<std::int16_t>(buf);
        case PlyType::u16: return load_le<std::uint16_t>(buf);
        case PlyType::i32: return load_le<std::int32_t>(buf);
        case PlyType::u32: return load_le<std::uint32_t>(buf);
        case PlyType::f32: return load_le<float>(buf);
        case PlyType::f64: return load_le<double>(buf);
        }
        return 0.0;
    }

private:
    std::istream& m_in;
};

class AsciiReader
{
public:
    AsciiReader(std::istream& in, std::int64_t line)
        : m_in(in)
        , m_line(line)
    {}

    void start_record()
    {
        do {
            if (!std::getline(m_in, m_text)) throw ParseError("unexpected end of ASCII PLY data", m_line + 1);
            ++m_line;
            m_tokens = split_ws(m_text);
        } while (m_tokens.empty());
        m_pos = 0;
    }

    double read(PlyType)
    {
        if (m_pos >= m_tokens.size()) throw ParseError("too few values in PLY record", m_line);
        double value = 0.0;
        if (!parse_number(m_tokens[m_pos++], value)) throw ParseError("malformed PLY value", m_line);
        return value;
    }

private:
    std::istream& m_in;
    std::int64_t m_line;
    std::string m_text;
    std::vector<std::string_view> m_tokens;
    size_t m_pos = 0;
};

template <typename Reader>
MeshData read_ply_body(Reader& reader, const std::vector<PlyElement>& elements)
{
    MeshData data;
    for (const PlyElement& element : elements) {
        const bool is_vertex = element.name == "vertex";
        const bool is_face = element.name == "face";
        int xyz[3] = {-1, -1, -1};
        int index_list = -1;
        for (size_t p = 0; p < element.properties.size(); ++p) {
            const auto& prop = element.properties[p];
            if (is_vertex && !prop.is_list) {
                if (prop.name == "x") xyz[0] = static_cast<int>(p);
                if (prop.name == "y") xyz[1] = static_cast<int>(p);
                if (prop.name == "z") xyz[2] = static_cast<int>(p);
            }
            if (is_face && prop.is_list && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
                index_list = static_cast<int>(p);
            }
        }
        if (is_vertex && (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0)) {
            throw ParseError("PLY vertex element lacks x/y/z properties");
        }
        if (is_face && index_list < 0) throw ParseError("PLY face element lacks a vertex_indices list");

        for (std::int64_t r = 0; r < element.count; ++r) {
            reader.start_record();
            Eigen::Vector3d point = Eigen::Vector3d::Zero();
            for (size_t p = 0; p < element.properties.size(); ++p) {
                const auto& prop = element.properties[p];
                if (!prop.is_list) {
                    const double value = reader.read(prop.type);
                    for (int c = 0; c < 3; ++c) {
                        if (is_vertex && xyz[c] == static_cast<int>(p)) point[c] = value;
                    }
                    continue;
                }
                const double raw_count = reader.read(prop.count_type);
                if (raw_count < 0) throw ParseError("negative PLY list length");
                const auto count = static_cast<std::int64_t>(raw_count);
                if (is_face && static_cast<int>(p) == index_list) {
                    if (count != 3) {
                        throw ValidationError(
                            "non-triangle face with " + std::to_string(count) + " vertices",
                            ValidationError::Element::face,
                            r);
                    }
                    Face face{};
                    for (auto& v : face) v = static_cast<VertexIndex>(reader.read(prop.type));
                    data.faces.push_back(face);
                } else {
                    for (std::int64_t i = 0; i < count; ++i) reader.read(prop.type);
                }
            }
            if (is_vertex) data.vertices.push_back(point);
        }
    }
    return data;
}

} // namespace

MeshData read_ply(std::istream& in)
{
    std::string line;
    std::int64_t line_no = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) throw ParseError("unexpected end of PLY header", line_no + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };

    next_line();
    if (line != "ply") throw ParseError("missing 'ply' magic", line_no);

    bool ascii = false;
    bool have_format = false;
    std::vector<PlyElement> elements;
    for (;;) {
        next_line();
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() < 2) throw ParseError("malformed format line", line_no);
            if (tok[1] == "ascii") {
                ascii = true;
            } else if (tok[1] == "binary_little_endian") {
                ascii = false;
            } else {
                throw ParseError("unsupported PLY format '" + std::string(tok[1]) + "'", line_no);
            }
            have_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError("malformed element line", line_no);
            PlyElement element;
            element.name = std::string(tok[1]);
            if (!parse_number(tok[2], element.count) || element.count < 0) {
                throw ParseError("malformed element count", line_no);
            }
            elements.push_back(std::move(element));
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError("property before any element", line_no);
            PlyProperty prop;
            if (tok.size() == 5 && tok[1] == "list") {
                prop.is_list = true;
                prop.count_type = ply_type(tok[2], line_no);
                prop.type = ply_type(tok[3], line_no);
                prop.name = std::string(tok[4]);
            } else if (tok.size() == 3) {
                prop.type = ply_type(tok[1], line_no);
                prop.name = std::string(tok[2]);
            } else {
                throw ParseError("malformed property line", line_no);
            }
            elements.back().properties.push_back(std::move(prop));
        } else {
            throw ParseError("unknown PLY header keyword '" + std::string(tok[0]) + "'", line_no);
        }
    }
    if (!have_format) throw ParseError("PLY header lacks a format line", line_no);

    if (ascii) {
        AsciiReader reader(in, line_no);
        return read_ply_body(reader, elements);
    }
    BinaryReader reader(in);
    return read_ply_body(reader, elements);
}

MeshFormat format_from_path(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".off") return MeshFormat::off;
    if (ext == ".ply") return MeshFormat::ply;
    throw ArgumentError("cannot infer mesh format from '" + path.string() + "' (expected .off or .ply)");
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format, const MeshOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open mesh file '" + path.string() + "'");
    try {
        MeshData data = format == MeshFormat::off ? read_off(in) : read_ply(in);
        return TriMesh::from_data(std::move(data), options);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

TriMesh load_mesh(const std::filesystem::path& path, const MeshOptions& options)
{
    return load_mesh(path, format_from_path(path), options);
}

void write_off(std::ostream& out, const MeshData& data)
{
    char buf[128];
    out << "OFF\n" << data.vertices.size() << ' ' << data.faces.size() << " 0\n";
    for (const auto& p : data.vertices) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
    }
    for (const Face& f : data.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void save_off(const std::filesystem::path& path, const MeshData& data)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + path.string() + "'");
    write_off(out, data);
    if (!out) throw ArgumentError("failed writing '" + path.string() + "'");
}

} // namespace sfmap
