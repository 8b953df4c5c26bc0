#include "csv_util.hpp"

#include <sfmap/error.hpp>
#include <sfmap/sfm.hpp>

#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>

namespace sfmap {

Eigen::MatrixXd interaction_matrix(const SpectralBasis& scale_invariant, const SpectralBasis& regular)
{
    if (scale_invariant.num_vertices() != regular.num_vertices()) {
        throw ArgumentError("bases live on different vertex sets");
    }
    return scale_invariant.eigenvectors.transpose() * scale_invariant.norm_mass.asDiagonal()
           * regular.eigenvectors;
}

SfmComputation compute_sfm_full(const TriMesh& mesh, const SfmOptions& options, std::string mesh_id)
{
    if (options.n < 1 || options.m < 1) throw ArgumentError("basis sizes must be positive");
    SfmComputation out;
    out.operators = build_operators(mesh, options.epsilon);
    out.regular = build_basis(out.operators, Pencil::regular, options.n, options.solver);
    out.scale_invariant = build_basis(out.operators, Pencil::scale_invariant, options.m, options.solver);
    out.map.C = interaction_matrix(out.scale_invariant, out.regular);
    out.map.epsilon = out.operators.epsilon;
    out.map.mesh_id = std::move(mesh_id);
    return out;
}

SelfFunctionalMap compute_sfm(const TriMesh& mesh, const SfmOptions& options, std::string mesh_id)
{
    return compute_sfm_full(mesh, options, std::move(mesh_id)).map;
}

SignVectors sign_align(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& C)
{
    if (reference.rows() != C.rows() || reference.cols() != C.cols()) {
        throw ArgumentError("sign alignment needs maps of equal shape");
    }
    const Eigen::Index m = C.rows();
    const Eigen::Index n = C.cols();
    if (n > kMaxAlignColumns) {
        throw ArgumentError(
            "sign alignment over " + std::to_string(n) + " columns is too expensive; use at most "
            + std::to_string(kMaxAlignColumns) + " regular eigenfunctions");
    }

    SignVectors best;
    best.residual = std::numeric_limits<double>::infinity();
    Eigen::VectorXd b(n);
    Eigen::VectorXd a(m);
    const std::uint64_t patterns = n > 0 ? std::uint64_t{1} << (n - 1) : 1;
    for (std::uint64_t pattern = 0; pattern < patterns; ++pattern) {
        // Bit q-1 set means column q is flipped; column 0 is never flipped.
        for (Eigen::Index q = 0; q < n; ++q) b[q] = (q > 0 && ((pattern >> (q - 1)) & 1U)) ? -1.0 : 1.0;
        double total = 0.0;
        for (Eigen::Index p = 0; p < m; ++p) {
            double keep = 0.0;
            double flip = 0.0;
            for (Eigen::Index q = 0; q < n; ++q) {
                const double signed_entry = b[q] * C(p, q);
                keep += std::abs(reference(p, q) - signed_entry);
                flip += std::abs(reference(p, q) + signed_entry);
            }
            a[p] = flip < keep ? -1.0 : 1.0;
            total += std::min(keep, flip);
        }
        if (total < best.residual) {
            best.residual = total;
            best.a = a;
            best.b = b;
        }
    }
    if (m > 0 && best.a[0] < 0) {
        best.a = -best.a;
        best.b = -best.b;
    }
    return best;
}

Eigen::MatrixXd apply_signs(const Eigen::MatrixXd& C, const SignVectors& signs)
{
    return signs.a.asDiagonal() * C * signs.b.asDiagonal();
}

double l1_norm(const Eigen::MatrixXd& C)
{
    return C.cwiseAbs().sum();
}

double sfm_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y)
{
    const double misfit = sign_align(x, y).residual;
    return misfit * misfit;
}

double sfm_distance(const SelfFunctionalMap& x, const SelfFunctionalMap& y)
{
    return sfm_distance(x.C, y.C);
}

std::vector<SelfFunctionalMap> align_to_reference(
    const std::vector<SelfFunctionalMap>& maps,
    const std::vector<size_t>& reference)
{
    if (reference.size() != maps.size()) throw ArgumentError("one reference index per map is required");
    std::vector<SelfFunctionalMap> out = maps;
    for (size_t i = 0; i < maps.size(); ++i) {
        const size_t r = reference[i];
        if (r >= maps.size()) throw ArgumentError("reference index " + std::to_string(r) + " out of range");
        if (r == i) continue;
        out[i].C = apply_signs(maps[i].C, sign_align(maps[r].C, maps[i].C));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Signature files

void write_signature_csv(std::ostream& out, const SelfFunctionalMap& map)
{
    if (map.mesh_id.find_first_of(",\n\r") != std::string::npos) {
        throw ArgumentError("mesh id '" + map.mesh_id + "' contains a separator");
    }
    out << map.m() << ',' << map.n() << ',' << detail::format_double(map.epsilon) << ',' << map.mesh_id << '\n';
    for (Eigen::Index p = 0; p < map.m(); ++p) {
        for (Eigen::Index q = 0; q < map.n(); ++q) out << (q ? "," : "") << detail::format_double(map.C(p, q));
        out << '\n';
    }
}

SelfFunctionalMap read_signature_csv(std::istream& in)
{
    std::vector<std::string> row;
    std::int64_t line = 0;
    if (!detail::next_csv_row(in, row, line) || row.size() != 4) {
        throw ParseError("signature header must be 'm,n,epsilon,mesh_id'", line);
    }
    const long long m = detail::parse_integer(row[0], line);
    const long long n = detail::parse_integer(row[1], line);
    if (m < 1 || n < 1) throw ParseError("invalid signature dimensions", line);

    SelfFunctionalMap map;
    map.epsilon = detail::parse_double(row[2], line);
    map.mesh_id = row[3];
    map.C.resize(m, n);
    for (long long p = 0; p < m; ++p) {
        if (!detail::next_csv_row(in, row, line) || static_cast<long long>(row.size()) != n) {
            throw ParseError("expected a row of " + std::to_string(n) + " entries", line);
        }
        for (long long q = 0; q < n; ++q) map.C(p, q) = detail::parse_double(row[static_cast<size_t>(q)], line);
    }
    return map;
}

void save_signature_csv(const std::filesystem::path& path, const SelfFunctionalMap& map)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + path.string() + "'");
    write_signature_csv(out, map);
}

SelfFunctionalMap load_signature_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DependencyError("missing signature file '" + path.string() + "' (run compute first)");
    try {
        return read_signature_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_signature_pgm(std::ostream& out, const SelfFunctionalMap& map, int cell)
{
    if (cell < 1) throw ArgumentError("PGM cell size must be positive");
    const Eigen::Index width = map.n() * cell;
    const Eigen::Index height = map.m() * cell;
    out << "P5\n" << width << ' ' << height << "\n255\n";
    std::string row(static_cast<size_t>(width), '\0');
    for (Eigen::Index p = 0; p < map.m(); ++p) {
        for (Eigen::Index q = 0; q < map.n(); ++q) {
            const double level = std::clamp((map.C(p, q) + 1.0) * 127.5, 0.0, 255.0);
            const auto pixel = static_cast<char>(static_cast<unsigned char>(std::lround(level)));
            std::fill_n(row.begin() + q * cell, cell, pixel);
        }
        for (int r = 0; r < cell; ++r) out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
}

void save_signature_pgm(const std::filesystem::path& path, const SelfFunctionalMap& map, int cell)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + path.string() + "'");
    write_signature_pgm(out, map, cell);
}

} // namespace sfmap
