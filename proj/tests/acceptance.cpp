// Acceptance checks: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any criterion fails.

#include "test_support.hpp"

#include <sfmap/analysis.hpp>
#include <sfmap/error.hpp>
#include <sfmap/operators.hpp>
#include <sfmap/pipeline.hpp>
#include <sfmap/sfm.hpp>
#include <sfmap/spectrum.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

using namespace sfmap;

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome
{
    enum class Status { pass, fail, skip } status = Status::pass;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            status = Status::fail;
            detail << " [failed: " << what << "]";
        }
    }
};

// Every signature computed below, for the bounds check.
std::vector<SelfFunctionalMap> g_signatures;

SelfFunctionalMap signature(const TriMesh& mesh, const SfmOptions& options = {}, std::string id = {})
{
    SelfFunctionalMap map = compute_sfm(mesh, options, std::move(id));
    g_signatures.push_back(map);
    return map;
}

ShapeSpec with_transform(ShapeSpec spec, const ShapeTransform& t)
{
    const Eigen::Vector3d stretch = spec.transform.stretch;
    spec.transform = t;
    spec.transform.stretch = stretch;
    return spec;
}

// ---------------------------------------------------------------------------
// The three-class synthetic dataset shared by several criteria.

struct Dataset
{
    std::vector<SelfFunctionalMap> maps;
    std::vector<int> labels;
    DistanceMatrix distances;
    double build_seconds = 0.0;
    std::vector<TriMesh> meshes;
};

std::vector<ShapeSpec> class_prototypes()
{
    ShapeSpec capsule;
    capsule.kind = ShapeKind::spherocylinder;
    capsule.height = 1.0;
    capsule.segments = 32;
    capsule.rings = 8;
    capsule.transform.stretch = Eigen::Vector3d(1.0, 0.8, 1.0);

    ShapeSpec torus = test::torus_spec(48, 16);
    torus.transform.stretch = Eigen::Vector3d(1.0, 0.85, 1.0);

    ShapeSpec blob = test::icosphere_spec(3);
    blob.transform.stretch = Eigen::Vector3d(1.3, 1.0, 0.75);
    return {capsule, torus, blob};
}

std::vector<ShapeTransform> class_variants()
{
    std::vector<ShapeTransform> variants(5);
    variants[1].scale = 2.5;
    variants[1].rotation_seed = 11;
    variants[2].permutation_seed = 12;
    variants[3].noise = 0.005;
    variants[3].noise_seed = 13;
    variants[4].noise = 0.005;
    variants[4].noise_seed = 14;
    variants[4].scale = 0.5;
    variants[4].permutation_seed = 15;
    variants[4].rotation_seed = 16;
    return variants;
}

const Dataset& dataset()
{
    static const Dataset data = [] {
        const auto start = Clock::now();
        Dataset d;
        const auto prototypes = class_prototypes();
        const auto variants = class_variants();
        for (size_t c = 0; c < prototypes.size(); ++c) {
            for (size_t v = 0; v < variants.size(); ++v) {
                d.meshes.push_back(test::make(with_transform(prototypes[c], variants[v])));
                d.labels.push_back(static_cast<int>(c));
            }
        }
        d.maps.resize(d.meshes.size());
        for (size_t i = 0; i < d.meshes.size(); ++i) {
            d.maps[i] = signature(d.meshes[i], {}, "shape" + std::to_string(i));
        }
        d.distances = distance_matrix(d.maps);
        d.build_seconds = seconds_since(start);
        return d;
    }();
    return data;
}

double mean_inter_class_distance(const Dataset& d)
{
    double total = 0.0;
    int count = 0;
    for (size_t i = 0; i < d.maps.size(); ++i) {
        for (size_t j = i + 1; j < d.maps.size(); ++j) {
            if (d.labels[i] == d.labels[j]) continue;
            total += d.distances.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            ++count;
        }
    }
    return total / count;
}

bool is_identity(const Eigen::MatrixXd& M)
{
    return (M - Eigen::MatrixXd::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff() == 0.0;
}

// ---------------------------------------------------------------------------

void sphere_spectrum(Outcome& out)
{
    const auto start = Clock::now();
    const TriMesh sphere = test::make(test::icosphere_spec(4));
    const OperatorSet ops = build_operators(sphere);
    const SpectralBasis basis = build_basis(ops, Pencil::regular, 9);
    const double elapsed = seconds_since(start);
    const double expected[9] = {0, 2, 2, 2, 6, 6, 6, 6, 6};
    double worst = 0.0;
    for (int j = 1; j < 9; ++j) worst = std::max(worst, std::abs(basis.eigenvalues[j] / expected[j] - 1.0));
    out.detail << "|V|=" << sphere.num_vertices() << " lambda0=" << basis.eigenvalues[0] << " max rel err=" << worst
               << " time=" << elapsed << "s";
    out.require(std::abs(basis.eigenvalues[0]) <= 1e-8, "lambda0 = 0");
    out.require(worst <= 0.02, "within 2%");
    out.require(elapsed < 10.0, "runtime < 10 s");
}

void conformal_identity(Outcome& out)
{
    const auto start = Clock::now();
    const TriMesh unit = test::make(test::icosphere_spec(4, 1.0));
    const TriMesh twice = test::make(test::icosphere_spec(4, 2.0));
    SfmOptions options;
    options.n = options.m = 9;
    const SfmComputation a = compute_sfm_full(unit, options);
    const SfmComputation b = compute_sfm_full(twice, options);
    g_signatures.push_back(a.map);
    g_signatures.push_back(b.map);
    const double elapsed = seconds_since(start);

    double si = 0.0;
    double reg = 0.0;
    const double top_si = a.scale_invariant.eigenvalues[8];
    const double top_reg = a.regular.eigenvalues[8];
    for (int j = 0; j < 9; ++j) {
        // The zero eigenvalue is compared against the scale of the spectrum.
        const double sa = a.scale_invariant.eigenvalues[j];
        const double sb = b.scale_invariant.eigenvalues[j];
        si = std::max(si, std::abs(sa - sb) / (j == 0 ? top_si : std::abs(sa)));
        const double ra = a.regular.eigenvalues[j];
        const double rb = b.regular.eigenvalues[j];
        reg = std::max(reg, std::abs(ra - 4.0 * rb) / (j == 0 ? top_reg : std::abs(ra)));
    }
    out.detail << "scale-invariant rel diff=" << si << " regular factor-4 rel diff=" << reg << " time=" << elapsed << "s";
    out.require(si <= 1e-3, "scale-invariant within 1e-3");
    out.require(reg <= 1e-6, "regular factor 4 within 1e-6");
    out.require(elapsed < 20.0, "runtime < 20 s");
}

void gauss_bonnet(Outcome& out)
{
    std::vector<std::pair<ShapeSpec, int>> shapes; // spec, Euler characteristic
    for (int level = 0; level <= 5; ++level) shapes.push_back({test::icosphere_spec(level), 2});
    for (int segments : {8, 24, 40}) {
        ShapeSpec uv;
        uv.kind = ShapeKind::uvsphere;
        uv.segments = segments;
        uv.rings = segments / 2 + 3;
        shapes.push_back({uv, 2});
    }
    for (double h : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        ShapeSpec capsule;
        capsule.kind = ShapeKind::spherocylinder;
        capsule.height = h;
        shapes.push_back({capsule, 2});
    }
    for (const auto& [segments, rings] : {std::pair{8, 3}, std::pair{24, 12}, std::pair{48, 16}}) {
        shapes.push_back({test::torus_spec(segments, rings), 0});
    }
    const size_t plain = shapes.size();
    for (size_t s = 0; s < plain; ++s) {
        ShapeSpec noisy = shapes[s].first;
        noisy.transform.noise = 0.05;
        noisy.transform.stretch = Eigen::Vector3d(1.4, 0.9, 0.6);
        noisy.transform.scale = 3.0;
        shapes.push_back({noisy, shapes[s].second});
    }
    for (const auto& p : class_prototypes()) {
        for (const auto& v : class_variants()) shapes.push_back({with_transform(p, v), p.kind == ShapeKind::torus ? 0 : 2});
    }

    double worst = 0.0;
    for (const auto& [spec, chi] : shapes) {
        const TriMesh mesh = test::make(spec);
        out.require(mesh.is_closed() && mesh.euler_characteristic() == chi, "closed with the expected topology");
        worst = std::max(worst, std::abs(angle_deficits(mesh).sum() - 2.0 * kPi * chi));
    }
    out.detail << shapes.size() << " closed meshes, max |sum deficit - 2 pi chi| = " << worst;
    out.require(worst <= 1e-8, "within 1e-8");
}

void invariances(Outcome& out)
{
    const Dataset& d = dataset();
    // The three class prototypes are generic (no symmetric eigenspaces).
    double permuted = 0.0;
    double rigid = 0.0;
    double scaled = 0.0;
    for (const ShapeSpec& proto : class_prototypes()) {
        const MeshData base = generate_shape(proto);
        const SelfFunctionalMap c = signature(TriMesh::from_data(base));

        ShapeTransform perm;
        perm.permutation_seed = 77;
        ShapeTransform move;
        move.rotation_seed = 78;
        move.translation = Eigen::Vector3d(3, -2, 5);
        ShapeTransform scale;
        scale.scale = 3.0;
        permuted = std::max(permuted, sfm_distance(c, signature(TriMesh::from_data(transform_mesh(base, perm)))));
        rigid = std::max(rigid, sfm_distance(c, signature(TriMesh::from_data(transform_mesh(base, move)))));
        const double norm = l1_norm(c.C);
        scaled = std::max(scaled, sfm_distance(c, signature(TriMesh::from_data(transform_mesh(base, scale)))) / (norm * norm));
    }

    ShapeSpec sheet;
    sheet.kind = ShapeKind::bent_sheet;
    sheet.width = 2.3;
    sheet.nx = 23;
    sheet.ny = 10;
    const SelfFunctionalMap flat = signature(test::make(sheet));
    sheet.bend_angle = kPi / 2;
    const SelfFunctionalMap bent = signature(test::make(sheet));
    const double bend = sfm_distance(flat, bent);
    const double inter = mean_inter_class_distance(d);

    out.detail << "(a) permuted=" << permuted << " (b) rigid=" << rigid << " (c) scaled/|C|^2=" << scaled
               << " (d) bent=" << bend << " vs 0.05*mean inter-class=" << 0.05 * inter;
    out.require(permuted <= 1e-10, "(a)");
    out.require(rigid <= 1e-10, "(b)");
    out.require(scaled <= 1e-4, "(c)");
    out.require(bend <= 0.05 * inter, "(d)");
}

void signature_bounds(Outcome& out)
{
    double corner = 0.0;
    double entry = 0.0;
    for (const auto& map : g_signatures) {
        corner = std::max(corner, std::abs(map.C(0, 0) - 1.0));
        entry = std::max(entry, map.C.cwiseAbs().maxCoeff());
    }
    out.detail << g_signatures.size() << " signatures, max |C00 - 1|=" << corner << " max |C_pq|=" << entry;
    out.require(!g_signatures.empty(), "signatures computed");
    out.require(corner <= 1e-9, "C00 = 1");
    out.require(entry <= 1.0 + 1e-6, "entries in [-1, 1]");
}

void sign_alignment(Outcome& out)
{
    std::mt19937_64 rng(2024);
    int exact = 0;
    for (int t = 0; t < 1000; ++t) {
        const Eigen::MatrixXd R = test::random_matrix(7, 7, rng);
        const Eigen::MatrixXd C = test::random_signs(7, rng).asDiagonal() * R * test::random_signs(7, rng).asDiagonal();
        const SignVectors s = sign_align(R, C);
        exact += s.residual == 0.0 && apply_signs(C, s) == R;
    }
    int optimal = 0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::MatrixXd R = test::random_matrix(4, 4, rng);
        const Eigen::MatrixXd C = test::random_matrix(4, 4, rng);
        // Same optimum up to the summation order of the misfits.
        const double brute = test::brute_force_alignment(R, C);
        optimal += std::abs(sign_align(R, C).residual - brute) <= 1e-12 * brute;
    }
    out.detail << "planted recovered " << exact << "/1000, brute-force optimal " << optimal << "/100";
    out.require(exact == 1000, "planted recovery");
    out.require(optimal == 100, "brute-force optimality");
}

TriMesh random_mesh(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
    for (;;) {
        ShapeSpec spec;
        switch (rng() % 4) {
        case 0:
            spec = test::icosphere_spec(pick(3, 4));
            break;
        case 1:
            spec.kind = ShapeKind::uvsphere;
            spec.segments = pick(20, 70);
            spec.rings = pick(15, 50);
            break;
        case 2:
            spec.kind = ShapeKind::spherocylinder;
            spec.segments = pick(16, 48);
            spec.rings = pick(5, 14);
            spec.height = 0.3 + 3.0 * u(rng);
            break;
        default:
            spec = test::torus_spec(pick(30, 90), pick(12, 40));
            break;
        }
        spec.transform.stretch = Eigen::Vector3d(0.7 + 0.6 * u(rng), 0.7 + 0.6 * u(rng), 0.7 + 0.6 * u(rng));
        spec.transform.noise = 0.01;
        spec.transform.noise_seed = rng();
        spec.transform.rotation_seed = rng();
        const MeshData data = generate_shape(spec);
        if (data.vertices.size() >= 500 && data.vertices.size() <= 3000) return TriMesh::from_data(data);
    }
}

/// [begin, end) runs of eigenvalues whose consecutive relative gap is below @p gap.
std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters(const Eigen::VectorXd& values, double gap)
{
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    Eigen::Index begin = 0;
    const double scale = values.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 1; j <= values.size(); ++j) {
        if (j == values.size() || values[j] - values[j - 1] > gap * scale) {
            out.emplace_back(begin, j);
            begin = j;
        }
    }
    return out;
}

void solver_equivalence(Outcome& out)
{
    std::mt19937_64 rng(7);
    const Eigen::Index k = 15;
    double value_err = 0.0;
    double angle = 0.0;
    Eigen::Index smallest = 1 << 30;
    Eigen::Index largest = 0;
    const auto start = Clock::now();
    for (int t = 0; t < 20; ++t) {
        const TriMesh mesh = random_mesh(rng);
        smallest = std::min(smallest, mesh.num_vertices());
        largest = std::max(largest, mesh.num_vertices());
        const OperatorSet ops = build_operators(mesh);
        for (const Eigen::VectorXd& mass : {ops.A, ops.scale_invariant_mass()}) {
            const Eigenpairs dense = dense_smallest_eigenpairs(ops.W, mass, k);
            const Eigenpairs iter = iterative_smallest_eigenpairs(ops.W, mass, k);
            const double top = dense.values[k - 1];
            for (Eigen::Index j = 0; j < k; ++j) {
                value_err = std::max(value_err, std::abs(iter.values[j] - dense.values[j]) / (j == 0 ? top : dense.values[j]));
            }
            for (const auto& [b, e] : clusters(dense.values, 1e-6)) {
                if (e == k) continue; // the last cluster may continue past k
                angle = std::max(angle,
                    test::max_principal_angle(dense.vectors.middleCols(b, e - b), iter.vectors.middleCols(b, e - b), mass));
            }
        }
    }
    out.detail << "20 meshes, |V| in [" << smallest << ", " << largest << "], both pencils: max eigenvalue rel err="
               << value_err << " max principal angle=" << angle << " rad, time=" << seconds_since(start) << "s";
    out.require(value_err <= 1e-7, "eigenvalues within 1e-7");
    out.require(angle < 1e-6, "principal angles < 1e-6");
}

void spherocylinder_family(Outcome& out)
{
    SfmOptions options;
    options.n = options.m = 7;
    std::vector<SelfFunctionalMap> family;
    for (double h : {0.5, 1.0, 2.0, 4.0}) {
        ShapeSpec capsule;
        capsule.kind = ShapeKind::spherocylinder;
        capsule.height = h;
        family.push_back(signature(test::make(capsule), options));
    }
    const SelfFunctionalMap torus = signature(test::make(test::torus_spec(48, 16)), options);
    double intra = 0.0;
    double to_torus = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < family.size(); ++i) {
        for (size_t j = i + 1; j < family.size(); ++j) intra = std::max(intra, sfm_distance(family[i], family[j]));
        to_torus = std::min(to_torus, sfm_distance(family[i], torus));
    }
    out.detail << "max intra-family=" << intra << " min to torus=" << to_torus << " ratio=" << intra / to_torus;
    out.require(intra <= 0.2 * to_torus, "intra-family <= 0.2 x distance to torus");
}

void classification(Outcome& out)
{
    const Dataset& d = dataset();
    const auto start = Clock::now();
    KMeansOptions options;
    options.seed = 1;
    const KMeansResult result = kmeans_classify(d.maps, 3, options);
    const ConfusionResult confusion = confusion_matrix(result.labeling.predicted, d.labels, 3);
    const double elapsed = d.build_seconds + seconds_since(start);
    out.detail << d.maps.size() << " shapes in 3 classes, confusion diagonal=" << confusion.matrix.diagonal().transpose()
               << " time=" << elapsed << "s";
    out.require(is_identity(confusion.matrix), "identity confusion matrix");
    out.require(elapsed < 120.0, "runtime < 2 min");
}

void embedding(Outcome& out)
{
    bool monotone = true;
    const auto check_runs = [&](const Embedding& e) {
        for (const auto& history : e.run_histories) {
            for (size_t t = 1; t < history.size(); ++t) monotone = monotone && history[t] <= history[t - 1] + 1e-12;
        }
    };

    // Exact planar configurations.
    std::mt19937_64 rng(5);
    double planar = 0.0;
    for (int t = 0; t < 5; ++t) {
        const Eigen::MatrixXd P = test::random_matrix(12, 2, rng);
        DistanceMatrix dm;
        dm.D.resize(12, 12);
        for (Eigen::Index i = 0; i < 12; ++i) {
            for (Eigen::Index j = 0; j < 12; ++j) dm.D(i, j) = (P.row(i) - P.row(j)).norm();
        }
        for (MdsMode mode : {MdsMode::metric, MdsMode::nonmetric}) {
            MdsOptions options;
            options.mode = mode;
            const Embedding e = mds_embed(dm, 2, options);
            planar = std::max(planar, e.stress);
            check_runs(e);
        }
    }

    const Dataset& d = dataset();
    const Embedding e = mds_embed(d.distances, 3);
    check_runs(e);
    const double silhouette = silhouette_score(e.points, d.labels);
    out.detail << "monotone=" << (monotone ? "yes" : "no") << " planar stress=" << planar
               << " 3-class silhouette=" << silhouette;
    out.require(monotone, "stress non-increasing on every run");
    out.require(planar < 1e-6, "planar stress < 1e-6");
    out.require(silhouette > 0.6, "silhouette > 0.6");
}

void matching(Outcome& out)
{
    const TriMesh mesh = test::bumpy_sphere(2, 5);
    const auto perm = random_permutation(mesh.num_vertices(), 31);
    const TriMesh permuted = TriMesh::from_data(permute_vertices(mesh.to_data(), perm));
    SfmOptions options;
    options.n = options.m = 40;
    const SfmComputation s = compute_sfm_full(mesh, options);
    const SfmComputation q = compute_sfm_full(permuted, options);
    const ShapeBases source{s.regular, s.scale_invariant, s.operators.scale_invariant_mass()};
    const ShapeBases target{q.regular, q.scale_invariant, q.operators.scale_invariant_mass()};

    const MatchResult r = match_shapes(source, target, s.map);
    size_t hits = 0;
    for (size_t j = 0; j < r.correspondence.size(); ++j) hits += r.correspondence[j] == perm[j];
    const double agreement = static_cast<double>(hits) / static_cast<double>(r.correspondence.size());
    const MatchResult self = match_shapes(source, source, s.map);
    out.detail << "|V|=" << mesh.num_vertices() << " k=40 agreement=" << 100.0 * agreement
               << "% identical-mesh consistency=" << self.consistency_error;
    out.require(agreement >= 0.99, "agreement >= 99%");
    out.require(self.consistency_error <= 1e-6, "consistency <= 1e-6");
}

bool real_data(Outcome& out)
{
    const char* manifest_path = std::getenv("SFMAP_TOSCA_MANIFEST");
    if (!manifest_path || !*manifest_path) {
        out.detail << "set SFMAP_TOSCA_MANIFEST to a path,class,id manifest of decimated TOSCA meshes";
        return false;
    }
    const Manifest manifest = Manifest::load(manifest_path);
    const auto classes = manifest.classes();
    std::vector<SelfFunctionalMap> maps;
    std::vector<int> labels;
    for (const auto& entry : manifest.entries) {
        maps.push_back(signature(load_mesh(entry.mesh), {}, entry.id));
        labels.push_back(static_cast<int>(std::find(classes.begin(), classes.end(), entry.label) - classes.begin()));
    }
    const int k = static_cast<int>(classes.size());
    const KMeansResult result = kmeans_classify(maps, k);
    const ConfusionResult confusion = confusion_matrix(result.labeling.predicted, labels, k);
    out.detail << maps.size() << " meshes in " << k << " classes, confusion diagonal="
               << confusion.matrix.diagonal().transpose();
    out.require(is_identity(confusion.matrix), "identity confusion matrix");
    return true;
}

} // namespace

int main()
{
    struct Criterion
    {
        int number;
        const char* name;
        std::function<void(Outcome&)> run;
    };
    const Criterion criteria[] = {
        {1, "sphere spectrum", sphere_spectrum},
        {2, "conformal identity", conformal_identity},
        {3, "Gauss-Bonnet", gauss_bonnet},
        {4, "signature invariances", invariances},
        {5, "signature bounds", [](Outcome&) {}}, // evaluated last, over every signature
        {6, "sign alignment", sign_alignment},
        {7, "eigensolver equivalence", solver_equivalence},
        {8, "spherocylinder family", spherocylinder_family},
        {9, "synthetic classification", classification},
        {10, "MDS", embedding},
        {11, "matching", matching},
        {12, "real-data classification", [](Outcome& out) {
             if (!real_data(out)) out.status = Outcome::Status::skip;
         }},
    };

    std::vector<std::unique_ptr<Outcome>> outcomes;
    for (const auto& c : criteria) {
        auto outcome = std::make_unique<Outcome>();
        try {
            c.run(*outcome);
        } catch (const std::exception& e) {
            outcome->status = Outcome::Status::fail;
            outcome->detail << " [exception: " << e.what() << "]";
        }
        outcomes.push_back(std::move(outcome));
    }
    signature_bounds(*outcomes[4]);

    int failures = 0;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        const Outcome& o = *outcomes[i];
        const char* status = o.status == Outcome::Status::pass ? "PASS" : o.status == Outcome::Status::fail ? "FAIL" : "SKIP";
        failures += o.status == Outcome::Status::fail;
        std::cout << "criterion " << criteria[i].number << " (" << criteria[i].name << "): " << status << " -"
                  << o.detail.str() << '\n';
    }
    std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : std::string("all criteria passed")) << '\n';
    return failures ? 1 : 0;
}
