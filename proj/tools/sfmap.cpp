// sfmap: self functional map signatures from the command line.

#include <sfmap/error.hpp>
#include <sfmap/pipeline.hpp>
#include <sfmap/shapes.hpp>
#include <sfmap/spectrum.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <thread>

namespace {

enum ExitCode { kSuccess = 0, kUsage = 1, kData = 2, kNumerical = 3 };

int exit_code(sfmap::ErrorKind kind)
{
    switch (kind) {
    case sfmap::ErrorKind::usage: return kUsage;
    case sfmap::ErrorKind::data: return kData;
    case sfmap::ErrorKind::numerical: return kNumerical;
    }
    return kData;
}

struct PipelineFlags
{
    std::string manifest;
    std::string epsilon = "rel:1e-3";
    std::string mds_mode = "nonmetric";
    long long dense_threshold = sfmap::kDefaultDenseThreshold;
    sfmap::PipelineOptions options;
};

void add_pipeline_flags(CLI::App& cmd, PipelineFlags& flags, sfmap::Command command)
{
    auto& o = flags.options;
    cmd.add_option("manifest", flags.manifest, "CSV of path,class,id rows")->required()->envname("SFMAP_MANIFEST");
    cmd.add_option("--out,-o", o.out_dir, "Output directory")->envname("SFMAP_OUT")->capture_default_str();
    cmd.add_option("--largest-component", o.mesh.largest_component, "Keep only the largest connected component")
        ->envname("SFMAP_LARGEST_COMPONENT")
        ->default_val(false);

    if (command == sfmap::Command::compute) {
        cmd.add_option("--n", o.sfm.n, "Regular eigenfunctions")->envname("SFMAP_N")->check(CLI::Range(1, 1000000))->capture_default_str();
        cmd.add_option("--m", o.sfm.m, "Scale-invariant eigenfunctions")->envname("SFMAP_M")->check(CLI::Range(1, 1000000))->capture_default_str();
        cmd.add_option("--epsilon", flags.epsilon, "Curvature regularizer: absolute value or rel:<factor>")
            ->envname("SFMAP_EPSILON")
            ->capture_default_str();
        cmd.add_option("--dense-threshold", flags.dense_threshold, "Largest mesh solved with the dense eigensolver")
            ->envname("SFMAP_DENSE_THRESHOLD")
            ->capture_default_str();
        cmd.add_option("--max-iterations", o.sfm.solver.max_iterations, "Iteration cap of the iterative eigensolver (0: 300 k)")
            ->envname("SFMAP_MAX_ITERATIONS")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        cmd.add_option("--tolerance", o.sfm.solver.tolerance, "Relative residual target of the iterative eigensolver")
            ->envname("SFMAP_TOLERANCE")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd.add_option("--jobs,-j", o.jobs, "Meshes processed concurrently")
            ->envname("SFMAP_JOBS")
            ->default_val(static_cast<int>(std::max(1U, std::thread::hardware_concurrency())));
        cmd.add_flag("--bases", o.dump_bases, "Also write both eigenbases (needed by match)")->envname("SFMAP_BASES");
        cmd.add_option("--pgm-cell", o.pgm_cell, "Pixels per signature entry in the PGM image")
            ->envname("SFMAP_PGM_CELL")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    }
    if (command == sfmap::Command::classify || command == sfmap::Command::embed) {
        cmd.add_option("--seed", o.seed, "Random seed")->envname("SFMAP_SEED")->capture_default_str();
    }
    if (command == sfmap::Command::classify) {
        cmd.add_option("--restarts", o.restarts, "k-means restarts")->envname("SFMAP_RESTARTS")->check(CLI::PositiveNumber)->capture_default_str();
        cmd.add_option("--iterations", o.kmeans_iterations, "k-means iterations per restart")
            ->envname("SFMAP_ITERATIONS")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd.add_option("--k", o.clusters, "Number of clusters (default: number of classes)")->envname("SFMAP_K");
    }
    if (command == sfmap::Command::embed) {
        cmd.add_option("--mds-mode", flags.mds_mode, "nonmetric or metric")
            ->envname("SFMAP_MDS_MODE")
            ->check(CLI::IsMember({"nonmetric", "metric"}))
            ->capture_default_str();
        cmd.add_option("--dim", o.dimension, "Embedding dimension")->envname("SFMAP_DIM")->check(CLI::PositiveNumber)->capture_default_str();
    }
    if (command == sfmap::Command::match) {
        cmd.add_option("--source", o.match_source, "Shape id to map from")->required();
        cmd.add_option("--target", o.match_target, "Shape id to map to")->required();
    }
}

int run_pipeline_command(PipelineFlags& flags, sfmap::Command command)
{
    auto& o = flags.options;
    o.sfm.epsilon = sfmap::EpsilonPolicy::parse(flags.epsilon);
    o.sfm.solver.dense_threshold = flags.dense_threshold;
    o.mds_mode = flags.mds_mode == "metric" ? sfmap::MdsMode::metric : sfmap::MdsMode::nonmetric;
    const auto manifest = sfmap::Manifest::load(flags.manifest);
    sfmap::run_pipeline(manifest, command, o, std::cout);
    return kSuccess;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Self functional map signatures for shape classification and matching"};
    app.require_subcommand(1);

    // gen
    sfmap::ShapeSpec spec;
    std::string kind = "icosphere";
    std::string out_path;
    std::uint64_t rotate_seed = 0;
    std::uint64_t permute_seed = 0;
    std::vector<double> translate;
    std::vector<double> stretch;
    auto* gen = app.add_subcommand("gen", "Write a synthetic mesh as OFF");
    gen->add_option("--kind", kind, "icosphere|uvsphere|spherocylinder|torus|plane_patch|bent_sheet")
        ->check(CLI::IsMember({"icosphere", "uvsphere", "spherocylinder", "torus", "plane_patch", "bent_sheet"}))
        ->capture_default_str();
    gen->add_option("--radius", spec.radius, "Sphere or cap radius")->capture_default_str();
    gen->add_option("--height", spec.height, "Spherocylinder tube length")->capture_default_str();
    gen->add_option("--major", spec.major_radius, "Torus major radius")->capture_default_str();
    gen->add_option("--minor", spec.minor_radius, "Torus tube radius")->capture_default_str();
    gen->add_option("--width", spec.width, "Sheet width (bending direction)")->capture_default_str();
    gen->add_option("--length", spec.length, "Sheet length (bending axis)")->capture_default_str();
    gen->add_option("--bend", spec.bend_angle, "Sheet bend angle in radians")->capture_default_str();
    gen->add_option("--level", spec.level, "Icosphere subdivisions")->capture_default_str();
    gen->add_option("--segments", spec.segments, "Samples around the axis")->capture_default_str();
    gen->add_option("--rings", spec.rings, "Latitude bands / tube samples")->capture_default_str();
    gen->add_option("--nx", spec.nx, "Sheet cells along width")->capture_default_str();
    gen->add_option("--ny", spec.ny, "Sheet cells along length")->capture_default_str();
    gen->add_option("--noise", spec.transform.noise, "Normal noise amplitude (fraction of mean edge length)")->capture_default_str();
    gen->add_option("--noise-seed", spec.transform.noise_seed, "Noise seed")->capture_default_str();
    auto* rotate_opt = gen->add_option("--rotate-seed", rotate_seed, "Apply a random rotation drawn from this seed");
    gen->add_option("--scale", spec.transform.scale, "Uniform scale")->capture_default_str();
    gen->add_option("--translate", translate, "Translation x y z")->expected(3);
    gen->add_option("--stretch", stretch, "Per-axis scale x y z, applied first")->expected(3);
    auto* permute_opt = gen->add_option("--permute-seed", permute_seed, "Relabel vertices with a permutation from this seed");
    gen->add_option("--out,-o", out_path, "Output OFF path")->required();

    const std::pair<const char*, sfmap::Command> commands[] = {
        {"compute", sfmap::Command::compute},
        {"dist", sfmap::Command::dist},
        {"classify", sfmap::Command::classify},
        {"embed", sfmap::Command::embed},
        {"match", sfmap::Command::match},
    };
    const char* descriptions[] = {
        "Compute per-shape signatures (CSV + PGM)",
        "Pairwise signature distance matrix",
        "k-means classification and confusion matrix",
        "MDS embedding of the signature distances",
        "Point correspondence between two shapes of one class",
    };
    std::vector<PipelineFlags> flags(std::size(commands));
    std::vector<CLI::App*> subcommands;
    for (size_t c = 0; c < std::size(commands); ++c) {
        auto* cmd = app.add_subcommand(commands[c].first, descriptions[c]);
        add_pipeline_flags(*cmd, flags[c], commands[c].second);
        subcommands.push_back(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*gen) {
            spec.kind = sfmap::shape_kind_from_string(kind);
            if (*rotate_opt) spec.transform.rotation_seed = rotate_seed;
            if (*permute_opt) spec.transform.permutation_seed = permute_seed;
            if (!translate.empty()) spec.transform.translation = Eigen::Vector3d(translate[0], translate[1], translate[2]);
            if (!stretch.empty()) spec.transform.stretch = Eigen::Vector3d(stretch[0], stretch[1], stretch[2]);
            const sfmap::MeshData mesh = sfmap::generate_shape(spec);
            sfmap::save_off(out_path, mesh);
            std::cout << "wrote " << out_path << " (" << mesh.vertices.size() << " vertices, " << mesh.faces.size()
                      << " faces)\n";
            return kSuccess;
        }
        for (size_t c = 0; c < subcommands.size(); ++c) {
            if (*subcommands[c]) return run_pipeline_command(flags[c], commands[c].second);
        }
    } catch (const sfmap::Error& e) {
        std::cerr << "sfmap: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "sfmap: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
