#include "csv_util.hpp"

#include <sfmap/error.hpp>
#include <sfmap/pipeline.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <ostream>
#include <set>
#include <thread>

namespace sfmap {

namespace fs = std::filesystem;

Manifest Manifest::parse(std::istream& in, const fs::path& base_dir)
{
    Manifest manifest;
    std::set<std::string> seen;
    std::vector<std::string> row;
    std::int64_t line = 0;
    while (detail::next_csv_row(in, row, line)) {
        if (line == 1 && row.size() == 3 && row[0] == "path" && row[1] == "class" && row[2] == "id") continue;
        if (row.size() != 3 || row[0].empty() || row[2].empty()) {
            throw ParseError("manifest rows must be 'path,class,id'", line);
        }
        ManifestEntry entry{fs::path(row[0]), row[1], row[2]};
        if (entry.mesh.is_relative()) entry.mesh = base_dir / entry.mesh;
        if (!seen.insert(entry.id).second) throw ParseError("duplicate shape id '" + entry.id + "'", line);
        if (entry.id.find_first_of("/\\") != std::string::npos) {
            throw ParseError("shape id '" + entry.id + "' must not contain path separators", line);
        }
        if (!fs::exists(entry.mesh)) throw ParseError("mesh file '" + entry.mesh.string() + "' does not exist", line);
        manifest.entries.push_back(std::move(entry));
    }
    if (manifest.entries.empty()) throw ParseError("manifest lists no shapes");
    return manifest;
}

Manifest Manifest::load(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open manifest '" + path.string() + "'");
    try {
        return parse(in, path.parent_path());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<std::string> Manifest::classes() const
{
    std::vector<std::string> out;
    for (const auto& e : entries) {
        if (std::find(out.begin(), out.end(), e.label) == out.end()) out.push_back(e.label);
    }
    return out;
}

const ManifestEntry& Manifest::find(std::string_view id) const
{
    for (const auto& e : entries) {
        if (e.id == id) return e;
    }
    throw ArgumentError("shape id '" + std::string(id) + "' is not in the manifest");
}

Command command_from_string(std::string_view text)
{
    if (text == "compute") return Command::compute;
    if (text == "dist") return Command::dist;
    if (text == "classify") return Command::classify;
    if (text == "embed") return Command::embed;
    if (text == "match") return Command::match;
    throw ArgumentError("unknown pipeline command '" + std::string(text) + "'");
}

fs::path PipelinePaths::signature(std::string_view id) const
{
    return root / "signatures" / (std::string(id) + ".csv");
}

fs::path PipelinePaths::signature_image(std::string_view id) const
{
    return root / "signatures" / (std::string(id) + ".pgm");
}

fs::path PipelinePaths::basis(std::string_view id, Pencil pencil) const
{
    return root / "bases" / (std::string(id) + "." + std::string(to_string(pencil)) + ".csv");
}

fs::path PipelinePaths::correspondence(std::string_view source, std::string_view target) const
{
    return root / ("match_" + std::string(source) + "_" + std::string(target) + ".csv");
}

std::vector<SelfFunctionalMap> load_signatures(const Manifest& manifest, const PipelinePaths& paths)
{
    std::vector<SelfFunctionalMap> maps;
    for (const auto& entry : manifest.entries) {
        const fs::path file = paths.signature(entry.id);
        if (!fs::exists(file)) {
            throw DependencyError("signature for '" + entry.id + "' not found at " + file.string() + " (run compute first)");
        }
        maps.push_back(load_signature_csv(file));
    }
    return maps;
}

namespace {

template <typename Fn>
void parallel_for(size_t count, int jobs, Fn&& fn)
{
    const size_t workers = std::min(count, static_cast<size_t>(std::max(1, jobs)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    // Report the first failure in manifest order, independent of scheduling.
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + path.string() + "'");
    writer(out);
    if (!out) throw ArgumentError("failed writing '" + path.string() + "'");
}

void compute(const Manifest& manifest, const PipelineOptions& options, const PipelinePaths& paths, std::ostream& log)
{
    fs::create_directories(paths.root / "signatures");
    if (options.dump_bases) fs::create_directories(paths.root / "bases");
    parallel_for(manifest.entries.size(), options.jobs, [&](size_t i) {
        const auto& entry = manifest.entries[i];
        const TriMesh mesh = load_mesh(entry.mesh, options.mesh);
        const SfmComputation result = compute_sfm_full(mesh, options.sfm, entry.id);
        save_signature_csv(paths.signature(entry.id), result.map);
        save_signature_pgm(paths.signature_image(entry.id), result.map, options.pgm_cell);
        if (options.dump_bases) {
            save_basis_csv(paths.basis(entry.id, Pencil::regular), result.regular);
            save_basis_csv(paths.basis(entry.id, Pencil::scale_invariant), result.scale_invariant);
        }
    });
    log << "computed " << manifest.entries.size() << " signature(s) in " << (paths.root / "signatures").string() << '\n';
}

std::vector<int> class_indices(const Manifest& manifest)
{
    const auto classes = manifest.classes();
    std::vector<int> out;
    for (const auto& e : manifest.entries) {
        out.push_back(static_cast<int>(std::find(classes.begin(), classes.end(), e.label) - classes.begin()));
    }
    return out;
}

std::vector<std::string> ids_of(const Manifest& manifest)
{
    std::vector<std::string> ids;
    for (const auto& e : manifest.entries) ids.push_back(e.id);
    return ids;
}

void classify(const Manifest& manifest, const PipelineOptions& options, const PipelinePaths& paths, std::ostream& log)
{
    const auto maps = load_signatures(manifest, paths);
    const auto classes = manifest.classes();
    const int k = options.clusters > 0 ? options.clusters : static_cast<int>(classes.size());
    KMeansOptions km;
    km.restarts = options.restarts;
    km.max_iterations = options.kmeans_iterations;
    km.seed = options.seed;
    KMeansResult result = kmeans_classify(maps, k, km);
    Labeling& labeling = result.labeling;
    labeling.true_labels = class_indices(manifest);

    const auto ids = ids_of(manifest);
    write_file(paths.labels(), [&](std::ostream& out) { write_labels_csv(out, ids, labeling); });
    if (k == static_cast<int>(classes.size())) {
        const ConfusionResult confusion = confusion_matrix(labeling.predicted, *labeling.true_labels, k);
        labeling.confusion = confusion.matrix;
        write_file(paths.confusion_table(), [&](std::ostream& out) { write_confusion_table(out, confusion.matrix, classes); });
        write_file(paths.confusion_csv(), [&](std::ostream& out) { write_confusion_csv(out, confusion.matrix, classes); });
        log << "confusion matrix:\n";
        write_confusion_table(log, confusion.matrix, classes);
    }
    log << "k-means cost " << result.cost << ", labels in " << paths.labels().string() << '\n';
}

void embed(const Manifest& manifest, const PipelineOptions& options, const PipelinePaths& paths, std::ostream& log)
{
    const DistanceMatrix dm = distance_matrix(load_signatures(manifest, paths));
    MdsOptions mds;
    mds.mode = options.mds_mode;
    mds.seed = options.seed;
    const Embedding embedding = mds_embed(dm, options.dimension, mds);

    std::vector<std::string> labels;
    for (const auto& e : manifest.entries) labels.push_back(e.label);
    const auto ids = ids_of(manifest);
    write_file(paths.embedding_csv(), [&](std::ostream& out) { write_embedding_csv(out, ids, embedding, labels); });
    write_file(paths.embedding_svg(), [&](std::ostream& out) { write_embedding_svg(out, ids, embedding, labels); });
    log << "embedded " << ids.size() << " shape(s) in R^" << options.dimension << ", stress " << embedding.stress << '\n';
}

ShapeBases load_shape_bases(const ManifestEntry& entry, const PipelineOptions& options, const PipelinePaths& paths,
    double epsilon)
{
    ShapeBases bases;
    for (Pencil pencil : {Pencil::regular, Pencil::scale_invariant}) {
        const fs::path file = paths.basis(entry.id, pencil);
        if (!fs::exists(file)) {
            throw DependencyError(
                "basis for '" + entry.id + "' not found at " + file.string() + " (run compute with --bases first)");
        }
        (pencil == Pencil::regular ? bases.regular : bases.scale_invariant) = load_basis_csv(file);
    }
    // The mass is cheap to rebuild; reuse the signature's epsilon exactly.
    const TriMesh mesh = load_mesh(entry.mesh, options.mesh);
    bases.mass = build_operators(mesh, EpsilonPolicy::absolute(epsilon)).scale_invariant_mass();
    if (bases.mass.size() != bases.regular.num_vertices() || bases.mass.size() != bases.scale_invariant.num_vertices()) {
        throw DependencyError("basis files for '" + entry.id + "' do not match its mesh (recompute)");
    }
    bases.regular.norm_mass = bases.mass;
    bases.scale_invariant.norm_mass = bases.mass;
    return bases;
}

void match(const Manifest& manifest, const PipelineOptions& options, const PipelinePaths& paths, std::ostream& log)
{
    if (options.match_source.empty() || options.match_target.empty()) {
        throw ArgumentError("match needs --source and --target shape ids");
    }
    const ManifestEntry& source = manifest.find(options.match_source);
    const ManifestEntry& target = manifest.find(options.match_target);
    for (const auto* e : {&source, &target}) {
        if (!fs::exists(paths.signature(e->id))) {
            throw DependencyError("signature for '" + e->id + "' not found (run compute first)");
        }
    }
    const SelfFunctionalMap source_map = load_signature_csv(paths.signature(source.id));
    const SelfFunctionalMap target_map = load_signature_csv(paths.signature(target.id));
    const ShapeBases source_bases = load_shape_bases(source, options, paths, source_map.epsilon);
    const ShapeBases target_bases = load_shape_bases(target, options, paths, target_map.epsilon);

    const MatchResult result = match_shapes(source_bases, target_bases, source_map);
    write_file(paths.correspondence(source.id, target.id), [&](std::ostream& out) {
        out << "source_vertex,target_vertex\n";
        for (size_t j = 0; j < result.correspondence.size(); ++j) out << j << ',' << result.correspondence[j] << '\n';
    });
    log << "matched " << source.id << " -> " << target.id << ", consistency error " << result.consistency_error << '\n';
}

} // namespace

void run_pipeline(const Manifest& manifest, Command command, const PipelineOptions& options, std::ostream& log)
{
    const PipelinePaths paths{options.out_dir};
    fs::create_directories(paths.root);
    switch (command) {
    case Command::compute: compute(manifest, options, paths, log); break;
    case Command::dist: {
        const DistanceMatrix dm = distance_matrix(load_signatures(manifest, paths));
        write_file(paths.distances(), [&](std::ostream& out) { write_distance_csv(out, dm); });
        log << "wrote " << dm.size() << "x" << dm.size() << " distance matrix to " << paths.distances().string() << '\n';
        break;
    }
    case Command::classify: classify(manifest, options, paths, log); break;
    case Command::embed: embed(manifest, options, paths, log); break;
    case Command::match: match(manifest, options, paths, log); break;
    }
}

} // namespace sfmap
