#pragma once

#include <sfmap/analysis.hpp>
#include <sfmap/mesh.hpp>
#include <sfmap/sfm.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sfmap {

struct ManifestEntry
{
    std::filesystem::path mesh; ///< resolved against the manifest's directory
    std::string label;
    std::string id;
};

/// CSV of "path,class,id" rows; a header row with those names is optional.
struct Manifest
{
    std::vector<ManifestEntry> entries;

    /// Throws ParseError on malformed rows, duplicate ids or missing mesh files.
    static Manifest load(const std::filesystem::path& path);
    static Manifest parse(std::istream& in, const std::filesystem::path& base_dir);

    /// Distinct labels in order of first appearance.
    std::vector<std::string> classes() const;
    const ManifestEntry& find(std::string_view id) const;
};

enum class Command { compute, dist, classify, embed, match };

Command command_from_string(std::string_view text);

struct PipelineOptions
{
    std::filesystem::path out_dir = "sfmap_out";
    SfmOptions sfm;
    MeshOptions mesh;
    int jobs = 1;
    bool dump_bases = false;
    int pgm_cell = 1;

    std::uint64_t seed = 0;
    int restarts = 200;
    int kmeans_iterations = 100;
    int clusters = 0; ///< 0: number of classes in the manifest

    MdsMode mds_mode = MdsMode::nonmetric;
    int dimension = 3;

    std::string match_source;
    std::string match_target;
};

/// Output locations under PipelineOptions::out_dir.
struct PipelinePaths
{
    std::filesystem::path root;

    std::filesystem::path signature(std::string_view id) const;
    std::filesystem::path signature_image(std::string_view id) const;
    std::filesystem::path basis(std::string_view id, Pencil pencil) const;
    std::filesystem::path distances() const { return root / "distances.csv"; }
    std::filesystem::path labels() const { return root / "labels.csv"; }
    std::filesystem::path confusion_table() const { return root / "confusion.txt"; }
    std::filesystem::path confusion_csv() const { return root / "confusion.csv"; }
    std::filesystem::path embedding_csv() const { return root / "embedding.csv"; }
    std::filesystem::path embedding_svg() const { return root / "embedding.svg"; }
    std::filesystem::path correspondence(std::string_view source, std::string_view target) const;
};

///
/// Runs one pipeline stage. compute writes per-shape signatures (and bases
/// when requested); every later stage reads only files written by earlier
/// stages and throws DependencyError when one is missing.
///
void run_pipeline(const Manifest& manifest, Command command, const PipelineOptions& options, std::ostream& log);

/// Loads every manifest signature from a previous compute run.
std::vector<SelfFunctionalMap> load_signatures(const Manifest& manifest, const PipelinePaths& paths);

} // namespace sfmap
