#include "csv_util.hpp"

#include <sfmap/analysis.hpp>
#include <sfmap/error.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace sfmap {

namespace {

void check_same_shape(const std::vector<SelfFunctionalMap>& maps)
{
    for (const auto& map : maps) {
        if (map.C.rows() != maps.front().C.rows() || map.C.cols() != maps.front().C.cols()) {
            throw ArgumentError(
                "signature '" + map.mesh_id + "' has shape " + std::to_string(map.m()) + "x" + std::to_string(map.n())
                + ", expected " + std::to_string(maps.front().m()) + "x" + std::to_string(maps.front().n()));
        }
    }
}

double median_of(std::vector<double>& values)
{
    const size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

struct LloydRun
{
    std::vector<int> assignment;
    std::vector<Eigen::MatrixXd> centroids;
    std::vector<double> history;
    double cost = std::numeric_limits<double>::infinity();
};

std::vector<size_t> kmeanspp_seeds(const Eigen::MatrixXd& D, int k, std::mt19937_64& rng)
{
    const auto N = static_cast<size_t>(D.rows());
    std::vector<size_t> seeds;
    std::vector<char> taken(N, 0);
    seeds.push_back(std::uniform_int_distribution<size_t>(0, N - 1)(rng));
    taken[seeds.back()] = 1;
    while (static_cast<int>(seeds.size()) < k) {
        std::vector<double> weight(N, 0.0);
        double total = 0.0;
        for (size_t i = 0; i < N; ++i) {
            if (taken[i]) continue;
            double closest = std::numeric_limits<double>::infinity();
            for (size_t s : seeds) closest = std::min(closest, D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)));
            weight[i] = closest;
            total += closest;
        }
        size_t pick = N;
        if (total > 0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (size_t i = 0; i < N; ++i) {
                if (taken[i] || weight[i] <= 0) continue;
                pick = i;
                target -= weight[i];
                if (target < 0) break;
            }
        } else {
            std::vector<size_t> free;
            for (size_t i = 0; i < N; ++i) {
                if (!taken[i]) free.push_back(i);
            }
            pick = free[std::uniform_int_distribution<size_t>(0, free.size() - 1)(rng)];
        }
        seeds.push_back(pick);
        taken[pick] = 1;
    }
    return seeds;
}

LloydRun lloyd(const std::vector<SelfFunctionalMap>& maps, std::vector<Eigen::MatrixXd> centroids, int max_iterations)
{
    const size_t N = maps.size();
    const size_t k = centroids.size();
    LloydRun run;
    std::vector<Eigen::MatrixXd> aligned(N);
    std::vector<int> assignment(N, -1);

    for (int iteration = 0; iteration < max_iterations; ++iteration) {
        double cost = 0.0;
        bool changed = false;
        for (size_t i = 0; i < N; ++i) {
            int best = 0;
            SignVectors best_signs;
            best_signs.residual = std::numeric_limits<double>::infinity();
            for (size_t c = 0; c < k; ++c) {
                SignVectors signs = sign_align(centroids[c], maps[i].C);
                if (signs.residual < best_signs.residual) {
                    best_signs = std::move(signs);
                    best = static_cast<int>(c);
                }
            }
            changed = changed || assignment[i] != best;
            assignment[i] = best;
            aligned[i] = apply_signs(maps[i].C, best_signs);
            cost += best_signs.residual;
        }
        const bool stalled = !run.history.empty() && cost >= run.history.back();
        run.history.push_back(cost);
        run.cost = cost;
        run.assignment = assignment;
        run.centroids = centroids;
        if (!changed && stalled) break;

        // Coordinate-wise median of aligned members; empty clusters keep
        // their centroid.
        for (size_t c = 0; c < k; ++c) {
            std::vector<size_t> members;
            for (size_t i = 0; i < N; ++i) {
                if (assignment[i] == static_cast<int>(c)) members.push_back(i);
            }
            if (members.empty()) continue;
            Eigen::MatrixXd centroid(centroids[c].rows(), centroids[c].cols());
            std::vector<double> column(members.size());
            for (Eigen::Index e = 0; e < centroid.size(); ++e) {
                for (size_t t = 0; t < members.size(); ++t) column[t] = aligned[members[t]](e);
                centroid(e) = median_of(column);
            }
            centroids[c] = std::move(centroid);
        }
    }
    return run;
}

} // namespace

DistanceMatrix distance_matrix(const std::vector<SelfFunctionalMap>& maps)
{
    DistanceMatrix dm;
    const auto N = static_cast<Eigen::Index>(maps.size());
    dm.D = Eigen::MatrixXd::Zero(N, N);
    if (maps.empty()) return dm;
    check_same_shape(maps);
    for (const auto& map : maps) dm.shape_ids.push_back(map.mesh_id);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = i + 1; j < N; ++j) {
            dm.D(i, j) = dm.D(j, i) = sfm_distance(maps[static_cast<size_t>(i)], maps[static_cast<size_t>(j)]);
        }
    }
    return dm;
}

KMeansResult kmeans_classify(const std::vector<SelfFunctionalMap>& maps, int k, const KMeansOptions& options)
{
    if (maps.empty()) throw ArgumentError("k-means needs at least one signature");
    if (k < 1 || k > static_cast<int>(maps.size())) {
        throw ArgumentError("k = " + std::to_string(k) + " is not in [1, " + std::to_string(maps.size()) + "]");
    }
    check_same_shape(maps);
    const DistanceMatrix dm = distance_matrix(maps);

    LloydRun best;
    for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
            static_cast<std::uint32_t>(restart)};
        std::mt19937_64 rng(seq);
        std::vector<Eigen::MatrixXd> centroids;
        for (size_t s : kmeanspp_seeds(dm.D, k, rng)) centroids.push_back(maps[s].C);
        LloydRun run = lloyd(maps, std::move(centroids), std::max(1, options.max_iterations));
        if (run.cost < best.cost) best = std::move(run);
    }

    // Renumber clusters by first appearance.
    std::vector<int> relabel(static_cast<size_t>(k), -1);
    int next = 0;
    for (int c : best.assignment) {
        if (relabel[static_cast<size_t>(c)] < 0) relabel[static_cast<size_t>(c)] = next++;
    }
    for (auto& r : relabel) {
        if (r < 0) r = next++;
    }
    KMeansResult result;
    result.cost = best.cost;
    result.cost_history = best.history;
    result.centroids.resize(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) result.centroids[static_cast<size_t>(relabel[static_cast<size_t>(c)])] = best.centroids[static_cast<size_t>(c)];
    for (int c : best.assignment) result.labeling.predicted.push_back(relabel[static_cast<size_t>(c)]);
    return result;
}

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight)
{
    // Hungarian algorithm (potentials form) on cost = max - weight.
    const int n = static_cast<int>(weight.rows());
    if (weight.cols() != n) throw ArgumentError("assignment needs a square weight matrix");
    if (n == 0) return {};
    const double top = weight.maxCoeff();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    const auto cost = [&](int i, int j) { return top - weight(i - 1, j - 1); };
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost(i0, j) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> result(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j) result[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    return result;
}

ConfusionResult confusion_matrix(const std::vector<int>& predicted, const std::vector<int>& true_labels, int k)
{
    if (predicted.size() != true_labels.size()) {
        throw ArgumentError("predicted and true label lists differ in length");
    }
    if (k < 1) throw ArgumentError("confusion matrix needs k >= 1");
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k); // (cluster, class)
    std::vector<double> class_size(static_cast<size_t>(k), 0.0);
    for (size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] < 0 || predicted[i] >= k || true_labels[i] < 0 || true_labels[i] >= k) {
            throw ArgumentError("label out of range [0, " + std::to_string(k) + ")");
        }
        counts(predicted[i], true_labels[i]) += 1.0;
        class_size[static_cast<size_t>(true_labels[i])] += 1.0;
    }
    for (int c = 0; c < k; ++c) {
        if (class_size[static_cast<size_t>(c)] == 0) throw ArgumentError("class " + std::to_string(c) + " has no shapes");
    }

    ConfusionResult result;
    if (k <= 8) {
        std::vector<int> perm(static_cast<size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        double best = -1.0;
        do {
            double mass = 0.0;
            for (int c = 0; c < k; ++c) mass += counts(c, perm[static_cast<size_t>(c)]);
            if (mass > best) {
                best = mass;
                result.cluster_to_class = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        result.cluster_to_class = max_weight_assignment(counts);
    }

    result.matrix = Eigen::MatrixXd::Zero(k, k);
    for (size_t i = 0; i < predicted.size(); ++i) {
        result.matrix(true_labels[i], result.cluster_to_class[static_cast<size_t>(predicted[i])]) += 1.0;
    }
    for (int c = 0; c < k; ++c) result.matrix.row(c) /= class_size[static_cast<size_t>(c)];
    return result;
}

double silhouette_score(const Eigen::MatrixXd& points, const std::vector<int>& labels)
{
    const auto N = static_cast<size_t>(points.rows());
    if (labels.size() != N) throw ArgumentError("one label per point is required");
    if (N == 0) return 0.0;
    std::map<int, std::vector<size_t>> clusters;
    for (size_t i = 0; i < N; ++i) clusters[labels[i]].push_back(i);
    double total = 0.0;
    for (size_t i = 0; i < N; ++i) {
        const auto& own = clusters[labels[i]];
        if (own.size() < 2) continue; // silhouette of a singleton is 0
        double a = 0.0;
        for (size_t j : own) {
            if (j != i) a += (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
        }
        a /= static_cast<double>(own.size() - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, members] : clusters) {
            if (label == labels[i]) continue;
            double mean = 0.0;
            for (size_t j : members) mean += (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
            b = std::min(b, mean / static_cast<double>(members.size()));
        }
        if (!std::isfinite(b)) continue;
        const double denom = std::max(a, b);
        if (denom > 0) total += (b - a) / denom;
    }
    return total / static_cast<double>(N);
}

// ---------------------------------------------------------------------------
// Report files

void write_distance_csv(std::ostream& out, const DistanceMatrix& dm)
{
    for (const auto& id : dm.shape_ids) out << ',' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < dm.size(); ++i) {
        out << dm.shape_ids[static_cast<size_t>(i)];
        for (Eigen::Index j = 0; j < dm.size(); ++j) out << ',' << detail::format_double(dm.D(i, j));
        out << '\n';
    }
}

DistanceMatrix read_distance_csv(std::istream& in)
{
    std::vector<std::string> row;
    std::int64_t line = 0;
    if (!detail::next_csv_row(in, row, line) || row.empty()) throw ParseError("missing distance header", line);
    DistanceMatrix dm;
    dm.shape_ids.assign(row.begin() + 1, row.end());
    const auto N = static_cast<Eigen::Index>(dm.shape_ids.size());
    dm.D.resize(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        if (!detail::next_csv_row(in, row, line) || static_cast<Eigen::Index>(row.size()) != N + 1) {
            throw ParseError("expected a distance row of " + std::to_string(N) + " entries", line);
        }
        if (row[0] != dm.shape_ids[static_cast<size_t>(i)]) throw ParseError("row label does not match header", line);
        for (Eigen::Index j = 0; j < N; ++j) dm.D(i, j) = detail::parse_double(row[static_cast<size_t>(j + 1)], line);
    }
    return dm;
}

void write_labels_csv(std::ostream& out, const std::vector<std::string>& ids, const Labeling& labeling)
{
    out << "shape_id,predicted,true\n";
    for (size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',' << labeling.predicted[i] << ',';
        if (labeling.true_labels) out << (*labeling.true_labels)[i];
        out << '\n';
    }
}

void write_confusion_table(std::ostream& out, const Eigen::MatrixXd& confusion, const std::vector<std::string>& classes)
{
    size_t width = 6;
    for (const auto& c : classes) width = std::max(width, c.size());
    const auto cell = static_cast<int>(width + 2);
    out << std::setw(cell) << "";
    for (const auto& c : classes) out << std::setw(cell) << c;
    out << '\n';
    for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
        out << std::setw(cell) << classes[static_cast<size_t>(i)];
        for (Eigen::Index j = 0; j < confusion.cols(); ++j) {
            out << std::setw(cell) << std::fixed << std::setprecision(3) << confusion(i, j);
        }
        out << '\n';
    }
    out.unsetf(std::ios::floatfield);
}

void write_confusion_csv(std::ostream& out, const Eigen::MatrixXd& confusion, const std::vector<std::string>& classes)
{
    out << "class";
    for (const auto& c : classes) out << ',' << c;
    out << '\n';
    for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
        out << classes[static_cast<size_t>(i)];
        for (Eigen::Index j = 0; j < confusion.cols(); ++j) out << ',' << detail::format_double(confusion(i, j));
        out << '\n';
    }
}

void write_embedding_csv(std::ostream& out, const std::vector<std::string>& ids, const Embedding& embedding,
    const std::vector<std::string>& classes)
{
    out << "shape_id";
    for (int c = 0; c < embedding.d; ++c) out << ",x" << (c + 1);
    out << ",class\n";
    for (Eigen::Index i = 0; i < embedding.points.rows(); ++i) {
        out << ids[static_cast<size_t>(i)];
        for (int c = 0; c < embedding.d; ++c) out << ',' << detail::format_double(embedding.points(i, c));
        out << ',' << (static_cast<size_t>(i) < classes.size() ? classes[static_cast<size_t>(i)] : "") << '\n';
    }
}

void write_embedding_svg(std::ostream& out, const std::vector<std::string>& ids, const Embedding& embedding,
    const std::vector<std::string>& classes)
{
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const Eigen::Index N = embedding.points.rows();
    Eigen::MatrixXd xy = Eigen::MatrixXd::Zero(N, 2);
    if (embedding.d >= 3) {
        const Eigen::RowVectorXd center = embedding.points.colwise().mean();
        for (Eigen::Index i = 0; i < N; ++i) {
            const Eigen::RowVectorXd p = embedding.points.row(i) - center;
            xy(i, 0) = std::atan2(p[1], p[0]);
            xy(i, 1) = std::atan2(p[2], std::hypot(p[0], p[1]));
        }
    } else {
        for (int c = 0; c < embedding.d; ++c) xy.col(c) = embedding.points.col(c);
    }

    std::map<std::string, size_t> color;
    for (const auto& c : classes) color.try_emplace(c, color.size());
    const double size = 480.0;
    const double margin = 40.0;
    Eigen::Vector2d lo = N ? Eigen::Vector2d(xy.colwise().minCoeff().transpose()) : Eigen::Vector2d::Zero();
    Eigen::Vector2d hi = N ? Eigen::Vector2d(xy.colwise().maxCoeff().transpose()) : Eigen::Vector2d::Ones();
    const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (Eigen::Index i = 0; i < N; ++i) {
        const double px = margin + (xy(i, 0) - lo.x()) / span * (size - 2 * margin);
        const double py = size - margin - (xy(i, 1) - lo.y()) / span * (size - 2 * margin);
        const std::string cls = static_cast<size_t>(i) < classes.size() ? classes[static_cast<size_t>(i)] : "";
        out << "<circle cx=\"" << detail::format_double(px) << "\" cy=\"" << detail::format_double(py)
            << "\" r=\"6\" fill=\"" << palette[color[cls] % 10] << "\"><title>" << ids[static_cast<size_t>(i)] << " ("
            << cls << ")</title></circle>\n";
    }
    out << "</svg>\n";
}

} // namespace sfmap
