#include <sfmap/analysis.hpp>
#include <sfmap/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sfmap {

Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& D, int d)
{
    const Eigen::Index N = D.rows();
    if (N == 0) return Eigen::MatrixXd(0, d);
    const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(N, N) - Eigen::MatrixXd::Constant(N, N, 1.0 / N);
    const Eigen::MatrixXd B = -0.5 * J * D.cwiseAbs2() * J;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (B + B.transpose()));
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(N, d);
    for (int c = 0; c < d && c < N; ++c) {
        const Eigen::Index idx = N - 1 - c; // eigenvalues ascend
        const double lambda = eig.eigenvalues()[idx];
        if (lambda > 0) X.col(c) = eig.eigenvectors().col(idx) * std::sqrt(lambda);
    }
    return X;
}

Eigen::VectorXd isotonic_regression(const Eigen::VectorXd& values)
{
    // Blocks of (sum, count); merge while the previous block mean exceeds
    // the current one.
    std::vector<double> sum;
    std::vector<Eigen::Index> count;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        sum.push_back(values[i]);
        count.push_back(1);
        while (sum.size() > 1) {
            const size_t last = sum.size() - 1;
            if (sum[last - 1] * static_cast<double>(count[last]) <= sum[last] * static_cast<double>(count[last - 1])) break;
            sum[last - 1] += sum[last];
            count[last - 1] += count[last];
            sum.pop_back();
            count.pop_back();
        }
    }
    Eigen::VectorXd out(values.size());
    Eigen::Index pos = 0;
    for (size_t b = 0; b < sum.size(); ++b) {
        const double mean = sum[b] / static_cast<double>(count[b]);
        for (Eigen::Index t = 0; t < count[b]; ++t) out[pos++] = mean;
    }
    return out;
}

namespace {

struct Pairs
{
    std::vector<std::pair<Eigen::Index, Eigen::Index>> index;
    Eigen::VectorXd dissimilarity;
    std::vector<size_t> order;       ///< pair indices sorted by dissimilarity
    std::vector<size_t> tie_block;   ///< start of each run of equal dissimilarities in order
};

Pairs make_pairs(const Eigen::MatrixXd& D)
{
    Pairs pairs;
    const Eigen::Index N = D.rows();
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = i + 1; j < N; ++j) pairs.index.emplace_back(i, j);
    }
    pairs.dissimilarity.resize(static_cast<Eigen::Index>(pairs.index.size()));
    for (size_t p = 0; p < pairs.index.size(); ++p) {
        pairs.dissimilarity[static_cast<Eigen::Index>(p)] = D(pairs.index[p].first, pairs.index[p].second);
    }
    pairs.order.resize(pairs.index.size());
    std::iota(pairs.order.begin(), pairs.order.end(), size_t{0});
    std::stable_sort(pairs.order.begin(), pairs.order.end(), [&](size_t a, size_t b) {
        return pairs.dissimilarity[static_cast<Eigen::Index>(a)] < pairs.dissimilarity[static_cast<Eigen::Index>(b)];
    });
    for (size_t t = 0; t < pairs.order.size(); ++t) {
        if (t == 0
            || pairs.dissimilarity[static_cast<Eigen::Index>(pairs.order[t])]
                   != pairs.dissimilarity[static_cast<Eigen::Index>(pairs.order[t - 1])]) {
            pairs.tie_block.push_back(t);
        }
    }
    return pairs;
}

Eigen::VectorXd pair_distances(const Pairs& pairs, const Eigen::MatrixXd& X)
{
    Eigen::VectorXd d(static_cast<Eigen::Index>(pairs.index.size()));
    for (size_t p = 0; p < pairs.index.size(); ++p) {
        d[static_cast<Eigen::Index>(p)] = (X.row(pairs.index[p].first) - X.row(pairs.index[p].second)).norm();
    }
    return d;
}

/// Closest disparities to d that are monotone in the dissimilarity order
/// and have squared norm @p norm2. Ties in dissimilarity may be reordered.
Eigen::VectorXd monotone_disparities(const Pairs& pairs, const Eigen::VectorXd& d, double norm2)
{
    std::vector<size_t> order = pairs.order;
    for (size_t b = 0; b < pairs.tie_block.size(); ++b) {
        const size_t begin = pairs.tie_block[b];
        const size_t end = b + 1 < pairs.tie_block.size() ? pairs.tie_block[b + 1] : order.size();
        std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end),
            [&](size_t x, size_t y) { return d[static_cast<Eigen::Index>(x)] < d[static_cast<Eigen::Index>(y)]; });
    }
    Eigen::VectorXd sorted(d.size());
    for (size_t t = 0; t < order.size(); ++t) sorted[static_cast<Eigen::Index>(t)] = d[static_cast<Eigen::Index>(order[t])];
    const Eigen::VectorXd fit = isotonic_regression(sorted);
    const double norm = fit.norm();
    Eigen::VectorXd dhat(d.size());
    if (norm <= 0) {
        dhat = pairs.dissimilarity * std::sqrt(norm2) / pairs.dissimilarity.norm();
        return dhat;
    }
    for (size_t t = 0; t < order.size(); ++t) {
        dhat[static_cast<Eigen::Index>(order[t])] = fit[static_cast<Eigen::Index>(t)] * std::sqrt(norm2) / norm;
    }
    return dhat;
}

Eigen::MatrixXd guttman_transform(const Pairs& pairs, const Eigen::MatrixXd& X, const Eigen::VectorXd& d,
    const Eigen::VectorXd& dhat)
{
    const Eigen::Index N = X.rows();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N, N);
    for (size_t p = 0; p < pairs.index.size(); ++p) {
        const auto [i, j] = pairs.index[p];
        const double dist = d[static_cast<Eigen::Index>(p)];
        if (dist <= 0) continue;
        const double b = -dhat[static_cast<Eigen::Index>(p)] / dist;
        B(i, j) += b;
        B(j, i) += b;
        B(i, i) -= b;
        B(j, j) -= b;
    }
    return B * X / static_cast<double>(N);
}

struct Run
{
    Eigen::MatrixXd X;
    std::vector<double> history;
    double stress = std::numeric_limits<double>::infinity();
};

Run smacof(const Pairs& pairs, Eigen::MatrixXd X, const MdsOptions& options)
{
    const double norm2 = pairs.dissimilarity.squaredNorm();
    const bool nonmetric = options.mode == MdsMode::nonmetric;

    // Start at the scale that best fits the dissimilarities.
    Eigen::VectorXd d = pair_distances(pairs, X);
    if (d.squaredNorm() > 0) {
        X *= pairs.dissimilarity.dot(d) > 0 ? pairs.dissimilarity.dot(d) / d.squaredNorm() : std::sqrt(norm2 / d.squaredNorm());
        d = pair_distances(pairs, X);
    }
    Eigen::VectorXd dhat = nonmetric ? monotone_disparities(pairs, d, norm2) : pairs.dissimilarity;

    Run run;
    run.stress = std::sqrt((dhat - d).squaredNorm() / norm2);
    run.history.push_back(run.stress);
    for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
        X = guttman_transform(pairs, X, d, dhat);
        d = pair_distances(pairs, X);
        if (nonmetric) dhat = monotone_disparities(pairs, d, norm2);
        const double stress = std::sqrt((dhat - d).squaredNorm() / norm2);
        run.history.push_back(stress);
        const double improvement = run.stress - stress;
        run.stress = stress;
        if (improvement < options.tolerance) break;
    }
    run.X = std::move(X);
    return run;
}

} // namespace

Embedding mds_embed(const DistanceMatrix& dm, int d, const MdsOptions& options)
{
    const Eigen::MatrixXd& D = dm.D;
    if (d < 1) throw ArgumentError("embedding dimension must be at least 1");
    if (D.rows() != D.cols()) throw ArgumentError("distance matrix must be square");
    const double scale = D.size() ? D.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
        for (Eigen::Index j = 0; j < D.cols(); ++j) {
            if (D(i, j) < 0 || !std::isfinite(D(i, j))) throw ArgumentError("distance matrix has a negative entry");
            if (std::abs(D(i, j) - D(j, i)) > 1e-12 * scale) throw ArgumentError("distance matrix is not symmetric");
        }
    }

    Embedding out;
    out.d = d;
    out.points = Eigen::MatrixXd::Zero(D.rows(), d);
    const Pairs pairs = make_pairs(D);
    if (pairs.dissimilarity.squaredNorm() == 0) {
        out.stress = 0.0;
        out.stress_history = {0.0};
        out.run_histories = {out.stress_history};
        return out;
    }

    Run best = smacof(pairs, classical_mds(D, d), options);
    out.run_histories.push_back(best.history);
    for (int r = 0; r < options.random_restarts; ++r) {
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
            static_cast<std::uint32_t>(r)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd X(D.rows(), d);
        for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = normal(rng);
        Run run = smacof(pairs, std::move(X), options);
        out.run_histories.push_back(run.history);
        if (run.stress < best.stress) best = std::move(run);
    }
    out.points = std::move(best.X);
    out.stress = best.stress;
    out.stress_history = std::move(best.history);
    return out;
}

} // namespace sfmap
