#include "csv_util.hpp"

#include <sfmap/error.hpp>
#include <sfmap/spectrum.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace sfmap {

std::string_view to_string(Pencil pencil)
{
    return pencil == Pencil::regular ? "regular" : "scale_invariant";
}

Pencil pencil_from_string(std::string_view text)
{
    if (text == "regular") return Pencil::regular;
    if (text == "scale_invariant") return Pencil::scale_invariant;
    throw ParseError("unknown pencil tag '" + std::string(text) + "'");
}

namespace {

void check_problem(const SparseMatrix& W, const Eigen::VectorXd& mass, Eigen::Index k)
{
    if (W.rows() != W.cols() || W.rows() != mass.size()) {
        throw ArgumentError("stiffness and mass dimensions disagree");
    }
    if (k < 1 || k > W.rows()) {
        throw ArgumentError(
            "requested " + std::to_string(k) + " eigenpairs of a " + std::to_string(W.rows()) + "-dimensional problem");
    }
    if ((mass.array() <= 0).any() || !mass.allFinite()) throw ArgumentError("mass matrix must be positive");
}

SparseMatrix similarity_transform(const SparseMatrix& W, const Eigen::VectorXd& inv_sqrt_mass)
{
    SparseMatrix S = inv_sqrt_mass.asDiagonal() * W * inv_sqrt_mass.asDiagonal();
    // Exact symmetry; the two products round independently.
    SparseMatrix St = S.transpose();
    S = 0.5 * (S + St);
    S.makeCompressed();
    return S;
}

/// Max absolute row sum (S is symmetric, so columns do as well).
double inf_norm(const SparseMatrix& S)
{
    double out = 0.0;
    for (Eigen::Index c = 0; c < S.outerSize(); ++c) {
        double sum = 0.0;
        for (SparseMatrix::InnerIterator it(S, c); it; ++it) sum += std::abs(it.value());
        out = std::max(out, sum);
    }
    return out;
}

/// Orthonormal basis of the column span of X (thin Householder Q).
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& X)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    return qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), X.cols());
}

Eigenpairs finish(Eigen::VectorXd values, Eigen::MatrixXd Y, const Eigen::VectorXd& inv_sqrt_mass)
{
    Eigenpairs out;
    out.values = std::move(values);
    out.vectors = inv_sqrt_mass.asDiagonal() * Y;
    apply_sign_convention(out.vectors);
    return out;
}

} // namespace

void apply_sign_convention(Eigen::MatrixXd& vectors)
{
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::Index arg = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, j) < 0) vectors.col(j) *= -1.0;
    }
}

Eigen::VectorXd pencil_residuals(const SparseMatrix& W, const Eigen::VectorXd& mass, const Eigen::VectorXd& values,
    const Eigen::MatrixXd& vectors)
{
    const Eigen::MatrixXd WX = W * vectors;
    Eigen::VectorXd out(vectors.cols());
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        out[j] = (WX.col(j) - values[j] * mass.cwiseProduct(vectors.col(j))).norm();
    }
    return out;
}

Eigenpairs dense_smallest_eigenpairs(const SparseMatrix& W, const Eigen::VectorXd& mass, Eigen::Index k)
{
    check_problem(W, mass, k);
    const Eigen::VectorXd inv_sqrt = mass.cwiseSqrt().cwiseInverse();
    const SparseMatrix sparse = similarity_transform(W, inv_sqrt);
    Eigen::MatrixXd S = Eigen::MatrixXd(sparse);

    const auto n = static_cast<lapack_int>(S.rows());
    lapack_int found = 0;
    Eigen::VectorXd w(n);
    Eigen::MatrixXd Z(n, k);
    std::vector<lapack_int> support(2 * static_cast<size_t>(k));
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, S.data(), n, 0.0, 0.0, 1,
        static_cast<lapack_int>(k), 0.0, &found, w.data(), Z.data(), n, support.data());
    if (info != 0 || found != k) {
        throw NumericalError("dense eigensolver failed (dsyevr info " + std::to_string(info) + ")");
    }
    // Cheap guard against a miscompiled or misconfigured LAPACK backend.
    const double bound = 1e-8 * std::max(1.0, inf_norm(sparse));
    const Eigen::MatrixXd R = sparse * Z - Z * w.head(k).asDiagonal();
    const double worst = R.colwise().norm().maxCoeff();
    if (!(worst <= bound)) throw NumericalError("dense eigensolver returned inaccurate eigenvectors", worst);
    return finish(w.head(k), std::move(Z), inv_sqrt);
}

Eigenpairs iterative_smallest_eigenpairs(
    const SparseMatrix& W,
    const Eigen::VectorXd& mass,
    Eigen::Index k,
    const SolverOptions& options)
{
    check_problem(W, mass, k);
    const Eigen::Index n = W.rows();
    const Eigen::Index block = std::min(n, std::max(2 * k, k + 8));
    const int max_iterations = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(300 * k);

    const Eigen::VectorXd inv_sqrt = mass.cwiseSqrt().cwiseInverse();
    const SparseMatrix S = similarity_transform(W, inv_sqrt);

    // Infinity norm bounds the spectrum and sets the attainable residual floor.
    const double norm_inf = inf_norm(S);
    const double residual_floor = 64.0 * std::numeric_limits<double>::epsilon() * norm_inf;

    // S is PSD with a null vector; shift so the factorization is definite.
    // The smallest diagonal entry keeps the shift below the low spectrum
    // even when the mass varies by orders of magnitude across the mesh.
    const double smallest_diagonal = S.diagonal().minCoeff();
    const double shift = 1e-3 * (smallest_diagonal > 0 ? smallest_diagonal : S.diagonal().mean());
    SparseMatrix shifted = S;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
    Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
    if (factor.info() != Eigen::Success) throw NumericalError("factorization of the shifted operator failed");

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd X(n, block);
    for (Eigen::Index j = 0; j < block; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
    }
    X = orthonormalize(X);

    Eigen::VectorXd theta;
    double worst = std::numeric_limits<double>::infinity();
    for (int iteration = 0; iteration < max_iterations; ++iteration) {
        Eigen::MatrixXd Y = factor.solve(X);
        if (factor.info() != Eigen::Success) throw NumericalError("shift-invert solve failed");
        Y = orthonormalize(orthonormalize(Y));

        const Eigen::MatrixXd SY = S * Y;
        Eigen::MatrixXd H = Y.transpose() * SY;
        H = 0.5 * (H + H.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(H);
        if (ritz.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz eigensolve failed");
        theta = ritz.eigenvalues();
        X = Y * ritz.eigenvectors();
        const Eigen::MatrixXd SX = SY * ritz.eigenvectors();

        worst = 0.0;
        bool converged = true;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double r = (SX.col(j) - theta[j] * X.col(j)).norm();
            const double target = std::max(options.tolerance * std::abs(theta[j]), residual_floor);
            worst = std::max(worst, r);
            if (r > target) converged = false;
        }
        if (converged) {
            return finish(theta.head(k), X.leftCols(k), inv_sqrt);
        }
    }
    throw NumericalError(
        "iterative eigensolver did not converge in " + std::to_string(max_iterations) + " iterations", worst);
}

Eigenpairs smallest_eigenpairs(
    const SparseMatrix& W,
    const Eigen::VectorXd& mass,
    Eigen::Index k,
    const SolverOptions& options)
{
    if (W.rows() <= options.dense_threshold) return dense_smallest_eigenpairs(W, mass, k);
    return iterative_smallest_eigenpairs(W, mass, k, options);
}

SpectralBasis build_basis(const OperatorSet& ops, Pencil pencil, Eigen::Index k, const SolverOptions& options)
{
    const Eigen::VectorXd si_mass = ops.scale_invariant_mass();
    Eigenpairs pairs = smallest_eigenpairs(ops.W, pencil == Pencil::regular ? ops.A : si_mass, k, options);

    SpectralBasis basis;
    basis.pencil = pencil;
    basis.eigenvalues = std::move(pairs.values);
    basis.eigenvectors = std::move(pairs.vectors);
    for (Eigen::Index j = 0; j < basis.eigenvectors.cols(); ++j) {
        const double norm2 = basis.eigenvectors.col(j).cwiseAbs2().dot(si_mass);
        basis.eigenvectors.col(j) /= std::sqrt(norm2);
    }
    apply_sign_convention(basis.eigenvectors);
    basis.norm_mass = si_mass;
    return basis;
}

// ---------------------------------------------------------------------------
// CSV dump

void write_basis_csv(std::ostream& out, const SpectralBasis& basis)
{
    const Eigen::Index k = basis.size();
    out << k << ',' << to_string(basis.pencil) << ',' << basis.num_vertices() << '\n';
    for (Eigen::Index j = 0; j < k; ++j) out << (j ? "," : "") << detail::format_double(basis.eigenvalues[j]);
    out << '\n';
    for (Eigen::Index i = 0; i < basis.num_vertices(); ++i) {
        for (Eigen::Index j = 0; j < k; ++j) out << (j ? "," : "") << detail::format_double(basis.eigenvectors(i, j));
        out << '\n';
    }
}

SpectralBasis read_basis_csv(std::istream& in)
{
    std::vector<std::string> row;
    std::int64_t line = 0;
    if (!detail::next_csv_row(in, row, line) || row.size() != 3) throw ParseError("malformed basis header", line);
    const long long k = detail::parse_integer(row[0], line);
    const long long nv = detail::parse_integer(row[2], line);
    if (k < 1 || nv < 1) throw ParseError("invalid basis dimensions", line);

    SpectralBasis basis;
    basis.pencil = pencil_from_string(row[1]);
    basis.eigenvalues.resize(k);
    basis.eigenvectors.resize(nv, k);
    if (!detail::next_csv_row(in, row, line) || static_cast<long long>(row.size()) != k) {
        throw ParseError("expected " + std::to_string(k) + " eigenvalues", line);
    }
    for (long long j = 0; j < k; ++j) basis.eigenvalues[j] = detail::parse_double(row[static_cast<size_t>(j)], line);
    for (long long i = 0; i < nv; ++i) {
        if (!detail::next_csv_row(in, row, line) || static_cast<long long>(row.size()) != k) {
            throw ParseError("expected a row of " + std::to_string(k) + " eigenvector entries", line);
        }
        for (long long j = 0; j < k; ++j) {
            basis.eigenvectors(i, j) = detail::parse_double(row[static_cast<size_t>(j)], line);
        }
    }
    return basis;
}

void save_basis_csv(const std::filesystem::path& path, const SpectralBasis& basis)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + path.string() + "'");
    write_basis_csv(out, basis);
}

SpectralBasis load_basis_csv(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DependencyError("missing basis file '" + path.string() + "'");
    try {
        return read_basis_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace sfmap
