#include <sfmap/analysis.hpp>
#include <sfmap/error.hpp>

#include <Eigen/Dense>

namespace sfmap {

MatchResult match_shapes(const ShapeBases& source, const ShapeBases& target, const SelfFunctionalMap& source_map)
{
    const Eigen::MatrixXd& phi_t = target.regular.eigenvectors;
    const Eigen::MatrixXd& psi_s = source.scale_invariant.eigenvectors;
    if (source_map.n() != phi_t.cols() || source_map.m() != psi_s.cols()) {
        throw ArgumentError(
            "basis sizes (" + std::to_string(phi_t.cols()) + " regular, " + std::to_string(psi_s.cols())
            + " scale-invariant) do not match a " + std::to_string(source_map.m()) + "x"
            + std::to_string(source_map.n()) + " signature");
    }
    if (source.mass.size() != psi_s.rows() || target.mass.size() != phi_t.rows()) {
        throw ArgumentError("mass vectors do not match the bases");
    }

    // rho(i, j) = <phi_i, phi~_j>, i.e. the transpose of C.
    const Eigen::MatrixXd rho = source_map.C.transpose();
    const Eigen::MatrixXd gram = phi_t.transpose() * target.mass.asDiagonal() * phi_t;
    const Eigen::MatrixXd coefficients = gram.ldlt().solve(rho);

    MatchResult result;
    result.soft_map = phi_t * (coefficients * (psi_s.transpose() * source.mass.asDiagonal()));

    result.correspondence.resize(static_cast<size_t>(result.soft_map.cols()));
    for (Eigen::Index j = 0; j < result.soft_map.cols(); ++j) {
        Eigen::Index best = 0;
        result.soft_map.col(j).maxCoeff(&best);
        result.correspondence[static_cast<size_t>(j)] = static_cast<VertexIndex>(best);
    }

    result.consistency = phi_t.transpose() * target.mass.asDiagonal() * (result.soft_map * psi_s);
    result.consistency_error = (result.consistency - rho).cwiseAbs().maxCoeff();
    return result;
}

} // namespace sfmap
