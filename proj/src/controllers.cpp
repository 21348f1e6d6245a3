#include "sor/controllers.hpp"

#include <stdexcept>

namespace sor {

Eigen::VectorXd coupled_exo_rhs(const Eigen::VectorXd& w_all,
                                const Eigen::MatrixXd& adjacency,
                                const Exosystem& exo) {
    const int n_nodes = static_cast<int>(adjacency.rows());
    const int s = exo.s_dim;
    if (adjacency.cols() != n_nodes || w_all.size() != n_nodes * s) {
        throw std::invalid_argument("coupled_exo_rhs: dimensions inconsistent");
    }
    Eigen::VectorXd dw(w_all.size());
    for (int i = 0; i < n_nodes; ++i) {
        const auto w_i = w_all.segment(i * s, s);
        Eigen::VectorXd d = exo.s(w_i);
        for (int j = 0; j < n_nodes; ++j) {
            const double a = adjacency(i, j);
            if (a != 0.0) {
                d += a * (w_all.segment(j * s, s) - w_i);
            }
        }
        dw.segment(i * s, s) = d;
    }
    return dw;
}

Eigen::VectorXd coupled_exo_rhs(const Eigen::VectorXd& w_all, const Digraph& active,
                                const Exosystem& exo) {
    return coupled_exo_rhs(w_all, active.adjacency(), exo);
}

Eigen::VectorXd leader_coupled_exo_rhs(const Eigen::VectorXd& w_all,
                                       const Eigen::MatrixXd& augmented_adjacency,
                                       const Exosystem& exo) {
    if (augmented_adjacency.row(0).cwiseAbs().sum() != 0.0) {
        throw std::invalid_argument("leader_coupled_exo_rhs: leader row must be zero");
    }
    return coupled_exo_rhs(w_all, augmented_adjacency, exo);
}

Eigen::VectorXd leader_coupled_exo_rhs(const Eigen::VectorXd& w_all,
                                       const LeaderAugmentedGraph& active,
                                       const Exosystem& exo) {
    return leader_coupled_exo_rhs(w_all, active.combined().adjacency(), exo);
}

Eigen::VectorXd state_feedback_control(const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                                       const GainSet& gains, const RegulatorSolution& sol) {
    return sol.c(w) + gains.K * (x - sol.pi(w));
}

Eigen::VectorXd output_feedback_control(const Eigen::VectorXd& z, const Eigen::VectorXd& w,
                                        const GainSet& gains, const RegulatorSolution& sol) {
    return sol.c(w) + gains.K * (z - sol.pi(w));
}

Eigen::VectorXd observer_rhs(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& u, const AgentModel& model,
                             const GainSet& gains) {
    if (!gains.L) {
        throw std::invalid_argument("observer_rhs: no output-injection gain L");
    }
    return model.f(z) + model.g(z) * u + *gains.L * (model.h(z) - y);
}

} // namespace sor
