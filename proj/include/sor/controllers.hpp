#pragma once

#include <Eigen/Dense>

#include "sor/agents.hpp"
#include "sor/graph.hpp"

namespace sor {

// w_all stacks N exosystem copies. Per copy i:
//   w_i' = s(w_i) + sum_j a(i,j) (w_j - w_i)
// with a the receiver-indexed adjacency of the active graph.
Eigen::VectorXd coupled_exo_rhs(const Eigen::VectorXd& w_all,
                                const Eigen::MatrixXd& adjacency,
                                const Exosystem& exo);
Eigen::VectorXd coupled_exo_rhs(const Eigen::VectorXd& w_all,
                                const Digraph& active, const Exosystem& exo);

// Leader copy stacked first (index 0 of the augmented adjacency). Row 0 is
// zero by construction, so the leader runs the uncoupled flow.
Eigen::VectorXd leader_coupled_exo_rhs(const Eigen::VectorXd& w_all,
                                       const Eigen::MatrixXd& augmented_adjacency,
                                       const Exosystem& exo);
Eigen::VectorXd leader_coupled_exo_rhs(const Eigen::VectorXd& w_all,
                                       const LeaderAugmentedGraph& active,
                                       const Exosystem& exo);

// u = c(w) + K (x - pi(w))
Eigen::VectorXd state_feedback_control(const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                                       const GainSet& gains, const RegulatorSolution& sol);

// u = c(w) + K (z - pi(w))
Eigen::VectorXd output_feedback_control(const Eigen::VectorXd& z, const Eigen::VectorXd& w,
                                        const GainSet& gains, const RegulatorSolution& sol);

// z' = f(z) + g(z) u + L (h(z) - y)
Eigen::VectorXd observer_rhs(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& u, const AgentModel& model,
                             const GainSet& gains);

} // namespace sor
