#pragma once

#include <Eigen/Dense>

#include <functional>

#include "sor/graph.hpp"

namespace sor {

// exp(M) for square M. Relative accuracy is well below 1e-10 for ||M|| <= 10.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m);

// Ordered product of e^{-L delta} factors over the switching intervals that
// overlap [t1, t2], newest factor leftmost. Row-stochastic and fixes the
// all-ones vector b.
struct TransitionMatrix {
    Eigen::MatrixXd phi;
    double t1 = 0.0;
    double t2 = 0.0;
};

TransitionMatrix transition_matrix(const SwitchingSchedule& s, double t1, double t2);

// Worst-case gain of Phi^T on the orthogonal complement of b, computed as
// sigma_max(Phi^T Q) for an orthonormal basis Q of that subspace. Zero for a
// single node.
double contraction_rate(const Eigen::MatrixXd& phi);
double contraction_rate(const TransitionMatrix& phi);

// Max contraction rate over k_windows consecutive windows of length T from
// t_start. A horizon-bounded estimate of the schedule's consensus rate; exact
// over one period for periodic schedules.
double consensus_rate_over_horizon(const SwitchingSchedule& s, double T,
                                   double t_start, int k_windows);

struct LyapunovOptions {
    double step = 1e-3;        // integrator step
    int renorm_interval = 10;  // steps between renormalizations
    double tail_fraction = 0.8;
    double escape_norm = 1e6;
};

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Finite-time largest-Lyapunov-exponent estimate via two-trajectory
// renormalization: integrate from w0 and w0 + delta, rescale the separation
// back to delta0 every renorm_interval steps, and average the log growth
// rates over the trailing tail_fraction of the run.
double estimate_lyapunov_exponent(const VectorField& field, const Eigen::VectorXd& w0,
                                  double horizon, double delta0,
                                  const LyapunovOptions& options = {});

struct SyncCertificate {
    double nu_max = 0.0;
    double alpha_star = 1.0;
    double window = 0.0;
    bool satisfied = false;   // nu_max + ln(alpha_star)/window < 0
};

SyncCertificate check_sync_condition(double nu_max, double alpha_star, double T);

} // namespace sor
