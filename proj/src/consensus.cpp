#include "sor/consensus.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sor {

namespace {
constexpr double kTimeTol = 1e-9;

// Orthonormal basis of the complement of the all-ones vector, from the
// trailing columns of a Householder QR of b.
Eigen::MatrixXd ones_complement_basis(int n) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Ones(n, 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - 1);
}

} // namespace

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("matrix_exponential: matrix must be square");
    }
    if (!m.allFinite()) {
        throw std::invalid_argument("matrix_exponential: entries must be finite");
    }
    return m.exp();
}

TransitionMatrix transition_matrix(const SwitchingSchedule& s, double t1, double t2) {
    if (t2 < t1) {
        throw std::invalid_argument("transition_matrix: t2 < t1");
    }
    const int n = s.node_count();
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
    if (t2 - t1 > kTimeTol) {
        const int first = s.interval_at(t1);
        const int last = s.interval_at(t2 - kTimeTol);
        for (int k = first; k <= last; ++k) {
            const double seg_start = std::max(t1, s.intervals()[k].t_start);
            const double seg_end = std::min(t2, s.interval_end(k));
            const double delta = seg_end - seg_start;
            if (delta <= 0.0) {
                continue;
            }
            const Eigen::MatrixXd lap = s.graphs()[s.intervals()[k].graph_index].laplacian();
            phi = matrix_exponential(-lap * delta) * phi;   // newest factor leftmost
        }
    }
    return TransitionMatrix{phi, t1, t2};
}

double contraction_rate(const Eigen::MatrixXd& phi) {
    const int n = static_cast<int>(phi.rows());
    if (n != phi.cols()) {
        throw std::invalid_argument("contraction_rate: matrix must be square");
    }
    if (n == 1) {
        return 0.0;
    }
    const Eigen::MatrixXd q = ones_complement_basis(n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi.transpose() * q);
    return svd.singularValues()(0);
}

double contraction_rate(const TransitionMatrix& phi) {
    return contraction_rate(phi.phi);
}

double consensus_rate_over_horizon(const SwitchingSchedule& s, double T,
                                   double t_start, int k_windows) {
    if (!(T > 0.0) || k_windows < 1) {
        throw std::invalid_argument("consensus_rate_over_horizon: bad window parameters");
    }
    if (t_start + k_windows * T > s.end_time() + kTimeTol) {
        throw std::invalid_argument("consensus_rate_over_horizon: insufficient schedule coverage");
    }
    double rate = 0.0;
    for (int k = 1; k <= k_windows; ++k) {
        const TransitionMatrix phi =
            transition_matrix(s, t_start + (k - 1) * T, t_start + k * T);
        rate = std::max(rate, contraction_rate(phi));
    }
    return rate;
}

double estimate_lyapunov_exponent(const VectorField& field, const Eigen::VectorXd& w0,
                                  double horizon, double delta0,
                                  const LyapunovOptions& options) {
    if (!(horizon > 0.0) || !(delta0 > 0.0)) {
        throw std::invalid_argument("estimate_lyapunov_exponent: horizon and delta0 must be positive");
    }
    const double h = options.step;
    const int n_steps = std::max(options.renorm_interval,
                                 static_cast<int>(std::llround(horizon / h)));

    auto rk4 = [&field, h](Eigen::VectorXd& state) {
        const Eigen::VectorXd k1 = field(state);
        const Eigen::VectorXd k2 = field(state + 0.5 * h * k1);
        const Eigen::VectorXd k3 = field(state + 0.5 * h * k2);
        const Eigen::VectorXd k4 = field(state + h * k3);
        state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };

    Eigen::VectorXd direction = Eigen::VectorXd::Ones(w0.size()).normalized();
    Eigen::VectorXd reference = w0;
    Eigen::VectorXd shadow = w0 + delta0 * direction;

    std::vector<double> log_rates;
    log_rates.reserve(n_steps / options.renorm_interval + 1);
    for (int step = 1; step <= n_steps; ++step) {
        rk4(reference);
        rk4(shadow);
        if (!reference.allFinite() || !shadow.allFinite() ||
            reference.norm() > options.escape_norm || shadow.norm() > options.escape_norm) {
            throw std::runtime_error("estimate_lyapunov_exponent: flow diverged");
        }
        if (step % options.renorm_interval == 0) {
            const double span = options.renorm_interval * h;
            double sep = (shadow - reference).norm();
            if (sep < 1e-300) {
                sep = 1e-300;
            }
            log_rates.push_back(std::log(sep / delta0) / span);
            shadow = reference + (delta0 / sep) * (shadow - reference);
        }
    }
    if (log_rates.empty()) {
        throw std::invalid_argument("estimate_lyapunov_exponent: horizon shorter than one renormalization");
    }
    const std::size_t skip = log_rates.size() -
        static_cast<std::size_t>(std::ceil(options.tail_fraction * log_rates.size()));
    double sum = 0.0;
    for (std::size_t i = skip; i < log_rates.size(); ++i) {
        sum += log_rates[i];
    }
    return sum / static_cast<double>(log_rates.size() - skip);
}

SyncCertificate check_sync_condition(double nu_max, double alpha_star, double T) {
    if (!(alpha_star > 0.0)) {
        throw std::invalid_argument("check_sync_condition: alpha_star must be positive");
    }
    if (!(T > 0.0)) {
        throw std::invalid_argument("check_sync_condition: window length must be positive");
    }
    SyncCertificate cert;
    cert.nu_max = nu_max;
    cert.alpha_star = alpha_star;
    cert.window = T;
    cert.satisfied = nu_max + std::log(alpha_star) / T < 0.0;
    return cert;
}

} // namespace sor
