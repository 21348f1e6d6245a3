// End-to-end acceptance checks for the synchronized-output-regulation
// toolkit. Each check prints one PASS/FAIL line; the process exits nonzero
// if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "sor/consensus.hpp"
#include "sor/scenario_io.hpp"
#include "sor/simulate.hpp"

using namespace sor;

namespace {

const std::string kScenarioDir = SORSIM_SCENARIO_DIR;
int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& details) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                details.c_str());
    if (!pass) {
        ++g_failures;
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

double tail_max(const Eigen::VectorXd& series, const Eigen::VectorXd& times, double from) {
    double peak = 0.0;
    for (long long k = 0; k < series.size(); ++k) {
        if (times(k) >= from) {
            peak = std::max(peak, std::abs(series(k)));
        }
    }
    return peak;
}

std::vector<Digraph> ring_partition(double weight) {
    return {Digraph(3, {{0, 1, weight}}),
            Digraph(3, {{1, 2, weight}}),
            Digraph(3, {{2, 0, weight}})};
}

// --- criterion 1: three-agent reproduction ---------------------------------

void criterion_reproduction() {
    const Scenario sc = parse_scenario(kScenarioDir + "/paper_sec5.json");
    int good_seeds = 0;
    double worst_e = 0.0;
    double worst_y = 0.0;
    double slowest = 0.0;
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            const SimResult r = simulate(sc, seed);
            double max_e = 0.0;
            for (const auto& e_i : r.e) {
                Eigen::VectorXd norms(r.times.size());
                for (long long k = 0; k < r.times.size(); ++k) {
                    norms(k) = e_i.row(k).norm();
                }
                max_e = std::max(max_e, tail_max(norms, r.times, 8.0));
            }
            const double max_y = tail_max(pairwise_sync_error(r).y_max, r.times, 8.0);
            worst_e = std::max(worst_e, max_e);
            worst_y = std::max(worst_y, max_y);
            ok = max_e <= 1e-2 && max_y <= 1e-2;
        } catch (const DivergenceError&) {
            ok = false;   // basin escape counts as a failed seed
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        slowest = std::max(slowest, elapsed);
        good_seeds += ok ? 1 : 0;
    }
    report(1, "three-agent sinusoid reproduction", good_seeds >= 9 && slowest < 10.0,
           std::to_string(good_seeds) + "/10 seeds within 1e-2 on [8,10]; worst |e| " +
               fmt(worst_e) + ", worst |y_i-y_j| " + fmt(worst_y) + ", slowest seed " +
               fmt(slowest) + " s");
}

// --- criterion 2: regulator-equation exactness ------------------------------

void criterion_regulator_residuals() {
    const double tau = 10.0;
    const Exosystem exo = builtin_exosystem(tau);
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    double max_fd = 0.0;
    double max_analytic = 0.0;
    double max_out = 0.0;
    for (const auto& name : builtin_agent_names()) {
        const BuiltinAgent agent = builtin_agent(name, tau);
        RegulatorSolution fd = agent.solution;
        fd.dpi = nullptr;
        for (int k = 0; k < 1000; ++k) {
            const Eigen::Vector2d w0(uniform(rng), uniform(rng));
            const RegulatorResidual coarse = regulator_residual(agent.model, exo, fd, w0);
            const RegulatorResidual exact =
                regulator_residual(agent.model, exo, agent.solution, w0);
            max_fd = std::max(max_fd, coarse.dynamic.norm());
            max_analytic = std::max(max_analytic, exact.dynamic.norm());
            max_out = std::max(max_out, coarse.output.norm());
        }
    }
    report(2, "regulator-equation exactness",
           max_out <= 1e-12 && max_fd <= 1e-8 && max_analytic <= 1e-12,
           "max |r_out| " + fmt(max_out) + ", max |r_dyn| fd " + fmt(max_fd) +
               " / analytic " + fmt(max_analytic) + " over 1000 samples per agent");
}

// --- criterion 3: gain verification ------------------------------------------

void criterion_gains() {
    bool all = true;
    std::string detail;
    const double tau = 10.0;
    // pin the designed gains before verifying them
    const BuiltinAgent a1 = builtin_agent("agent1", tau);
    const BuiltinAgent a2 = builtin_agent("agent2", tau);
    const BuiltinAgent a3 = builtin_agent("agent3", tau);
    all = all && a1.gains.K(0, 0) == -5.0 && !a1.gains.L;
    all = all && a2.gains.K(0, 0) == -12.0 && a2.gains.K(0, 1) == -8.0;
    all = all && (*a2.gains.L)(0, 0) == -8.0 && (*a2.gains.L)(1, 0) == -20.0;
    all = all && a3.gains.K(0, 0) == -11.0 && a3.gains.K(0, 1) == -8.0;
    all = all && (*a3.gains.L)(0, 0) == -10.0 && (*a3.gains.L)(1, 0) == -30.0;
    if (!all) {
        detail = "builtin gains differ from the designed values";
    }
    for (const BuiltinAgent* agent : {&a1, &a2, &a3}) {
        const bool ok = verify_gains(linearize(agent->model), agent->gains, 1e-8);
        all = all && ok;
        detail += (detail.empty() ? "" : ", ") + agent->model.name + (ok ? " OK" : " FAIL");
    }
    report(3, "designed gains verified incl. composite separation", all, detail);
}

// --- criterion 4: windowed consensus machinery -------------------------------

void criterion_windowed_rates() {
    const SwitchingSchedule ring = make_cyclic_schedule(ring_partition(5.0), 0.25, 10.0);
    double worst = 0.0;
    bool contracting = true;
    const int windows = 13;
    for (int k = 1; k <= windows; ++k) {
        const double rate = contraction_rate(transition_matrix(ring, (k - 1) * 0.75, k * 0.75));
        worst = std::max(worst, rate);
        contracting = contracting && rate < 1.0 - 1e-6;
    }

    // two-node bidirectional component plus an isolated node: a disagreement
    // direction survives, so the rate sits at 1
    const SwitchingSchedule split = make_cyclic_schedule(
        {Digraph(3, {{0, 1, 1.0}, {1, 0, 1.0}})}, 0.25, 10.0);
    const double stuck = consensus_rate_over_horizon(split, 0.75, 0.0, 13);
    const bool pinned = std::abs(stuck - 1.0) <= 1e-9;

    report(4, "window rates: contraction under joint trees, rate 1 without",
           contracting && pinned,
           "ring worst window rate " + fmt(worst) + "; disconnected rate " + fmt(stuck));
}

// --- criterion 5: contraction-rate closed form --------------------------------

void criterion_contraction_oracle() {
    Eigen::MatrixXd lap(2, 2);
    lap << 1.0, -1.0, -1.0, 1.0;
    const double rate = contraction_rate(matrix_exponential(-0.25 * lap));
    const double expected = std::exp(-0.5);
    report(5, "two-node contraction closed form", std::abs(rate - expected) <= 1e-9,
           "alpha " + fmt(rate) + " vs e^-1/2 " + fmt(expected));
}

// --- criterion 6: lyapunov estimates and the certificate ----------------------

void criterion_lyapunov() {
    const Exosystem exo = builtin_exosystem(10.0);
    const double nu_rotation =
        estimate_lyapunov_exponent(exo.s, Eigen::Vector2d(1.0, 0.0), 20.0, 1e-8);
    const VectorField contraction = [](const Eigen::VectorXd& w) -> Eigen::VectorXd {
        return -w;
    };
    const double nu_contraction =
        estimate_lyapunov_exponent(contraction, Eigen::Vector2d(0.5, -0.5), 20.0, 1e-8);

    const SwitchingSchedule ring = make_cyclic_schedule(ring_partition(5.0), 0.25, 10.0);
    const double alpha = consensus_rate_over_horizon(ring, 0.75, 0.0, 13);
    const SyncCertificate cert = check_sync_condition(nu_rotation, alpha, 0.75);

    const bool pass = std::abs(nu_rotation) <= 1e-3 &&
                      std::abs(nu_contraction + 1.0) <= 1e-3 && cert.satisfied;
    report(6, "lyapunov estimates and synchronizability certificate", pass,
           "rotation " + fmt(nu_rotation) + ", -w " + fmt(nu_contraction) +
               ", alpha* " + fmt(alpha) + " -> " +
               (cert.satisfied ? "satisfied" : "not satisfied"));
}

// --- criterion 7: coupled exosystems synchronize exponentially ----------------

void criterion_exosystem_sync() {
    const Exosystem exo = builtin_exosystem(10.0);
    const double h = 1e-3;
    const double t_end = 10.0;
    const long long n_steps = std::llround(t_end / h);
    int good_seeds = 0;
    double worst_rate = 0.0;
    bool first = true;
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const SwitchingSchedule schedule =
            make_random_schedule(ring_partition(5.0), 0.25, t_end, seed);
        std::vector<Eigen::MatrixXd> adjacency;
        for (const auto& g : schedule.graphs()) {
            adjacency.push_back(g.adjacency());
        }
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        Eigen::VectorXd w(6);
        for (int k = 0; k < 6; ++k) {
            w(k) = uniform(rng);
        }

        Eigen::VectorXd disagreement(n_steps + 1);
        Eigen::VectorXd times(n_steps + 1);
        auto record = [&](long long row) {
            times(row) = row * h;
            double peak = 0.0;
            for (int i = 0; i < 3; ++i) {
                for (int j = i + 1; j < 3; ++j) {
                    peak = std::max(peak,
                                    (w.segment(2 * i, 2) - w.segment(2 * j, 2)).norm());
                }
            }
            disagreement(row) = peak;
        };
        record(0);
        const Eigen::MatrixXd* active = &adjacency[0];
        const Rhs rhs = [&](double, const Eigen::VectorXd& stacked) {
            return coupled_exo_rhs(stacked, *active, exo);
        };
        for (long long k = 0; k < n_steps; ++k) {
            active = &adjacency[schedule.active_index(k * h)];
            w = rk4_step(rhs, w, k * h, h);
            record(k + 1);
        }
        const double rate = fit_exponential_rate(disagreement, times, 0.8);
        worst_rate = first ? rate : std::max(worst_rate, rate);
        first = false;
        good_seeds += rate <= -0.05 ? 1 : 0;
    }
    report(7, "coupled exosystems synchronize exponentially", good_seeds == 10,
           std::to_string(good_seeds) + "/10 seeds; worst fitted rate " + fmt(worst_rate) +
               " 1/s on [2,10]");
}

// --- criterion 8: integrator order ---------------------------------------------

void criterion_integrator_order() {
    const Exosystem exo = builtin_exosystem(10.0);
    const Rhs rhs = [&exo](double, const Eigen::VectorXd& w) { return exo.s(w); };
    auto terminal_error = [&](double h) {
        Eigen::VectorXd w = Eigen::Vector2d(1.0, 0.0);
        const long long n = std::llround(1.0 / h);
        for (long long k = 0; k < n; ++k) {
            w = rk4_step(rhs, w, k * h, h);
        }
        return (w - Eigen::Vector2d(std::cos(10.0), -std::sin(10.0))).norm();
    };
    const double e1 = terminal_error(2e-3);
    const double e2 = terminal_error(1e-3);
    const double e3 = terminal_error(5e-4);
    const double r12 = e1 / e2;
    const double r23 = e2 / e3;
    const bool pass = r12 >= 12.8 && r12 <= 19.2 && r23 >= 12.8 && r23 <= 19.2;
    report(8, "rk4 error shrinks 16x per halving", pass,
           "ratios " + fmt(r12) + " and " + fmt(r23));
}

// --- criterion 9: leader following ----------------------------------------------

void criterion_leader_following() {
    Scenario sc = parse_scenario(kScenarioDir + "/paper_sec5.json");
    sc.leader = true;
    // the single pinned follower relays the reference through the switching
    // ring, so the leader channel needs to be stiffer than the ring edges
    sc.leader_edges = {{0, 1, 20.0}};
    int good_seeds = 0;
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 10; ++seed) {
        try {
            const SimResult r = simulate(sc, seed);
            const TrackingErrors errors = tracking_errors(r, sc.exo);
            double max_e = 0.0;
            for (const auto& e_i : errors.leader) {
                Eigen::VectorXd norms(r.times.size());
                for (long long k = 0; k < r.times.size(); ++k) {
                    norms(k) = e_i.row(k).norm();
                }
                max_e = std::max(max_e, tail_max(norms, r.times, 8.0));
            }
            worst = std::max(worst, max_e);
            good_seeds += max_e <= 1e-2 ? 1 : 0;
        } catch (const DivergenceError&) {
        }
    }
    report(9, "leader-following regulation against the true reference", good_seeds >= 9,
           std::to_string(good_seeds) + "/10 seeds within 1e-2 on [8,10]; worst " +
               fmt(worst));
}

// --- criterion 10: stabilization with the exosystem pinned to zero ---------------

void criterion_stabilized_subsystems() {
    bool all = true;
    std::string detail;
    for (const auto& name : builtin_agent_names()) {
        const BuiltinAgent built = builtin_agent(name, 10.0);
        const bool has_observer = built.gains.L.has_value();

        Scenario sc;
        sc.exo = builtin_exosystem(10.0);
        sc.agents.push_back({built.model, built.solution, built.gains});
        sc.schedule.kind = ScheduleSpec::Kind::Explicit;
        sc.schedule.graphs = {Digraph(1, {})};
        sc.schedule.dwell = 0.25;
        sc.schedule.end_time = 3.0;
        sc.schedule.intervals = {{0.0, 0}};
        sc.mode = has_observer ? ControllerMode::OutputFeedback
                               : ControllerMode::StateFeedback;
        sc.t_end = 3.0;
        sc.step = 1e-3;
        sc.init.kind = InitSpec::Kind::Explicit;
        sc.init.x = {Eigen::VectorXd::Constant(built.model.n, 0.3)};
        if (has_observer) {
            sc.init.z = {Eigen::VectorXd::Constant(built.model.n, -0.1)};
        }
        sc.init.w = {Eigen::VectorXd::Zero(2)};

        const SimResult r = simulate(sc);
        Eigen::VectorXd x_norm(r.times.size());
        for (long long k = 0; k < r.times.size(); ++k) {
            x_norm(k) = r.x[0].row(k).norm();
        }
        const double plant_rate = fit_exponential_rate(x_norm, r.times, 1.0);
        bool ok = plant_rate <= -0.5;
        detail += (detail.empty() ? "" : "; ") + name + " plant " + fmt(plant_rate);
        if (has_observer) {
            Eigen::VectorXd z_err(r.times.size());
            for (long long k = 0; k < r.times.size(); ++k) {
                z_err(k) = (r.z[0].row(k) - r.x[0].row(k)).norm();
            }
            const double observer_rate = fit_exponential_rate(z_err, r.times, 1.0);
            ok = ok && observer_rate <= -0.5;
            detail += ", observer " + fmt(observer_rate);
        }
        all = all && ok;
    }
    report(10, "stabilized subsystems decay exponentially", all, detail + " [1/s]");
}

} // namespace

int main() {
    criterion_reproduction();
    criterion_regulator_residuals();
    criterion_gains();
    criterion_windowed_rates();
    criterion_contraction_oracle();
    criterion_lyapunov();
    criterion_exosystem_sync();
    criterion_integrator_order();
    criterion_leader_following();
    criterion_stabilized_subsystems();
    std::printf("%s: %d/10 criteria passed\n", g_failures == 0 ? "OK" : "FAILED",
                10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
