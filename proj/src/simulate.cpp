#include "sor/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace sor {

namespace {

constexpr double kTimeTol = 1e-9;
constexpr double kDivergenceNorm = 1e6;

// Offsets into the composite state vector:
//   [x_1 .. x_N | z_1 .. z_N (output feedback) | w0 (leader) | w_1 .. w_N]
struct StateLayout {
    std::vector<int> x_offset;
    std::vector<int> z_offset;
    std::vector<int> w_offset;
    int w0_offset = -1;
    int w_block = 0;      // start of the stacked exosystem block
    int total = 0;
    int s_dim = 0;

    StateLayout(const std::vector<AgentSetup>& agents, int s_dim_in, bool observers,
                bool leader)
        : s_dim(s_dim_in) {
        int pos = 0;
        for (const auto& a : agents) {
            x_offset.push_back(pos);
            pos += a.model.n;
        }
        if (observers) {
            for (const auto& a : agents) {
                z_offset.push_back(pos);
                pos += a.model.n;
            }
        }
        w_block = pos;
        if (leader) {
            w0_offset = pos;
            pos += s_dim;
        }
        for (std::size_t i = 0; i < agents.size(); ++i) {
            w_offset.push_back(pos);
            pos += s_dim;
        }
        total = pos;
    }
};

long long grid_index(double t, double h, const char* what) {
    const double ratio = t / h;
    const long long idx = std::llround(ratio);
    if (std::abs(ratio - static_cast<double>(idx)) > 1e-6) {
        throw std::invalid_argument(std::string("simulate: ") + what +
                                    " does not land on the integration grid");
    }
    return idx;
}

void check_scenario(const Scenario& sc) {
    if (sc.agents.empty()) {
        throw std::invalid_argument("simulate: scenario has no agents");
    }
    validate_exosystem(sc.exo);
    for (const auto& a : sc.agents) {
        validate_model(a.model);
        validate_solution(a.model, a.solution, sc.exo.s_dim);
        if (a.model.p != sc.exo.p) {
            throw std::invalid_argument("simulate: output dimension of " + a.model.name +
                                        " does not match the exosystem");
        }
        if (a.gains.K.rows() != a.model.m || a.gains.K.cols() != a.model.n) {
            throw std::invalid_argument("simulate: K dimensions inconsistent for " + a.model.name);
        }
        if (sc.mode == ControllerMode::OutputFeedback) {
            if (!a.gains.L) {
                throw std::invalid_argument("simulate: output feedback requires L for " +
                                            a.model.name);
            }
            if (a.gains.L->rows() != a.model.n || a.gains.L->cols() != a.model.p) {
                throw std::invalid_argument("simulate: L dimensions inconsistent for " +
                                            a.model.name);
            }
        }
    }
    if (sc.schedule.graphs.empty()) {
        throw std::invalid_argument("simulate: schedule has no graphs");
    }
    const int n_nodes = sc.schedule.graphs.front().node_count();
    if (n_nodes != static_cast<int>(sc.agents.size())) {
        throw std::invalid_argument("simulate: agent count must equal the schedule node count");
    }
    if (!(sc.step > 0.0) || !(sc.t_end > 0.0)) {
        throw std::invalid_argument("simulate: step and t_end must be positive");
    }
    const double ratio = sc.schedule.dwell / sc.step;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument("simulate: step must divide the dwell time");
    }
}

struct DrawnInit {
    std::vector<Eigen::VectorXd> x, z, w;
    Eigen::VectorXd w0;
};

DrawnInit draw_initial_conditions(const Scenario& sc, bool observers) {
    DrawnInit init;
    const int s = sc.exo.s_dim;
    if (sc.init.kind == InitSpec::Kind::Explicit) {
        init.x = sc.init.x;
        init.z = sc.init.z;
        init.w = sc.init.w;
        init.w0 = sc.init.w0;
        if (init.x.size() != sc.agents.size() || init.w.size() != sc.agents.size()) {
            throw std::invalid_argument("simulate: explicit init must list x and w per agent");
        }
        if (observers && init.z.size() != sc.agents.size()) {
            throw std::invalid_argument("simulate: explicit init must list z per agent");
        }
        for (std::size_t i = 0; i < sc.agents.size(); ++i) {
            if (init.x[i].size() != sc.agents[i].model.n ||
                init.w[i].size() != s ||
                (observers && init.z[i].size() != sc.agents[i].model.n)) {
                throw std::invalid_argument("simulate: explicit init dimension mismatch");
            }
        }
        if (sc.leader && init.w0.size() != s) {
            throw std::invalid_argument("simulate: leader mode needs an explicit w0");
        }
        return init;
    }
    if (!(sc.init.hi >= sc.init.lo)) {
        throw std::invalid_argument("simulate: init range reversed");
    }
    std::mt19937 rng(sc.init.seed.value_or(sc.seed));
    std::uniform_real_distribution<double> uniform(sc.init.lo, sc.init.hi);
    auto draw = [&](int dim) {
        Eigen::VectorXd v(dim);
        for (int k = 0; k < dim; ++k) {
            v(k) = uniform(rng);
        }
        return v;
    };
    for (const auto& a : sc.agents) {
        init.x.push_back(draw(a.model.n));
        if (observers) {
            init.z.push_back(draw(a.model.n));
        }
        init.w.push_back(draw(s));
    }
    if (sc.leader) {
        init.w0 = draw(s);
    }
    return init;
}

} // namespace

SwitchingSchedule materialize_schedule(const ScheduleSpec& spec, unsigned fallback_seed) {
    if (spec.kind == ScheduleSpec::Kind::Explicit) {
        return SwitchingSchedule(spec.graphs, spec.intervals, spec.dwell, spec.end_time);
    }
    return make_random_schedule(spec.graphs, spec.dwell, spec.end_time,
                                spec.seed.value_or(fallback_seed));
}

Eigen::VectorXd rk4_step(const Rhs& rhs, const Eigen::VectorXd& state, double t, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("rk4_step: step must be positive");
    }
    const Eigen::VectorXd k1 = rhs(t, state);
    const Eigen::VectorXd k2 = rhs(t + 0.5 * h, state + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(t + 0.5 * h, state + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(t + h, state + h * k3);
    Eigen::VectorXd next = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
        throw DivergenceError("rk4_step: divergence (non-finite state)", t);
    }
    return next;
}

SimResult simulate(const Scenario& sc) {
    check_scenario(sc);
    const bool observers = sc.mode == ControllerMode::OutputFeedback;
    const int n_agents = static_cast<int>(sc.agents.size());
    const int s = sc.exo.s_dim;
    const double h = sc.step;

    ScheduleSpec spec = sc.schedule;
    if (spec.kind == ScheduleSpec::Kind::Random) {
        spec.end_time = std::max(spec.end_time, sc.t_end);
    }
    SwitchingSchedule schedule = materialize_schedule(spec, sc.seed);
    if (schedule.end_time() < sc.t_end - kTimeTol) {
        throw std::invalid_argument("simulate: schedule shorter than t_end");
    }

    // Switching instants as integer grid steps, so interval lookups in the
    // main loop are exact.
    std::vector<long long> switch_steps;
    switch_steps.reserve(schedule.intervals().size());
    for (const auto& iv : schedule.intervals()) {
        switch_steps.push_back(grid_index(iv.t_start, h, "switching instant"));
    }
    const long long n_steps = grid_index(sc.t_end, h, "t_end");

    // Per-mode coupling matrices; leader mode embeds the base graph into the
    // augmented node set with the leader links on top.
    std::vector<Eigen::MatrixXd> coupling;
    coupling.reserve(schedule.graphs().size());
    for (const auto& g : schedule.graphs()) {
        if (sc.leader) {
            coupling.push_back(LeaderAugmentedGraph(g, sc.leader_edges).combined().adjacency());
        } else {
            coupling.push_back(g.adjacency());
        }
    }

    const StateLayout layout(sc.agents, s, observers, sc.leader);
    const DrawnInit init = draw_initial_conditions(sc, observers);

    Eigen::VectorXd state = Eigen::VectorXd::Zero(layout.total);
    for (int i = 0; i < n_agents; ++i) {
        state.segment(layout.x_offset[i], sc.agents[i].model.n) = init.x[i];
        if (observers) {
            state.segment(layout.z_offset[i], sc.agents[i].model.n) = init.z[i];
        }
        state.segment(layout.w_offset[i], s) = init.w[i];
    }
    if (sc.leader) {
        state.segment(layout.w0_offset, s) = init.w0;
    }

    const Eigen::MatrixXd* active_coupling = &coupling.front();
    const int w_nodes = n_agents + (sc.leader ? 1 : 0);

    Rhs rhs = [&](double, const Eigen::VectorXd& q) {
        Eigen::VectorXd dq(layout.total);
        for (int i = 0; i < n_agents; ++i) {
            const auto& agent = sc.agents[i];
            const int n = agent.model.n;
            const Eigen::VectorXd x_i = q.segment(layout.x_offset[i], n);
            const Eigen::VectorXd w_i = q.segment(layout.w_offset[i], s);
            Eigen::VectorXd u_i;
            if (observers) {
                const Eigen::VectorXd z_i = q.segment(layout.z_offset[i], n);
                u_i = output_feedback_control(z_i, w_i, agent.gains, agent.solution);
                const Eigen::VectorXd y_i = agent.model.h(x_i);
                dq.segment(layout.z_offset[i], n) =
                    observer_rhs(z_i, y_i, u_i, agent.model, agent.gains);
            } else {
                u_i = state_feedback_control(x_i, w_i, agent.gains, agent.solution);
            }
            dq.segment(layout.x_offset[i], n) =
                agent.model.f(x_i) + agent.model.g(x_i) * u_i;
        }
        const Eigen::VectorXd w_stack = q.segment(layout.w_block, w_nodes * s);
        dq.segment(layout.w_block, w_nodes * s) =
            sc.leader ? leader_coupled_exo_rhs(w_stack, *active_coupling, sc.exo)
                      : coupled_exo_rhs(w_stack, *active_coupling, sc.exo);
        return dq;
    };

    SimResult result;
    result.mode = sc.mode;
    result.leader = sc.leader;
    result.times.resize(n_steps + 1);
    for (long long k = 0; k <= n_steps; ++k) {
        result.times(k) = k * h;
    }
    result.sigma.resize(n_steps + 1);
    for (int i = 0; i < n_agents; ++i) {
        const auto& model = sc.agents[i].model;
        result.x.emplace_back(n_steps + 1, model.n);
        if (observers) {
            result.z.emplace_back(n_steps + 1, model.n);
        }
        result.w.emplace_back(n_steps + 1, s);
        result.y.emplace_back(n_steps + 1, model.p);
        result.e.emplace_back(n_steps + 1, model.p);
    }
    if (sc.leader) {
        result.w0.resize(n_steps + 1, s);
    }

    auto record = [&](long long row, int sigma_now) {
        result.sigma[row] = sigma_now;
        for (int i = 0; i < n_agents; ++i) {
            const int n = sc.agents[i].model.n;
            const Eigen::VectorXd x_i = state.segment(layout.x_offset[i], n);
            const Eigen::VectorXd w_i = state.segment(layout.w_offset[i], s);
            const Eigen::VectorXd y_i = sc.agents[i].model.h(x_i);
            result.x[i].row(row) = x_i.transpose();
            if (observers) {
                result.z[i].row(row) = state.segment(layout.z_offset[i], n).transpose();
            }
            result.w[i].row(row) = w_i.transpose();
            result.y[i].row(row) = y_i.transpose();
            result.e[i].row(row) = (y_i + sc.exo.q(w_i)).transpose();
        }
        if (sc.leader) {
            result.w0.row(row) = state.segment(layout.w0_offset, s).transpose();
        }
    };

    std::size_t interval = 0;
    record(0, schedule.intervals()[0].graph_index);
    for (long long k = 0; k < n_steps; ++k) {
        while (interval + 1 < switch_steps.size() && switch_steps[interval + 1] <= k) {
            ++interval;
        }
        active_coupling = &coupling[schedule.intervals()[interval].graph_index];
        const double t = k * h;
        state = rk4_step(rhs, state, t, h);
        if (state.norm() > kDivergenceNorm) {
            throw DivergenceError("simulate: state norm exceeded divergence bound at t = " +
                                      std::to_string(t + h),
                                  t + h);
        }
        std::size_t next_interval = interval;
        while (next_interval + 1 < switch_steps.size() &&
               switch_steps[next_interval + 1] <= k + 1) {
            ++next_interval;
        }
        record(k + 1, schedule.intervals()[next_interval].graph_index);
    }

    result.schedule = std::move(schedule);
    return result;
}

SimResult simulate(const Scenario& sc, unsigned seed_override) {
    Scenario pinned = sc;
    pinned.seed = seed_override;
    pinned.schedule.seed.reset();
    pinned.init.seed.reset();
    return simulate(pinned);
}

TrackingErrors tracking_errors(const SimResult& r, const Exosystem& exo) {
    TrackingErrors errors;
    const long long rows = r.times.size();
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        Eigen::MatrixXd own(rows, r.y[i].cols());
        for (long long k = 0; k < rows; ++k) {
            own.row(k) = r.y[i].row(k) +
                         exo.q(r.w[i].row(k).transpose()).transpose();
        }
        errors.own.push_back(std::move(own));
    }
    if (r.leader) {
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            Eigen::MatrixXd vs_leader(rows, r.y[i].cols());
            for (long long k = 0; k < rows; ++k) {
                vs_leader.row(k) = r.y[i].row(k) +
                                   exo.q(r.w0.row(k).transpose()).transpose();
            }
            errors.leader.push_back(std::move(vs_leader));
        }
    }
    return errors;
}

SyncErrorSeries pairwise_sync_error(const SimResult& r) {
    const long long rows = r.times.size();
    SyncErrorSeries series;
    series.y_max = Eigen::VectorXd::Zero(rows);
    series.w_max = Eigen::VectorXd::Zero(rows);
    for (std::size_t i = 0; i < r.y.size(); ++i) {
        for (std::size_t j = i + 1; j < r.y.size(); ++j) {
            for (long long k = 0; k < rows; ++k) {
                series.y_max(k) = std::max(series.y_max(k),
                                           (r.y[i].row(k) - r.y[j].row(k)).norm());
                series.w_max(k) = std::max(series.w_max(k),
                                           (r.w[i].row(k) - r.w[j].row(k)).norm());
            }
        }
    }
    return series;
}

double fit_exponential_rate(const Eigen::VectorXd& series, const Eigen::VectorXd& times,
                            double tail_fraction) {
    if (series.size() != times.size()) {
        throw std::invalid_argument("fit_exponential_rate: series/times length mismatch");
    }
    if (!(tail_fraction > 0.0) || tail_fraction > 1.0) {
        throw std::invalid_argument("fit_exponential_rate: tail fraction must be in (0, 1]");
    }
    const long long n = series.size();
    const long long count = static_cast<long long>(std::ceil(tail_fraction * n));
    const long long start = n - count;
    if (count < 2) {
        throw std::invalid_argument("fit_exponential_rate: window empty");
    }
    double mean_t = 0.0;
    double mean_l = 0.0;
    for (long long k = start; k < n; ++k) {
        mean_t += times(k);
        mean_l += std::log(std::max(series(k), 1e-300));
    }
    mean_t /= count;
    mean_l /= count;
    double cov = 0.0;
    double var = 0.0;
    for (long long k = start; k < n; ++k) {
        const double dt = times(k) - mean_t;
        cov += dt * (std::log(std::max(series(k), 1e-300)) - mean_l);
        var += dt * dt;
    }
    if (var == 0.0) {
        throw std::invalid_argument("fit_exponential_rate: degenerate time window");
    }
    return cov / var;
}

} // namespace sor
