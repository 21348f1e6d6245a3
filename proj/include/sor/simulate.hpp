#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sor/agents.hpp"
#include "sor/controllers.hpp"
#include "sor/graph.hpp"

namespace sor {

enum class ControllerMode { StateFeedback, OutputFeedback };

struct AgentSetup {
    AgentModel model;
    RegulatorSolution solution;
    GainSet gains;
};

// Switching sequence, either given explicitly or drawn per dwell interval
// from a seeded generator when the run starts.
struct ScheduleSpec {
    enum class Kind { Explicit, Random };
    Kind kind = Kind::Random;
    std::vector<Digraph> graphs;
    double dwell = 0.25;
    double end_time = 0.0;
    std::vector<ScheduleInterval> intervals;   // explicit mode
    std::optional<unsigned> seed;              // random mode; falls back to the scenario seed
};

SwitchingSchedule materialize_schedule(const ScheduleSpec& spec, unsigned fallback_seed);

struct InitSpec {
    enum class Kind { SeededUniform, Explicit };
    Kind kind = Kind::SeededUniform;
    double lo = -1.0;
    double hi = 1.0;
    std::optional<unsigned> seed;              // falls back to the scenario seed
    // explicit mode
    std::vector<Eigen::VectorXd> x;
    std::vector<Eigen::VectorXd> z;
    std::vector<Eigen::VectorXd> w;
    Eigen::VectorXd w0;
};

struct Scenario {
    std::vector<AgentSetup> agents;
    Exosystem exo;
    ScheduleSpec schedule;
    ControllerMode mode = ControllerMode::StateFeedback;
    bool leader = false;
    std::vector<Edge> leader_edges;   // combined ids: from must be 0
    double t_end = 10.0;
    double step = 1e-3;
    InitSpec init;
    unsigned seed = 0;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double t)
        : std::runtime_error(what), time(t) {}
    double time;
};

struct SimResult {
    Eigen::VectorXd times;             // n_steps + 1 grid points
    std::vector<int> sigma;            // active graph index per grid point
    std::vector<Eigen::MatrixXd> x;    // per agent, rows = grid points
    std::vector<Eigen::MatrixXd> z;    // per agent; empty in state feedback
    std::vector<Eigen::MatrixXd> w;    // per agent exosystem copy
    std::vector<Eigen::MatrixXd> y;    // outputs
    std::vector<Eigen::MatrixXd> e;    // h_i(x_i) + q(w_i)
    Eigen::MatrixXd w0;                // leader trajectory; 0x0 unless leader mode
    ControllerMode mode = ControllerMode::StateFeedback;
    bool leader = false;
    std::optional<SwitchingSchedule> schedule;   // the realized schedule
};

using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// One classical 4th-order Runge-Kutta step.
Eigen::VectorXd rk4_step(const Rhs& rhs, const Eigen::VectorXd& state, double t, double h);

// Fixed-step integration of the stacked closed loop on the grid, holding the
// active graph constant within each step and swapping it exactly at the
// switching instants (which must land on grid points).
SimResult simulate(const Scenario& sc);
SimResult simulate(const Scenario& sc, unsigned seed_override);

struct TrackingErrors {
    std::vector<Eigen::MatrixXd> own;      // vs the agent's own exosystem copy
    std::vector<Eigen::MatrixXd> leader;   // vs the true leader; leader mode only
};

TrackingErrors tracking_errors(const SimResult& r, const Exosystem& exo);

struct SyncErrorSeries {
    Eigen::VectorXd y_max;   // max over pairs of ||y_i - y_j|| per step
    Eigen::VectorXd w_max;   // max over pairs of ||w_i - w_j|| per step
};

SyncErrorSeries pairwise_sync_error(const SimResult& r);

// Least-squares slope of log(series) over the trailing tail_fraction of the
// samples. Series values are clipped at 1e-300 before taking the log.
double fit_exponential_rate(const Eigen::VectorXd& series, const Eigen::VectorXd& times,
                            double tail_fraction);

} // namespace sor
