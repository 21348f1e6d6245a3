#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sor {

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Control-affine agent x' = f(x) + g(x) u, y = h(x), with an equilibrium at
// the origin: f(0) = 0 and h(0) = 0.
struct AgentModel {
    std::string name;
    int n = 0;     // state dimension
    int m = 0;     // input dimension
    int p = 0;     // output dimension
    VectorFn f;    // n
    MatrixFn g;    // n x m
    VectorFn h;    // p
    MatrixFn df;   // optional analytic Jacobian of f (n x n)
    MatrixFn dh;   // optional analytic Jacobian of h (p x n)
};

// Autonomous reference generator w0' = s(w0); the tracking target for the
// outputs is -q(w0).
struct Exosystem {
    int s_dim = 0;
    int p = 0;
    VectorFn s;
    VectorFn q;
};

// (pi, c): output-zeroing manifold x = pi(w0) and feedforward u = c(w0),
// with pi(0) = 0 and c(0) = 0.
struct RegulatorSolution {
    VectorFn pi;   // n
    VectorFn c;    // m
    MatrixFn dpi;  // optional analytic Jacobian of pi (n x s_dim)
};

struct Linearization {
    Eigen::MatrixXd A;   // n x n
    Eigen::MatrixXd B;   // n x m
    Eigen::MatrixXd C;   // p x n
};

struct GainSet {
    Eigen::MatrixXd K;                  // m x n state feedback
    std::optional<Eigen::MatrixXd> L;   // n x p output injection
};

void validate_model(const AgentModel& model);
void validate_exosystem(const Exosystem& exo);
void validate_solution(const AgentModel& model, const RegulatorSolution& sol, int s_dim);

// A from central differences of f at 0 (analytic Jacobian wins when given),
// B = g(0), C likewise from h.
Linearization linearize(const AgentModel& model, double step = 1e-5);

struct RegulatorResidual {
    Eigen::VectorXd dynamic;  // dpi/dw0 s(w0) - f(pi(w0)) - g(pi(w0)) c(w0)
    Eigen::VectorXd output;   // h(pi(w0)) + q(w0)
};

RegulatorResidual regulator_residual(const AgentModel& model, const Exosystem& exo,
                                     const RegulatorSolution& sol,
                                     const Eigen::VectorXd& w0, double fd_step = 1e-5);

bool is_hurwitz(const Eigen::MatrixXd& m, double margin = 1e-9);

// [[A, BK], [-LC, A+BK+LC]]
Eigen::MatrixXd composite_closed_loop(const Linearization& lin,
                                      const Eigen::MatrixXd& K,
                                      const Eigen::MatrixXd& L);

// A+BK Hurwitz; with L present, additionally A+LC and the composite Hurwitz
// and spectrum(composite) == spectrum(A+BK) u spectrum(A+LC) to spectrum_tol.
bool verify_gains(const Linearization& lin, const GainSet& gains,
                  double spectrum_tol = 1e-8);

struct BuiltinAgent {
    AgentModel model;
    RegulatorSolution solution;
    GainSet gains;
};

// "agent1" | "agent2" | "agent3", parameterized by the reference frequency
// tau. Ships the closed-form regulator solution and the designed gains.
BuiltinAgent builtin_agent(const std::string& name, double tau);
const std::vector<std::string>& builtin_agent_names();

// Harmonic 2-state generator s(w) = [[0, tau], [-tau, 0]] w with
// q(w) = -w_1, so the tracking error reads e = y - w_1.
Exosystem builtin_exosystem(double tau);

} // namespace sor
