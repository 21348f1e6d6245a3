#include "sor/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sor {

namespace {

Eigen::MatrixXd central_difference_jacobian(const VectorFn& fn, const Eigen::VectorXd& at,
                                            int rows, double step) {
    Eigen::MatrixXd jac(rows, at.size());
    Eigen::VectorXd probe = at;
    for (int j = 0; j < at.size(); ++j) {
        probe(j) = at(j) + step;
        const Eigen::VectorXd hi = fn(probe);
        probe(j) = at(j) - step;
        const Eigen::VectorXd lo = fn(probe);
        probe(j) = at(j);
        jac.col(j) = (hi - lo) / (2.0 * step);
    }
    if (!jac.allFinite()) {
        throw std::runtime_error("jacobian: non-finite evaluation");
    }
    return jac;
}

} // namespace

void validate_model(const AgentModel& model) {
    if (model.n <= 0 || model.m <= 0 || model.p <= 0) {
        throw std::invalid_argument("AgentModel: dimensions must be positive");
    }
    if (!model.f || !model.g || !model.h) {
        throw std::invalid_argument("AgentModel: f, g, h must all be set");
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.n);
    const Eigen::VectorXd f0 = model.f(zero);
    const Eigen::VectorXd h0 = model.h(zero);
    if (f0.size() != model.n || f0.norm() > 0.0) {
        throw std::invalid_argument("AgentModel: f(0) must vanish");
    }
    if (h0.size() != model.p || h0.norm() > 0.0) {
        throw std::invalid_argument("AgentModel: h(0) must vanish");
    }
    const Eigen::MatrixXd g0 = model.g(zero);
    if (g0.rows() != model.n || g0.cols() != model.m || !g0.allFinite()) {
        throw std::invalid_argument("AgentModel: g(0) has wrong shape or non-finite entries");
    }
}

void validate_exosystem(const Exosystem& exo) {
    if (exo.s_dim <= 0 || exo.p <= 0 || !exo.s || !exo.q) {
        throw std::invalid_argument("Exosystem: incomplete definition");
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(exo.s_dim);
    if (exo.s(zero).norm() > 0.0) {
        throw std::invalid_argument("Exosystem: s(0) must vanish");
    }
}

void validate_solution(const AgentModel& model, const RegulatorSolution& sol, int s_dim) {
    if (!sol.pi || !sol.c) {
        throw std::invalid_argument("RegulatorSolution: pi and c must be set");
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(s_dim);
    const Eigen::VectorXd pi0 = sol.pi(zero);
    const Eigen::VectorXd c0 = sol.c(zero);
    if (pi0.size() != model.n || pi0.norm() > 0.0) {
        throw std::invalid_argument("RegulatorSolution: pi(0) must vanish with dimension n");
    }
    if (c0.size() != model.m || c0.norm() > 0.0) {
        throw std::invalid_argument("RegulatorSolution: c(0) must vanish with dimension m");
    }
}

Linearization linearize(const AgentModel& model, double step) {
    if (!(step > 0.0)) {
        throw std::invalid_argument("linearize: step must be positive");
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.n);
    Linearization lin;
    lin.A = model.df ? model.df(zero)
                     : central_difference_jacobian(model.f, zero, model.n, step);
    lin.B = model.g(zero);
    lin.C = model.dh ? model.dh(zero)
                     : central_difference_jacobian(model.h, zero, model.p, step);
    if (!lin.A.allFinite() || !lin.B.allFinite() || !lin.C.allFinite()) {
        throw std::runtime_error("linearize: non-finite evaluation");
    }
    return lin;
}

RegulatorResidual regulator_residual(const AgentModel& model, const Exosystem& exo,
                                     const RegulatorSolution& sol,
                                     const Eigen::VectorXd& w0, double fd_step) {
    const Eigen::MatrixXd dpi = sol.dpi
        ? sol.dpi(w0)
        : central_difference_jacobian(sol.pi, w0, model.n, fd_step);
    const Eigen::VectorXd x_on_manifold = sol.pi(w0);
    RegulatorResidual res;
    res.dynamic = dpi * exo.s(w0) - model.f(x_on_manifold)
                  - model.g(x_on_manifold) * sol.c(w0);
    res.output = model.h(x_on_manifold) + exo.q(w0);
    return res;
}

bool is_hurwitz(const Eigen::MatrixXd& m, double margin) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("is_hurwitz: matrix must be square");
    }
    if (!m.allFinite()) {
        throw std::invalid_argument("is_hurwitz: entries must be finite");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    return solver.eigenvalues().real().maxCoeff() < -margin;
}

Eigen::MatrixXd composite_closed_loop(const Linearization& lin,
                                      const Eigen::MatrixXd& K,
                                      const Eigen::MatrixXd& L) {
    const int n = static_cast<int>(lin.A.rows());
    if (K.cols() != n || K.rows() != lin.B.cols() ||
        L.rows() != n || L.cols() != lin.C.rows()) {
        throw std::invalid_argument("composite_closed_loop: gain dimensions inconsistent");
    }
    Eigen::MatrixXd composite(2 * n, 2 * n);
    composite.topLeftCorner(n, n) = lin.A;
    composite.topRightCorner(n, n) = lin.B * K;
    composite.bottomLeftCorner(n, n) = -L * lin.C;
    composite.bottomRightCorner(n, n) = lin.A + lin.B * K + L * lin.C;
    return composite;
}

bool verify_gains(const Linearization& lin, const GainSet& gains, double spectrum_tol) {
    const int n = static_cast<int>(lin.A.rows());
    if (gains.K.cols() != n || gains.K.rows() != lin.B.cols()) {
        throw std::invalid_argument("verify_gains: K dimensions inconsistent");
    }
    const Eigen::MatrixXd state_loop = lin.A + lin.B * gains.K;
    if (!is_hurwitz(state_loop)) {
        return false;
    }
    if (!gains.L) {
        return true;
    }
    if (gains.L->rows() != n || gains.L->cols() != lin.C.rows()) {
        throw std::invalid_argument("verify_gains: L dimensions inconsistent");
    }
    const Eigen::MatrixXd observer_loop = lin.A + *gains.L * lin.C;
    if (!is_hurwitz(observer_loop)) {
        return false;
    }
    const Eigen::MatrixXd composite = composite_closed_loop(lin, gains.K, *gains.L);
    if (!is_hurwitz(composite)) {
        return false;
    }
    // Separation: the exact similarity [x; z] -> [x; z - x] block-triangularizes
    // the composite with A+BK and A+LC on the diagonal, so its spectrum is the
    // union of the two designed spectra. Checking the block residuals certifies
    // that equality far below spectrum_tol even when the designs share
    // eigenvalues, where a nonsymmetric eigensolver splits repeated roots by
    // ~sqrt(machine epsilon).
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    t.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd t_inv = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    t_inv.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd triangular = t * composite * t_inv;
    const double scale = std::max(1.0, composite.norm());
    return triangular.bottomLeftCorner(n, n).norm() <= spectrum_tol * scale &&
           (triangular.topLeftCorner(n, n) - state_loop).norm() <= spectrum_tol * scale &&
           (triangular.bottomRightCorner(n, n) - observer_loop).norm() <= spectrum_tol * scale;
}

namespace {

BuiltinAgent make_agent1(double tau) {
    BuiltinAgent a;
    a.model.name = "agent1";
    a.model.n = 1;
    a.model.m = 1;
    a.model.p = 1;
    a.model.f = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, x(0) * x(0));
    };
    a.model.g = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(1, 1);
    };
    a.model.h = [](const Eigen::VectorXd& x) { return x; };
    a.model.df = [](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd::Constant(1, 1, 2.0 * x(0));
    };
    a.model.dh = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(1, 1);
    };
    a.solution.pi = [](const Eigen::VectorXd& w) {
        return Eigen::VectorXd::Constant(1, w(0));
    };
    a.solution.c = [tau](const Eigen::VectorXd& w) {
        return Eigen::VectorXd::Constant(1, tau * w(1) - w(0) * w(0));
    };
    a.solution.dpi = [](const Eigen::VectorXd&) {
        Eigen::MatrixXd d(1, 2);
        d << 1.0, 0.0;
        return d;
    };
    a.gains.K = Eigen::MatrixXd::Constant(1, 1, -5.0);
    return a;
}

BuiltinAgent make_agent2(double tau) {
    BuiltinAgent a;
    a.model.name = "agent2";
    a.model.n = 2;
    a.model.m = 1;
    a.model.p = 1;
    a.model.f = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd dx(2);
        dx << -x(0) + x(1), x(0) * x(0);
        return dx;
    };
    a.model.g = [](const Eigen::VectorXd&) {
        Eigen::MatrixXd b(2, 1);
        b << 0.0, 1.0;
        return b;
    };
    a.model.h = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, x(0));
    };
    a.model.df = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd j(2, 2);
        j << -1.0, 1.0, 2.0 * x(0), 0.0;
        return j;
    };
    a.model.dh = [](const Eigen::VectorXd&) {
        Eigen::MatrixXd c(1, 2);
        c << 1.0, 0.0;
        return c;
    };
    a.solution.pi = [tau](const Eigen::VectorXd& w) {
        Eigen::VectorXd x(2);
        x << w(0), w(0) + tau * w(1);
        return x;
    };
    a.solution.c = [tau](const Eigen::VectorXd& w) {
        return Eigen::VectorXd::Constant(1, tau * w(1) - tau * tau * w(0) - w(0) * w(0));
    };
    a.solution.dpi = [tau](const Eigen::VectorXd&) {
        Eigen::MatrixXd d(2, 2);
        d << 1.0, 0.0, 1.0, tau;
        return d;
    };
    a.gains.K = (Eigen::MatrixXd(1, 2) << -12.0, -8.0).finished();
    a.gains.L = (Eigen::MatrixXd(2, 1) << -8.0, -20.0).finished();
    return a;
}

BuiltinAgent make_agent3(double tau) {
    BuiltinAgent a;
    a.model.name = "agent3";
    a.model.n = 2;
    a.model.m = 1;
    a.model.p = 1;
    a.model.f = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd dx(2);
        dx << x(1), -x(0) + x(1) - x(0) * x(0) * x(0);
        return dx;
    };
    a.model.g = [](const Eigen::VectorXd&) {
        Eigen::MatrixXd b(2, 1);
        b << 0.0, 1.0;
        return b;
    };
    a.model.h = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, x(0));
    };
    a.model.df = [](const Eigen::VectorXd& x) {
        Eigen::MatrixXd j(2, 2);
        j << 0.0, 1.0, -1.0 - 3.0 * x(0) * x(0), 1.0;
        return j;
    };
    a.model.dh = [](const Eigen::VectorXd&) {
        Eigen::MatrixXd c(1, 2);
        c << 1.0, 0.0;
        return c;
    };
    a.solution.pi = [tau](const Eigen::VectorXd& w) {
        Eigen::VectorXd x(2);
        x << w(0), tau * w(1);
        return x;
    };
    a.solution.c = [tau](const Eigen::VectorXd& w) {
        return Eigen::VectorXd::Constant(
            1, w(0) * w(0) * w(0) + (1.0 - tau * tau) * w(0) - tau * w(1));
    };
    a.solution.dpi = [tau](const Eigen::VectorXd&) {
        Eigen::MatrixXd d(2, 2);
        d << 1.0, 0.0, 0.0, tau;
        return d;
    };
    a.gains.K = (Eigen::MatrixXd(1, 2) << -11.0, -8.0).finished();
    a.gains.L = (Eigen::MatrixXd(2, 1) << -10.0, -30.0).finished();
    return a;
}

} // namespace

const std::vector<std::string>& builtin_agent_names() {
    static const std::vector<std::string> names = {"agent1", "agent2", "agent3"};
    return names;
}

BuiltinAgent builtin_agent(const std::string& name, double tau) {
    if (tau == 0.0) {
        throw std::invalid_argument("builtin_agent: tau must be nonzero");
    }
    BuiltinAgent agent;
    if (name == "agent1") {
        agent = make_agent1(tau);
    } else if (name == "agent2") {
        agent = make_agent2(tau);
    } else if (name == "agent3") {
        agent = make_agent3(tau);
    } else {
        std::string known;
        for (const auto& n : builtin_agent_names()) {
            known += known.empty() ? n : ", " + n;
        }
        throw std::invalid_argument("builtin_agent: unknown agent '" + name +
                                    "' (known: " + known + ")");
    }
    validate_model(agent.model);
    validate_solution(agent.model, agent.solution, 2);
    return agent;
}

Exosystem builtin_exosystem(double tau) {
    if (tau == 0.0) {
        throw std::invalid_argument("builtin_exosystem: tau must be nonzero");
    }
    Exosystem exo;
    exo.s_dim = 2;
    exo.p = 1;
    exo.s = [tau](const Eigen::VectorXd& w) {
        Eigen::VectorXd dw(2);
        dw << tau * w(1), -tau * w(0);
        return dw;
    };
    // q(w) = -w_1: the reference solutions solve h(pi(w)) + q(w) = 0 only
    // with this sign, and the tracking error becomes e = y - w_1.
    exo.q = [](const Eigen::VectorXd& w) {
        return Eigen::VectorXd::Constant(1, -w(0));
    };
    validate_exosystem(exo);
    return exo;
}

} // namespace sor
