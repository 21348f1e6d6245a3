#include <doctest.h>

#include <random>

#include "sor/controllers.hpp"

using namespace sor;

namespace {

Exosystem zero_exosystem() {
    Exosystem exo;
    exo.s_dim = 2;
    exo.p = 1;
    exo.s = [](const Eigen::VectorXd& w) { return Eigen::VectorXd::Zero(w.size()); };
    exo.q = [](const Eigen::VectorXd& w) { return Eigen::VectorXd::Constant(1, -w(0)); };
    return exo;
}

} // namespace

TEST_CASE("coupled exosystem right-hand side") {
    const Exosystem exo = builtin_exosystem(10.0);

    // identical copies: the coupling vanishes and each copy follows s
    const Eigen::Vector2d w(0.4, -0.2);
    Eigen::VectorXd stacked(6);
    stacked << w, w, w;
    const Digraph ring(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}});
    const Eigen::VectorXd dw = coupled_exo_rhs(stacked, ring, exo);
    for (int i = 0; i < 3; ++i) {
        CHECK((dw.segment(2 * i, 2) - exo.s(w)).norm() == 0.0);
    }

    // empty graph: fully decoupled
    Eigen::VectorXd mixed(4);
    mixed << 1.0, 0.0, 0.0, 0.5;
    const Eigen::VectorXd decoupled = coupled_exo_rhs(mixed, Digraph(2, {}), exo);
    CHECK((decoupled.segment(0, 2) - exo.s(mixed.segment(0, 2))).norm() == 0.0);
    CHECK((decoupled.segment(2, 2) - exo.s(mixed.segment(2, 2))).norm() == 0.0);

    // channel 1 -> 2 with s = 0 pulls copy 2 toward copy 1 only
    const Exosystem still = zero_exosystem();
    Eigen::VectorXd pair(4);
    pair << 1.0, 0.0, 0.0, 0.0;
    const Eigen::VectorXd pulled = coupled_exo_rhs(pair, Digraph(2, {{0, 1, 1.0}}), still);
    CHECK(pulled.segment(0, 2).norm() == 0.0);
    CHECK(pulled(2) == doctest::Approx(1.0));
    CHECK(pulled(3) == doctest::Approx(0.0));

    CHECK_THROWS_AS(coupled_exo_rhs(pair, ring, exo), std::invalid_argument);
}

TEST_CASE("leader coupling never feeds back into the leader") {
    const Exosystem still = zero_exosystem();

    // single follower hearing only the leader
    const LeaderAugmentedGraph pinned(Digraph(1, {}), {{0, 1, 1.0}});
    Eigen::VectorXd stacked(4);
    stacked << 1.0, 0.0, 0.0, 0.0;   // w0 = (1,0), w1 = (0,0)
    const Eigen::VectorXd dw = leader_coupled_exo_rhs(stacked, pinned, still);
    CHECK(dw.segment(0, 2).norm() == 0.0);                  // leader uncoupled
    CHECK((dw.segment(2, 2) - Eigen::Vector2d(1.0, 0.0)).norm() == 0.0);

    // no leader links: followers reduce to the plain coupled dynamics
    const Exosystem exo = builtin_exosystem(10.0);
    const Digraph base(2, {{0, 1, 1.3}});
    Eigen::VectorXd follower_states(4);
    follower_states << 0.3, -0.2, 0.1, 0.7;
    Eigen::VectorXd with_leader(6);
    with_leader << 0.9, -0.4, follower_states;
    const Eigen::VectorXd aug =
        leader_coupled_exo_rhs(with_leader, LeaderAugmentedGraph(base, {}), exo);
    const Eigen::VectorXd plain = coupled_exo_rhs(follower_states, base, exo);
    CHECK((aug.segment(2, 4) - plain).norm() == 0.0);
    CHECK((aug.segment(0, 2) - exo.s(Eigen::Vector2d(0.9, -0.4))).norm() == 0.0);

    Eigen::MatrixXd leaky = Eigen::MatrixXd::Zero(2, 2);
    leaky(0, 1) = 1.0;
    CHECK_THROWS_AS(leader_coupled_exo_rhs(stacked, leaky, exo), std::invalid_argument);
}

TEST_CASE("state feedback law") {
    const BuiltinAgent a1 = builtin_agent("agent1", 10.0);

    // on the manifold the feedback term vanishes
    const Eigen::Vector2d w(0.3, -0.5);
    const Eigen::VectorXd on_manifold =
        state_feedback_control(a1.solution.pi(w), w, a1.gains, a1.solution);
    CHECK((on_manifold - a1.solution.c(w)).norm() == 0.0);

    // u = (10*0.2 - 0.01) + (-5)(0.3 - 0.1) = 0.99
    const Eigen::VectorXd u = state_feedback_control(
        (Eigen::VectorXd(1) << 0.3).finished(), Eigen::Vector2d(0.1, 0.2),
        a1.gains, a1.solution);
    CHECK(u(0) == doctest::Approx(0.99).epsilon(1e-12));

    CHECK(state_feedback_control(Eigen::VectorXd::Zero(1), Eigen::Vector2d(0.0, 0.0),
                                 a1.gains, a1.solution)
              .norm() == 0.0);
}

TEST_CASE("control reduces to K x at zero exosystem state") {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    for (const auto& name : builtin_agent_names()) {
        const BuiltinAgent agent = builtin_agent(name, 10.0);
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd x(agent.model.n);
            for (int d = 0; d < x.size(); ++d) {
                x(d) = uniform(rng);
            }
            const Eigen::VectorXd u = state_feedback_control(
                x, Eigen::Vector2d(0.0, 0.0), agent.gains, agent.solution);
            CHECK((u - agent.gains.K * x).norm() <= 1e-14);
        }
    }
}

TEST_CASE("output feedback law") {
    const BuiltinAgent a2 = builtin_agent("agent2", 10.0);
    const Eigen::Vector2d w(0.2, 0.4);

    const Eigen::VectorXd on_manifold =
        output_feedback_control(a2.solution.pi(w), w, a2.gains, a2.solution);
    CHECK((on_manifold - a2.solution.c(w)).norm() == 0.0);

    // a perfect observer reproduces the state feedback law
    const Eigen::Vector2d x(0.3, -0.1);
    CHECK((output_feedback_control(x, w, a2.gains, a2.solution) -
           state_feedback_control(x, w, a2.gains, a2.solution))
              .norm() == 0.0);

    // hand evaluation: c2(w) + K2 (z - pi2(w))
    const Eigen::Vector2d z(0.05, 0.6);
    const double c2 = 10.0 * 0.4 - 100.0 * 0.2 - 0.04;
    const Eigen::Vector2d pi2(0.2, 0.2 + 10.0 * 0.4);
    const double expected = c2 + (-12.0) * (z(0) - pi2(0)) + (-8.0) * (z(1) - pi2(1));
    CHECK(output_feedback_control(z, w, a2.gains, a2.solution)(0) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("observer right-hand side") {
    const BuiltinAgent a3 = builtin_agent("agent3", 10.0);

    // with z = x the injection vanishes and the observer copies the plant
    const Eigen::Vector2d x(0.2, -0.3);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 0.7);
    const Eigen::VectorXd copy = observer_rhs(x, a3.model.h(x), u, a3.model, a3.gains);
    CHECK((copy - (a3.model.f(x) + a3.model.g(x) * u)).norm() == 0.0);

    CHECK(observer_rhs(Eigen::Vector2d(0.0, 0.0), Eigen::VectorXd::Zero(1),
                       Eigen::VectorXd::Zero(1), a3.model, a3.gains)
              .norm() == 0.0);

    // z = (0.1, 0), y = 0.2, u = 0: f3(z) = (0, -0.101), injection = L3 * (-0.1)
    const Eigen::VectorXd dz =
        observer_rhs(Eigen::Vector2d(0.1, 0.0), Eigen::VectorXd::Constant(1, 0.2),
                     Eigen::VectorXd::Zero(1), a3.model, a3.gains);
    CHECK(dz(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dz(1) == doctest::Approx(2.899).epsilon(1e-12));

    const BuiltinAgent a1 = builtin_agent("agent1", 10.0);
    CHECK_THROWS_AS(observer_rhs(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                                 Eigen::VectorXd::Zero(1), a1.model, a1.gains),
                    std::invalid_argument);
}
