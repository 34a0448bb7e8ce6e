#include "cmdp/analysis.hpp"
#include "cmdp/envs.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/occupancy_opt.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cmdp;

namespace {

// One state, two actions, r = (1, 0), cost row `c`.
TabularCmdp one_state(double c0, double c1) {
    TabularCmdp m;
    m.n_states = 1;
    m.n_actions = 2;
    m.reward = Matrix(1, 2);
    m.reward << 1.0, 0.0;
    Matrix c(1, 2);
    c << c0, c1;
    m.costs.push_back(c);
    m.transition = TransitionKernel::uniform(1, 2);
    return m;
}

// Random center near `p` with radius gap + margin so that p lies inside the set.
ConfidenceSet ball_around(const TransitionKernel& p, std::mt19937_64& gen, double noise, double margin) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int S = p.n_states(), A = p.n_actions();
    ConfidenceSet conf{TransitionKernel(S, A), Matrix(S, A)};
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            double sum = 0.0;
            for (int n = 0; n < S; ++n) sum += (conf.p_hat(s, a, n) = p(s, a, n) + noise * u(gen));
            double gap = 0.0;
            for (int n = 0; n < S; ++n) {
                conf.p_hat(s, a, n) /= sum;
                gap += std::abs(conf.p_hat(s, a, n) - p(s, a, n));
            }
            conf.radius(s, a) = std::min(2.0, gap + margin);
        }
    return conf;
}

} // namespace

TEST_CASE("single-state program splits mass to meet the constraint") {
    const auto sol = solve_true_model(one_state(1.0, -1.0), 0.0);
    CHECK(sol.objective_value == doctest::Approx(0.5));
    CHECK(sol.rho(0, 0) == doctest::Approx(0.5));
    CHECK(sol.epsilon_used == 0.0);
}

TEST_CASE("unconstrained optimum matches the best deterministic policy") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::random_model(gen, 2 + trial % 3, 2 + trial % 2, 0);
        const auto sol = solve_true_model(m, 0.0);
        const auto best = oracle::best_deterministic(m);
        CHECK(sol.objective_value == doctest::Approx(best.gain).epsilon(1e-8));
        CHECK(oracle::average_of(m, sol.policy.probs(), m.reward) == doctest::Approx(sol.objective_value).epsilon(1e-8));
    }
}

TEST_CASE("constrained optimum dominates every feasible deterministic policy") {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rc = random_cmdp(3, 2, 1, 100 + std::uint64_t(trial), 0.1);
        const auto sol = solve_true_model(rc.model, 0.0);
        const auto best = oracle::best_deterministic(rc.model, 0.0);
        CHECK(sol.objective_value >= best.gain - 1e-8);
        const auto avg = long_run_averages(sol.policy, rc.model);
        CHECK(avg.zeta[0] <= 1e-7);
    }
}

TEST_CASE("optimal value is non-increasing in epsilon") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto rc = random_cmdp(4, 3, 2, seed, 0.05);
        double previous = std::numeric_limits<double>::infinity();
        for (double eps = 0.0; eps <= rc.slack; eps += rc.slack / 5.0) {
            const double v = solve_true_model(rc.model, eps).objective_value;
            CHECK(v <= previous + 1e-9);
            previous = v;
        }
    }
}

TEST_CASE("optimistic program with zero radius equals the program on the center") {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::random_model(gen, 3, 2, 1 + trial % 2);
        const ConfidenceSet conf{m.transition, Matrix::Zero(3, 2)};
        std::optional<double> opt, expected;
        try {
            opt = solve_optimistic(m.reward, m.costs, conf, 0.0).objective_value;
        } catch (const InfeasibleProgram&) {
        }
        try {
            expected = solve_true_model(m, 0.0).objective_value;
        } catch (const InfeasibleProgram&) {
        }
        REQUIRE(opt.has_value() == expected.has_value());
        if (opt) CHECK(*opt == doctest::Approx(*expected).epsilon(1e-8));
    }
}

TEST_CASE("radius 2 everywhere lets the program sit on the best pair") {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = oracle::random_model(gen, 3, 3, 0);
        const ConfidenceSet conf{m.transition, Matrix::Constant(3, 3, 2.0)};
        const auto opt = solve_optimistic(m.reward, {}, conf, 0.0);
        CHECK(opt.objective_value == doctest::Approx(m.reward.maxCoeff()).epsilon(1e-9));
    }
}

TEST_CASE("compact and reference formulations agree") {
    std::mt19937_64 gen(10);
    for (int trial = 0; trial < 30; ++trial) {
        const int S = 2 + trial % 2, A = 2;
        const auto m = oracle::random_model(gen, S, A, 1);
        auto conf = ball_around(m.transition, gen, 0.3, 0.05 * double(trial % 4));
        if (trial % 5 == 0) conf.radius(0, 0) = 2.0;
        for (double eps : {0.0, 0.05}) {
            std::optional<double> compact, reference;
            try {
                compact = solve_optimistic(m.reward, m.costs, conf, eps).objective_value;
            } catch (const InfeasibleProgram&) {
            }
            try {
                reference = solve_optimistic_reference(m.reward, m.costs, conf, eps).objective_value;
            } catch (const InfeasibleProgram&) {
            }
            REQUIRE(compact.has_value() == reference.has_value());
            if (compact) CHECK(*compact == doctest::Approx(*reference).epsilon(1e-7));
        }
    }
}

TEST_CASE("optimism: the true kernel inside the set never beats the optimistic value") {
    std::mt19937_64 gen(12);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto rc = random_cmdp(3, 2, 1, 500 + std::uint64_t(trial), 0.1);
        const auto conf = ball_around(rc.model.transition, gen, 0.2, 0.01);
        const auto truth = solve_true_model(rc.model, 0.0);
        const auto opt = solve_optimistic(rc.model.reward, rc.model.costs, conf, 0.0);
        CHECK(opt.objective_value >= truth.objective_value - 1e-7);
        ++checked;
    }
    CHECK(checked == 40);
}

TEST_CASE("implied kernel is inside the set and makes rho stationary") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = oracle::random_model(gen, 3, 2, 1);
        const auto conf = ball_around(m.transition, gen, 0.5, 0.1);
        bool constrained = true;
        ConstrainedSolution sol = [&] {
            try {
                return solve_optimistic(m.reward, m.costs, conf, 0.0);
            } catch (const InfeasibleProgram&) {
                constrained = false;
                return solve_optimistic(m.reward, {}, conf, 0.0);
            }
        }();
        REQUIRE(sol.implied_transition.has_value());
        const auto& implied = *sol.implied_transition;
        CHECK(flow_residual(sol.rho, implied) <= 1e-7);
        CHECK(event_holds(conf.p_hat, implied, (conf.radius.array() + 1e-7).matrix()));
        if (constrained) CHECK(sol.rho.dot(m.costs[0]) <= 1e-7);
    }
}

TEST_CASE("feasibility ladder") {
    SUBCASE("target already feasible") {
        const auto m = one_state(1.0, -1.0);
        const auto sol = feasibility_ladder([&](double e) { return solve_true_model(m, e); }, 0.2);
        CHECK(sol.epsilon_used == doctest::Approx(0.2));
        CHECK(sol.objective_value == doctest::Approx(0.4));
    }
    SUBCASE("halves until the slack admits it") {
        const auto m = one_state(1.0, -0.1);
        CHECK(slater_slack(m).slack == doctest::Approx(0.1));
        const auto sol = feasibility_ladder([&](double e) { return solve_true_model(m, e); }, 0.15);
        CHECK(sol.epsilon_used > 0.0);
        CHECK(sol.epsilon_used <= 0.1);
        CHECK(sol.epsilon_used == doctest::Approx(0.075));
    }
    SUBCASE("infeasible even at zero") {
        const auto m = one_state(1.0, 0.5);
        CHECK_THROWS_AS(feasibility_ladder([&](double e) { return solve_true_model(m, e); }, 0.1), InfeasibleProgram);
    }
    SUBCASE("negative target is rejected") {
        const auto m = one_state(1.0, -1.0);
        CHECK_THROWS_AS(feasibility_ladder([&](double e) { return solve_true_model(m, e); }, -0.1), InvalidSpec);
    }
}

TEST_CASE("slater slack of a generated model covers its recorded policy") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto rc = random_cmdp(4, 2, 2, seed, 0.1);
        const auto sl = slater_slack(rc.model);
        CHECK(sl.slack >= rc.slack - 1e-8);
        for (const auto& c : rc.model.costs) CHECK(sl.rho.dot(c) <= -sl.slack + 1e-7);
    }
    const auto queue = build_queue({});
    CHECK(slater_slack(queue).slack > 0.0);
}

TEST_CASE("program observer sees the assembled program") {
    const auto m = build_queue({});
    SolveOptions options;
    std::size_t vars = 0;
    options.on_program = [&](const lp::LinearProgram& p) { vars = p.n_vars(); };
    const auto sol = solve_true_model(m, 0.0, options);
    CHECK(vars == std::size_t(m.n_states * m.n_actions));
    CHECK(sol.objective_value == doctest::Approx(4.339684866251374).epsilon(1e-9));
}
