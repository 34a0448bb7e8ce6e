#include "cmdp/envs.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/model.hpp"
#include "cmdp/model_io.hpp"
#include "cmdp/occupancy_opt.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace cmdp;

namespace {

TabularCmdp two_state() {
    TabularCmdp m;
    m.n_states = 2;
    m.n_actions = 1;
    m.reward = Matrix(2, 1);
    m.reward << 1.0, 0.0;
    m.transition = TransitionKernel(2, 1);
    m.transition(0, 0, 0) = 0.9;
    m.transition(0, 0, 1) = 0.1;
    m.transition(1, 0, 0) = 0.5;
    m.transition(1, 0, 1) = 0.5;
    return m;
}

} // namespace

TEST_CASE("transition kernel indexing and uniform rows") {
    auto k = TransitionKernel::uniform(3, 2);
    CHECK(k.n_states() == 3);
    CHECK(k.n_actions() == 2);
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a)
            for (double p : k.row(s, a)) CHECK(p == doctest::Approx(1.0 / 3.0));
    k(1, 1, 2) = 0.5;
    CHECK(k.row(1, 1)[2] == 0.5);
    CHECK(k.data().size() == 18);
    CHECK_THROWS_AS(TransitionKernel(0, 1), InvalidSpec);
}

TEST_CASE("validate_model") {
    SUBCASE("well-formed two-state model has no violations") { CHECK(validate_model(two_state()).empty()); }

    SUBCASE("a row summing to 0.9 is reported with its location") {
        auto m = two_state();
        m.transition(1, 0, 1) = 0.4;
        const auto v = validate_model(m);
        REQUIRE(v.size() == 1);
        CHECK(v[0].state == 1);
        CHECK(v[0].action == 0);
        CHECK_THROWS_AS(require_valid(m), InvalidSpec);
    }

    SUBCASE("negative entries, non-finite rewards and shape mismatches") {
        auto m = two_state();
        m.transition(0, 0, 0) = 1.2;
        m.transition(0, 0, 1) = -0.2;
        m.reward(1, 0) = std::nan("");
        m.costs.push_back(Matrix::Zero(3, 1));
        const auto v = validate_model(m);
        CHECK(v.size() == 3);
    }

    SUBCASE("queue model is valid") { CHECK(validate_model(build_queue({})).empty()); }
}

TEST_CASE("policy_from_occupancy") {
    SUBCASE("direct normalization") {
        Matrix rho(2, 2);
        rho << 0.3, 0.1, 0.2, 0.4;
        const auto pi = policy_from_occupancy(OccupancyMeasure(rho));
        CHECK(pi(0, 0) == doctest::Approx(0.75));
        CHECK(pi(0, 1) == doctest::Approx(0.25));
        CHECK(pi(1, 0) == doctest::Approx(1.0 / 3.0));
        CHECK(pi(1, 1) == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("uniform rho gives uniform pi") {
        const auto pi = policy_from_occupancy(OccupancyMeasure(Matrix::Constant(3, 4, 1.0 / 12.0)));
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 4; ++a) CHECK(pi(s, a) == doctest::Approx(0.25));
    }
    SUBCASE("zero-mass state gets the uniform row") {
        Matrix rho(2, 3);
        rho << 0.5, 0.25, 0.25, 0.0, 0.0, 0.0;
        const auto pi = policy_from_occupancy(OccupancyMeasure(rho));
        for (int a = 0; a < 3; ++a) CHECK(pi(1, a) == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("rows always sum to one") {
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            Matrix rho(4, 3);
            for (Eigen::Index i = 0; i < rho.size(); ++i) rho.data()[i] = u(gen) < 0.3 ? 0.0 : u(gen);
            if (rho.sum() == 0.0) rho(0, 0) = 1.0;
            rho /= rho.sum();
            const auto pi = policy_from_occupancy(OccupancyMeasure(rho));
            for (int s = 0; s < 4; ++s) CHECK(pi.probs().row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("policy and occupancy constructors enforce their invariants") {
    Matrix bad(1, 2);
    bad << 0.6, 0.6;
    CHECK_THROWS_AS(StationaryPolicy{bad}, InvalidSpec);
    bad << 1.5, -0.5;
    CHECK_THROWS_AS(StationaryPolicy{bad}, InvalidSpec);

    Matrix rho(1, 2);
    rho << 1.0 + 5e-13, -5e-13;
    const OccupancyMeasure clamped(rho);
    CHECK(clamped(0, 1) == 0.0);
    rho << 0.5, 0.4;
    CHECK_THROWS_AS(OccupancyMeasure{rho}, InvalidSpec);
    rho << 1.1, -0.1;
    CHECK_THROWS_AS(OccupancyMeasure{rho}, InvalidSpec);
}

TEST_CASE("long_run_averages") {
    SUBCASE("single state, single action") {
        TabularCmdp m;
        m.n_states = 1;
        m.n_actions = 1;
        m.reward = Matrix::Constant(1, 1, 0.7);
        m.costs.push_back(Matrix::Constant(1, 1, -0.2));
        m.transition = TransitionKernel::uniform(1, 1);
        const auto avg = long_run_averages(StationaryPolicy::uniform(1, 1), m);
        CHECK(avg.lambda == doctest::Approx(0.7));
        REQUIRE(avg.zeta.size() == 1);
        CHECK(avg.zeta[0] == doctest::Approx(-0.2));
    }
    SUBCASE("two-state chain: lambda = 5/6") {
        const auto avg = long_run_averages(StationaryPolicy::uniform(2, 1), two_state());
        CHECK(avg.lambda == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    }
    SUBCASE("queue under the LP policy reproduces the LP optimum") {
        // 4.339684866251374 was obtained independently with HiGHS on a model
        // built directly from the transition table.
        const auto m = build_queue({});
        const auto sol = solve_true_model(m, 0.0);
        const auto avg = long_run_averages(sol.policy, m);
        CHECK(avg.lambda == doctest::Approx(4.339684866251374).epsilon(1e-9));
        CHECK(avg.lambda == doctest::Approx(oracle::average_of(m, sol.policy.probs(), m.reward)).epsilon(1e-10));
    }
    SUBCASE("reducible chain is rejected") {
        TabularCmdp m;
        m.n_states = 2;
        m.n_actions = 1;
        m.reward = Matrix::Zero(2, 1);
        m.transition = TransitionKernel(2, 1);
        m.transition(0, 0, 0) = 1.0;
        m.transition(1, 0, 1) = 1.0;
        CHECK_THROWS_AS(long_run_averages(StationaryPolicy::uniform(2, 1), m), NonErgodicChain);
    }
}

TEST_CASE("occupancy round trip through the induced policy") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = oracle::random_model(gen, 2 + trial % 3, 1 + trial % 3, 0);
        Matrix pi(m.n_states, m.n_actions);
        for (int s = 0; s < m.n_states; ++s) {
            for (int a = 0; a < m.n_actions; ++a) pi(s, a) = u(gen);
            pi.row(s) /= pi.row(s).sum();
        }
        // rho from the oracle's own stationary solve, satisfying the flow constraints.
        const Eigen::VectorXd mu = oracle::stationary_lsq(oracle::chain_of(m, pi));
        Matrix rho(m.n_states, m.n_actions);
        for (int s = 0; s < m.n_states; ++s)
            for (int a = 0; a < m.n_actions; ++a) rho(s, a) = mu(s) * pi(s, a);
        const OccupancyMeasure measure(rho / rho.sum());
        const auto again = occupancy_of(policy_from_occupancy(measure), m.transition);
        CHECK((again.values() - measure.values()).cwiseAbs().maxCoeff() <= tol::round_trip);
    }
}

TEST_CASE("objective spec and cost folding") {
    ObjectiveSpec spec;
    spec.reward_weight = 2.0;
    spec.lipschitz_L = 1.0;
    CHECK_THROWS_AS(spec.validate(), InvalidSpec);
    spec.lipschitz_L = 2.0;
    CHECK_NOTHROW(spec.validate());

    auto m = two_state();
    m.costs.push_back(Matrix::Constant(2, 1, 0.3));
    spec.cost_bounds = {0.5};
    const auto folded = fold_cost_bounds(m, spec);
    CHECK(folded.costs[0](0, 0) == doctest::Approx(-0.2));
    spec.cost_bounds = {0.5, 0.1};
    CHECK_THROWS_AS(fold_cost_bounds(m, spec), InvalidSpec);
}

TEST_CASE("model JSON round trip") {
    const auto m = build_queue({});
    const auto text = model_to_json(m);
    const auto back = model_from_json(text);
    CHECK(back.n_states == m.n_states);
    CHECK(back.n_actions == m.n_actions);
    CHECK(back.d() == m.d());
    CHECK(back.transition == m.transition);
    CHECK(back.reward == m.reward);
    for (int i = 0; i < m.d(); ++i) CHECK(back.costs[std::size_t(i)] == m.costs[std::size_t(i)]);

    const auto path = std::filesystem::temp_directory_path() / "cmdp_model_roundtrip.json";
    save_model(m, path);
    CHECK(load_model(path).transition == m.transition);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(model_from_json("{not json"), InvalidSpec);
    CHECK_THROWS_AS(model_from_json(R"({"n_states":1,"n_actions":1,"d":0,"reward":[[0]],"costs":[],"transition":[[[0.5]]]})"),
                    InvalidSpec);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
}
