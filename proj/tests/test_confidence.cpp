#include "cmdp/confidence.hpp"
#include "cmdp/envs.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace cmdp;

TEST_CASE("radius closed form") {
    // sqrt(84 ln 32000 / 100) = 2.9519... is clipped.
    CHECK(radius(6, 16, 1000, 100) == 2.0);
    // sqrt(84 ln 3.2e6 / 1e4) = 0.354712215...
    CHECK(radius(6, 16, 100000, 10000) == doctest::Approx(0.354712215026869).epsilon(1e-12));
    CHECK(radius(6, 16, 100000, 0) == radius(6, 16, 100000, 1));
    CHECK(radius(1, 1, 1, 100) == doctest::Approx(0.311513411073091).epsilon(1e-12));
    CHECK_THROWS_AS(radius(0, 1, 1, 1), InvalidSpec);
    CHECK_THROWS_AS(radius(1, 1, 0, 1), InvalidSpec);
}

TEST_CASE("radius monotonicity") {
    for (std::int64_t n = 1; n < 100000; n *= 3) {
        CHECK(radius(6, 16, 100000, n + 1) <= radius(6, 16, 100000, n));
        CHECK(radius(6, 16, 100000, n) <= radius(6, 16, 200000, n));
        CHECK(radius(6, 16, 100000, n) <= radius(7, 16, 100000, n));
        CHECK(radius(6, 16, 100000, n) <= radius(6, 17, 100000, n));
        CHECK(radius(6, 16, 100000, n) <= 2.0);
    }
}

TEST_CASE("event_holds") {
    const auto k = build_queue({}).transition;
    CHECK(event_holds(k, k, Matrix::Zero(6, 16)));

    TransitionKernel far(1, 1);
    far(0, 0, 0) = 1.0;
    TransitionKernel one(2, 1), other(2, 1);
    one(0, 0, 0) = 1.0;
    one(1, 0, 0) = 1.0;
    other(0, 0, 1) = 1.0;
    other(1, 0, 0) = 1.0;
    // Row 0 has gap 2.
    CHECK(event_holds(one, other, Matrix::Constant(2, 1, 2.0)));
    CHECK_FALSE(event_holds(one, other, Matrix::Constant(2, 1, 1.9)));
    CHECK(max_l1_gap(one, other) == doctest::Approx(2.0));
    CHECK_THROWS_AS(event_holds(one, far, Matrix::Constant(2, 1, 2.0)), InvalidSpec);
}

TEST_CASE("azuma expectation bound") {
    CHECK(azuma_expectation_bound(0.0, 100) == 0.0);
    CHECK(azuma_expectation_bound(1.0, 100) == doctest::Approx(64.3789807886804).epsilon(1e-12));
    CHECK_THROWS_AS(azuma_expectation_bound(1.0, 1), InvalidSpec);
    CHECK_THROWS_AS(azuma_expectation_bound(-1.0, 10), InvalidSpec);
}

TEST_CASE("coin-flip martingale stays inside the azuma bound") {
    Rng rng(42);
    const int n = 400, trials = 10000;
    double total = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        int sum = 0;
        for (int i = 0; i < n; ++i) sum += rng.uniform() < 0.5 ? 1 : -1;
        total += std::abs(sum);
    }
    const double mean = total / trials;
    // sqrt(2n/pi) = 15.96 for the symmetric walk.
    CHECK(mean == doctest::Approx(std::sqrt(2.0 * n / M_PI)).epsilon(0.05));
    CHECK(mean <= azuma_expectation_bound(1.0, n));
}

TEST_CASE("multinomial coverage on the queue rows") {
    const auto P = build_queue({}).transition;
    const int S = P.n_states(), A = P.n_actions();
    Rng rng(7);
    const int trials = 1000, n = 100;
    const double r = radius(S, A, 10000, n);
    int failures = 0;
    for (int trial = 0; trial < trials; ++trial) {
        TransitionKernel hat(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                for (int k = 0; k < n; ++k) hat(s, a, rng.categorical(P.row(s, a))) += 1.0;
                for (auto& p : hat.row(s, a)) p /= n;
            }
        if (!event_holds(hat, P, Matrix::Constant(S, A, r))) ++failures;
    }
    CHECK(failures <= trials / 100);
}
