#pragma once

#include "cmdp/model.hpp"

#include <cstdint>

namespace cmdp {

/// Center and L1 radius of the transition confidence set for every (s,a).
struct ConfidenceSet {
    TransitionKernel p_hat;
    Matrix radius; // S x A, entries in [0, 2]

    void validate() const;
};

/// min(2, sqrt(14 S ln(2 A t) / max(1, N))), natural log.
double radius(int n_states, int n_actions, std::int64_t t, std::int64_t visits);

/// True iff ||p_hat(.|s,a) - p_true(.|s,a)||_1 <= radii(s,a) for every pair.
bool event_holds(const TransitionKernel& p_hat, const TransitionKernel& p_true, const Matrix& radii);

/// Largest L1 row gap between two kernels.
double max_l1_gap(const TransitionKernel& p, const TransitionKernel& q);

/// 3 c sqrt(n ln n), the expected-deviation bound for a martingale difference
/// sequence bounded by c.
double azuma_expectation_bound(double c, std::int64_t n);

} // namespace cmdp
