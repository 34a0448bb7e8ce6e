#pragma once

#include "cmdp/model.hpp"

namespace cmdp {

/// True iff every state reaches every other state through entries > 0.
bool is_irreducible(const Matrix& chain);

/// Stationary distribution of an irreducible row-stochastic matrix, by a direct
/// solve of mu (P - I) = 0 with one balance equation replaced by sum(mu) = 1.
/// Throws NonErgodicChain if the chain is reducible or the solve is singular.
Vector stationary_distribution(const Matrix& chain);

struct GainBias {
    double gain = 0.0;
    Vector bias;            // bias(reference_state) == 0
    int reference_state = 0;
};

/// Average reward and bias of `policy` on kernel `kernel` with reward table
/// `reward`. The bias is pinned at state 0.
GainBias gain_bias(const StationaryPolicy& policy, const TransitionKernel& kernel, const Matrix& reward);

/// Residual max_s |r_pi - gain + P_pi h - h|.
double bellman_consistency_residual(const GainBias& gb, const StationaryPolicy& policy,
                                    const TransitionKernel& kernel, const Matrix& reward);

/// B(s,a) = sum_s' (P_tilde - P_true)(s'|s,a) h_tilde(s'), where h_tilde is
/// the bias of `policy` under P_tilde.
Matrix bellman_error(const StationaryPolicy& policy, const TransitionKernel& p_tilde,
                     const TransitionKernel& p_true, const Matrix& reward);

/// Same as bellman_error but with a caller-supplied bias vector.
Matrix bellman_error_with_bias(const Vector& bias, const TransitionKernel& p_tilde,
                               const TransitionKernel& p_true);

/// |(gain under P_tilde - gain under P_true) - sum rho_true * B|.
double verify_bellman_identity(const StationaryPolicy& policy, const TransitionKernel& p_tilde,
                               const TransitionKernel& p_true, const Matrix& reward);

/// Expected number of steps to hit `target` from `source` under `policy`.
double hitting_time(const StationaryPolicy& policy, const TransitionKernel& kernel, int source,
                    int target);

/// Largest expected hitting time over all ordered state pairs for one policy.
double max_hitting_time(const StationaryPolicy& policy, const TransitionKernel& kernel);

/// (1 - eps/delta) rho_star + (eps/delta) rho_slater. Requires 0 <= eps <= delta.
OccupancyMeasure mixture_occupancy(const OccupancyMeasure& rho_star, const OccupancyMeasure& rho_slater,
                                   double eps, double delta);

/// Max over s' of |sum_a rho(s',a) - sum_{s,a} P(s'|s,a) rho(s,a)|.
double flow_residual(const OccupancyMeasure& rho, const TransitionKernel& kernel);

} // namespace cmdp
