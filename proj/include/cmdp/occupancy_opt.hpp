#pragma once

#include "cmdp/confidence.hpp"
#include "cmdp/model.hpp"
#include "cmdp/simplex.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cmdp {

struct ConstrainedSolution {
    OccupancyMeasure rho;
    StationaryPolicy policy;
    double objective_value = 0.0; // sum rho * reward under the solved model
    double epsilon_used = 0.0;
    std::optional<TransitionKernel> implied_transition; // optimistic solves only
    std::size_t lp_iterations = 0;
};

struct SolveOptions {
    lp::SimplexOptions simplex;
    /// Called with every assembled program before it is solved.
    std::function<void(const lp::LinearProgram&)> on_program;
};

/// Occupancy LP on a known kernel: maximize sum rho r subject to the simplex,
/// flow conservation and sum rho c_i <= -epsilon.
lp::LinearProgram build_true_model_lp(const TabularCmdp& model, double epsilon);

/// Throws InfeasibleProgram when no occupancy measure meets the tightened costs.
ConstrainedSolution solve_true_model(const TabularCmdp& model, double epsilon, const SolveOptions& options = {});

/// Optimistic program over occupancy measures and transition kernels inside
/// the L1 confidence polytope. Pairs whose radius is 2 get unrestricted
/// next-state mass z(s,a,.); pairs with a smaller radius are written as
/// z = rho p_hat + u_plus - u_minus with sum(u_plus + u_minus) <= radius rho.
ConstrainedSolution solve_optimistic(const Matrix& reward, const std::vector<Matrix>& costs,
                                     const ConfidenceSet& conf, double epsilon,
                                     const SolveOptions& options = {});

/// Same program written with z(s,a,s') and explicit absolute-value slacks
/// w(s,a,s') for every triple. Much larger; kept as a cross-check.
ConstrainedSolution solve_optimistic_reference(const Matrix& reward, const std::vector<Matrix>& costs,
                                               const ConfidenceSet& conf, double epsilon,
                                               const SolveOptions& options = {});

using EpsilonSolver = std::function<ConstrainedSolution(double epsilon)>;

/// Tries epsilon_target, halving on InfeasibleProgram; once below 1e-9 tries
/// exactly 0 and rethrows if that fails too.
ConstrainedSolution feasibility_ladder(const EpsilonSolver& solve, double epsilon_target);

struct SlaterResult {
    double slack = 0.0;     // max over occupancy measures of min_i(-zeta_i)
    OccupancyMeasure rho;   // a maximizer
};

/// Largest uniform constraint margin achievable on the model (+inf when d == 0
/// is reported as slack = infinity with the reward-optimal rho).
SlaterResult slater_slack(const TabularCmdp& model);

} // namespace cmdp
