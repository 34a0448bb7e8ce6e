#pragma once

#include "cmdp/confidence.hpp"
#include "cmdp/model.hpp"
#include "cmdp/occupancy_opt.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace cmdp {

/// Visit and transition counts accumulated along one trajectory.
class EmpiricalModel {
public:
    EmpiricalModel(int n_states, int n_actions);

    void record(int s, int a, int next);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    std::int64_t visits(int s, int a) const { return visits_[pair(s, a)]; }
    std::int64_t transitions(int s, int a, int next) const {
        return transitions_[pair(s, a) * std::size_t(n_states_) + std::size_t(next)];
    }
    /// Number of recorded transitions; the next step to be taken is steps() + 1.
    std::int64_t steps() const { return steps_; }

private:
    std::size_t pair(int s, int a) const { return std::size_t(s) * std::size_t(n_actions_) + std::size_t(a); }

    int n_states_, n_actions_;
    std::vector<std::int64_t> visits_;
    std::vector<std::int64_t> transitions_;
    std::int64_t steps_ = 0;
};

/// N(s,a,s') / N(s,a), or the uniform row where (s,a) is unvisited.
TransitionKernel empirical_phat(const EmpiricalModel& em);

/// Center p_hat and radii evaluated at time t.
ConfidenceSet confidence_set(const EmpiricalModel& em, std::int64_t t);

struct LearnerConfig {
    double K = 0.0;
    std::int64_t T = 1;
    std::optional<double> t_lower;
    bool update_every_step = false;
    std::uint64_t seed = 0;
    std::optional<double> epsilon_cap;
    int initial_state = 0;

    void validate() const;
};

/// Test-only overrides of the learner's statistics.
struct LearnerHooks {
    /// Replaces p_hat at every epoch.
    std::optional<TransitionKernel> fixed_estimate;
    /// Forces every confidence radius to zero.
    bool zero_radius = false;
    /// Observes each assembled epoch program (epoch index, program).
    std::function<void(int, const lp::LinearProgram&)> on_program;
};

/// K sqrt(ln tau / tau) with tau = max(t_e, t_lower or e), clamped by cap.
double epsilon_schedule(double K, std::int64_t t_e, std::optional<double> t_lower,
                        std::optional<double> epsilon_cap = std::nullopt);

struct StepRecord {
    std::int64_t t = 0;
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int epoch = 0;
};

struct EpochRecord {
    int index = 0;
    std::int64_t t_start = 0;
    double epsilon = 0.0;
    double epsilon_used = 0.0;
    std::size_t lp_iterations = 0;
    double optimistic_value = 0.0;
};

/// Full trajectory of one run. Costs are stored flat: step k, constraint i at
/// costs[k * d + i].
struct RunRecord {
    int d = 0;
    std::vector<StepRecord> steps;
    std::vector<double> costs;
    std::vector<EpochRecord> epochs;

    double cost(std::size_t step, int i) const { return costs[step * std::size_t(d) + std::size_t(i)]; }
};

/// Runs the optimistic constrained learner for config.T steps. The learner
/// reads reward and cost tables; the true kernel is only used to sample next
/// states. Throws InfeasibleProgram when even epsilon = 0 is infeasible.
RunRecord run_learner(const TabularCmdp& model, const LearnerConfig& config, const LearnerHooks& hooks = {});

} // namespace cmdp
