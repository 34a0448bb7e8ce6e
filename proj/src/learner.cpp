#include "cmdp/learner.hpp"

#include "cmdp/errors.hpp"
#include "cmdp/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cmdp {

EmpiricalModel::EmpiricalModel(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions),
      visits_(std::size_t(n_states) * std::size_t(n_actions), 0),
      transitions_(std::size_t(n_states) * std::size_t(n_actions) * std::size_t(n_states), 0) {
    if (n_states < 1 || n_actions < 1) throw InvalidSpec("empirical model needs S, A >= 1");
}

void EmpiricalModel::record(int s, int a, int next) {
    if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_ || next < 0 || next >= n_states_)
        throw InvalidSpec("empirical model: index out of range");
    ++visits_[pair(s, a)];
    ++transitions_[pair(s, a) * std::size_t(n_states_) + std::size_t(next)];
    ++steps_;
}

TransitionKernel empirical_phat(const EmpiricalModel& em) {
    const int S = em.n_states(), A = em.n_actions();
    TransitionKernel p(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            const auto n = em.visits(s, a);
            for (int next = 0; next < S; ++next)
                p(s, a, next) = n == 0 ? 1.0 / S : double(em.transitions(s, a, next)) / double(n);
        }
    return p;
}

ConfidenceSet confidence_set(const EmpiricalModel& em, std::int64_t t) {
    ConfidenceSet conf{empirical_phat(em), Matrix(em.n_states(), em.n_actions())};
    for (int s = 0; s < em.n_states(); ++s)
        for (int a = 0; a < em.n_actions(); ++a)
            conf.radius(s, a) = radius(em.n_states(), em.n_actions(), t, em.visits(s, a));
    return conf;
}

void LearnerConfig::validate() const {
    if (T < 1) throw ConfigError("horizon T must be >= 1");
    if (!(K >= 0.0) || !std::isfinite(K)) throw ConfigError("K must be finite and >= 0");
    if (t_lower && !(*t_lower >= std::numbers::e)) throw ConfigError("t_lower must be >= e");
    if (epsilon_cap && !(*epsilon_cap >= 0.0)) throw ConfigError("epsilon_cap must be >= 0");
}

double epsilon_schedule(double K, std::int64_t t_e, std::optional<double> t_lower, std::optional<double> epsilon_cap) {
    if (t_e < 1) throw InvalidSpec("epsilon_schedule needs t_e >= 1");
    const double tau = std::max(double(t_e), t_lower.value_or(std::numbers::e));
    const double eps = K * std::sqrt(std::log(tau) / tau);
    return epsilon_cap ? std::min(*epsilon_cap, eps) : eps;
}

RunRecord run_learner(const TabularCmdp& model, const LearnerConfig& config, const LearnerHooks& hooks) {
    require_valid(model);
    config.validate();
    const int S = model.n_states, A = model.n_actions, d = model.d();
    if (config.initial_state < 0 || config.initial_state >= S) throw ConfigError("initial state out of range");

    Rng rng(config.seed);
    EmpiricalModel em(S, A);
    RunRecord record;
    record.d = d;
    record.steps.reserve(std::size_t(config.T));
    record.costs.reserve(std::size_t(config.T) * std::size_t(d));

    std::vector<std::int64_t> epoch_visits(std::size_t(S) * std::size_t(A), 0);
    std::vector<std::int64_t> visits_at_start(epoch_visits.size(), 0);
    int state = config.initial_state;
    std::int64_t t = 1;
    int epoch = 0;

    while (t <= config.T) {
        ++epoch;
        ConfidenceSet conf = confidence_set(em, t);
        if (hooks.fixed_estimate) conf.p_hat = *hooks.fixed_estimate;
        if (hooks.zero_radius) conf.radius.setZero();

        const double eps = epsilon_schedule(config.K, t, config.t_lower, config.epsilon_cap);
        SolveOptions options;
        if (hooks.on_program) options.on_program = [&](const lp::LinearProgram& p) { hooks.on_program(epoch, p); };
        const ConstrainedSolution sol = feasibility_ladder(
            [&](double e) { return solve_optimistic(model.reward, model.costs, conf, e, options); }, eps);
        record.epochs.push_back({epoch, t, eps, sol.epsilon_used, sol.lp_iterations, sol.objective_value});

        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const std::size_t k = std::size_t(s) * std::size_t(A) + std::size_t(a);
                visits_at_start[k] = em.visits(s, a);
                epoch_visits[k] = 0;
            }

        const Matrix& pi = sol.policy.probs();
        std::vector<double> action_probs(static_cast<std::size_t>(A));
        for (;;) {
            for (int a = 0; a < A; ++a) action_probs[std::size_t(a)] = pi(state, a);
            const int action = rng.categorical(action_probs);
            const int next = rng.categorical(model.transition.row(state, action));

            record.steps.push_back({t, state, action, model.reward(state, action), epoch});
            for (int i = 0; i < d; ++i) record.costs.push_back(model.costs[std::size_t(i)](state, action));
            em.record(state, action, next);
            const std::size_t k = std::size_t(state) * std::size_t(A) + std::size_t(action);
            ++epoch_visits[k];
            state = next;
            ++t;

            if (t > config.T) break;
            if (config.update_every_step) break;
            if (epoch_visits[k] >= std::max<std::int64_t>(1, visits_at_start[k])) break;
        }
    }
    return record;
}

} // namespace cmdp
