#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace cmdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {
inline constexpr double structural = 1e-12;
inline constexpr double distribution = 1e-9;
inline constexpr double round_trip = 1e-7;
} // namespace tol

/// Dense transition table P(s'|s,a), stored row-major over (s, a, s').
class TransitionKernel {
public:
    TransitionKernel() = default;
    TransitionKernel(int n_states, int n_actions);

    static TransitionKernel uniform(int n_states, int n_actions);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    double& operator()(int s, int a, int next) { return p_[index(s, a) + next]; }
    double operator()(int s, int a, int next) const { return p_[index(s, a) + next]; }

    std::span<double> row(int s, int a) { return {p_.data() + index(s, a), std::size_t(n_states_)}; }
    std::span<const double> row(int s, int a) const {
        return {p_.data() + index(s, a), std::size_t(n_states_)};
    }
    std::span<const double> data() const { return p_; }

    bool operator==(const TransitionKernel&) const = default;

private:
    std::size_t index(int s, int a) const {
        return (std::size_t(s) * std::size_t(n_actions_) + std::size_t(a)) * std::size_t(n_states_);
    }

    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<double> p_;
};

/// A complete tabular constrained MDP. A policy is feasible iff the long-run
/// average of every cost table is <= 0.
struct TabularCmdp {
    int n_states = 0;
    int n_actions = 0;
    Matrix reward;             // S x A
    std::vector<Matrix> costs; // d tables, each S x A
    TransitionKernel transition;

    int d() const { return int(costs.size()); }
};

struct ModelViolation {
    std::string what;
    int state = -1;
    int action = -1;
};

/// Every invariant breach of the model; empty iff well-formed.
std::vector<ModelViolation> validate_model(const TabularCmdp& model);

/// Throws InvalidSpec listing the first few violations.
void require_valid(const TabularCmdp& model);

/// Affine objective and constraint maps: f(x) = reward_weight * x and
/// g_i(y) = y_i - cost_bounds[i].
struct ObjectiveSpec {
    double reward_weight = 1.0;
    std::vector<double> cost_bounds;
    double lipschitz_L = 1.0;

    void validate() const;
};

/// Returns a copy of `model` with cost_bounds folded into the cost tables so
/// feasibility becomes "average cost <= 0".
TabularCmdp fold_cost_bounds(TabularCmdp model, const ObjectiveSpec& spec);

class StationaryPolicy {
public:
    explicit StationaryPolicy(Matrix probs);

    static StationaryPolicy uniform(int n_states, int n_actions);

    int n_states() const { return int(pi_.rows()); }
    int n_actions() const { return int(pi_.cols()); }
    double operator()(int s, int a) const { return pi_(s, a); }
    const Matrix& probs() const { return pi_; }

private:
    Matrix pi_;
};

/// Distribution over state-action pairs. Entries within 1e-12 below zero are
/// clamped on construction.
class OccupancyMeasure {
public:
    explicit OccupancyMeasure(Matrix rho);

    int n_states() const { return int(rho_.rows()); }
    int n_actions() const { return int(rho_.cols()); }
    double operator()(int s, int a) const { return rho_(s, a); }
    const Matrix& values() const { return rho_; }

    /// Sum over (s,a) of rho * table.
    double dot(const Matrix& table) const { return rho_.cwiseProduct(table).sum(); }

private:
    Matrix rho_;
};

StationaryPolicy policy_from_occupancy(const OccupancyMeasure& rho);

/// P_pi(s'|s) = sum_a pi(a|s) P(s'|s,a).
Matrix induced_chain(const StationaryPolicy& policy, const TransitionKernel& kernel);

/// r_pi(s) = sum_a pi(a|s) r(s,a).
Vector induced_reward(const StationaryPolicy& policy, const Matrix& table);

/// rho(s,a) = mu(s) pi(a|s) with mu the stationary distribution of P_pi.
OccupancyMeasure occupancy_of(const StationaryPolicy& policy, const TransitionKernel& kernel);

struct LongRunAverages {
    double lambda = 0.0;
    std::vector<double> zeta;
};

LongRunAverages long_run_averages(const StationaryPolicy& policy, const TabularCmdp& model);

} // namespace cmdp
