#include "cmdp/model.hpp"

#include "cmdp/analysis.hpp"
#include "cmdp/errors.hpp"

#include <cmath>
#include <sstream>

namespace cmdp {

TransitionKernel::TransitionKernel(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions),
      p_(std::size_t(n_states) * std::size_t(n_actions) * std::size_t(n_states), 0.0) {
    if (n_states < 1 || n_actions < 1) throw InvalidSpec("transition kernel needs S >= 1 and A >= 1");
}

TransitionKernel TransitionKernel::uniform(int n_states, int n_actions) {
    TransitionKernel k(n_states, n_actions);
    std::fill(k.p_.begin(), k.p_.end(), 1.0 / n_states);
    return k;
}

std::vector<ModelViolation> validate_model(const TabularCmdp& m) {
    std::vector<ModelViolation> out;
    if (m.n_states < 1 || m.n_actions < 1) {
        out.push_back({"model needs at least one state and one action"});
        return out;
    }
    auto check_table = [&](const Matrix& t, const std::string& name) {
        if (t.rows() != m.n_states || t.cols() != m.n_actions) {
            out.push_back({name + " table has wrong dimensions"});
            return;
        }
        for (int s = 0; s < m.n_states; ++s)
            for (int a = 0; a < m.n_actions; ++a)
                if (!std::isfinite(t(s, a))) out.push_back({name + " entry is not finite", s, a});
    };
    check_table(m.reward, "reward");
    for (int i = 0; i < m.d(); ++i) check_table(m.costs[std::size_t(i)], "cost " + std::to_string(i + 1));

    const auto& P = m.transition;
    if (P.n_states() != m.n_states || P.n_actions() != m.n_actions) {
        out.push_back({"transition kernel has wrong dimensions"});
        return out;
    }
    for (int s = 0; s < m.n_states; ++s) {
        for (int a = 0; a < m.n_actions; ++a) {
            double sum = 0.0;
            bool bad_entry = false;
            for (double p : P.row(s, a)) {
                if (!std::isfinite(p) || p < 0.0) bad_entry = true;
                sum += p;
            }
            if (bad_entry) out.push_back({"transition row has a negative or non-finite entry", s, a});
            if (std::abs(sum - 1.0) > tol::structural) {
                std::ostringstream msg;
                msg << "transition row sums to " << sum;
                out.push_back({msg.str(), s, a});
            }
        }
    }
    return out;
}

void require_valid(const TabularCmdp& model) {
    auto v = validate_model(model);
    if (v.empty()) return;
    std::ostringstream msg;
    msg << "invalid model (" << v.size() << " violations)";
    for (std::size_t i = 0; i < v.size() && i < 3; ++i) {
        msg << "; " << v[i].what;
        if (v[i].state >= 0) msg << " at (s=" << v[i].state << ", a=" << v[i].action << ")";
    }
    throw InvalidSpec(msg.str());
}

void ObjectiveSpec::validate() const {
    if (!std::isfinite(reward_weight) || !std::isfinite(lipschitz_L))
        throw InvalidSpec("objective parameters must be finite");
    if (lipschitz_L < std::abs(reward_weight))
        throw InvalidSpec("lipschitz_L must be at least |reward_weight|");
    for (double b : cost_bounds)
        if (!std::isfinite(b)) throw InvalidSpec("cost bounds must be finite");
}

TabularCmdp fold_cost_bounds(TabularCmdp model, const ObjectiveSpec& spec) {
    spec.validate();
    if (!spec.cost_bounds.empty() && int(spec.cost_bounds.size()) != model.d())
        throw InvalidSpec("cost_bounds must have one entry per cost table");
    for (std::size_t i = 0; i < spec.cost_bounds.size(); ++i)
        model.costs[i].array() -= spec.cost_bounds[i];
    return model;
}

StationaryPolicy::StationaryPolicy(Matrix probs) : pi_(std::move(probs)) {
    if (pi_.rows() < 1 || pi_.cols() < 1) throw InvalidSpec("policy table is empty");
    for (Eigen::Index s = 0; s < pi_.rows(); ++s) {
        if ((pi_.row(s).array() < 0.0).any() || !pi_.row(s).allFinite())
            throw InvalidSpec("policy row " + std::to_string(s) + " has a negative entry");
        if (std::abs(pi_.row(s).sum() - 1.0) > tol::structural)
            throw InvalidSpec("policy row " + std::to_string(s) + " does not sum to 1");
    }
}

StationaryPolicy StationaryPolicy::uniform(int n_states, int n_actions) {
    return StationaryPolicy(Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

OccupancyMeasure::OccupancyMeasure(Matrix rho) : rho_(std::move(rho)) {
    if (rho_.size() == 0) throw InvalidSpec("occupancy table is empty");
    for (Eigen::Index i = 0; i < rho_.size(); ++i) {
        double& v = rho_.data()[i];
        if (!std::isfinite(v) || v < -tol::structural)
            throw InvalidSpec("occupancy measure has a negative entry");
        if (v < 0.0) v = 0.0;
    }
    if (std::abs(rho_.sum() - 1.0) > tol::distribution)
        throw InvalidSpec("occupancy measure does not sum to 1");
}

StationaryPolicy policy_from_occupancy(const OccupancyMeasure& rho) {
    const auto& r = rho.values();
    Matrix pi(r.rows(), r.cols());
    for (Eigen::Index s = 0; s < r.rows(); ++s) {
        const double mass = r.row(s).sum();
        if (mass > tol::structural)
            pi.row(s) = r.row(s) / mass;
        else
            pi.row(s).setConstant(1.0 / double(r.cols()));
    }
    return StationaryPolicy(std::move(pi));
}

Matrix induced_chain(const StationaryPolicy& policy, const TransitionKernel& kernel) {
    const int S = kernel.n_states();
    Matrix chain = Matrix::Zero(S, S);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < kernel.n_actions(); ++a) {
            const double w = policy(s, a);
            if (w == 0.0) continue;
            auto row = kernel.row(s, a);
            for (int n = 0; n < S; ++n) chain(s, n) += w * row[std::size_t(n)];
        }
    return chain;
}

Vector induced_reward(const StationaryPolicy& policy, const Matrix& table) {
    return policy.probs().cwiseProduct(table).rowwise().sum();
}

OccupancyMeasure occupancy_of(const StationaryPolicy& policy, const TransitionKernel& kernel) {
    const Vector mu = stationary_distribution(induced_chain(policy, kernel));
    Matrix rho = policy.probs();
    for (Eigen::Index s = 0; s < rho.rows(); ++s) rho.row(s) *= mu(s);
    return OccupancyMeasure(std::move(rho));
}

LongRunAverages long_run_averages(const StationaryPolicy& policy, const TabularCmdp& model) {
    const OccupancyMeasure rho = occupancy_of(policy, model.transition);
    LongRunAverages out;
    out.lambda = rho.dot(model.reward);
    for (const auto& c : model.costs) out.zeta.push_back(rho.dot(c));
    return out;
}

} // namespace cmdp
