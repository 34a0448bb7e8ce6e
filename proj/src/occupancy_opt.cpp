#include "cmdp/occupancy_opt.hpp"

#include "cmdp/errors.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace cmdp {

using lp::Relation;
using Terms = std::vector<std::pair<std::size_t, double>>;

namespace {

void check_shapes(const Matrix& reward, const std::vector<Matrix>& costs, int S, int A) {
    if (reward.rows() != S || reward.cols() != A) throw InvalidSpec("reward table shape does not match the model");
    for (const auto& c : costs)
        if (c.rows() != S || c.cols() != A) throw InvalidSpec("cost table shape does not match the model");
}

void require_epsilon(double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidSpec("epsilon must be finite and >= 0");
}

lp::Solution run(const lp::LinearProgram& program, const SolveOptions& options, const char* what) {
    if (options.on_program) options.on_program(program);
    lp::Solution sol = lp::solve(program, options.simplex);
    if (sol.status == lp::Status::Infeasible) throw InfeasibleProgram(std::string(what) + " is infeasible");
    if (sol.status == lp::Status::Unbounded) throw Error(std::string(what) + " is unbounded");
    return sol;
}

// Clamps LP round-off and renormalizes so the table is a valid occupancy measure.
OccupancyMeasure clean_occupancy(Matrix rho) {
    for (Eigen::Index i = 0; i < rho.size(); ++i)
        if (rho.data()[i] < 0.0) rho.data()[i] = 0.0;
    const double total = rho.sum();
    if (!(total > 0.0)) throw Error("LP returned an empty occupancy measure");
    return OccupancyMeasure(rho / total);
}

ConstrainedSolution finish(Matrix rho_raw, const Matrix& reward, double epsilon, std::size_t iterations,
                           std::optional<TransitionKernel> implied) {
    OccupancyMeasure rho = clean_occupancy(std::move(rho_raw));
    StationaryPolicy policy = policy_from_occupancy(rho);
    const double value = rho.dot(reward);
    return ConstrainedSolution{std::move(rho), std::move(policy), value, epsilon, std::move(implied), iterations};
}

void normalize_rows(TransitionKernel& k) {
    for (int s = 0; s < k.n_states(); ++s)
        for (int a = 0; a < k.n_actions(); ++a) {
            auto row = k.row(s, a);
            double sum = 0.0;
            for (auto& p : row) sum += (p = std::max(p, 0.0));
            for (auto& p : row) p /= sum;
        }
}

} // namespace

lp::LinearProgram build_true_model_lp(const TabularCmdp& model, double epsilon) {
    require_epsilon(epsilon);
    const int S = model.n_states, A = model.n_actions;
    check_shapes(model.reward, model.costs, S, A);
    auto var = [A](int s, int a) { return std::size_t(s) * std::size_t(A) + std::size_t(a); };

    lp::LinearProgram program(std::size_t(S) * std::size_t(A));
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) program.objective[var(s, a)] = model.reward(s, a);

    program.add(std::vector<double>(program.n_vars(), 1.0), Relation::EQ, 1.0);
    for (int next = 0; next < S; ++next) {
        std::vector<double> row(program.n_vars(), 0.0);
        for (int a = 0; a < A; ++a) row[var(next, a)] += 1.0;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) row[var(s, a)] -= model.transition(s, a, next);
        program.add(std::move(row), Relation::EQ, 0.0);
    }
    for (const auto& c : model.costs) {
        std::vector<double> row(program.n_vars());
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) row[var(s, a)] = c(s, a);
        program.add(std::move(row), Relation::LE, -epsilon);
    }
    return program;
}

ConstrainedSolution solve_true_model(const TabularCmdp& model, double epsilon, const SolveOptions& options) {
    const auto program = build_true_model_lp(model, epsilon);
    const auto sol = run(program, options, "constrained occupancy program");
    Matrix rho(model.n_states, model.n_actions);
    for (int s = 0; s < model.n_states; ++s)
        for (int a = 0; a < model.n_actions; ++a) rho(s, a) = sol.x[std::size_t(s) * std::size_t(model.n_actions) + std::size_t(a)];
    return finish(std::move(rho), model.reward, epsilon, sol.iterations, std::nullopt);
}

namespace {

// Variable layout of the compact optimistic program for one (s,a) pair.
struct PairBlock {
    enum class Kind { Free, Ball, Fixed } kind = Kind::Free;
    std::size_t rho = 0;        // Ball / Fixed
    std::size_t z = 0;          // Free: first of S next-state masses
    std::size_t u_plus = 0;     // Ball: first of S
    std::vector<std::pair<int, std::size_t>> u_minus; // Ball: (next state, index) on the support of p_hat
};

class OptimisticProgram {
public:
    OptimisticProgram(const Matrix& reward, const std::vector<Matrix>& costs, const ConfidenceSet& conf, double epsilon)
        : S_(conf.p_hat.n_states()), A_(conf.p_hat.n_actions()), conf_(conf) {
        std::size_t n = 0;
        blocks_.resize(std::size_t(S_) * std::size_t(A_));
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) {
                auto& blk = block(s, a);
                const double beta = conf.radius(s, a);
                if (beta >= 2.0) {
                    blk.kind = PairBlock::Kind::Free;
                    blk.z = n;
                    n += std::size_t(S_);
                } else if (beta <= 0.0) {
                    blk.kind = PairBlock::Kind::Fixed;
                    blk.rho = n++;
                } else {
                    blk.kind = PairBlock::Kind::Ball;
                    blk.rho = n++;
                    blk.u_plus = n;
                    n += std::size_t(S_);
                    auto row = conf.p_hat.row(s, a);
                    for (int next = 0; next < S_; ++next)
                        if (row[std::size_t(next)] > 0.0) blk.u_minus.emplace_back(next, n++);
                }
            }

        program_ = lp::LinearProgram(n);
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a)
                for (auto [j, w] : rho_terms(s, a)) program_.objective[j] += w * reward(s, a);

        Terms all;
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) append(all, rho_terms(s, a), 1.0);
        program_.add(all, Relation::EQ, 1.0);

        for (int next = 0; next < S_; ++next) {
            Terms flow;
            for (int a = 0; a < A_; ++a) append(flow, rho_terms(next, a), 1.0);
            for (int s = 0; s < S_; ++s)
                for (int a = 0; a < A_; ++a) append(flow, z_terms(s, a, next), -1.0);
            program_.add(flow, Relation::EQ, 0.0);
        }

        for (const auto& c : costs) {
            Terms row;
            for (int s = 0; s < S_; ++s)
                for (int a = 0; a < A_; ++a) append(row, rho_terms(s, a), c(s, a));
            program_.add(row, Relation::LE, -epsilon);
        }

        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) {
                const auto& blk = block(s, a);
                if (blk.kind != PairBlock::Kind::Ball) continue;
                Terms balance, budget;
                for (int next = 0; next < S_; ++next) {
                    balance.emplace_back(blk.u_plus + std::size_t(next), 1.0);
                    budget.emplace_back(blk.u_plus + std::size_t(next), 1.0);
                }
                for (auto [next, j] : blk.u_minus) {
                    balance.emplace_back(j, -1.0);
                    budget.emplace_back(j, 1.0);
                    const Terms cap{{j, 1.0}, {blk.rho, -conf.p_hat(s, a, next)}};
                    program_.add(cap, Relation::LE, 0.0);
                }
                budget.emplace_back(blk.rho, -conf.radius(s, a));
                program_.add(balance, Relation::EQ, 0.0);
                program_.add(budget, Relation::LE, 0.0);
            }
    }

    const lp::LinearProgram& program() const { return program_; }

    double rho_value(const std::vector<double>& x, int s, int a) const {
        double v = 0.0;
        for (auto [j, w] : rho_terms(s, a)) v += w * x[j];
        return v;
    }

    double z_value(const std::vector<double>& x, int s, int a, int next) const {
        double v = 0.0;
        for (auto [j, w] : z_terms(s, a, next)) v += w * x[j];
        return v;
    }

private:
    PairBlock& block(int s, int a) { return blocks_[std::size_t(s) * std::size_t(A_) + std::size_t(a)]; }
    const PairBlock& block(int s, int a) const { return blocks_[std::size_t(s) * std::size_t(A_) + std::size_t(a)]; }

    static void append(Terms& out, const Terms& in, double scale) {
        for (auto [j, w] : in) out.emplace_back(j, scale * w);
    }

    Terms rho_terms(int s, int a) const {
        const auto& blk = block(s, a);
        Terms t;
        if (blk.kind == PairBlock::Kind::Free) {
            for (int next = 0; next < S_; ++next) t.emplace_back(blk.z + std::size_t(next), 1.0);
        } else {
            t.emplace_back(blk.rho, 1.0);
        }
        return t;
    }

    Terms z_terms(int s, int a, int next) const {
        const auto& blk = block(s, a);
        Terms t;
        switch (blk.kind) {
        case PairBlock::Kind::Free:
            t.emplace_back(blk.z + std::size_t(next), 1.0);
            break;
        case PairBlock::Kind::Fixed:
            if (conf_.p_hat(s, a, next) != 0.0) t.emplace_back(blk.rho, conf_.p_hat(s, a, next));
            break;
        case PairBlock::Kind::Ball:
            if (conf_.p_hat(s, a, next) != 0.0) t.emplace_back(blk.rho, conf_.p_hat(s, a, next));
            t.emplace_back(blk.u_plus + std::size_t(next), 1.0);
            for (auto [n, j] : blk.u_minus)
                if (n == next) t.emplace_back(j, -1.0);
            break;
        }
        return t;
    }

    int S_, A_;
    const ConfidenceSet& conf_;
    std::vector<PairBlock> blocks_;
    lp::LinearProgram program_;
};

} // namespace

ConstrainedSolution solve_optimistic(const Matrix& reward, const std::vector<Matrix>& costs, const ConfidenceSet& conf,
                                     double epsilon, const SolveOptions& options) {
    require_epsilon(epsilon);
    conf.validate();
    const int S = conf.p_hat.n_states(), A = conf.p_hat.n_actions();
    check_shapes(reward, costs, S, A);

    const OptimisticProgram builder(reward, costs, conf, epsilon);
    const auto sol = run(builder.program(), options, "optimistic occupancy program");

    Matrix rho(S, A);
    TransitionKernel implied(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            const double r = builder.rho_value(sol.x, s, a);
            rho(s, a) = r;
            auto row = implied.row(s, a);
            if (r > 1e-10) {
                for (int next = 0; next < S; ++next) row[std::size_t(next)] = builder.z_value(sol.x, s, a, next) / r;
            } else {
                auto center = conf.p_hat.row(s, a);
                std::copy(center.begin(), center.end(), row.begin());
            }
        }
    normalize_rows(implied);
    return finish(std::move(rho), reward, epsilon, sol.iterations, std::move(implied));
}

ConstrainedSolution solve_optimistic_reference(const Matrix& reward, const std::vector<Matrix>& costs,
                                               const ConfidenceSet& conf, double epsilon, const SolveOptions& options) {
    require_epsilon(epsilon);
    conf.validate();
    const int S = conf.p_hat.n_states(), A = conf.p_hat.n_actions();
    check_shapes(reward, costs, S, A);
    const std::size_t triples = std::size_t(S) * std::size_t(A) * std::size_t(S);
    auto z = [&](int s, int a, int next) {
        return (std::size_t(s) * std::size_t(A) + std::size_t(a)) * std::size_t(S) + std::size_t(next);
    };
    auto w = [&](int s, int a, int next) { return triples + z(s, a, next); };
    auto rho_terms = [&](int s, int a, double scale) {
        Terms t;
        for (int next = 0; next < S; ++next) t.emplace_back(z(s, a, next), scale);
        return t;
    };

    lp::LinearProgram program(2 * triples);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int next = 0; next < S; ++next) program.objective[z(s, a, next)] = reward(s, a);

    Terms all;
    for (std::size_t j = 0; j < triples; ++j) all.emplace_back(j, 1.0);
    program.add(all, Relation::EQ, 1.0);
    for (int next = 0; next < S; ++next) {
        Terms flow;
        for (int a = 0; a < A; ++a)
            for (auto t : rho_terms(next, a, 1.0)) flow.push_back(t);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) flow.emplace_back(z(s, a, next), -1.0);
        program.add(flow, Relation::EQ, 0.0);
    }
    for (const auto& c : costs) {
        Terms row;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                for (auto t : rho_terms(s, a, c(s, a))) row.push_back(t);
        program.add(row, Relation::LE, -epsilon);
    }
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            for (int next = 0; next < S; ++next) {
                // w >= z - rho p_hat and w >= rho p_hat - z
                Terms upper = rho_terms(s, a, -conf.p_hat(s, a, next));
                upper.emplace_back(z(s, a, next), 1.0);
                upper.emplace_back(w(s, a, next), -1.0);
                program.add(upper, Relation::LE, 0.0);
                Terms lower = rho_terms(s, a, conf.p_hat(s, a, next));
                lower.emplace_back(z(s, a, next), -1.0);
                lower.emplace_back(w(s, a, next), -1.0);
                program.add(lower, Relation::LE, 0.0);
            }
            Terms budget = rho_terms(s, a, -conf.radius(s, a));
            for (int next = 0; next < S; ++next) budget.emplace_back(w(s, a, next), 1.0);
            program.add(budget, Relation::LE, 0.0);
        }

    const auto sol = run(program, options, "optimistic occupancy program (reference form)");
    Matrix rho(S, A);
    TransitionKernel implied(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            double r = 0.0;
            for (int next = 0; next < S; ++next) r += sol.x[z(s, a, next)];
            rho(s, a) = r;
            auto row = implied.row(s, a);
            for (int next = 0; next < S; ++next)
                row[std::size_t(next)] = r > 1e-10 ? sol.x[z(s, a, next)] / r : conf.p_hat(s, a, next);
        }
    normalize_rows(implied);
    return finish(std::move(rho), reward, epsilon, sol.iterations, std::move(implied));
}

ConstrainedSolution feasibility_ladder(const EpsilonSolver& solve, double epsilon_target) {
    require_epsilon(epsilon_target);
    double eps = epsilon_target;
    for (;;) {
        try {
            return solve(eps);
        } catch (const InfeasibleProgram&) {
            if (eps == 0.0) throw;
            eps *= 0.5;
            if (eps < 1e-9) eps = 0.0;
        }
    }
}

SlaterResult slater_slack(const TabularCmdp& model) {
    if (model.d() == 0) {
        auto sol = solve_true_model(model, 0.0);
        return SlaterResult{std::numeric_limits<double>::infinity(), std::move(sol.rho)};
    }
    // Variables: rho(s,a) then margin m >= 0; maximize m s.t. sum rho c_i + m <= 0.
    lp::LinearProgram base = build_true_model_lp(model, 0.0);
    const std::size_t n = base.n_vars();
    lp::LinearProgram program(n + 1);
    program.objective[n] = 1.0;
    for (auto& con : base.constraints) {
        con.row.push_back(0.0);
        program.constraints.push_back(std::move(con));
    }
    const std::size_t first_cost = program.constraints.size() - std::size_t(model.d());
    for (std::size_t i = first_cost; i < program.constraints.size(); ++i) program.constraints[i].row[n] = 1.0;

    const auto sol = lp::solve(program);
    if (sol.status != lp::Status::Optimal) throw InfeasibleProgram("model has no feasible policy");
    Matrix rho(model.n_states, model.n_actions);
    for (int s = 0; s < model.n_states; ++s)
        for (int a = 0; a < model.n_actions; ++a) rho(s, a) = sol.x[std::size_t(s) * std::size_t(model.n_actions) + std::size_t(a)];
    return SlaterResult{sol.x[n], clean_occupancy(std::move(rho))};
}

} // namespace cmdp
