#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace cmdp::lp {

enum class Relation { LE, EQ, GE };

struct Constraint {
    std::vector<double> row;
    Relation relation = Relation::LE;
    double rhs = 0.0;
};

/// maximize objective . x  subject to constraints, x >= 0.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<Constraint> constraints;

    explicit LinearProgram(std::size_t n_vars = 0) : objective(n_vars, 0.0) {}

    std::size_t n_vars() const { return objective.size(); }

    /// Appends a row given as sparse (index, coefficient) terms.
    void add(std::span<const std::pair<std::size_t, double>> terms, Relation rel, double rhs);
    void add(std::vector<double> row, Relation rel, double rhs) {
        constraints.push_back({std::move(row), rel, rhs});
    }
};

enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status s);

struct Solution {
    Status status = Status::Infeasible;
    std::vector<double> x;          // empty unless Optimal
    double objective_value = 0.0;   // meaningful only if Optimal
    std::size_t iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-9;
    double feasibility_tolerance = 1e-7;
    /// Defaults to 50 * (n_vars + n_constraints).
    std::optional<std::size_t> iteration_limit;
};

/// Dense two-phase tableau simplex with Bland's rule. Throws MalformedProgram
/// on bad input and IterationLimit when the cap is hit.
Solution solve(const LinearProgram& lp, const SimplexOptions& options = {});

/// Largest signed violation over all rows and the bounds x >= 0; <= 0 iff x is
/// feasible.
double check_solution(const LinearProgram& lp, std::span<const double> x);

/// Human-readable dump, one constraint per line.
void dump(const LinearProgram& lp, std::ostream& out);

} // namespace cmdp::lp
