#include "cmdp/simplex.hpp"

#include "cmdp/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace cmdp::lp {

void LinearProgram::add(std::span<const std::pair<std::size_t, double>> terms, Relation rel, double rhs) {
    std::vector<double> row(n_vars(), 0.0);
    for (auto [j, v] : terms) {
        if (j >= row.size()) throw MalformedProgram("constraint term index out of range");
        row[j] += v;
    }
    constraints.push_back({std::move(row), rel, rhs});
}

const char* to_string(Status s) {
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    }
    return "?";
}

namespace {

void validate(const LinearProgram& lp) {
    const std::size_t n = lp.n_vars();
    if (n == 0) throw MalformedProgram("program has no variables");
    for (double c : lp.objective)
        if (!std::isfinite(c)) throw MalformedProgram("objective coefficient is not finite");
    for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
        const auto& con = lp.constraints[i];
        if (con.row.size() != n)
            throw MalformedProgram("constraint " + std::to_string(i) + " has " + std::to_string(con.row.size()) +
                                   " coefficients, expected " + std::to_string(n));
        if (!std::isfinite(con.rhs)) throw MalformedProgram("constraint " + std::to_string(i) + " rhs is not finite");
        for (double v : con.row)
            if (!std::isfinite(v)) throw MalformedProgram("constraint " + std::to_string(i) + " has a non-finite coefficient");
    }
}

// Row-major dense tableau. Column order: structural variables, then one
// slack/surplus per inequality row, then artificials.
class Tableau {
public:
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<std::size_t> basis;
    std::vector<double> reduced; // c_j - c_B B^-1 A_j; positive means improving
    double value = 0.0;

    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    void pivot(std::size_t r, std::size_t e) {
        double* pr = row(r);
        const double inv = 1.0 / pr[e];
        nz_.clear();
        for (std::size_t j = 0; j < cols; ++j) {
            if (pr[j] != 0.0) {
                pr[j] *= inv;
                nz_.push_back(j);
            }
        }
        pr[e] = 1.0;
        b[r] *= inv;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r) continue;
            double* pi = row(i);
            const double f = pi[e];
            if (f == 0.0) continue;
            for (std::size_t j : nz_) pi[j] -= f * pr[j];
            pi[e] = 0.0;
            b[i] -= f * b[r];
        }
        const double f = reduced[e];
        if (f != 0.0) {
            for (std::size_t j : nz_) reduced[j] -= f * pr[j];
            reduced[e] = 0.0;
            value += f * b[r];
        }
        basis[r] = e;
    }

    void erase_row(std::size_t r) {
        a.erase(a.begin() + std::ptrdiff_t(r * cols), a.begin() + std::ptrdiff_t((r + 1) * cols));
        b.erase(b.begin() + std::ptrdiff_t(r));
        basis.erase(basis.begin() + std::ptrdiff_t(r));
        --rows;
    }

    void truncate_columns(std::size_t new_cols) {
        std::vector<double> na(rows * new_cols);
        for (std::size_t i = 0; i < rows; ++i)
            std::copy_n(row(i), new_cols, na.data() + i * new_cols);
        a = std::move(na);
        cols = new_cols;
        reduced.resize(new_cols);
    }

    void set_objective(const std::vector<double>& c) {
        reduced = c;
        value = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            const double cb = c[basis[i]];
            if (cb == 0.0) continue;
            const double* pi = row(i);
            for (std::size_t j = 0; j < cols; ++j) reduced[j] -= cb * pi[j];
            value += cb * b[i];
        }
        for (std::size_t i = 0; i < rows; ++i) reduced[basis[i]] = 0.0;
    }

private:
    std::vector<std::size_t> nz_;
};

enum class Outcome { Optimal, Unbounded };

class Iterator {
public:
    Iterator(Tableau& t, const SimplexOptions& opt, std::size_t n_structural, std::size_t limit,
             std::size_t& iterations)
        : t_(t), opt_(opt), n_structural_(n_structural), limit_(limit), iterations_(iterations) {}

    // Bland's rule under the fixed order: logical columns, then structural.
    // Lowest-ranked improving column enters; ratio ties leave by lowest rank.
    // Plain index order stalls for 1e5+ pivots on degenerate occupancy LPs.
    Outcome run() {
        for (;;) {
            std::size_t enter = t_.cols;
            for (std::size_t k = 0; k < t_.cols; ++k) {
                const std::size_t j = column_at(k);
                if (t_.reduced[j] > opt_.pivot_tolerance) {
                    enter = j;
                    break;
                }
            }
            if (enter == t_.cols) return Outcome::Optimal;

            std::size_t leave = t_.rows;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < t_.rows; ++i) {
                const double aie = t_.row(i)[enter];
                if (aie <= opt_.pivot_tolerance) continue;
                const double ratio = std::max(t_.b[i], 0.0) / aie;
                if (leave == t_.rows) {
                    best = ratio;
                    leave = i;
                    continue;
                }
                const double slack = 1e-12 * (1.0 + best);
                if (ratio < best - slack) {
                    best = ratio;
                    leave = i;
                } else if (ratio <= best + slack && rank(t_.basis[i]) < rank(t_.basis[leave])) {
                    best = std::min(best, ratio);
                    leave = i;
                }
            }
            if (leave == t_.rows) return Outcome::Unbounded;
            if (++iterations_ > limit_)
                throw IterationLimit("simplex exceeded " + std::to_string(limit_) + " iterations");
            t_.pivot(leave, enter);
        }
    }

private:
    std::size_t rank(std::size_t j) const { return j >= n_structural_ ? j - n_structural_ : j + (t_.cols - n_structural_); }
    std::size_t column_at(std::size_t k) const {
        const std::size_t n_logical = t_.cols - n_structural_;
        return k < n_logical ? k + n_structural_ : k - n_logical;
    }

    Tableau& t_;
    const SimplexOptions& opt_;
    std::size_t n_structural_;
    std::size_t limit_;
    std::size_t& iterations_;
};

// Re-solve B x_B = b on the standardized original rows to remove drift
// accumulated by tableau updates.
void refine(const std::vector<double>& a0, const std::vector<double>& b0, std::size_t cols0,
            const std::vector<std::size_t>& kept_rows, const std::vector<std::size_t>& basis,
            std::vector<double>& x_full) {
    const auto m = Eigen::Index(kept_rows.size());
    if (m == 0) return;
    Eigen::MatrixXd B(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const std::size_t r = kept_rows[std::size_t(i)];
        for (Eigen::Index k = 0; k < m; ++k) B(i, k) = a0[r * cols0 + basis[std::size_t(k)]];
        rhs(i) = b0[r];
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const Eigen::VectorXd xb = lu.solve(rhs);
    if (!xb.allFinite()) return;
    std::fill(x_full.begin(), x_full.end(), 0.0);
    for (Eigen::Index k = 0; k < m; ++k) x_full[basis[std::size_t(k)]] = xb(k);
}

} // namespace

Solution solve(const LinearProgram& lp, const SimplexOptions& options) {
    validate(lp);
    const std::size_t n = lp.n_vars();
    const std::size_t m = lp.constraints.size();
    const std::size_t limit = options.iteration_limit.value_or(50 * (n + m));

    // Standardize to nonnegative right-hand sides.
    std::vector<Relation> rel(m);
    std::vector<double> sign(m, 1.0);
    std::size_t n_slack = 0, n_art = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& con = lp.constraints[i];
        rel[i] = con.relation;
        if (con.rhs < 0.0) {
            sign[i] = -1.0;
            if (rel[i] == Relation::LE) rel[i] = Relation::GE;
            else if (rel[i] == Relation::GE) rel[i] = Relation::LE;
        }
        if (rel[i] != Relation::EQ) ++n_slack;
        if (rel[i] != Relation::LE) ++n_art;
    }

    const std::size_t first_slack = n;
    const std::size_t first_art = n + n_slack;
    Tableau t;
    t.rows = m;
    t.cols = first_art + n_art;
    t.a.assign(t.rows * t.cols, 0.0);
    t.b.resize(m);
    t.basis.resize(m);
    {
        std::size_t slack = first_slack, art = first_art;
        for (std::size_t i = 0; i < m; ++i) {
            double* r = t.row(i);
            const auto& con = lp.constraints[i];
            for (std::size_t j = 0; j < n; ++j) r[j] = sign[i] * con.row[j];
            t.b[i] = sign[i] * con.rhs;
            switch (rel[i]) {
            case Relation::LE:
                r[slack] = 1.0;
                t.basis[i] = slack++;
                break;
            case Relation::GE:
                r[slack++] = -1.0;
                r[art] = 1.0;
                t.basis[i] = art++;
                break;
            case Relation::EQ:
                r[art] = 1.0;
                t.basis[i] = art++;
                break;
            }
        }
    }

    // Keep the standardized rows (without artificials) for refinement.
    std::vector<double> a0(m * first_art);
    for (std::size_t i = 0; i < m; ++i) std::copy_n(t.row(i), first_art, a0.data() + i * first_art);
    const std::vector<double> b0 = t.b;
    std::vector<std::size_t> row_ids(m);
    for (std::size_t i = 0; i < m; ++i) row_ids[i] = i;

    Solution sol;
    std::size_t iterations = 0;

    if (n_art > 0) {
        std::vector<double> phase1(t.cols, 0.0);
        for (std::size_t j = first_art; j < t.cols; ++j) phase1[j] = -1.0;
        t.set_objective(phase1);
        Iterator(t, options, n, limit, iterations).run();

        double infeasibility = 0.0;
        for (std::size_t i = 0; i < t.rows; ++i)
            if (t.basis[i] >= first_art) infeasibility += std::max(t.b[i], 0.0);
        if (infeasibility > options.feasibility_tolerance) {
            sol.status = Status::Infeasible;
            sol.iterations = iterations;
            return sol;
        }

        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are linearly dependent and get dropped.
        for (std::size_t i = 0; i < t.rows;) {
            if (t.basis[i] < first_art) {
                ++i;
                continue;
            }
            t.b[i] = 0.0;
            const double* r = t.row(i);
            std::size_t j = 0;
            while (j < first_art && std::abs(r[j]) <= options.pivot_tolerance) ++j;
            if (j < first_art) {
                t.pivot(i, j);
                ++i;
            } else {
                t.erase_row(i);
                row_ids.erase(row_ids.begin() + std::ptrdiff_t(i));
            }
        }
        t.truncate_columns(first_art);
    }

    std::vector<double> phase2(t.cols, 0.0);
    std::copy(lp.objective.begin(), lp.objective.end(), phase2.begin());
    t.set_objective(phase2);
    if (Iterator(t, options, n, limit, iterations).run() == Outcome::Unbounded) {
        sol.status = Status::Unbounded;
        sol.iterations = iterations;
        return sol;
    }

    std::vector<double> x_full(t.cols, 0.0);
    for (std::size_t i = 0; i < t.rows; ++i) x_full[t.basis[i]] = t.b[i];
    std::vector<double> x(x_full.begin(), x_full.begin() + std::ptrdiff_t(n));
    if (check_solution(lp, x) > 1e-9) {
        refine(a0, b0, first_art, row_ids, t.basis, x_full);
        x.assign(x_full.begin(), x_full.begin() + std::ptrdiff_t(n));
    }
    for (double& v : x)
        if (v < 0.0 && v > -options.pivot_tolerance) v = 0.0;

    sol.status = Status::Optimal;
    sol.x = std::move(x);
    sol.objective_value = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.objective_value += lp.objective[j] * sol.x[j];
    sol.iterations = iterations;
    return sol;
}

double check_solution(const LinearProgram& lp, std::span<const double> x) {
    validate(lp);
    if (x.size() != lp.n_vars())
        throw MalformedProgram("point has " + std::to_string(x.size()) + " entries, expected " +
                               std::to_string(lp.n_vars()));
    double worst = -std::numeric_limits<double>::infinity();
    for (double v : x) worst = std::max(worst, -v);
    for (const auto& con : lp.constraints) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) lhs += con.row[j] * x[j];
        switch (con.relation) {
        case Relation::LE: worst = std::max(worst, lhs - con.rhs); break;
        case Relation::GE: worst = std::max(worst, con.rhs - lhs); break;
        case Relation::EQ: worst = std::max(worst, std::abs(lhs - con.rhs)); break;
        }
    }
    return worst;
}

void dump(const LinearProgram& lp, std::ostream& out) {
    const auto prec = out.precision(17);
    out << "maximize";
    for (std::size_t j = 0; j < lp.n_vars(); ++j)
        if (lp.objective[j] != 0.0) out << ' ' << (lp.objective[j] < 0 ? "- " : "+ ") << std::abs(lp.objective[j]) << " x" << j;
    out << "\nsubject to\n";
    for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
        const auto& con = lp.constraints[i];
        out << "c" << i << ':';
        for (std::size_t j = 0; j < con.row.size(); ++j)
            if (con.row[j] != 0.0) out << ' ' << (con.row[j] < 0 ? "- " : "+ ") << std::abs(con.row[j]) << " x" << j;
        out << (con.relation == Relation::LE ? " <= " : con.relation == Relation::GE ? " >= " : " = ") << con.rhs << '\n';
    }
    out << "bounds\n  x >= 0 (" << lp.n_vars() << " variables)\nend\n";
    out.precision(prec);
}

} // namespace cmdp::lp
