#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's solvers; only plain data types are shared.

#include "cmdp/model.hpp"
#include "cmdp/simplex.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

struct VertexResult {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<double> x;
};

// Maximizes c.x over {x >= 0, rows} by trying every basic solution: choose n
// tight constraints among the m rows and n bounds, solve, keep feasible ones.
// Returns nullopt when no vertex is feasible. Only for n, m <= ~8 and bounded
// feasible sets.
inline std::optional<VertexResult> enumerate_vertices(const cmdp::lp::LinearProgram& lp, double tol = 1e-9) {
    const int n = int(lp.n_vars());
    const int m = int(lp.constraints.size());
    const int total = m + n;
    Eigen::MatrixXd all(total, n);
    Eigen::VectorXd rhs(total);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) all(i, j) = lp.constraints[std::size_t(i)].row[std::size_t(j)];
        rhs(i) = lp.constraints[std::size_t(i)].rhs;
    }
    for (int j = 0; j < n; ++j) {
        all.row(m + j).setZero();
        all(m + j, j) = 1.0;
        rhs(m + j) = 0.0;
    }
    auto feasible = [&](const Eigen::VectorXd& x) {
        for (int j = 0; j < n; ++j)
            if (x(j) < -tol) return false;
        for (int i = 0; i < m; ++i) {
            const auto& con = lp.constraints[std::size_t(i)];
            const double lhs = all.row(i).dot(x);
            const double scale = 1.0 + std::abs(con.rhs);
            switch (con.relation) {
            case cmdp::lp::Relation::LE: if (lhs > con.rhs + tol * scale) return false; break;
            case cmdp::lp::Relation::GE: if (lhs < con.rhs - tol * scale) return false; break;
            case cmdp::lp::Relation::EQ: if (std::abs(lhs - con.rhs) > tol * scale) return false; break;
            }
        }
        return true;
    };

    std::optional<VertexResult> best;
    std::vector<int> pick(static_cast<std::size_t>(n));
    // Iterate over all n-subsets of {0..total-1} in lexicographic order.
    for (int i = 0; i < n; ++i) pick[std::size_t(i)] = i;
    if (n > total) return best;
    for (;;) {
        Eigen::MatrixXd M(n, n);
        Eigen::VectorXd b(n);
        for (int k = 0; k < n; ++k) {
            M.row(k) = all.row(pick[std::size_t(k)]);
            b(k) = rhs(pick[std::size_t(k)]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (lu.isInvertible()) {
            const Eigen::VectorXd x = lu.solve(b);
            if (feasible(x)) {
                double v = 0.0;
                for (int j = 0; j < n; ++j) v += lp.objective[std::size_t(j)] * x(j);
                if (!best || v > best->value) best = VertexResult{v, std::vector<double>(x.data(), x.data() + n)};
            }
        }
        int k = n - 1;
        while (k >= 0 && pick[std::size_t(k)] == total - n + k) --k;
        if (k < 0) break;
        ++pick[std::size_t(k)];
        for (int j = k + 1; j < n; ++j) pick[std::size_t(j)] = pick[std::size_t(j - 1)] + 1;
    }
    return best;
}

// Stationary distribution by least squares on [P^T - I; 1^T] mu = [0; 1]
// (Householder QR), a different route from the library's row-replacement LU.
inline Eigen::VectorXd stationary_lsq(const Eigen::MatrixXd& P) {
    const auto S = P.rows();
    Eigen::MatrixXd M(S + 1, S);
    M.topRows(S) = P.transpose() - Eigen::MatrixXd::Identity(S, S);
    M.row(S).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(S + 1);
    b(S) = 1.0;
    return M.householderQr().solve(b);
}

inline Eigen::MatrixXd chain_of(const cmdp::TabularCmdp& model, const Eigen::MatrixXd& pi) {
    const int S = model.n_states, A = model.n_actions;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int n = 0; n < S; ++n) P(s, n) += pi(s, a) * model.transition(s, a, n);
    return P;
}

// Long-run average of `table` under policy matrix pi.
inline double average_of(const cmdp::TabularCmdp& model, const Eigen::MatrixXd& pi, const Eigen::MatrixXd& table) {
    const Eigen::VectorXd mu = stationary_lsq(chain_of(model, pi));
    double v = 0.0;
    for (int s = 0; s < model.n_states; ++s)
        for (int a = 0; a < model.n_actions; ++a) v += mu(s) * pi(s, a) * table(s, a);
    return v;
}

// Bias through the fundamental matrix Z = (I - P + 1 mu^T)^-1, h = Z (r - g),
// then shifted so h(0) = 0.
inline Eigen::VectorXd bias_fundamental(const Eigen::MatrixXd& P, const Eigen::VectorXd& r) {
    const auto S = P.rows();
    const Eigen::VectorXd mu = stationary_lsq(P);
    const double g = mu.dot(r);
    const Eigen::MatrixXd Z =
        (Eigen::MatrixXd::Identity(S, S) - P + Eigen::VectorXd::Ones(S) * mu.transpose()).inverse();
    Eigen::VectorXd h = Z * (r - g * Eigen::VectorXd::Ones(S));
    h.array() -= h(0);
    return h;
}

inline Eigen::VectorXd reward_of(const Eigen::MatrixXd& pi, const Eigen::MatrixXd& table) {
    return pi.cwiseProduct(table).rowwise().sum();
}

// Random stochastic policy with strictly positive entries.
inline Eigen::MatrixXd random_policy(std::mt19937_64& gen, int S, int A) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd pi(S, A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) pi(s, a) = u(gen);
        pi.row(s) /= pi.row(s).sum();
    }
    return pi;
}

// (gain under p_tilde - gain under p_true) - sum mu_true pi B, computed without
// the library: B uses the fundamental-matrix bias of p_tilde.
inline double bellman_identity_gap(const cmdp::TabularCmdp& tilde, const cmdp::TabularCmdp& truth,
                                   const Eigen::MatrixXd& pi) {
    const Eigen::MatrixXd Pt = chain_of(tilde, pi), P = chain_of(truth, pi);
    const Eigen::VectorXd r = reward_of(pi, truth.reward);
    const Eigen::VectorXd h = bias_fundamental(Pt, r);
    const Eigen::VectorXd mu_t = stationary_lsq(Pt), mu = stationary_lsq(P);
    double weighted = 0.0;
    for (int s = 0; s < truth.n_states; ++s)
        for (int a = 0; a < truth.n_actions; ++a) {
            double b = 0.0;
            for (int n = 0; n < truth.n_states; ++n) b += (tilde.transition(s, a, n) - truth.transition(s, a, n)) * h(n);
            weighted += mu(s) * pi(s, a) * b;
        }
    return std::abs((mu_t.dot(r) - mu.dot(r)) - weighted);
}

struct DeterministicBest {
    double gain = -std::numeric_limits<double>::infinity();
    std::vector<int> actions;
};

// Enumerates all A^S deterministic policies and keeps the best gain among
// those whose every average cost is <= cost_tol (all of them when d = 0).
inline DeterministicBest best_deterministic(const cmdp::TabularCmdp& model, double cost_tol = 0.0) {
    const int S = model.n_states, A = model.n_actions;
    DeterministicBest best;
    std::vector<int> act(std::size_t(S), 0);
    for (;;) {
        Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(S, A);
        for (int s = 0; s < S; ++s) pi(s, act[std::size_t(s)]) = 1.0;
        bool ok = true;
        for (const auto& c : model.costs)
            if (average_of(model, pi, c) > cost_tol) ok = false;
        if (ok) {
            const double g = average_of(model, pi, model.reward);
            if (g > best.gain) best = {g, act};
        }
        int s = 0;
        while (s < S && ++act[std::size_t(s)] == A) act[std::size_t(s++)] = 0;
        if (s == S) break;
    }
    return best;
}

// Small random ergodic model with strictly positive transitions.
inline cmdp::TabularCmdp random_model(std::mt19937_64& gen, int S, int A, int d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    cmdp::TabularCmdp m;
    m.n_states = S;
    m.n_actions = A;
    m.reward = cmdp::Matrix(S, A);
    m.transition = cmdp::TransitionKernel(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            m.reward(s, a) = u(gen);
            double sum = 0.0;
            for (int n = 0; n < S; ++n) sum += (m.transition(s, a, n) = 0.05 + u(gen));
            for (int n = 0; n < S; ++n) m.transition(s, a, n) /= sum;
        }
    for (int i = 0; i < d; ++i) {
        cmdp::Matrix c(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) c(s, a) = 2.0 * u(gen) - 1.0;
        m.costs.push_back(c);
    }
    return m;
}

} // namespace oracle
