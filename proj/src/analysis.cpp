#include "cmdp/analysis.hpp"

#include "cmdp/errors.hpp"

#include <cmath>
#include <vector>

namespace cmdp {

namespace {

constexpr double edge_threshold = 0.0;

std::vector<char> reachable_from(const Matrix& chain, int start, bool reverse) {
    const auto S = int(chain.rows());
    std::vector<char> seen(std::size_t(S), 0);
    std::vector<int> stack{start};
    seen[std::size_t(start)] = 1;
    while (!stack.empty()) {
        const int s = stack.back();
        stack.pop_back();
        for (int n = 0; n < S; ++n) {
            const double p = reverse ? chain(n, s) : chain(s, n);
            if (p > edge_threshold && !seen[std::size_t(n)]) {
                seen[std::size_t(n)] = 1;
                stack.push_back(n);
            }
        }
    }
    return seen;
}

void require_square(const Matrix& chain) {
    if (chain.rows() == 0 || chain.rows() != chain.cols()) throw InvalidSpec("chain must be a non-empty square matrix");
}

} // namespace

bool is_irreducible(const Matrix& chain) {
    require_square(chain);
    for (char c : reachable_from(chain, 0, false))
        if (!c) return false;
    for (char c : reachable_from(chain, 0, true))
        if (!c) return false;
    return true;
}

Vector stationary_distribution(const Matrix& chain) {
    require_square(chain);
    if (!is_irreducible(chain)) throw NonErgodicChain("induced chain is not irreducible");
    const auto S = chain.rows();
    // mu^T (P - I) = 0  <=>  (P^T - I) mu = 0; first equation replaced by sum = 1.
    Matrix sys = chain.transpose() - Matrix::Identity(S, S);
    sys.row(0).setOnes();
    Vector rhs = Vector::Zero(S);
    rhs(0) = 1.0;
    Eigen::FullPivLU<Matrix> lu(sys);
    if (!lu.isInvertible()) throw NonErgodicChain("stationary system is singular");
    Vector mu = lu.solve(rhs);
    if (!mu.allFinite()) throw NonErgodicChain("stationary solve produced non-finite values");
    for (Eigen::Index s = 0; s < S; ++s)
        if (mu(s) < 0.0) mu(s) = 0.0;
    mu /= mu.sum();
    return mu;
}

GainBias gain_bias(const StationaryPolicy& policy, const TransitionKernel& kernel, const Matrix& reward) {
    const Matrix chain = induced_chain(policy, kernel);
    const Vector mu = stationary_distribution(chain);
    const Vector r_pi = induced_reward(policy, reward);
    GainBias gb;
    gb.gain = mu.dot(r_pi);
    gb.reference_state = 0;

    // (I - P_pi) h = r_pi - gain, with h(0) = 0: the column for h(0) is free
    // and replaced by the all-ones column, whose coefficient must come out ~0.
    const auto S = chain.rows();
    Matrix sys = Matrix::Identity(S, S) - chain;
    sys.col(0).setOnes();
    const Vector rhs = r_pi.array() - gb.gain;
    Eigen::FullPivLU<Matrix> lu(sys);
    if (!lu.isInvertible()) throw NonErgodicChain("bias system is singular");
    Vector sol = lu.solve(rhs);
    gb.bias = sol;
    gb.bias(0) = 0.0;
    return gb;
}

double bellman_consistency_residual(const GainBias& gb, const StationaryPolicy& policy,
                                    const TransitionKernel& kernel, const Matrix& reward) {
    const Matrix chain = induced_chain(policy, kernel);
    const Vector r_pi = induced_reward(policy, reward);
    const Vector lhs = r_pi.array() - gb.gain + (chain * gb.bias).array();
    return (lhs - gb.bias).cwiseAbs().maxCoeff();
}

Matrix bellman_error_with_bias(const Vector& bias, const TransitionKernel& p_tilde, const TransitionKernel& p_true) {
    const int S = p_true.n_states(), A = p_true.n_actions();
    if (p_tilde.n_states() != S || p_tilde.n_actions() != A || bias.size() != S)
        throw InvalidSpec("bellman_error: dimension mismatch");
    Matrix B(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            auto pt = p_tilde.row(s, a);
            auto p = p_true.row(s, a);
            double acc = 0.0;
            for (int n = 0; n < S; ++n) acc += (pt[std::size_t(n)] - p[std::size_t(n)]) * bias(n);
            B(s, a) = acc;
        }
    return B;
}

Matrix bellman_error(const StationaryPolicy& policy, const TransitionKernel& p_tilde,
                     const TransitionKernel& p_true, const Matrix& reward) {
    const GainBias gb = gain_bias(policy, p_tilde, reward);
    return bellman_error_with_bias(gb.bias, p_tilde, p_true);
}

double verify_bellman_identity(const StationaryPolicy& policy, const TransitionKernel& p_tilde,
                               const TransitionKernel& p_true, const Matrix& reward) {
    const GainBias optimistic = gain_bias(policy, p_tilde, reward);
    const Vector mu_true = stationary_distribution(induced_chain(policy, p_true));
    const double gain_true = mu_true.dot(induced_reward(policy, reward));

    const Matrix B = bellman_error_with_bias(optimistic.bias, p_tilde, p_true);
    double weighted = 0.0;
    for (Eigen::Index s = 0; s < B.rows(); ++s)
        for (Eigen::Index a = 0; a < B.cols(); ++a) weighted += mu_true(s) * policy(int(s), int(a)) * B(s, a);
    return std::abs((optimistic.gain - gain_true) - weighted);
}

double hitting_time(const StationaryPolicy& policy, const TransitionKernel& kernel, int source, int target) {
    const int S = kernel.n_states();
    if (source < 0 || source >= S || target < 0 || target >= S) throw InvalidSpec("hitting_time: state out of range");
    if (source == target) return 0.0;
    const Matrix chain = induced_chain(policy, kernel);
    if (!reachable_from(chain, source, false)[std::size_t(target)])
        throw NonErgodicChain("target is not reachable from source");

    // h(s) - sum_{s' != target} P(s'|s) h(s') = 1 for s != target.
    std::vector<int> idx;
    for (int s = 0; s < S; ++s)
        if (s != target) idx.push_back(s);
    const auto n = Eigen::Index(idx.size());
    Matrix sys = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) sys(i, j) -= chain(idx[std::size_t(i)], idx[std::size_t(j)]);
    Eigen::FullPivLU<Matrix> lu(sys);
    if (!lu.isInvertible()) throw NonErgodicChain("hitting-time system is singular");
    const Vector h = lu.solve(Vector::Ones(n));
    for (Eigen::Index i = 0; i < n; ++i)
        if (idx[std::size_t(i)] == source) return h(i);
    return 0.0;
}

double max_hitting_time(const StationaryPolicy& policy, const TransitionKernel& kernel) {
    double worst = 0.0;
    for (int s = 0; s < kernel.n_states(); ++s)
        for (int n = 0; n < kernel.n_states(); ++n) worst = std::max(worst, hitting_time(policy, kernel, s, n));
    return worst;
}

OccupancyMeasure mixture_occupancy(const OccupancyMeasure& rho_star, const OccupancyMeasure& rho_slater,
                                   double eps, double delta) {
    if (!(delta > 0.0)) throw InvalidMixture("mixture needs delta > 0");
    if (eps < 0.0 || eps > delta) throw InvalidMixture("mixture needs 0 <= eps <= delta");
    if (rho_star.n_states() != rho_slater.n_states() || rho_star.n_actions() != rho_slater.n_actions())
        throw InvalidMixture("occupancy measures have different shapes");
    const double w = eps / delta;
    return OccupancyMeasure((1.0 - w) * rho_star.values() + w * rho_slater.values());
}

double flow_residual(const OccupancyMeasure& rho, const TransitionKernel& kernel) {
    const int S = kernel.n_states(), A = kernel.n_actions();
    Vector inflow = Vector::Zero(S);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            auto row = kernel.row(s, a);
            for (int n = 0; n < S; ++n) inflow(n) += row[std::size_t(n)] * rho(s, a);
        }
    const Vector outflow = rho.values().rowwise().sum();
    return (outflow - inflow).cwiseAbs().maxCoeff();
}

} // namespace cmdp
