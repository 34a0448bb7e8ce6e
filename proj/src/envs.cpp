#include "cmdp/envs.hpp"

#include "cmdp/errors.hpp"
#include "cmdp/random.hpp"

#include <sstream>

namespace cmdp {

void QueueSpec::validate() const {
    if (buffer < 1) throw InvalidSpec("queue buffer must be at least 1");
    if (service.empty() || flow.empty()) throw InvalidSpec("queue action lists must be non-empty");
    for (double v : service)
        if (!(v > 0.0 && v < 1.0)) throw InvalidSpec("service probabilities must lie in (0, 1)");
    for (double v : flow)
        if (!(v > 0.0 && v < 1.0)) throw InvalidSpec("flow probabilities must lie in (0, 1)");
}

std::string QueueSpec::action_label(int action) const {
    std::ostringstream out;
    out << "a=" << service_of(action) << ",b=" << flow_of(action);
    return out.str();
}

TabularCmdp build_queue(const QueueSpec& spec) {
    spec.validate();
    const int S = spec.n_states(), A = spec.n_actions(), L = spec.buffer;
    TabularCmdp m;
    m.n_states = S;
    m.n_actions = A;
    m.reward = Matrix(S, A);
    m.costs = {Matrix(S, A), Matrix(S, A)};
    m.transition = TransitionKernel(S, A);
    for (int s = 0; s < S; ++s) {
        for (int k = 0; k < A; ++k) {
            const double a = spec.service_of(k), b = spec.flow_of(k);
            m.reward(s, k) = 5.0 - s;
            m.costs[0](s, k) = 10.0 * a - 6.0;
            m.costs[1](s, k) = 8.0 * (1.0 - b) * (1.0 - b) - 2.0;
            auto& P = m.transition;
            if (s == 0) {
                P(s, k, 0) = 1.0 - b * (1.0 - a);
                P(s, k, 1) = b * (1.0 - a);
            } else if (s == L) {
                P(s, k, L - 1) = a;
                P(s, k, L) = 1.0 - a;
            } else {
                P(s, k, s - 1) = a * (1.0 - b);
                P(s, k, s) = a * b + (1.0 - a) * (1.0 - b);
                P(s, k, s + 1) = (1.0 - a) * b;
            }
        }
    }
    return m;
}

RandomCmdp random_cmdp(int n_states, int n_actions, int d, std::uint64_t seed, double min_prob) {
    if (n_states < 1 || n_actions < 1 || d < 0) throw InvalidSpec("random_cmdp needs S, A >= 1 and d >= 0");
    if (!(min_prob > 0.0 && min_prob <= 1.0 / n_states + 1e-15))
        throw InvalidSpec("random_cmdp needs min_prob in (0, 1/S]");
    const int S = n_states, A = n_actions;
    Rng rng(seed);

    TabularCmdp m;
    m.n_states = S;
    m.n_actions = A;
    m.transition = TransitionKernel(S, A);
    const double free_mass = std::max(0.0, 1.0 - S * min_prob);
    std::vector<double> w(std::size_t(S), 0.0);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            double total = 0.0;
            for (auto& x : w) total += (x = rng.exponential());
            auto row = m.transition.row(s, a);
            double sum = 0.0;
            for (int n = 0; n < S; ++n) sum += (row[std::size_t(n)] = min_prob + free_mass * w[std::size_t(n)] / total);
            for (auto& p : row) p /= sum;
        }

    m.reward = Matrix(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) m.reward(s, a) = rng.uniform();
    for (int i = 0; i < d; ++i) {
        Matrix c(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) c(s, a) = rng.uniform(-1.0, 1.0);
        m.costs.push_back(std::move(c));
    }

    Matrix pick = Matrix::Zero(S, A);
    for (int s = 0; s < S; ++s) pick(s, rng.index(A)) = 1.0;
    StationaryPolicy slater(std::move(pick));
    const double slack = rng.uniform(0.1, 0.5);
    if (d > 0) {
        const auto avg = long_run_averages(slater, m);
        for (int i = 0; i < d; ++i) m.costs[std::size_t(i)].array() -= avg.zeta[std::size_t(i)] + slack;
    }
    return RandomCmdp{std::move(m), std::move(slater), slack};
}

} // namespace cmdp
