#include "cmdp/confidence.hpp"

#include "cmdp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace cmdp {

void ConfidenceSet::validate() const {
    const int S = p_hat.n_states(), A = p_hat.n_actions();
    if (radius.rows() != S || radius.cols() != A) throw InvalidSpec("confidence radius table has wrong shape");
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            double sum = 0.0;
            for (double p : p_hat.row(s, a)) {
                if (p < 0.0) throw InvalidSpec("confidence center has a negative entry");
                sum += p;
            }
            if (std::abs(sum - 1.0) > tol::structural) throw InvalidSpec("confidence center row does not sum to 1");
            if (!(radius(s, a) >= 0.0 && radius(s, a) <= 2.0)) throw InvalidSpec("confidence radius outside [0, 2]");
        }
}

double radius(int n_states, int n_actions, std::int64_t t, std::int64_t visits) {
    if (n_states < 1 || n_actions < 1 || t < 1) throw InvalidSpec("radius needs S, A, t >= 1");
    const double n = double(std::max<std::int64_t>(1, visits));
    const double r = std::sqrt(14.0 * n_states * std::log(2.0 * n_actions * double(t)) / n);
    return std::min(2.0, r);
}

double max_l1_gap(const TransitionKernel& p, const TransitionKernel& q) {
    if (p.n_states() != q.n_states() || p.n_actions() != q.n_actions()) throw InvalidSpec("kernel shapes differ");
    double worst = 0.0;
    for (int s = 0; s < p.n_states(); ++s)
        for (int a = 0; a < p.n_actions(); ++a) {
            auto x = p.row(s, a);
            auto y = q.row(s, a);
            double gap = 0.0;
            for (std::size_t n = 0; n < x.size(); ++n) gap += std::abs(x[n] - y[n]);
            worst = std::max(worst, gap);
        }
    return worst;
}

bool event_holds(const TransitionKernel& p_hat, const TransitionKernel& p_true, const Matrix& radii) {
    if (p_hat.n_states() != p_true.n_states() || p_hat.n_actions() != p_true.n_actions() ||
        radii.rows() != p_hat.n_states() || radii.cols() != p_hat.n_actions())
        throw InvalidSpec("event_holds: dimension mismatch");
    for (int s = 0; s < p_hat.n_states(); ++s)
        for (int a = 0; a < p_hat.n_actions(); ++a) {
            auto x = p_hat.row(s, a);
            auto y = p_true.row(s, a);
            double gap = 0.0;
            for (std::size_t n = 0; n < x.size(); ++n) gap += std::abs(x[n] - y[n]);
            if (gap > radii(s, a)) return false;
        }
    return true;
}

double azuma_expectation_bound(double c, std::int64_t n) {
    if (c < 0.0) throw InvalidSpec("azuma bound needs c >= 0");
    if (n < 2) throw InvalidSpec("azuma bound needs n >= 2");
    const double nn = double(n);
    return 3.0 * c * std::sqrt(nn * std::log(nn));
}

} // namespace cmdp
