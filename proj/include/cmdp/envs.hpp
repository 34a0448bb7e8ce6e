#pragma once

#include "cmdp/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cmdp {

/// Single-server queue with service and flow control. State = queue length
/// in [0, buffer]; action index = service_index * |flow| + flow_index.
struct QueueSpec {
    int buffer = 5;
    std::vector<double> service{0.2, 0.4, 0.6, 0.8};
    std::vector<double> flow{0.5, 0.6, 0.7, 0.8};

    void validate() const;
    int n_states() const { return buffer + 1; }
    int n_actions() const { return int(service.size() * flow.size()); }
    double service_of(int action) const { return service[std::size_t(action) / flow.size()]; }
    double flow_of(int action) const { return flow[std::size_t(action) % flow.size()]; }
    /// "a=0.2,b=0.5" style label for logs.
    std::string action_label(int action) const;
};

/// Reward 5 - s; costs 10a - 6 (service) and 8(1-b)^2 - 2 (flow), i.e. the
/// ">= 0" experiment constraints with their sign flipped.
TabularCmdp build_queue(const QueueSpec& spec);

struct RandomCmdp {
    TabularCmdp model;
    /// Deterministic policy whose average costs all equal -slack.
    StationaryPolicy slater_policy;
    double slack = 0.0;
};

/// Random ergodic CMDP: rows are min_prob + (1 - S min_prob) * Dirichlet(1),
/// rewards U[0,1], costs U[-1,1] shifted so the recorded policy is strictly
/// feasible with a slack drawn from [0.1, 0.5].
RandomCmdp random_cmdp(int n_states, int n_actions, int d, std::uint64_t seed, double min_prob);

} // namespace cmdp
