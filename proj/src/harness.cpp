#include "cmdp/harness.hpp"

#include "cmdp/analysis.hpp"
#include "cmdp/errors.hpp"
#include "cmdp/model_io.hpp"
#include "cmdp/occupancy_opt.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <typeinfo>

#include <unistd.h>

namespace cmdp {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string error_name(const std::exception& e) {
    if (dynamic_cast<const InfeasibleProgram*>(&e)) return "InfeasibleProgram";
    if (dynamic_cast<const IterationLimit*>(&e)) return "IterationLimit";
    if (dynamic_cast<const NonErgodicChain*>(&e)) return "NonErgodicChain";
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const InvalidSpec*>(&e)) return "InvalidSpec";
    if (dynamic_cast<const IoError*>(&e)) return "IoError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    return "std::exception";
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= double(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.std = std::sqrt(ss / double(xs.size() - 1));
    }
    return out;
}

nlohmann::ordered_json mean_std_json(const std::vector<double>& xs) {
    const auto ms = mean_std(xs);
    return {{"mean", ms.mean}, {"std", ms.std}, {"n", xs.size()}};
}

const char* kind_name(EnvironmentConfig::Kind k) {
    switch (k) {
    case EnvironmentConfig::Kind::Queue: return "queue";
    case EnvironmentConfig::Kind::Random: return "random";
    case EnvironmentConfig::Kind::File: return "file";
    }
    return "?";
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::ordered_json environment_json(const EnvironmentConfig& env, const TabularCmdp& model) {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(env.kind);
    j["n_states"] = model.n_states;
    j["n_actions"] = model.n_actions;
    j["d"] = model.d();
    j["initial_state"] = env.initial_state;
    j["model_hash"] = hex64(model_hash(model));
    switch (env.kind) {
    case EnvironmentConfig::Kind::Queue: {
        j["buffer"] = env.queue.buffer;
        j["service"] = env.queue.service;
        j["flow"] = env.queue.flow;
        j["action_order"] = "service-major: index = service_index * |flow| + flow_index";
        std::vector<std::string> labels;
        for (int a = 0; a < model.n_actions; ++a) labels.push_back(env.queue.action_label(a));
        j["action_labels"] = labels;
        j["cost_labels"] = {"service: 10a - 6 <= 0", "flow: 8(1-b)^2 - 2 <= 0"};
        break;
    }
    case EnvironmentConfig::Kind::Random:
        j["seed"] = env.random_seed;
        j["min_prob"] = env.random_min_prob.value_or(0.25 / env.random_states);
        break;
    case EnvironmentConfig::Kind::File: j["path"] = env.model_file.generic_string(); break;
    }
    return j;
}

} // namespace

TabularCmdp build_environment(const EnvironmentConfig& env) {
    TabularCmdp model;
    switch (env.kind) {
    case EnvironmentConfig::Kind::Queue: model = build_queue(env.queue); break;
    case EnvironmentConfig::Kind::Random:
        model = random_cmdp(env.random_states, env.random_actions, env.random_constraints, env.random_seed,
                            env.random_min_prob.value_or(0.25 / env.random_states))
                    .model;
        break;
    case EnvironmentConfig::Kind::File:
        try {
            model = load_model(env.model_file);
        } catch (const IoError& e) {
            throw ConfigError(e.what());
        }
        break;
    }
    if (env.initial_state >= model.n_states)
        throw ConfigError("environment.initial_state " + std::to_string(env.initial_state) + " is outside [0, " +
                          std::to_string(model.n_states - 1) + "]");
    return model;
}

std::uint64_t model_hash(const TabularCmdp& model) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    const std::int64_t dims[3] = {model.n_states, model.n_actions, model.d()};
    mix(dims, sizeof dims);
    mix(model.reward.data(), sizeof(double) * std::size_t(model.reward.size()));
    for (const auto& c : model.costs) mix(c.data(), sizeof(double) * std::size_t(c.size()));
    mix(model.transition.data().data(), sizeof(double) * model.transition.data().size());
    return h;
}

Oracle compute_oracle(const TabularCmdp& model, bool recompute) {
    static std::mutex mutex;
    static std::map<std::uint64_t, Oracle> cache;
    const auto key = model_hash(model);
    if (!recompute) {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto sol = solve_true_model(model, 0.0);
    Oracle oracle{sol.objective_value, std::move(sol.policy), std::move(sol.rho), sol.lp_iterations};
    std::lock_guard lock(mutex);
    cache.insert_or_assign(key, oracle);
    return oracle;
}

DefaultK default_k(const EnvironmentConfig& env, const TabularCmdp& model, double lipschitz) {
    DefaultK k;
    k.lipschitz = lipschitz;
    k.d = model.d();
    k.S = model.n_states;
    k.A = model.n_actions;
    const auto uniform = StationaryPolicy::uniform(model.n_states, model.n_actions);
    if (env.kind == EnvironmentConfig::Kind::Queue) {
        k.mixing_estimate = hitting_time(uniform, model.transition, 0, model.n_states - 1);
        k.mixing_source = "uniform-policy hitting time 0 -> " + std::to_string(model.n_states - 1);
    } else {
        k.mixing_estimate = max_hitting_time(uniform, model.transition);
        k.mixing_source = "uniform-policy max pairwise hitting time";
    }
    k.K = lipschitz * double(k.d) * k.mixing_estimate * double(k.S) * std::sqrt(double(k.A));
    return k;
}

MetricSeries compute_metrics(const RunRecord& record, double lambda_star, std::int64_t stride) {
    if (stride < 1) throw ConfigError("stride must be >= 1");
    MetricSeries series;
    series.d = record.d;
    const std::size_t T = record.steps.size();
    double reward_sum = 0.0;
    std::vector<double> cost_sum(std::size_t(record.d), 0.0);
    for (std::size_t k = 0; k < T; ++k) {
        reward_sum += record.steps[k].reward;
        for (int i = 0; i < record.d; ++i) cost_sum[std::size_t(i)] += record.cost(k, i);
        const auto t = std::int64_t(k + 1);
        if (t % stride != 0 && k + 1 != T) continue;
        MetricRow row;
        row.t = t;
        row.avg_reward = reward_sum / double(t);
        row.avg_costs.resize(cost_sum.size());
        row.violation = 0.0;
        for (std::size_t i = 0; i < cost_sum.size(); ++i) {
            row.avg_costs[i] = cost_sum[i] / double(t);
            row.violation = std::max(row.violation, std::max(0.0, row.avg_costs[i]));
        }
        row.regret = lambda_star - row.avg_reward;
        row.epoch = record.steps[k].epoch;
        series.rows.push_back(std::move(row));
    }
    return series;
}

std::string series_csv(const MetricSeries& series) {
    std::ostringstream out;
    out << "t,avg_reward";
    for (int i = 1; i <= series.d; ++i) out << ",avg_cost_" << i;
    out << ",regret,violation,epoch\n";
    for (const auto& r : series.rows) {
        out << r.t << ',' << fmt(r.avg_reward);
        for (double c : r.avg_costs) out << ',' << fmt(c);
        out << ',' << fmt(r.regret) << ',' << fmt(r.violation) << ',' << r.epoch << '\n';
    }
    return out.str();
}

std::string aggregate_csv(const std::vector<MetricSeries>& series) {
    if (series.empty()) throw InvalidSpec("aggregate_csv needs at least one series");
    const int d = series.front().d;
    const std::size_t rows = series.front().rows.size();
    for (const auto& s : series)
        if (s.d != d || s.rows.size() != rows) throw InvalidSpec("aggregate_csv: series have different shapes");

    std::ostringstream out;
    out << "t,avg_reward_mean,avg_reward_std";
    for (int i = 1; i <= d; ++i) out << ",avg_cost_" << i << "_mean,avg_cost_" << i << "_std";
    out << ",regret_mean,regret_std,violation_mean,violation_std,epoch_mean,epoch_std,n_seeds\n";
    std::vector<double> col(series.size());
    auto emit = [&](auto get) {
        for (std::size_t k = 0; k < series.size(); ++k) col[k] = get(k);
        const auto ms = mean_std(col);
        out << ',' << fmt(ms.mean) << ',' << fmt(ms.std);
    };
    for (std::size_t r = 0; r < rows; ++r) {
        const auto t = series.front().rows[r].t;
        for (const auto& s : series)
            if (s.rows[r].t != t) throw InvalidSpec("aggregate_csv: series have different t grids");
        out << t;
        emit([&](std::size_t k) { return series[k].rows[r].avg_reward; });
        for (int i = 0; i < d; ++i) emit([&](std::size_t k) { return series[k].rows[r].avg_costs[std::size_t(i)]; });
        emit([&](std::size_t k) { return series[k].rows[r].regret; });
        emit([&](std::size_t k) { return series[k].rows[r].violation; });
        emit([&](std::size_t k) { return double(series[k].rows[r].epoch); });
        out << ',' << series.size() << '\n';
    }
    return out.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

std::vector<const SeedOutcome*> ExperimentResult::succeeded() const {
    std::vector<const SeedOutcome*> out;
    for (const auto& s : seeds)
        if (s.ok) out.push_back(&s);
    return out;
}

FinalStats final_stats(const ExperimentResult& result, double (*metric)(const MetricRow&)) {
    std::vector<double> xs;
    for (const auto* s : result.succeeded())
        if (!s->series.rows.empty()) xs.push_back(metric(s->series.rows.back()));
    const auto ms = mean_std(xs);
    FinalStats f{ms.mean, ms.std, 0.0, xs.size()};
    if (!xs.empty()) f.sem = ms.std / std::sqrt(double(xs.size()));
    return f;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const TabularCmdp model = build_environment(config.environment);
    const Oracle oracle = compute_oracle(model, config.recompute_oracle);

    ExperimentResult result;
    result.k_default = default_k(config.environment, model, config.lipschitz);
    result.K = config.K.value_or(result.k_default.K);
    result.lambda_star = oracle.lambda_star;
    result.out_dir = config.out_dir;
    result.seeds.resize(config.seeds.size());

    std::mutex dump_mutex;
    std::vector<std::exception_ptr> errors(config.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= config.seeds.size()) return;
            SeedOutcome& out = result.seeds[k];
            out.seed = config.seeds[k];
            try {
                LearnerConfig lc;
                lc.K = result.K;
                lc.T = config.T;
                lc.t_lower = config.t_lower;
                lc.update_every_step = config.update_every_step;
                lc.seed = out.seed;
                lc.epsilon_cap = config.epsilon_cap;
                lc.initial_state = config.environment.initial_state;
                LearnerHooks hooks;
                if (options.dump_lp) {
                    hooks.on_program = [&, seed = out.seed](int epoch, const lp::LinearProgram& program) {
                        std::ostringstream text;
                        lp::dump(program, text);
                        const auto path = config.out_dir / "lp" /
                                          ("seed_" + std::to_string(seed) + "_epoch_" + std::to_string(epoch) + ".lp");
                        std::lock_guard lock(dump_mutex);
                        // Ladder retries overwrite the same file; the kept program is the last one tried.
                        write_atomic(path, text.str());
                    };
                }
                const RunRecord record = run_learner(model, lc, hooks);
                out.series = compute_metrics(record, oracle.lambda_star, config.stride);
                out.epochs = record.epochs;
                out.ok = true;
            } catch (const std::exception& e) {
                out.ok = false;
                out.error_type = error_name(e);
                out.error = e.what();
                errors[k] = std::current_exception();
            }
        }
    };
    unsigned n_threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = unsigned(std::min<std::size_t>(n_threads, config.seeds.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    const auto ok = result.succeeded();
    if (ok.empty()) std::rethrow_exception(errors.front());

    // All outputs are produced here, on one thread, in seed order.
    std::vector<MetricSeries> series;
    for (const auto* s : ok) {
        write_atomic(config.out_dir / ("seed_" + std::to_string(s->seed) + ".csv"), series_csv(s->series));
        series.push_back(s->series);
    }
    write_atomic(config.out_dir / "aggregate.csv", aggregate_csv(series));

    nlohmann::ordered_json summary;
    summary["schema"] = "cmdp-lab/summary/1";
    summary["environment"] = environment_json(config.environment, model);
    summary["oracle"] = {{"lambda_star", oracle.lambda_star}, {"lp_iterations", oracle.lp_iterations}};
    summary["learner"] = {
        {"K", result.K},
        {"K_source", config.K ? "config" : "default"},
        {"K_default",
         {{"value", result.k_default.K},
          {"formula", "L * d * T_M * S * sqrt(A)"},
          {"L", result.k_default.lipschitz},
          {"d", result.k_default.d},
          {"T_M", result.k_default.mixing_estimate},
          {"T_M_source", result.k_default.mixing_source},
          {"S", result.k_default.S},
          {"A", result.k_default.A}}},
        {"T", config.T},
        {"update_every_step", config.update_every_step},
        {"t_lower", config.t_lower ? nlohmann::ordered_json(*config.t_lower) : nlohmann::ordered_json(nullptr)},
        {"epsilon_cap", config.epsilon_cap ? nlohmann::ordered_json(*config.epsilon_cap) : nlohmann::ordered_json(nullptr)},
        {"seeds", config.seeds},
    };
    summary["stride"] = config.stride;

    std::vector<double> rewards, violations, regrets, epochs;
    std::vector<std::vector<double>> costs(std::size_t(model.d()));
    for (const auto* s : ok) {
        const auto& last = s->series.rows.back();
        rewards.push_back(last.avg_reward);
        violations.push_back(last.violation);
        regrets.push_back(last.regret);
        epochs.push_back(double(s->epochs.size()));
        for (std::size_t i = 0; i < costs.size(); ++i) costs[i].push_back(last.avg_costs[i]);
    }
    nlohmann::ordered_json final_json;
    final_json["avg_reward"] = mean_std_json(rewards);
    nlohmann::ordered_json cost_json = nlohmann::ordered_json::array();
    for (const auto& c : costs) cost_json.push_back(mean_std_json(c));
    final_json["avg_costs"] = cost_json;
    final_json["regret"] = mean_std_json(regrets);
    final_json["violation"] = mean_std_json(violations);
    final_json["epochs"] = mean_std_json(epochs);
    summary["final"] = final_json;

    nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
    for (const auto& s : result.seeds) {
        nlohmann::ordered_json j;
        j["seed"] = s.seed;
        j["ok"] = s.ok;
        if (!s.ok) {
            j["error_type"] = s.error_type;
            j["error"] = s.error;
        } else {
            const auto& last = s.series.rows.back();
            j["avg_reward"] = last.avg_reward;
            j["avg_costs"] = last.avg_costs;
            j["violation"] = last.violation;
            j["epochs"] = s.epochs.size();
            nlohmann::ordered_json hist = nlohmann::ordered_json::array();
            for (const auto& e : s.epochs) hist.push_back({e.t_start, e.epsilon, e.epsilon_used});
            j["epsilon_history"] = {{"columns", {"t_start", "epsilon", "epsilon_used"}}, {"rows", hist}};
        }
        per_seed.push_back(std::move(j));
    }
    summary["seeds"] = per_seed;
    write_atomic(config.out_dir / "summary.json", summary.dump(2) + "\n");

    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    nlohmann::ordered_json timing;
    timing["wall_seconds"] = result.wall_seconds;
    timing["threads"] = n_threads;
    write_atomic(config.out_dir / "timing.json", timing.dump(2) + "\n");
    return result;
}

} // namespace cmdp
