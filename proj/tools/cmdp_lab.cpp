// cmdp_lab: command-line front end for the experiment harness.
//
//   cmdp_lab oracle <config>
//   cmdp_lab run <config>
//   cmdp_lab sweep <config> --k-values 0,1x,2x
//   cmdp_lab compare-updates <config>
//
// Exit codes: 0 success, 2 config error, 3 infeasible, 4 runtime failure.

#include "cmdp/errors.hpp"
#include "cmdp/harness.hpp"
#include "cmdp/occupancy_opt.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

using namespace cmdp;

enum Exit { ok = 0, config_error = 2, infeasible = 3, runtime_failure = 4 };

struct Common {
    std::string config;
    std::optional<int> seed_count;
    std::optional<std::string> out;
    std::optional<std::int64_t> stride;
    bool dump_lp = false;
    unsigned threads = 0;
};

void add_common(CLI::App& cmd, Common& c) {
    cmd.add_option("config", c.config, "Experiment config (INI, or JSON by extension)")->required();
    cmd.add_option("--seed-count", c.seed_count, "Use seeds 1..N instead of the config's seeds")->check(CLI::PositiveNumber);
    cmd.add_option("--out", c.out, "Output directory (overrides [output] dir)");
    cmd.add_option("--stride", c.stride, "Log every k-th step (overrides [output] stride)")->check(CLI::PositiveNumber);
    cmd.add_flag("--dump-lp", c.dump_lp, "Write every assembled LP as text under <out>/lp");
    cmd.add_option("--threads", c.threads, "Worker threads for seeds (default: hardware concurrency)");
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = load_config(c.config);
    if (c.seed_count) {
        cfg.seeds.clear();
        for (int s = 1; s <= *c.seed_count; ++s) cfg.seeds.push_back(std::uint64_t(s));
    }
    if (c.out) cfg.out_dir = *c.out;
    if (c.stride) cfg.stride = *c.stride;
    cfg.validate();
    return cfg;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double final_reward(const MetricRow& r) { return r.avg_reward; }
double final_violation(const MetricRow& r) { return r.violation; }
double final_epoch(const MetricRow& r) { return r.epoch; }

std::string comparison_header(int d) {
    std::string h = "label,K,update_every_step,reward_mean,reward_std,reward_sem,violation_mean,violation_std,violation_sem";
    for (int i = 1; i <= d; ++i) h += ",avg_cost_" + std::to_string(i) + "_mean";
    return h + ",epochs_mean,n_seeds\n";
}

std::string comparison_row(const std::string& label, const ExperimentConfig& cfg, const ExperimentResult& r, int d) {
    const auto rew = final_stats(r, final_reward);
    const auto vio = final_stats(r, final_violation);
    const auto epo = final_stats(r, final_epoch);
    std::ostringstream out;
    out << label << ',' << fmt(r.K) << ',' << (cfg.update_every_step ? "true" : "false") << ',' << fmt(rew.mean) << ','
        << fmt(rew.std) << ',' << fmt(rew.sem) << ',' << fmt(vio.mean) << ',' << fmt(vio.std) << ',' << fmt(vio.sem);
    for (int i = 0; i < d; ++i) {
        double sum = 0.0;
        const auto ok = r.succeeded();
        for (const auto* s : ok) sum += s->series.rows.back().avg_costs[std::size_t(i)];
        out << ',' << fmt(ok.empty() ? 0.0 : sum / double(ok.size()));
    }
    out << ',' << fmt(epo.mean) << ',' << rew.n << '\n';
    return out.str();
}

void print_run(const std::string& label, const ExperimentResult& r) {
    const auto rew = final_stats(r, final_reward);
    const auto vio = final_stats(r, final_violation);
    std::cout << label << "K=" << fmt(r.K) << " lambda*=" << fmt(r.lambda_star) << " final avg reward " << fmt(rew.mean)
              << " +- " << fmt(rew.std) << ", violation " << fmt(vio.mean) << " +- " << fmt(vio.std) << " (" << rew.n
              << "/" << r.seeds.size() << " seeds ok) -> " << r.out_dir.string() << '\n';
    for (const auto& s : r.seeds)
        if (!s.ok) std::cerr << "seed " << s.seed << " failed: " << s.error_type << ": " << s.error << '\n';
}

int cmd_oracle(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const TabularCmdp model = build_environment(cfg.environment);
    const auto t0 = std::chrono::steady_clock::now();
    SolveOptions options;
    std::string program_text;
    if (c.dump_lp)
        options.on_program = [&](const lp::LinearProgram& p) {
            std::ostringstream s;
            lp::dump(p, s);
            program_text = s.str();
        };
    const auto sol = solve_true_model(model, 0.0, options);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::ordered_json j;
    j["lambda_star"] = sol.objective_value;
    j["lp_iterations"] = sol.lp_iterations;
    j["model_hash"] = [&] {
        char buf[20];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(model_hash(model)));
        return std::string(buf);
    }();
    const auto averages = long_run_averages(sol.policy, model);
    j["avg_costs"] = averages.zeta;
    nlohmann::ordered_json policy = nlohmann::ordered_json::array();
    for (int s = 0; s < model.n_states; ++s) {
        nlohmann::ordered_json row = nlohmann::ordered_json::object();
        for (int a = 0; a < model.n_actions; ++a) {
            const double p = sol.policy(s, a);
            if (p <= 1e-12) continue;
            const std::string label = cfg.environment.kind == EnvironmentConfig::Kind::Queue
                                          ? cfg.environment.queue.action_label(a)
                                          : std::to_string(a);
            row[label] = p;
        }
        policy.push_back(row);
    }
    j["policy"] = policy;
    if (c.out) {
        write_atomic(std::filesystem::path(*c.out) / "oracle.json", j.dump(2) + "\n");
        if (c.dump_lp) write_atomic(std::filesystem::path(*c.out) / "oracle.lp", program_text);
    } else if (c.dump_lp) {
        std::cerr << program_text;
    }
    j["runtime_seconds"] = seconds;
    std::cout << j.dump(2) << '\n';
    return ok;
}

int cmd_run(const Common& c) {
    const ExperimentConfig cfg = load(c);
    const auto r = run_experiment(cfg, RunOptions{c.dump_lp, c.threads});
    print_run("", r);
    return ok;
}

// "2.5" -> absolute K; "1x" / "0.5x" -> multiple of the default K.
double parse_k(const std::string& text, double k_default) {
    std::string s = text;
    bool multiple = !s.empty() && (s.back() == 'x' || s.back() == 'X');
    if (multiple) s.pop_back();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad --k-values entry '" + text + "'");
    }
    if (used != s.size() || !(v >= 0.0)) throw ConfigError("bad --k-values entry '" + text + "'");
    return multiple ? v * k_default : v;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& k_values) {
    const ExperimentConfig base = load(c);
    if (k_values.empty()) throw ConfigError("--k-values needs at least one entry");
    const TabularCmdp model = build_environment(base.environment);
    const DefaultK k0 = default_k(base.environment, model, base.lipschitz);
    std::string table = comparison_header(model.d());
    for (const auto& text : k_values) {
        ExperimentConfig cfg = base;
        cfg.K = parse_k(text, k0.K);
        cfg.out_dir = base.out_dir / ("K_" + text);
        const auto r = run_experiment(cfg, RunOptions{c.dump_lp, c.threads});
        print_run("[" + text + "] ", r);
        table += comparison_row(text, cfg, r, model.d());
    }
    write_atomic(base.out_dir / "sweep.csv", table);
    std::cout << "K_default=" << fmt(k0.K) << " (T_M=" << fmt(k0.mixing_estimate) << "), table -> "
              << (base.out_dir / "sweep.csv").string() << '\n';
    return ok;
}

int cmd_compare(const Common& c) {
    const ExperimentConfig base = load(c);
    const TabularCmdp model = build_environment(base.environment);
    std::string table = comparison_header(model.d());
    for (bool every : {false, true}) {
        ExperimentConfig cfg = base;
        cfg.update_every_step = every;
        const std::string label = every ? "every_step" : "doubling";
        cfg.out_dir = base.out_dir / label;
        const auto r = run_experiment(cfg, RunOptions{c.dump_lp, c.threads});
        print_run("[" + label + "] ", r);
        table += comparison_row(label, cfg, r, model.d());
    }
    write_atomic(base.out_dir / "compare_updates.csv", table);
    std::cout << "table -> " << (base.out_dir / "compare_updates.csv").string() << '\n';
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimistic constrained average-reward learner: oracle, runs, K sweeps"};
    app.require_subcommand(1);

    Common oracle_opts, run_opts, sweep_opts, compare_opts;
    std::vector<std::string> k_values;
    auto* oracle = app.add_subcommand("oracle", "Solve the constrained LP on the true model");
    add_common(*oracle, oracle_opts);
    auto* run = app.add_subcommand("run", "Run the learner for every configured seed");
    add_common(*run, run_opts);
    auto* sweep = app.add_subcommand("sweep", "Run the learner for several K values");
    add_common(*sweep, sweep_opts);
    sweep->add_option("--k-values", k_values, "Comma-separated K values; 'Nx' means N times the default K")
        ->delimiter(',')
        ->required();
    auto* compare = app.add_subcommand("compare-updates", "Doubling epochs versus a policy update every step");
    add_common(*compare, compare_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        if (*oracle) return cmd_oracle(oracle_opts);
        if (*run) return cmd_run(run_opts);
        if (*sweep) return cmd_sweep(sweep_opts, k_values);
        if (*compare) return cmd_compare(compare_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const InvalidSpec& e) {
        std::cerr << "invalid specification: " << e.what() << '\n';
        return config_error;
    } catch (const InfeasibleProgram& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return infeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return runtime_failure;
}
