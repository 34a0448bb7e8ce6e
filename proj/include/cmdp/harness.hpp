#pragma once

#include "cmdp/envs.hpp"
#include "cmdp/learner.hpp"
#include "cmdp/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cmdp {

struct EnvironmentConfig {
    enum class Kind { Queue, Random, File };
    Kind kind = Kind::Queue;
    QueueSpec queue;
    // kind = random
    int random_states = 4;
    int random_actions = 3;
    int random_constraints = 1;
    std::uint64_t random_seed = 1;
    std::optional<double> random_min_prob; // default 0.25 / S
    // kind = file
    std::filesystem::path model_file;
    int initial_state = 0;
};

struct ExperimentConfig {
    EnvironmentConfig environment;
    std::optional<double> K; // empty: derived default
    double lipschitz = 1.0;
    std::int64_t T = 100000;
    std::vector<std::uint64_t> seeds{1};
    bool update_every_step = false;
    std::optional<double> t_lower;
    std::optional<double> epsilon_cap;
    std::filesystem::path out_dir = "results";
    std::int64_t stride = 100;
    bool recompute_oracle = false;

    void validate() const; // ConfigError
};

/// Reads an INI-style file, or JSON when the extension is .json. Relative
/// model paths resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config_ini(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config_json(const std::string& text, const std::filesystem::path& base_dir = {});

TabularCmdp build_environment(const EnvironmentConfig& env);

/// Stable 64-bit FNV-1a digest of the model tables.
std::uint64_t model_hash(const TabularCmdp& model);

struct Oracle {
    double lambda_star = 0.0;
    StationaryPolicy policy;
    OccupancyMeasure rho;
    std::size_t lp_iterations = 0;
};

/// solve_true_model at epsilon = 0, memoized by model_hash. Thread-safe.
Oracle compute_oracle(const TabularCmdp& model, bool recompute = false);

struct DefaultK {
    double K = 0.0;
    double lipschitz = 1.0;
    int d = 0;
    double mixing_estimate = 0.0; // expected hitting time under the uniform policy
    std::string mixing_source;
    int S = 0;
    int A = 0;
};

/// L d T_M S sqrt(A). The queue uses the 0 -> buffer hitting time; other
/// environments use the largest pairwise hitting time.
DefaultK default_k(const EnvironmentConfig& env, const TabularCmdp& model, double lipschitz);

struct MetricRow {
    std::int64_t t = 0;
    double avg_reward = 0.0;
    std::vector<double> avg_costs;
    double regret = 0.0;
    double violation = 0.0;
    int epoch = 0;
};

struct MetricSeries {
    int d = 0;
    std::vector<MetricRow> rows;
};

/// Prefix means logged at every multiple of stride and at the last step.
MetricSeries compute_metrics(const RunRecord& record, double lambda_star, std::int64_t stride);

/// t,avg_reward,avg_cost_1..avg_cost_d,regret,violation,epoch
std::string series_csv(const MetricSeries& series);

/// Column-wise mean and sample std across series with identical t grids.
std::string aggregate_csv(const std::vector<MetricSeries>& series);

/// Writes via a temporary sibling and rename. Throws IoError.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error_type;
    std::string error;
    MetricSeries series;
    std::vector<EpochRecord> epochs;
};

struct ExperimentResult {
    double K = 0.0;
    DefaultK k_default;
    double lambda_star = 0.0;
    std::vector<SeedOutcome> seeds;
    std::filesystem::path out_dir;
    double wall_seconds = 0.0;

    std::vector<const SeedOutcome*> succeeded() const;
};

struct RunOptions {
    /// Writes each epoch program of every seed under out_dir/lp.
    bool dump_lp = false;
    /// Worker threads; 0 means hardware concurrency.
    unsigned threads = 0;
};

/// Runs every seed, writes seed_<n>.csv, aggregate.csv, summary.json and
/// timing.json into config.out_dir. Rethrows the first error only when every
/// seed fails.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct FinalStats {
    double mean = 0.0;
    double std = 0.0;
    double sem = 0.0; // std / sqrt(n)
    std::size_t n = 0;
};

FinalStats final_stats(const ExperimentResult& result, double (*metric)(const MetricRow&));

} // namespace cmdp
