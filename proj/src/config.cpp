#include "cmdp/errors.hpp"
#include "cmdp/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cmdp {

namespace {

// Both file formats are flattened to "section.key" -> text; list values are
// comma separated.
using Flat = std::map<std::string, std::string>;

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "environment.kind",        "environment.buffer",       "environment.service",
        "environment.flow",        "environment.states",       "environment.actions",
        "environment.constraints", "environment.seed",         "environment.min_prob",
        "environment.path",        "environment.initial_state", "learner.K",
        "learner.lipschitz",       "learner.T",                "learner.seeds",
        "learner.seed_count",      "learner.update_every_step", "learner.t_lower",
        "learner.epsilon_cap",     "output.dir",               "output.stride",
        "metric.recompute_oracle",
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    const std::string s = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    return v;
}

std::int64_t to_int(const std::string& key, const std::string& text) {
    const std::string s = trim(text);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        // Accept integral values written in float notation, e.g. 1e5.
        const double d = to_double(key, text);
        if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError(key + ": expected an integer, got '" + text + "'");
        return std::int64_t(d);
    }
    return std::int64_t(v);
}

bool to_bool(const std::string& key, const std::string& text) {
    std::string s = trim(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(to_double(key, item));
    return out;
}

ExperimentConfig interpret(const Flat& flat, const std::filesystem::path& base_dir) {
    for (const auto& [key, value] : flat)
        if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");

    auto get = [&](const std::string& key) -> const std::string* {
        auto it = flat.find(key);
        return it == flat.end() ? nullptr : &it->second;
    };

    ExperimentConfig cfg;
    auto& env = cfg.environment;
    const std::string kind = get("environment.kind") ? trim(*get("environment.kind")) : "queue";
    if (kind == "queue") env.kind = EnvironmentConfig::Kind::Queue;
    else if (kind == "random") env.kind = EnvironmentConfig::Kind::Random;
    else if (kind == "file") env.kind = EnvironmentConfig::Kind::File;
    else throw ConfigError("environment.kind must be queue, random or file, got '" + kind + "'");

    if (auto v = get("environment.buffer")) env.queue.buffer = int(to_int("environment.buffer", *v));
    if (auto v = get("environment.service")) env.queue.service = to_doubles("environment.service", *v);
    if (auto v = get("environment.flow")) env.queue.flow = to_doubles("environment.flow", *v);
    if (auto v = get("environment.states")) env.random_states = int(to_int("environment.states", *v));
    if (auto v = get("environment.actions")) env.random_actions = int(to_int("environment.actions", *v));
    if (auto v = get("environment.constraints")) env.random_constraints = int(to_int("environment.constraints", *v));
    if (auto v = get("environment.seed")) env.random_seed = std::uint64_t(to_int("environment.seed", *v));
    if (auto v = get("environment.min_prob")) env.random_min_prob = to_double("environment.min_prob", *v);
    if (auto v = get("environment.path")) {
        std::filesystem::path p = trim(*v);
        env.model_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (auto v = get("environment.initial_state")) env.initial_state = int(to_int("environment.initial_state", *v));
    if (env.kind == EnvironmentConfig::Kind::File && env.model_file.empty())
        throw ConfigError("environment.kind = file needs environment.path");

    if (auto v = get("learner.K")) {
        const std::string s = trim(*v);
        if (s != "auto") cfg.K = to_double("learner.K", s);
    }
    if (auto v = get("learner.lipschitz")) cfg.lipschitz = to_double("learner.lipschitz", *v);
    if (auto v = get("learner.T")) cfg.T = to_int("learner.T", *v);
    const auto* seeds = get("learner.seeds");
    const auto* count = get("learner.seed_count");
    if (seeds && count) throw ConfigError("give either learner.seeds or learner.seed_count, not both");
    if (seeds) {
        cfg.seeds.clear();
        for (const auto& item : split_list(*seeds)) {
            const auto s = to_int("learner.seeds", item);
            if (s < 0) throw ConfigError("learner.seeds entries must be >= 0");
            cfg.seeds.push_back(std::uint64_t(s));
        }
    }
    if (count) {
        const auto n = to_int("learner.seed_count", *count);
        if (n < 1) throw ConfigError("learner.seed_count must be >= 1");
        cfg.seeds.clear();
        for (std::int64_t s = 1; s <= n; ++s) cfg.seeds.push_back(std::uint64_t(s));
    }
    if (auto v = get("learner.update_every_step")) cfg.update_every_step = to_bool("learner.update_every_step", *v);
    if (auto v = get("learner.t_lower")) cfg.t_lower = to_double("learner.t_lower", *v);
    if (auto v = get("learner.epsilon_cap")) cfg.epsilon_cap = to_double("learner.epsilon_cap", *v);

    if (auto v = get("output.dir")) {
        std::filesystem::path p = trim(*v);
        cfg.out_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (auto v = get("output.stride")) cfg.stride = to_int("output.stride", *v);
    if (auto v = get("metric.recompute_oracle")) cfg.recompute_oracle = to_bool("metric.recompute_oracle", *v);

    cfg.validate();
    return cfg;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void ExperimentConfig::validate() const {
    if (T < 1) throw ConfigError("learner.T must be >= 1");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (stride < 1) throw ConfigError("output.stride must be >= 1");
    if (K && !(*K >= 0.0)) throw ConfigError("learner.K must be >= 0 or auto");
    if (!(lipschitz > 0.0)) throw ConfigError("learner.lipschitz must be > 0");
    if (t_lower && !(*t_lower >= std::exp(1.0))) throw ConfigError("learner.t_lower must be >= e");
    if (epsilon_cap && !(*epsilon_cap >= 0.0)) throw ConfigError("learner.epsilon_cap must be >= 0");
    if (environment.initial_state < 0) throw ConfigError("environment.initial_state must be >= 0");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw ConfigError("learner.seeds contains duplicates");
    if (environment.kind == EnvironmentConfig::Kind::Random) {
        const auto& e = environment;
        if (e.random_states < 1 || e.random_actions < 1 || e.random_constraints < 0)
            throw ConfigError("random environment needs states, actions >= 1 and constraints >= 0");
    }
}

ExperimentConfig parse_config_ini(const std::string& text, const std::filesystem::path& base_dir) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    Flat flat;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config key '" + section + "' is outside any [section]");
        for (const auto& [key, value] : body) {
            // Strip trailing "; comment" on the value line.
            std::string v = value.get_value<std::string>();
            if (auto pos = v.find(';'); pos != std::string::npos) v = v.substr(0, pos);
            flat[section + "." + key] = trim(v);
        }
    }
    return interpret(flat, base_dir);
}

ExperimentConfig parse_config_json(const std::string& text, const std::filesystem::path& base_dir) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("JSON config must be an object of sections");
    Flat flat;
    auto scalar = [](const std::string& key, const nlohmann::json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number()) {
            std::ostringstream ss;
            ss.precision(17);
            ss << v.get<double>();
            return ss.str();
        }
        throw ConfigError(key + ": unsupported JSON value");
    };
    for (const auto& [section, body] : doc.items()) {
        if (!body.is_object()) throw ConfigError("JSON config section '" + section + "' must be an object");
        for (const auto& [key, value] : body.items()) {
            const std::string full = section + "." + key;
            if (value.is_array()) {
                std::string joined;
                for (const auto& item : value) joined += (joined.empty() ? "" : ",") + scalar(full, item);
                flat[full] = joined;
            } else {
                flat[full] = scalar(full, value);
            }
        }
    }
    return interpret(flat, base_dir);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const auto base = path.parent_path();
    if (path.extension() == ".json") return parse_config_json(text, base);
    return parse_config_ini(text, base);
}

} // namespace cmdp
