#include "cmdp/model_io.hpp"

#include "cmdp/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace cmdp {

using nlohmann::json;

namespace {

json table_to_json(const Matrix& t) {
    json rows = json::array();
    for (Eigen::Index s = 0; s < t.rows(); ++s) {
        json row = json::array();
        for (Eigen::Index a = 0; a < t.cols(); ++a) row.push_back(t(s, a));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix table_from_json(const json& j, int S, int A, const char* name) {
    if (!j.is_array() || int(j.size()) != S) throw InvalidSpec(std::string(name) + ": expected " + std::to_string(S) + " rows");
    Matrix t(S, A);
    for (int s = 0; s < S; ++s) {
        const auto& row = j[std::size_t(s)];
        if (!row.is_array() || int(row.size()) != A)
            throw InvalidSpec(std::string(name) + ": row " + std::to_string(s) + " needs " + std::to_string(A) + " entries");
        for (int a = 0; a < A; ++a) t(s, a) = row[std::size_t(a)].get<double>();
    }
    return t;
}

} // namespace

std::string model_to_json(const TabularCmdp& m) {
    json j;
    j["n_states"] = m.n_states;
    j["n_actions"] = m.n_actions;
    j["d"] = m.d();
    j["reward"] = table_to_json(m.reward);
    json costs = json::array();
    for (const auto& c : m.costs) costs.push_back(table_to_json(c));
    j["costs"] = std::move(costs);
    json tr = json::array();
    for (int s = 0; s < m.n_states; ++s) {
        json per_action = json::array();
        for (int a = 0; a < m.n_actions; ++a) {
            auto row = m.transition.row(s, a);
            per_action.push_back(json(std::vector<double>(row.begin(), row.end())));
        }
        tr.push_back(std::move(per_action));
    }
    j["transition"] = std::move(tr);
    return j.dump(2);
}

TabularCmdp model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("model JSON: ") + e.what());
    }
    try {
        TabularCmdp m;
        m.n_states = j.at("n_states").get<int>();
        m.n_actions = j.at("n_actions").get<int>();
        const int d = j.at("d").get<int>();
        if (m.n_states < 1 || m.n_actions < 1 || d < 0) throw InvalidSpec("model JSON: bad dimensions");
        m.reward = table_from_json(j.at("reward"), m.n_states, m.n_actions, "reward");
        const auto& costs = j.at("costs");
        if (!costs.is_array() || int(costs.size()) != d) throw InvalidSpec("model JSON: costs must hold d tables");
        for (const auto& c : costs) m.costs.push_back(table_from_json(c, m.n_states, m.n_actions, "costs"));
        const auto& tr = j.at("transition");
        if (!tr.is_array() || int(tr.size()) != m.n_states) throw InvalidSpec("model JSON: transition needs S blocks");
        m.transition = TransitionKernel(m.n_states, m.n_actions);
        for (int s = 0; s < m.n_states; ++s) {
            const auto& block = tr[std::size_t(s)];
            if (!block.is_array() || int(block.size()) != m.n_actions) throw InvalidSpec("model JSON: transition block needs A rows");
            for (int a = 0; a < m.n_actions; ++a) {
                const auto& row = block[std::size_t(a)];
                if (!row.is_array() || int(row.size()) != m.n_states) throw InvalidSpec("model JSON: transition row needs S entries");
                for (int n = 0; n < m.n_states; ++n) m.transition(s, a, n) = row[std::size_t(n)].get<double>();
            }
        }
        require_valid(m);
        return m;
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("model JSON: ") + e.what());
    }
}

TabularCmdp load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

void save_model(const TabularCmdp& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file " + path.string());
    out << model_to_json(model) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace cmdp
