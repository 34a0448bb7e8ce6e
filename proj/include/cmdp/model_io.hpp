#pragma once

#include "cmdp/model.hpp"

#include <filesystem>
#include <string>

namespace cmdp {

/// JSON document {n_states, n_actions, d, reward, costs, transition}; all
/// tables are nested arrays indexed [s][a] (costs [i][s][a], transition
/// [s][a][s']).
std::string model_to_json(const TabularCmdp& model);

/// Parses and validates a model document. Throws InvalidSpec.
TabularCmdp model_from_json(const std::string& text);

TabularCmdp load_model(const std::filesystem::path& path);
void save_model(const TabularCmdp& model, const std::filesystem::path& path);

} // namespace cmdp
