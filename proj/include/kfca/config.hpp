#pragma once
// Sectioned key=value simulation configs.
//
//   [simulation]  mode, scoring, rounds, clients, peers, tasks, seed, rho
//   [world]       labels, prior (comma list), alpha, alphas (comma list), effort
//   [noise]       concentration, base_noise, skew_gain, classes
//   [partition]   bonus, penalty_1, penalty_2
//   [attacks]     population, e.g. "honest*10, sparse:0.75, zero, signflip"
//
// Unknown sections or keys are config errors. When a population is given it
// fixes the client count.

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "kfca/fl_sim.hpp"

namespace kfca {

struct ConfigKeyDoc {
  std::string_view section;
  std::string_view key;
  std::string_view default_value;
  std::string_view meaning;
};

const std::vector<ConfigKeyDoc>& sim_config_keys();

// Overrides are "section.key=value" strings applied on top of the file.
// Throws kConfig.
SimConfig parse_sim_config(std::istream& in, const std::vector<std::string>& overrides = {});
SimConfig parse_sim_config_text(std::string_view text, const std::vector<std::string>& overrides = {});
SimConfig load_sim_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Canonical text with every key resolved; parse_sim_config_text round-trips it.
std::string sim_config_to_ini(const SimConfig& config);

// "honest*10, lagged:2, stale" -> one spec per client.
std::vector<AttackSpec> parse_population(std::string_view text);
std::string population_to_string(const std::vector<AttackSpec>& attacks);

std::vector<double> parse_number_list(std::string_view text);

}  // namespace kfca
