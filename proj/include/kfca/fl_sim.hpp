#pragma once
// Multi-round federated loop with training replaced by synthetic signals.
// KFCA-D scores label predictions over [L]; KFCA-QP scores sign-quantised
// update coordinates over the binary alphabet.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kfca/delta.hpp"
#include "kfca/mechanisms.hpp"
#include "kfca/signal_world.hpp"
#include "kfca/stats.hpp"

namespace kfca {

enum class SimMode { kKfcaD, kKfcaQP };
enum class ScoringMode { kKfca, kCaEmpirical };

std::string_view to_string(SimMode mode);
std::string_view to_string(ScoringMode mode);
SimMode parse_sim_mode(std::string_view text);
ScoringMode parse_scoring_mode(std::string_view text);

struct SimConfig {
  SimMode mode = SimMode::kKfcaD;
  ScoringMode scoring = ScoringMode::kKfca;
  std::size_t rounds = 10;
  std::size_t clients = 11;
  std::size_t peers = 4;
  std::size_t tasks = 10000;
  PartitionFractions fractions{};
  // World. KFCA-QP forces labels = 2.
  std::size_t labels = 2;
  std::vector<double> prior;   // empty: uniform
  double alpha = 0.1;          // shared noise rate when neither alphas nor concentration is set
  std::vector<double> alphas;  // explicit per-client noise rates
  std::optional<double> concentration;  // Dirichlet non-IID noise profile
  NoiseProfileParams noise{};
  double effort = 1.0;
  // Probability that a truth coordinate carries over from the previous round.
  double rho = 0.8;
  // One spec per client; empty means all honest.
  std::vector<AttackSpec> attacks;
  std::uint64_t seed = 0;

  std::size_t label_count() const { return mode == SimMode::kKfcaQP ? 2 : labels; }
  const AttackSpec& attack_of(std::size_t client) const;
  // Throws kConfig naming the violated constraint.
  void validate() const;
};

// Noise rates actually used: explicit alphas, else the non-IID profile drawn
// from seed/noise-profile, else alpha for every client.
std::vector<double> resolve_alphas(const SimConfig& config);
SignalWorld build_world(const SimConfig& config);

struct PairVerdict {
  std::size_t i = 0;
  std::size_t j = 0;
  DeltaMatrix delta;
  CategoricalVerdict verdict;
};

struct RoundOutcome {
  std::size_t round = 0;
  std::vector<RewardRecord> rewards;  // one per client, by client index
  std::vector<PairVerdict> verdicts;  // floor(n/2) disjoint random pairs
  double honest_mean = 0.0;
  double attacker_mean = 0.0;         // NaN without attackers
};

struct SimulationResult {
  SimConfig config;
  std::vector<double> alphas;
  std::vector<RoundOutcome> rounds;
};

// Rounds run sequentially; within a round, clients run in parallel on keyed
// streams, so the output is identical for every worker count.
SimulationResult run_simulation(const SimConfig& config, std::size_t workers = 1);

// Per-client mean reward over rounds first..last (1-based, inclusive).
std::vector<MeanEstimate> client_reward_means(const SimulationResult& result, std::size_t first, std::size_t last);

struct StrategyReward {
  AttackSpec attack;
  std::size_t clients = 0;
  MeanEstimate reward;  // over per-round means of the clients using this spec
};

// Grouped by distinct AttackSpec in first-appearance order.
std::vector<StrategyReward> strategy_rewards(const SimulationResult& result, std::size_t first, std::size_t last);

struct HeterogeneityPoint {
  double concentration = 0.0;
  double mean_alpha = 0.0;
  std::size_t honest_pairs = 0;
  double categorical_fraction = 0.0;  // over sampled honest-honest pairs
  double honest_mean = 0.0;
  double flip_mean = 0.0;  // NaN without a SignFlip client
  double gap = 0.0;
};

// One simulation per concentration. The noise-profile stream is keyed by the
// base seed only, so the levels are paired draws.
std::vector<HeterogeneityPoint> heterogeneity_sweep(const std::vector<double>& concentrations,
                                                    const SimConfig& base, std::size_t workers = 1);

struct LagPoint {
  AttackSpec attack;
  MeanEstimate reward;  // over rounds in the common window
};

// Mean reward per strategy over rounds t > max lag, where every Lagged(k)
// and Stale client reports an actually stale row. Honest comes first, then
// the attackers in first-appearance order.
std::vector<LagPoint> lagged_reward_profile(const SimConfig& config, std::size_t workers = 1);

}  // namespace kfca
