#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kfca/fl_sim.hpp"

namespace kfca {

struct BenchPoint {
  ScoringMode scoring = ScoringMode::kKfca;
  std::size_t clients = 0;
  std::size_t peers = 0;
  std::size_t tasks = 0;
  std::vector<double> seconds;  // one per repeat
  double median_seconds = 0.0;
  double reward_sum = 0.0;  // sum of client rewards in one round
};

// Wall-clock of one round of reward computation for every client on a fixed
// binary report matrix (alpha = 0.1). CA-empirical includes building the
// per-pair score matrices. Single-threaded; report generation is not timed.
BenchPoint measure_reward_round(ScoringMode scoring, std::size_t clients, std::size_t peers, std::size_t tasks,
                                std::size_t repeats, std::uint64_t seed);

// measure_reward_round over every (peers, clients) pair, peers-major. Repeats
// go round-robin across the grid so slow machine drift does not land on a
// single point.
std::vector<BenchPoint> measure_scaling(ScoringMode scoring, std::span<const std::size_t> clients,
                                        std::span<const std::size_t> peers, std::size_t tasks, std::size_t repeats,
                                        std::uint64_t seed);

}  // namespace kfca
