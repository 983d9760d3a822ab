#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kfca/rng.hpp"
#include "kfca/signal_world.hpp"

namespace kfca {

// Bit i set <=> client i is in the coalition.
using Coalition = std::uint64_t;

inline constexpr std::size_t kMaxExactClients = 12;
inline constexpr std::size_t kMaxOracleClients = 30;

// Characteristic function v over client subsets. Evaluation must be
// deterministic; the estimators memoize it.
class CoalitionOracle {
 public:
  using Utility = std::function<double(Coalition)>;

  CoalitionOracle(std::size_t clients, Utility v);
  // values[mask] = v(mask); values.size() must be a power of two.
  static CoalitionOracle from_table(std::vector<double> values);

  std::size_t clients() const noexcept { return clients_; }
  Coalition grand() const noexcept { return (Coalition{1} << clients_) - 1; }
  double operator()(Coalition s) const { return v_(s); }
  double empty_value() const { return v_(0); }

 private:
  std::size_t clients_;
  Utility v_;
};

struct ShapleyResult {
  std::vector<double> values;
  std::size_t evaluations_used = 0;  // distinct coalitions evaluated
  std::size_t permutations_used = 0;  // estimators only
  bool converged = true;
};

// Subset-weighted form: phi_i = sum_{S not containing i} |S|!(n-|S|-1)!/n! (v(S+i) - v(S)).
// Throws kTooManyClients for n > 12.
ShapleyResult exact_shapley(const CoalitionOracle& oracle);

struct McShapleyConfig {
  std::size_t max_permutations = 1000;
  // Marginals after position 0 are zeroed once |v(N) - v(S)| <= eps. Unset
  // means 0.001 * |v(N) - v(empty)|.
  std::optional<double> truncation_eps = 0.0;
  bool use_stopping_rule = true;
  std::size_t window = 10;
  double tolerance = 0.05;
};

// Permutations are drawn from key/permutation/h and evaluated in fixed-size
// blocks, so results do not depend on the worker count. After permutation
// h > window the relative-change criterion over the last `window` snapshots
// is checked; converged reports whether it fired.
ShapleyResult mc_shapley(const CoalitionOracle& oracle, const McShapleyConfig& config, StreamKey key,
                         std::size_t workers = 1);

// Relative-change stopping statistic at snapshot h (history[h] = phi after h
// permutations, history[0] unused): (1 / (N l)) sum_{j=1..l} sum_i |phi^h_i - phi^{h-j}_i| / |phi^h_i|,
// skipping terms with |phi^h_i| < 1e-9 and shrinking the divisor to match.
double stopping_statistic(std::span<const std::vector<double>> history, std::size_t h, std::size_t window);

// Negative entries clamp to 0, then divide by the sum. Throws kDegenerateRewards
// when nothing positive remains.
std::vector<double> normalize_rewards(std::span<const double> q);

struct RewardDistance {
  double cosine = 0.0;  // 1 - cos(exact, q)
  double euclidean = 0.0;
  double max_diff = 0.0;
};

// The candidate is normalized first; the reference is used as given.
// Throws kLengthMismatch, kZeroVector (all-zero reference) or kDegenerateRewards.
RewardDistance distance_metrics(std::span<const double> exact, std::span<const double> candidate);

// v(S) = P(plurality vote of S's signals equals the truth), ties split evenly
// among the tied labels; v(empty) = 1/L. Signals are drawn with each client's
// effort mixture eta P_i + (1 - eta) Q_i. Requires L <= 15 and n <= 15.
CoalitionOracle signal_utility_oracle(const SignalWorld& world);

}  // namespace kfca
