#pragma once
// Brute-force strategy-space checks and honest-reward analysis under a mix of
// honest and malicious peers.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kfca/delta.hpp"
#include "kfca/mechanisms.hpp"
#include "kfca/signal_world.hpp"
#include "kfca/stats.hpp"

namespace kfca {

inline constexpr std::size_t kMaxEnumerationLabels = 5;

// Deterministic report map [L] -> [L], L <= kMaxEnumerationLabels, stored
// inline so that full L = 5 enumerations stay within a few hundred MB.
class StrategyMap {
 public:
  StrategyMap() = default;
  explicit StrategyMap(std::span<const Label> image);
  // The code-th map in base-L order: image[a] is digit a (least significant first).
  static StrategyMap from_code(std::size_t labels, std::uint32_t code);

  std::size_t size() const noexcept { return size_; }
  Label operator()(Label a) const { return image_[a]; }
  std::vector<Label> image() const;
  bool is_bijection() const;
  bool is_identity() const;
  bool operator==(const StrategyMap&) const = default;

 private:
  std::vector<Label> image_;
  std::size_t size_ = 0;
};

struct StrategyProfileScore {
  double value = 0.0;
  StrategyMap f1;
  StrategyMap f2;
  bool is_shared_bijection = false;
};

// Every deterministic (f1, f2) pair scored by expected_reward, sorted by value
// descending; ties keep enumeration order (f1 code major, f2 code minor).
// Throws kLabelSpaceTooLarge for L > 5.
std::vector<StrategyProfileScore> enumerate_profiles(const DeltaMatrix& delta, const ScoreMatrix& score,
                                                     std::size_t workers = 1);

struct ProfileSummary {
  double max_value = 0.0;
  std::size_t maximizer_count = 0;
  bool maximizers_all_shared_bijections = false;
  double truthful_value = 0.0;
  bool truthful_is_maximizer = false;
  // Largest value among profiles outside the maximizer set (NaN if none).
  double runner_up_value = 0.0;
  // Largest value among profiles that are not shared bijections (NaN if none).
  double best_non_bijective_value = 0.0;
  std::size_t profile_count = 0;
};

// Maximizers are the profiles within tol of the top value.
ProfileSummary summarize_profiles(std::span<const StrategyProfileScore> profiles, double tol = 1e-12);

// Non-exhaustive search for L > 5: the best of `samples` random deterministic
// profiles plus the truthful one.
StrategyProfileScore random_profile_search(const DeltaMatrix& delta, const ScoreMatrix& score,
                                           std::size_t samples, Stream& rng);

// Rejection sampler: a random prior and two random diagonal-leaning channels,
// redrawn until the analytic delta is categorical. Throws kNotCategorical when
// max_attempts draws all fail.
DeltaMatrix random_categorical_delta(std::size_t labels, Stream& rng, std::size_t max_attempts = 10000);

// (1 - 2 lambda) (1/2 - 2 alpha (1 - alpha)).
double binary_robustness(double alpha, double lambda);

struct MulticlassRobustness {
  double a = 0.0;
  double b = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  std::optional<double> threshold;  // (A - E_penalty) / (A - B), only when A > B
};

MulticlassRobustness multiclass_robustness(std::span<const double> prior, const Matrix& honest,
                                           const Matrix& malicious, double lambda);

// (1 - 2 lambda) (D + |O|), D = sum_a Delta(a,a), |O| = -sum_a Delta(a, pi(a)).
// Throws kNotCategorical, or kInvalidArgument when pi is not a non-identity bijection.
double permutation_differential(const DeltaMatrix& delta, std::span<const Label> pi, double lambda);

// Non-identity bijection maximising |O|; the lexicographically first on ties. L <= 5.
std::vector<Label> worst_case_permutation(const DeltaMatrix& delta);

// Effective channel P(report | truth) of an attacker whose own signal channel
// is `channel`, for single-round attacks. Lagged and Stale need history and
// throw kInvalidArgument. Sparse uses the realised honest share round(p m) / m.
Matrix attack_channel(const AttackSpec& attack, const Matrix& channel, std::size_t tasks);

struct AttackerCount {
  std::size_t attackers = 0;
  double realized_lambda = 0.0;  // attackers / (n - 1): the share an honest client's peers are drawn from
};

// round(lambda (n - 1)) attackers among n clients.
AttackerCount attackers_for(double lambda, std::size_t clients);

struct RobustnessConfig {
  double lambda = 0.0;
  AttackSpec attack = AttackSpec::sign_flip();
  std::size_t clients = 11;
  std::size_t tasks = 10000;
  std::size_t peers = 4;
  std::size_t trials = 200;
  PartitionFractions fractions{};
};

struct RobustnessReport {
  double lambda = 0.0;
  double realized_lambda = 0.0;
  std::size_t attackers = 0;
  double analytic_reward = 0.0;
  double simulated_mean = 0.0;
  double simulated_stderr = 0.0;
  std::size_t trials = 0;
  std::optional<double> threshold;
};

// Honest client reward under KFCA scoring, averaged over honest clients per
// trial and reported as mean +- stderr over trials. Client c uses world
// channel c mod |world|; the last `attackers` clients attack. The analytic
// value is the exact mixture (1 - lambda) D_hh + lambda D_hm of client 0.
RobustnessReport simulate_robustness(const SignalWorld& world, const RobustnessConfig& config, StreamKey key,
                                     std::size_t workers = 1);

struct PermutationGapConfig {
  double lambda = 0.0;
  std::size_t background = 20;  // clients other than the probe
  std::size_t tasks = 10000;
  std::size_t peers = 4;
  std::size_t trials = 200;
  PartitionFractions fractions{};
};

struct PermutationGapReport {
  double lambda = 0.0;
  double realized_lambda = 0.0;
  std::size_t flippers = 0;
  double analytic = 0.0;
  MeanEstimate measured;
};

// A probe client is scored twice per trial against the same background
// population (round(lambda * background) of which apply pi): once reporting
// truthfully and once reporting pi(signal). Peers, partition and penalty
// draws are shared, so the per-trial difference is a paired estimate.
// All clients use world channel 0.
PermutationGapReport measure_permutation_gap(const SignalWorld& world, std::span<const Label> pi,
                                             const PermutationGapConfig& config, StreamKey key,
                                             std::size_t workers = 1);

}  // namespace kfca
