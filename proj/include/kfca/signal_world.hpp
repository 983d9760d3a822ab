#pragma once

// Synthetic signal generation: latent truths, per-client noisy channels with
// effort, reporting strategies and the attack taxonomy.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kfca/common.hpp"
#include "kfca/rng.hpp"

namespace kfca {

inline constexpr double kProbabilityTolerance = 1e-12;

class LabelSpace {
 public:
  explicit LabelSpace(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool contains(Label a) const noexcept { return a < size_; }

  bool operator==(const LabelSpace&) const = default;

 private:
  std::size_t size_;
};

// Channel of one client: confusion(y, a) = P_i(a | y) under effort, baseline
// Q_i(a) when shirking, and the per-task effort probability eta_i.
struct ClientChannel {
  Matrix confusion;
  std::vector<double> baseline;
  double effort_prob = 1.0;
  bool informative = false;
};

class SignalWorld {
 public:
  SignalWorld(LabelSpace labels, std::vector<double> prior, std::vector<ClientChannel> clients);

  // Binary world, uniform prior, channel flips the truth with probability alphas[i].
  static SignalWorld binary_symmetric(std::span<const double> alphas, double effort_prob = 1.0);

  // L-ary world: P(y|y) = 1 - alpha_i, remaining mass spread evenly. Baseline uniform.
  static SignalWorld symmetric_noise(std::size_t labels, std::vector<double> prior,
                                     std::span<const double> alphas, double effort_prob = 1.0);

  const LabelSpace& labels() const noexcept { return labels_; }
  std::size_t label_count() const noexcept { return labels_.size(); }
  const std::vector<double>& prior() const noexcept { return prior_; }
  std::size_t num_clients() const noexcept { return clients_.size(); }
  const ClientChannel& client(std::size_t i) const;

  // Copy with client i's effort probability replaced.
  SignalWorld with_effort(std::size_t i, double effort_prob) const;

 private:
  LabelSpace labels_;
  std::vector<double> prior_;
  std::vector<ClientChannel> clients_;
};

std::vector<Label> sample_truths(const SignalWorld& world, std::size_t m, Stream& rng);

Label sample_signal(const SignalWorld& world, std::size_t client, Label truth, bool effort, Stream& rng);

// One signal per truth; effort drawn per task with the client's effort_prob.
std::vector<Label> sample_signals(const SignalWorld& world, std::size_t client,
                                  std::span<const Label> truths, Stream& rng);

enum class StrategyKind { kTruthful, kPermutation, kConstant, kDeterministicMap, kRandomized };

// Report map F(r | a). Deterministic kinds are stored as an explicit image vector.
class ReportStrategy {
 public:
  static ReportStrategy truthful(std::size_t labels);
  static ReportStrategy permutation(std::vector<Label> sigma);
  static ReportStrategy constant(std::size_t labels, Label r);
  static ReportStrategy deterministic(std::vector<Label> map);
  static ReportStrategy randomized(Matrix f);
  // Binary flip 1 - a, generalised to a -> L-1-a.
  static ReportStrategy flip(std::size_t labels);

  StrategyKind kind() const noexcept { return kind_; }
  std::size_t labels() const noexcept { return labels_; }
  bool is_deterministic() const noexcept { return kind_ != StrategyKind::kRandomized; }

  // Image of the deterministic map; throws for randomized strategies.
  const std::vector<Label>& map() const;
  // Row-stochastic F with F(a, r) = P(report r | signal a).
  Matrix as_matrix() const;

  std::string name() const;

 private:
  ReportStrategy(StrategyKind kind, std::size_t labels, std::vector<Label> map, Matrix f);

  StrategyKind kind_;
  std::size_t labels_;
  std::vector<Label> map_;
  Matrix f_;
};

Label apply_strategy(const ReportStrategy& strategy, Label signal, Stream& rng);

bool is_bijection(std::span<const Label> map);

enum class AttackKind { kHonest, kSignFlip, kZero, kRandom, kSparse, kLagged, kStale };

struct AttackSpec {
  AttackKind kind = AttackKind::kHonest;
  double honest_fraction = 1.0;  // Sparse only
  std::size_t lag = 1;           // Lagged only

  static AttackSpec honest() { return {}; }
  static AttackSpec sign_flip() { return {AttackKind::kSignFlip}; }
  static AttackSpec zero() { return {AttackKind::kZero}; }
  static AttackSpec random() { return {AttackKind::kRandom}; }
  static AttackSpec sparse(double p);
  static AttackSpec lagged(std::size_t k);
  static AttackSpec stale() { return {AttackKind::kStale}; }

  // Parses "honest", "signflip", "zero", "random", "sparse:0.75", "lagged:3", "stale".
  static AttackSpec parse(const std::string& text);
  // Inverse of parse; e.g. "sparse:0.75".
  std::string name() const;
  bool is_honest() const noexcept { return kind == AttackKind::kHonest; }

  bool operator==(const AttackSpec&) const = default;
};

// The constant label emitted by the Zero attack: sign(0) is encoded as +1,
// which is label index 1.
inline constexpr Label kZeroAttackLabel = 1;

// Report row for 1-based round t. history[s - 1] is the honest row of round s;
// it must hold rounds 1..t. Lagged(k) with t - k < 1 falls back to round 1.
std::vector<Label> apply_attack(const AttackSpec& attack, std::span<const std::vector<Label>> history,
                                std::size_t round, const LabelSpace& labels, StreamKey key);

// Task indices a Sparse(p) attacker reports honestly: exactly round(p * m)
// of them, chosen without replacement from the key's mask stream, sorted.
std::vector<std::size_t> sparse_honest_indices(std::size_t tasks, double honest_fraction, StreamKey key);

// Clients x tasks report table, row-major.
class ReportMatrix {
 public:
  ReportMatrix(std::size_t labels, std::size_t clients, std::size_t tasks);
  ReportMatrix(std::size_t labels, std::vector<std::vector<Label>> rows);

  std::size_t labels() const noexcept { return labels_; }
  std::size_t clients() const noexcept { return clients_; }
  std::size_t tasks() const noexcept { return tasks_; }

  std::span<const Label> row(std::size_t client) const;
  std::span<Label> row(std::size_t client);
  void set_row(std::size_t client, std::span<const Label> values);
  Label at(std::size_t client, std::size_t task) const { return data_[client * tasks_ + task]; }

  const std::vector<Label>& data() const noexcept { return data_; }
  bool operator==(const ReportMatrix&) const = default;

 private:
  std::size_t labels_;
  std::size_t clients_;
  std::size_t tasks_;
  std::vector<Label> data_;
};

struct NoiseProfileParams {
  double base_noise = 0.1;
  double skew_gain = 2.0;
  std::size_t classes = 10;  // dimension of the Dirichlet class-weight vector
};

inline constexpr double kMaxNoiseRate = 0.499;

// Per-client noise rates from a Dirichlet label-skew draw:
// alpha_i = base_noise * (1 + skew_gain * TV(w_i, uniform)), clipped to [0, 0.499].
std::vector<double> noniid_noise_profile(double concentration, std::size_t clients, Stream& rng,
                                         const NoiseProfileParams& params = {});

}  // namespace kfca
