#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kfca/common.hpp"
#include "kfca/delta.hpp"
#include "kfca/rng.hpp"
#include "kfca/signal_world.hpp"

namespace kfca {

enum class ScoreKind { kCA, kKFCA };

// L x L scoring rule with entries in {0, 1}.
class ScoreMatrix {
 public:
  static ScoreMatrix kfca(std::size_t labels);

  ScoreKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return labels_; }
  int operator()(Label a, Label b) const { return cells_[a * labels_ + b]; }
  Matrix as_matrix() const;

 private:
  friend ScoreMatrix ca_score_matrix(const DeltaMatrix& delta);
  ScoreMatrix(ScoreKind kind, std::size_t labels, std::vector<std::uint8_t> cells);

  ScoreKind kind_;
  std::size_t labels_;
  std::vector<std::uint8_t> cells_;
};

// S(a, b) = 1 exactly where Delta(a, b) > 0.
ScoreMatrix ca_score_matrix(const DeltaMatrix& delta);

// E(F1, F2) = sum_{a,b} Delta(a,b) sum_{r1,r2} S(r1,r2) F1(r1|a) F2(r2|b).
double expected_reward(const DeltaMatrix& delta, const ScoreMatrix& score, const ReportStrategy& f1,
                       const ReportStrategy& f2);

// Deterministic fast path: sum_{a,b} Delta(a,b) S(f1(a), f2(b)).
double expected_reward(const DeltaMatrix& delta, const ScoreMatrix& score, std::span<const Label> f1,
                       std::span<const Label> f2);

// sum_{a,b} Delta(a,b) 1{f1(a) = f2(b)}.
double kfca_expected_reward(const DeltaMatrix& delta, std::span<const Label> f1, std::span<const Label> f2);
double kfca_expected_reward(const DeltaMatrix& delta, const ReportStrategy& f1, const ReportStrategy& f2);

struct PartitionFractions {
  double bonus = 0.5;
  double penalty_1 = 0.25;
  double penalty_2 = 0.25;
};

// Disjoint bonus and penalty task sets, each sorted ascending.
struct TaskPartition {
  std::vector<std::size_t> bonus;
  std::vector<std::size_t> penalty_1;
  std::vector<std::size_t> penalty_2;
};

// Set sizes floor(m * fraction), at least 1 each; when the minimum-size bumps
// overflow m the bonus set shrinks. Throws kTooFewTasks for m < 3.
TaskPartition make_partition(std::size_t m, const PartitionFractions& fractions, Stream& rng);

struct PaymentResult {
  std::vector<int> payments;  // one per bonus task, in bonus order; values in {-1, 0, 1}
  double mean = 0.0;
};

// For each bonus task k, fresh p1 ~ U(M_1), p2 ~ U(M_2):
// S(r_i[k], r_j[k]) - S(r_i[p1], r_j[p2]).
PaymentResult mtpp_payment(std::span<const Label> reports_i, std::span<const Label> reports_j,
                           const TaskPartition& partition, const ScoreMatrix& score, Stream& rng);

struct RewardRecord {
  std::size_t client = 0;
  std::size_t round = 0;
  double reward = 0.0;
  std::size_t peers_used = 0;
  std::size_t bonus_tasks = 0;
};

// Per-pair score matrices for CA in estimation mode, built from the empirical
// delta of every client pair in the report matrix: O(n^2 (m + L^2)).
class PairwiseScores {
 public:
  explicit PairwiseScores(const ReportMatrix& reports);

  const ScoreMatrix& operator()(std::size_t i, std::size_t j) const { return scores_[i * clients_ + j]; }
  std::size_t clients() const noexcept { return clients_; }

 private:
  std::size_t clients_;
  std::vector<ScoreMatrix> scores_;
};

// Peers sampled uniformly without replacement from N \ {target} using
// key/peers; payments against peer j use key/payment/j.
RewardRecord client_reward(std::size_t target, const ReportMatrix& reports, const TaskPartition& partition,
                           const ScoreMatrix& score, std::size_t peers, StreamKey key);

RewardRecord client_reward(std::size_t target, const ReportMatrix& reports, const TaskPartition& partition,
                           const PairwiseScores& scores, std::size_t peers, StreamKey key);

// Uniform without replacement from [0, clients) \ {target}, in draw order.
std::vector<std::size_t> sample_peers(std::size_t target, std::size_t clients, std::size_t peers, Stream& rng);

}  // namespace kfca
