#include "kfca/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kfca {

ScoreMatrix::ScoreMatrix(ScoreKind kind, std::size_t labels, std::vector<std::uint8_t> cells)
    : kind_(kind), labels_(labels), cells_(std::move(cells)) {}

ScoreMatrix ScoreMatrix::kfca(std::size_t labels) {
  static_cast<void>(LabelSpace(labels));
  std::vector<std::uint8_t> cells(labels * labels, 0);
  for (std::size_t a = 0; a < labels; ++a) cells[a * labels + a] = 1;
  return ScoreMatrix(ScoreKind::kKFCA, labels, std::move(cells));
}

Matrix ScoreMatrix::as_matrix() const {
  Matrix m(labels_, labels_);
  for (std::size_t a = 0; a < labels_; ++a)
    for (std::size_t b = 0; b < labels_; ++b) m(a, b) = cells_[a * labels_ + b];
  return m;
}

ScoreMatrix ca_score_matrix(const DeltaMatrix& delta) {
  const std::size_t l = delta.size();
  std::vector<std::uint8_t> cells(l * l, 0);
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b) cells[a * l + b] = delta(a, b) > 0.0 ? 1 : 0;
  return ScoreMatrix(ScoreKind::kCA, l, std::move(cells));
}

namespace {

void require_same_size(const DeltaMatrix& delta, std::size_t f1, std::size_t f2) {
  if (f1 != delta.size() || f2 != delta.size()) {
    throw Error(Errc::kLengthMismatch, "strategy and delta label counts differ");
  }
}

}  // namespace

double expected_reward(const DeltaMatrix& delta, const ScoreMatrix& score, std::span<const Label> f1,
                       std::span<const Label> f2) {
  require_same_size(delta, f1.size(), f2.size());
  const std::size_t l = delta.size();
  double e = 0.0;
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b) e += delta(a, b) * score(f1[a], f2[b]);
  return e;
}

double expected_reward(const DeltaMatrix& delta, const ScoreMatrix& score, const ReportStrategy& f1,
                       const ReportStrategy& f2) {
  require_same_size(delta, f1.labels(), f2.labels());
  if (f1.is_deterministic() && f2.is_deterministic()) return expected_reward(delta, score, f1.map(), f2.map());
  // M(a, b) = sum_{r1, r2} F1(a, r1) S(r1, r2) F2(b, r2)
  const Matrix m = f1.as_matrix() * score.as_matrix() * f2.as_matrix().transpose();
  double e = 0.0;
  for (std::size_t a = 0; a < delta.size(); ++a)
    for (std::size_t b = 0; b < delta.size(); ++b) e += delta(a, b) * m(a, b);
  return e;
}

double kfca_expected_reward(const DeltaMatrix& delta, std::span<const Label> f1, std::span<const Label> f2) {
  require_same_size(delta, f1.size(), f2.size());
  const std::size_t l = delta.size();
  double e = 0.0;
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b)
      if (f1[a] == f2[b]) e += delta(a, b);
  return e;
}

double kfca_expected_reward(const DeltaMatrix& delta, const ReportStrategy& f1, const ReportStrategy& f2) {
  if (f1.is_deterministic() && f2.is_deterministic()) return kfca_expected_reward(delta, f1.map(), f2.map());
  require_same_size(delta, f1.labels(), f2.labels());
  // Agreement probability of the two report distributions.
  const Matrix g1 = f1.as_matrix(), g2 = f2.as_matrix();
  const std::size_t l = delta.size();
  double e = 0.0;
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b) {
      double agree = 0.0;
      for (std::size_t r = 0; r < l; ++r) agree += g1(a, r) * g2(b, r);
      e += delta(a, b) * agree;
    }
  return e;
}

TaskPartition make_partition(std::size_t m, const PartitionFractions& fractions, Stream& rng) {
  if (m < 3) throw Error(Errc::kTooFewTasks, "MTPP needs m >= 3 tasks (one bonus and two penalty sets)");
  const double fb = fractions.bonus, f1 = fractions.penalty_1, f2 = fractions.penalty_2;
  if (!(fb > 0.0 && f1 > 0.0 && f2 > 0.0) || fb + f1 + f2 > 1.0 + 1e-12) {
    throw Error(Errc::kInvalidArgument, "partition fractions must be positive and sum to at most 1");
  }
  const double dm = static_cast<double>(m);
  auto size_of = [&](double f) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(dm * f))); };
  const std::size_t n1 = size_of(f1);
  const std::size_t n2 = size_of(f2);
  std::size_t nb = size_of(fb);
  if (nb + n1 + n2 > m) nb = m - n1 - n2;  // n1 + n2 <= m - 1 whenever m >= 3

  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = nb + n1 + n2;
  for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + rng.below(m - i)]);

  TaskPartition p;
  auto first = idx.begin();
  p.bonus.assign(first, first + static_cast<std::ptrdiff_t>(nb));
  p.penalty_1.assign(first + static_cast<std::ptrdiff_t>(nb), first + static_cast<std::ptrdiff_t>(nb + n1));
  p.penalty_2.assign(first + static_cast<std::ptrdiff_t>(nb + n1), first + static_cast<std::ptrdiff_t>(take));
  std::sort(p.bonus.begin(), p.bonus.end());
  std::sort(p.penalty_1.begin(), p.penalty_1.end());
  std::sort(p.penalty_2.begin(), p.penalty_2.end());
  return p;
}

namespace {

void require_covers(std::span<const Label> ri, std::span<const Label> rj, const TaskPartition& partition) {
  if (ri.size() != rj.size()) throw Error(Errc::kLengthMismatch, "report vectors differ in length");
  if (partition.bonus.empty() || partition.penalty_1.empty() || partition.penalty_2.empty()) {
    throw Error(Errc::kInvalidArgument, "partition has an empty task set");
  }
  std::size_t top = 0;
  for (const auto* set : {&partition.bonus, &partition.penalty_1, &partition.penalty_2}) {
    top = std::max(top, *std::max_element(set->begin(), set->end()));
  }
  if (top >= ri.size()) throw Error(Errc::kLengthMismatch, "partition indexes past the report length");
}

// Sum of per-bonus-task payments; the same draw order as mtpp_payment.
template <typename Score>
long long payment_sum(std::span<const Label> ri, std::span<const Label> rj, const TaskPartition& partition,
                      const Score& score, Stream& rng) {
  const auto& m1 = partition.penalty_1;
  const auto& m2 = partition.penalty_2;
  long long total = 0;
  for (std::size_t k : partition.bonus) {
    const std::size_t p1 = m1[rng.below(m1.size())];
    const std::size_t p2 = m2[rng.below(m2.size())];
    total += score(ri[k], rj[k]) - score(ri[p1], rj[p2]);
  }
  return total;
}

struct AgreeScore {
  int operator()(Label a, Label b) const { return a == b ? 1 : 0; }
};

template <typename ScoreFor>
RewardRecord reward_impl(std::size_t target, const ReportMatrix& reports, const TaskPartition& partition,
                         std::size_t peers, StreamKey key, ScoreFor&& score_for) {
  const std::size_t n = reports.clients();
  if (n < 2 || peers < 1 || peers > n - 1) {
    throw Error(Errc::kNotEnoughPeers, "need 1 <= P <= n - 1 peers (n = " + std::to_string(n) +
                                           ", P = " + std::to_string(peers) + ")");
  }
  if (target >= n) throw Error(Errc::kInvalidArgument, "target client out of range");
  Stream peer_rng = key.child(stream_tag::kPeers).stream();
  const auto chosen = sample_peers(target, n, peers, peer_rng);
  const auto ri = reports.row(target);
  long long total = 0;
  for (std::size_t j : chosen) {
    const auto rj = reports.row(j);
    require_covers(ri, rj, partition);
    Stream pay_rng = key.child({stream_tag::kPayment, j}).stream();
    total += score_for(j, ri, rj, pay_rng);
  }
  RewardRecord rec;
  rec.client = target;
  rec.peers_used = chosen.size();
  rec.bonus_tasks = partition.bonus.size();
  rec.reward = static_cast<double>(total) / (static_cast<double>(peers) * static_cast<double>(partition.bonus.size()));
  return rec;
}

}  // namespace

PaymentResult mtpp_payment(std::span<const Label> reports_i, std::span<const Label> reports_j,
                           const TaskPartition& partition, const ScoreMatrix& score, Stream& rng) {
  require_covers(reports_i, reports_j, partition);
  PaymentResult out;
  out.payments.reserve(partition.bonus.size());
  const auto& m1 = partition.penalty_1;
  const auto& m2 = partition.penalty_2;
  long long total = 0;
  for (std::size_t k : partition.bonus) {
    const std::size_t p1 = m1[rng.below(m1.size())];
    const std::size_t p2 = m2[rng.below(m2.size())];
    const int pay = score(reports_i[k], reports_j[k]) - score(reports_i[p1], reports_j[p2]);
    out.payments.push_back(pay);
    total += pay;
  }
  out.mean = static_cast<double>(total) / static_cast<double>(partition.bonus.size());
  return out;
}

std::vector<std::size_t> sample_peers(std::size_t target, std::size_t clients, std::size_t peers, Stream& rng) {
  std::vector<std::size_t> pool;
  pool.reserve(clients - 1);
  for (std::size_t j = 0; j < clients; ++j)
    if (j != target) pool.push_back(j);
  if (peers > pool.size()) throw Error(Errc::kNotEnoughPeers, "more peers requested than available");
  for (std::size_t i = 0; i < peers; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(peers);
  return pool;
}

RewardRecord client_reward(std::size_t target, const ReportMatrix& reports, const TaskPartition& partition,
                           const ScoreMatrix& score, std::size_t peers, StreamKey key) {
  if (score.size() != reports.labels()) throw Error(Errc::kLengthMismatch, "score and report label counts differ");
  if (score.kind() == ScoreKind::kKFCA) {
    return reward_impl(target, reports, partition, peers, key, [&](std::size_t, auto ri, auto rj, Stream& rng) {
      return payment_sum(ri, rj, partition, AgreeScore{}, rng);
    });
  }
  return reward_impl(target, reports, partition, peers, key, [&](std::size_t, auto ri, auto rj, Stream& rng) {
    return payment_sum(ri, rj, partition, score, rng);
  });
}

RewardRecord client_reward(std::size_t target, const ReportMatrix& reports, const TaskPartition& partition,
                           const PairwiseScores& scores, std::size_t peers, StreamKey key) {
  if (scores.clients() != reports.clients()) throw Error(Errc::kLengthMismatch, "pairwise scores do not match reports");
  return reward_impl(target, reports, partition, peers, key, [&](std::size_t j, auto ri, auto rj, Stream& rng) {
    return payment_sum(ri, rj, partition, scores(target, j), rng);
  });
}

PairwiseScores::PairwiseScores(const ReportMatrix& reports) : clients_(reports.clients()) {
  const std::size_t n = clients_;
  scores_.assign(n * n, ScoreMatrix::kfca(reports.labels()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const DeltaMatrix d = empirical_delta(reports.row(i), reports.row(j), reports.labels());
      scores_[i * n + j] = ca_score_matrix(d);
      scores_[j * n + i] = ca_score_matrix(d.transpose());
    }
}

}  // namespace kfca
