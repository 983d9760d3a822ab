#include "kfca/bench.hpp"

#include <algorithm>
#include <chrono>

namespace kfca {

namespace {

// Fixed binary report matrix plus partition; only round() is timed.
class Fixture {
 public:
  Fixture(ScoringMode scoring, std::size_t clients, std::size_t peers, std::size_t tasks, std::uint64_t seed)
      : scoring_(scoring), peers_(peers), root_(seed), reports_(2, clients, tasks) {
    const std::vector<double> alphas(clients, 0.1);
    const SignalWorld world = SignalWorld::binary_symmetric(alphas);
    Stream truth_rng = root_.child(stream_tag::kTruth).stream();
    const auto truths = sample_truths(world, tasks, truth_rng);
    for (std::size_t c = 0; c < clients; ++c) {
      Stream rng = root_.child({stream_tag::kClient, c, stream_tag::kSignal}).stream();
      reports_.set_row(c, sample_signals(world, c, truths, rng));
    }
    Stream part_rng = root_.child(stream_tag::kPartition).stream();
    partition_ = make_partition(tasks, PartitionFractions{}, part_rng);
  }

  // Seconds for one round of rewards; the reward total goes to `sink`.
  double round(double& sink) const {
    const std::size_t n = reports_.clients();
    const auto start = std::chrono::steady_clock::now();
    if (scoring_ == ScoringMode::kKfca) {
      for (std::size_t i = 0; i < n; ++i)
        sink += client_reward(i, reports_, partition_, kfca_score_, peers_, root_.child({stream_tag::kClient, i})).reward;
    } else {
      const PairwiseScores scores(reports_);
      for (std::size_t i = 0; i < n; ++i)
        sink += client_reward(i, reports_, partition_, scores, peers_, root_.child({stream_tag::kClient, i})).reward;
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

 private:
  ScoringMode scoring_;
  std::size_t peers_;
  StreamKey root_;
  ReportMatrix reports_;
  TaskPartition partition_;
  ScoreMatrix kfca_score_ = ScoreMatrix::kfca(2);
};

void finish(BenchPoint& p, double sink) {
  p.reward_sum = sink / static_cast<double>(p.seconds.size());
  auto sorted = p.seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  p.median_seconds = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

}  // namespace

BenchPoint measure_reward_round(ScoringMode scoring, std::size_t clients, std::size_t peers, std::size_t tasks,
                                std::size_t repeats, std::uint64_t seed) {
  const std::size_t n[] = {clients}, p[] = {peers};
  return measure_scaling(scoring, n, p, tasks, repeats, seed).front();
}

std::vector<BenchPoint> measure_scaling(ScoringMode scoring, std::span<const std::size_t> clients,
                                        std::span<const std::size_t> peers, std::size_t tasks, std::size_t repeats,
                                        std::uint64_t seed) {
  if (repeats < 1) throw Error(Errc::kInvalidArgument, "repeats must be >= 1");
  std::vector<Fixture> fixtures;
  std::vector<BenchPoint> points;
  for (std::size_t p : peers)
    for (std::size_t n : clients) {
      fixtures.emplace_back(scoring, n, p, tasks, seed);
      points.push_back({scoring, n, p, tasks, {}, 0.0, 0.0});
    }
  std::vector<double> sinks(points.size(), 0.0);
  for (std::size_t r = 0; r < repeats; ++r)
    for (std::size_t g = 0; g < points.size(); ++g) points[g].seconds.push_back(fixtures[g].round(sinks[g]));
  for (std::size_t g = 0; g < points.size(); ++g) finish(points[g], sinks[g]);
  return points;
}

}  // namespace kfca
