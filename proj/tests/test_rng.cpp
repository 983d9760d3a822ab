#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>

#include "kfca/parallel.hpp"
#include "kfca/rng.hpp"
#include "kfca/stats.hpp"

using namespace kfca;

TEST(Rng, SplitMixKnownValue) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, SameKeySameStream) {
  Stream a = StreamKey(42).child({3, 7}).stream();
  Stream b = StreamKey(42).child(3).child(7).stream();
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, SiblingKeysDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t t = 0; t < 1000; ++t) firsts.insert(StreamKey(1).child(t).stream()());
  EXPECT_EQ(firsts.size(), 1000u);
  EXPECT_NE(StreamKey(1).child({2, 3}).value(), StreamKey(1).child({3, 2}).value());
}

TEST(Rng, UniformInUnitInterval) {
  Stream s(9);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // mean 1/2, sd 1/sqrt(12 n)
  EXPECT_NEAR(sum / n, 0.5, 4.0 / std::sqrt(12.0 * n));
}

TEST(Rng, BelowIsUniformChiSquare) {
  Stream s(11);
  const std::uint64_t k = 7;
  const int n = 70000;
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    const auto v = s.below(k);
    ASSERT_LT(v, k);
    ++counts[v];
  }
  double chi2 = 0;
  const double expect = static_cast<double>(n) / k;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // 6 degrees of freedom; 22.46 is the 0.999 quantile.
  EXPECT_LT(chi2, 22.46);
}

TEST(Rng, BelowOneIsZero) {
  Stream s(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(s.below(1), 0u);
}

TEST(Rng, CategoricalFrequencies) {
  Stream s(3);
  const std::vector<double> p{0.2, 0.0, 0.5, 0.3};
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[s.categorical(p)];
  EXPECT_EQ(counts[1], 0);
  for (std::size_t i = 0; i < 4; ++i) {
    const double se = std::sqrt(p[i] * (1 - p[i]) / n);
    EXPECT_NEAR(static_cast<double>(counts[i]) / n, p[i], 4 * se + 1e-12);
  }
}

TEST(Parallel, SlotsIndependentOfWorkerCount) {
  auto run = [](std::size_t workers) {
    std::vector<std::uint64_t> out(1000);
    parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = StreamKey(5).child(i).stream()(); });
    return out;
  };
  const auto one = run(1);
  EXPECT_EQ(one, run(3));
  EXPECT_EQ(one, run(8));
  EXPECT_EQ(one, run(0));
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 4, [](std::size_t i) {
                 if (i == 57) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(513);
  parallel_for(hits.size(), 6, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Stats, MeanAndStdError) {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto e = estimate_mean(xs);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  // sample variance 5/3, stderr sqrt(5/12)
  EXPECT_NEAR(e.std_error, std::sqrt(5.0 / 12.0), 1e-15);
  EXPECT_EQ(e.count, 4u);
  const std::vector<double> one{7};
  EXPECT_EQ(estimate_mean(one).std_error, 0.0);
}

TEST(Stats, LogLogSlopeOfPowerLaw) {
  std::vector<double> x{10, 20, 40, 80}, y2, y1;
  for (double v : x) {
    y2.push_back(3e-6 * v * v);
    y1.push_back(0.5 * v);
  }
  EXPECT_NEAR(loglog_slope(x, y2), 2.0, 1e-12);
  EXPECT_NEAR(loglog_slope(x, y1), 1.0, 1e-12);
}
