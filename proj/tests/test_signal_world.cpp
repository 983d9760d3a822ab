#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "kfca/signal_world.hpp"

using namespace kfca;

namespace {

SignalWorld skewed_world() {
  ClientChannel a;
  a.confusion = Matrix::from_rows({{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.25, 0.15, 0.6}});
  a.baseline = {0.5, 0.3, 0.2};
  ClientChannel b;
  b.confusion = Matrix::from_rows({{0.9, 0.05, 0.05}, {0.2, 0.6, 0.2}, {0.1, 0.1, 0.8}});
  b.baseline = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return SignalWorld(LabelSpace(3), {0.5, 0.3, 0.2}, {a, b});
}

}  // namespace

TEST(SignalWorld, RejectsMalformedInputs) {
  EXPECT_THROW(LabelSpace(1), Error);
  const std::vector<double> alphas{0.1};
  EXPECT_THROW(SignalWorld::symmetric_noise(3, {0.5, 0.5}, alphas), Error);
  EXPECT_THROW(SignalWorld::symmetric_noise(2, {0.6, 0.6}, alphas), Error);
  const std::vector<double> bad{1.5};
  try {
    SignalWorld::binary_symmetric(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidAlpha);
  }
  ClientChannel c;
  c.confusion = Matrix::from_rows({{0.9, 0.2}, {0.1, 0.9}});
  c.baseline = {0.5, 0.5};
  EXPECT_THROW(SignalWorld(LabelSpace(2), {0.5, 0.5}, {c}), Error);
  EXPECT_THROW(SignalWorld::binary_symmetric(alphas, 1.5), Error);
}

TEST(SignalWorld, SymmetricNoiseChannel) {
  const std::vector<double> alphas{0.3};
  const auto w = SignalWorld::symmetric_noise(4, {0.25, 0.25, 0.25, 0.25}, alphas);
  const auto& c = w.client(0).confusion;
  for (std::size_t y = 0; y < 4; ++y) {
    EXPECT_DOUBLE_EQ(c(y, y), 0.7);
    for (std::size_t a = 0; a < 4; ++a)
      if (a != y) EXPECT_DOUBLE_EQ(c(y, a), 0.1);
  }
  EXPECT_TRUE(w.client(0).informative);
}

TEST(SignalWorld, TruthFrequenciesFollowPrior) {
  const auto w = skewed_world();
  Stream rng(1);
  const std::size_t m = 200000;
  const auto ys = sample_truths(w, m, rng);
  std::vector<double> counts(3, 0);
  for (auto y : ys) counts[y] += 1;
  for (std::size_t y = 0; y < 3; ++y) {
    const double p = w.prior()[y];
    EXPECT_NEAR(counts[y] / m, p, 4 * std::sqrt(p * (1 - p) / m));
  }
}

TEST(SignalWorld, SignalsFollowEffortMixture) {
  // With effort eta, P(Z = a | Y = y) = eta C(y, a) + (1 - eta) Q(a).
  const auto w = skewed_world().with_effort(0, 0.4);
  Stream rng(2);
  const std::size_t m = 300000;
  const std::vector<Label> truths(m, 2);
  const auto zs = sample_signals(w, 0, truths, rng);
  const auto& ch = w.client(0);
  for (Label a = 0; a < 3; ++a) {
    const double p = 0.4 * ch.confusion(2, a) + 0.6 * ch.baseline[a];
    const double f = static_cast<double>(std::count(zs.begin(), zs.end(), a)) / m;
    EXPECT_NEAR(f, p, 4 * std::sqrt(p * (1 - p) / m));
  }
}

TEST(SignalWorld, ConditionalIndependenceChiSquare) {
  // Given Y = y the two clients' signals are independent: chi-square test on
  // the 3x3 contingency table per y at 10^6 samples.
  const auto w = skewed_world();
  Stream truth_rng(3), r0(4), r1(5);
  const std::size_t m = 1000000;
  const auto ys = sample_truths(w, m, truth_rng);
  const auto z0 = sample_signals(w, 0, ys, r0);
  const auto z1 = sample_signals(w, 1, ys, r1);
  for (Label y = 0; y < 3; ++y) {
    double table[3][3] = {};
    double total = 0;
    for (std::size_t k = 0; k < m; ++k)
      if (ys[k] == y) {
        table[z0[k]][z1[k]] += 1;
        total += 1;
      }
    double rows[3] = {}, cols[3] = {};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        rows[a] += table[a][b];
        cols[b] += table[a][b];
      }
    double chi2 = 0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double e = rows[a] * cols[b] / total;
        chi2 += (table[a][b] - e) * (table[a][b] - e) / e;
      }
    // 4 degrees of freedom; 18.47 is the 0.999 quantile.
    EXPECT_LT(chi2, 18.47) << "y = " << y;
  }
}

TEST(Strategy, KindsAndMatrices) {
  EXPECT_EQ(ReportStrategy::truthful(3).map(), (std::vector<Label>{0, 1, 2}));
  EXPECT_EQ(ReportStrategy::flip(2).map(), (std::vector<Label>{1, 0}));
  EXPECT_EQ(ReportStrategy::constant(3, 2).map(), (std::vector<Label>{2, 2, 2}));
  EXPECT_THROW(ReportStrategy::permutation({0, 0, 1}), Error);
  EXPECT_THROW(ReportStrategy::constant(2, 2), Error);
  EXPECT_THROW(ReportStrategy::deterministic({0, 3, 1}), Error);
  const auto f = ReportStrategy::deterministic({1, 1, 0}).as_matrix();
  EXPECT_EQ(f, Matrix::from_rows({{0, 1, 0}, {0, 1, 0}, {1, 0, 0}}));
  EXPECT_THROW(ReportStrategy::randomized(Matrix::from_rows({{0.5, 0.6}, {0.5, 0.5}})), Error);
  EXPECT_THROW(ReportStrategy::randomized(Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}})).map(), Error);
}

TEST(Strategy, LinearityOfRandomizedMixture) {
  // A randomized F = 0.3 f_a + 0.7 f_b yields the same report distribution as
  // the convex combination of the two deterministic maps.
  const std::vector<Label> fa{1, 2, 0}, fb{0, 0, 2};
  Matrix mix(3, 3);
  for (std::size_t s = 0; s < 3; ++s) {
    mix(s, fa[s]) += 0.3;
    mix(s, fb[s]) += 0.7;
  }
  const auto f = ReportStrategy::randomized(mix);
  Stream rng(6);
  const std::size_t n = 200000;
  for (Label s = 0; s < 3; ++s) {
    std::vector<double> counts(3, 0);
    for (std::size_t k = 0; k < n; ++k) counts[apply_strategy(f, s, rng)] += 1;
    for (Label r = 0; r < 3; ++r) {
      const double p = 0.3 * (fa[s] == r) + 0.7 * (fb[s] == r);
      EXPECT_NEAR(counts[r] / n, p, 4 * std::sqrt(p * (1 - p) / n) + 1e-12);
    }
  }
}

TEST(Strategy, IsBijection) {
  EXPECT_TRUE(is_bijection(std::vector<Label>{2, 0, 1}));
  EXPECT_FALSE(is_bijection(std::vector<Label>{2, 2, 1}));
  EXPECT_FALSE(is_bijection(std::vector<Label>{0, 3, 1}));
}

TEST(Attack, ParseAndNameRoundTrip) {
  for (const std::string s : {"honest", "signflip", "zero", "random", "sparse:0.75", "lagged:3", "stale"}) {
    EXPECT_EQ(AttackSpec::parse(s).name(), s);
  }
  EXPECT_EQ(AttackSpec::parse("Sparse:25").honest_fraction, 0.25);
  EXPECT_THROW(AttackSpec::parse("sparse"), Error);
  EXPECT_THROW(AttackSpec::parse("lagged:0"), Error);
  EXPECT_THROW(AttackSpec::parse("bogus"), Error);
  EXPECT_THROW(AttackSpec::parse("sparse:x"), Error);
}

namespace {

std::vector<std::vector<Label>> history_rows(std::size_t rounds, std::size_t m) {
  std::vector<std::vector<Label>> h;
  for (std::size_t t = 0; t < rounds; ++t) {
    Stream rng(100 + t);
    std::vector<Label> row(m);
    for (auto& r : row) r = static_cast<Label>(rng.below(2));
    h.push_back(row);
  }
  return h;
}

}  // namespace

TEST(Attack, SingleRoundBehaviour) {
  const auto h = history_rows(1, 1000);
  const LabelSpace ls(2);
  const StreamKey key(9);
  EXPECT_EQ(apply_attack(AttackSpec::honest(), h, 1, ls, key), h[0]);
  const auto flipped = apply_attack(AttackSpec::sign_flip(), h, 1, ls, key);
  for (std::size_t k = 0; k < 1000; ++k) EXPECT_EQ(flipped[k], 1 - h[0][k]);
  const auto zero = apply_attack(AttackSpec::zero(), h, 1, ls, key);
  EXPECT_TRUE(std::all_of(zero.begin(), zero.end(), [](Label r) { return r == kZeroAttackLabel; }));
  // Sparse(1) is Honest, Sparse(0) is Random under the same key.
  EXPECT_EQ(apply_attack(AttackSpec::sparse(1.0), h, 1, ls, key), h[0]);
  EXPECT_EQ(apply_attack(AttackSpec::sparse(0.0), h, 1, ls, key), apply_attack(AttackSpec::random(), h, 1, ls, key));
}

TEST(Attack, SparseKeepsExactHonestShare) {
  const auto idx = sparse_honest_indices(1000, 0.75, StreamKey(4));
  EXPECT_EQ(idx.size(), 750u);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
  const auto h = history_rows(1, 1000);
  const auto row = apply_attack(AttackSpec::sparse(0.75), h, 1, LabelSpace(2), StreamKey(4));
  for (auto k : idx) EXPECT_EQ(row[k], h[0][k]);
}

TEST(Attack, LaggedAndStaleUseHistory) {
  const auto h = history_rows(5, 50);
  const LabelSpace ls(2);
  EXPECT_EQ(apply_attack(AttackSpec::lagged(2), h, 5, ls, StreamKey(1)), h[2]);
  EXPECT_EQ(apply_attack(AttackSpec::lagged(3), h, 2, ls, StreamKey(1)), h[0]);
  EXPECT_EQ(apply_attack(AttackSpec::stale(), h, 5, ls, StreamKey(1)), h[0]);
  EXPECT_THROW(apply_attack(AttackSpec::honest(), h, 6, ls, StreamKey(1)), Error);
}

TEST(ReportMatrixTest, ValidatesRows) {
  ReportMatrix r(2, 2, 4);
  const std::vector<Label> ok{0, 1, 1, 0}, bad{0, 2, 1, 0}, short_row{0, 1, 1};
  r.set_row(1, ok);
  EXPECT_EQ(r.at(1, 2), 1u);
  EXPECT_THROW(r.set_row(0, bad), Error);
  EXPECT_THROW(r.set_row(0, short_row), Error);
  EXPECT_THROW(ReportMatrix(2, 2, 2), Error);
}

TEST(NoiseProfile, RangeAndConcentrationLimit) {
  Stream rng(8);
  const auto low = noniid_noise_profile(0.1, 200, rng);
  for (double a : low) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, kMaxNoiseRate);
  }
  // Near-uniform class weights at high concentration: alpha close to base noise.
  const auto high = noniid_noise_profile(1e4, 200, rng);
  for (double a : high) EXPECT_NEAR(a, 0.1, 0.01);
  const double mean_low = std::accumulate(low.begin(), low.end(), 0.0) / low.size();
  EXPECT_GT(mean_low, 0.2);
  try {
    noniid_noise_profile(0.0, 3, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidConcentration);
  }
}
