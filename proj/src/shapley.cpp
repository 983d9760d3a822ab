#include "kfca/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <unordered_map>

#include "kfca/parallel.hpp"

namespace kfca {

CoalitionOracle::CoalitionOracle(std::size_t clients, Utility v) : clients_(clients), v_(std::move(v)) {
  if (clients < 1 || clients > kMaxOracleClients) {
    throw Error(Errc::kTooManyClients, "coalition oracles support 1..30 clients");
  }
  if (!v_) throw Error(Errc::kInvalidArgument, "empty utility function");
}

CoalitionOracle CoalitionOracle::from_table(std::vector<double> values) {
  if (values.size() < 2 || !std::has_single_bit(values.size())) {
    throw Error(Errc::kInvalidArgument, "coalition table size must be 2^n with n >= 1");
  }
  const auto n = static_cast<std::size_t>(std::countr_zero(values.size()));
  auto table = std::make_shared<const std::vector<double>>(std::move(values));
  return CoalitionOracle(n, [table](Coalition s) { return (*table)[s]; });
}

ShapleyResult exact_shapley(const CoalitionOracle& oracle) {
  const std::size_t n = oracle.clients();
  if (n > kMaxExactClients) {
    throw Error(Errc::kTooManyClients,
                "exact Shapley supports n <= 12 (got n = " + std::to_string(n) + ")");
  }
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> v(subsets);
  for (Coalition s = 0; s < subsets; ++s) v[s] = oracle(s);

  // weight[k] = k! (n - k - 1)! / n!
  std::vector<double> weight(n);
  for (std::size_t k = 0; k < n; ++k) {
    double w = 1.0 / static_cast<double>(n);
    // 1 / (n * C(n-1, k))
    for (std::size_t j = 1; j <= k; ++j) w *= static_cast<double>(j) / static_cast<double>(n - j);
    weight[k] = w;
  }
  ShapleyResult r;
  r.values.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Coalition bit = Coalition{1} << i;
    double phi = 0.0;
    for (Coalition s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
    r.values[i] = phi;
  }
  r.evaluations_used = subsets;
  r.permutations_used = 0;
  r.converged = true;
  return r;
}

namespace {

class MemoOracle {
 public:
  explicit MemoOracle(const CoalitionOracle& oracle) : oracle_(oracle) {}

  double operator()(Coalition s) {
    {
      std::shared_lock lock(mu_);
      if (auto it = cache_.find(s); it != cache_.end()) return it->second;
    }
    const double value = oracle_(s);
    std::unique_lock lock(mu_);
    cache_.emplace(s, value);
    return value;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return cache_.size();
  }

 private:
  const CoalitionOracle& oracle_;
  mutable std::shared_mutex mu_;
  std::unordered_map<Coalition, double> cache_;
};

constexpr std::size_t kPermutationBlock = 32;
constexpr double kStoppingFloor = 1e-9;

}  // namespace

double stopping_statistic(std::span<const std::vector<double>> history, std::size_t h, std::size_t window) {
  if (h <= window || h >= history.size()) {
    throw Error(Errc::kInvalidArgument, "stopping statistic needs h > window snapshots");
  }
  const auto& cur = history[h];
  double total = 0.0;
  std::size_t terms = 0;
  for (std::size_t j = 1; j <= window; ++j) {
    const auto& old = history[h - j];
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (std::abs(cur[i]) < kStoppingFloor) continue;
      total += std::abs(cur[i] - old[i]) / std::abs(cur[i]);
      ++terms;
    }
  }
  return terms == 0 ? 0.0 : total / static_cast<double>(terms);
}

ShapleyResult mc_shapley(const CoalitionOracle& oracle, const McShapleyConfig& config, StreamKey key,
                         std::size_t workers) {
  if (config.max_permutations < 1) throw Error(Errc::kInvalidArgument, "max_permutations must be >= 1");
  if (config.window < 1) throw Error(Errc::kInvalidArgument, "stopping window must be >= 1");
  const std::size_t n = oracle.clients();
  MemoOracle memo(oracle);
  const double v_grand = memo(oracle.grand());
  const double v_empty = memo(0);
  const double eps = config.truncation_eps.value_or(0.001 * std::abs(v_grand - v_empty));

  auto marginals_of = [&](std::size_t h) {
    Stream rng = key.child({stream_tag::kPermutation, h}).stream();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<double> marg(n, 0.0);
    Coalition s = 0;
    double v_prev = v_empty;
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (pos > 0 && std::abs(v_grand - v_prev) <= eps) break;
      s |= Coalition{1} << order[pos];
      const double v_next = memo(s);
      marg[order[pos]] = v_next - v_prev;
      v_prev = v_next;
    }
    return marg;
  };

  ShapleyResult r;
  r.converged = false;
  std::vector<double> sum(n, 0.0);
  std::vector<std::vector<double>> history;
  history.emplace_back(n, 0.0);
  std::size_t h = 0;
  bool done = false;
  while (!done && h < config.max_permutations) {
    const std::size_t block = std::min(kPermutationBlock, config.max_permutations - h);
    std::vector<std::vector<double>> margs(block);
    parallel_for(block, workers, [&](std::size_t b) { margs[b] = marginals_of(h + b); });
    for (std::size_t b = 0; b < block; ++b) {
      ++h;
      std::vector<double> snap(n);
      for (std::size_t i = 0; i < n; ++i) {
        sum[i] += margs[b][i];
        snap[i] = sum[i] / static_cast<double>(h);
      }
      history.push_back(std::move(snap));
      if (config.use_stopping_rule && h > config.window &&
          stopping_statistic(history, h, config.window) < config.tolerance) {
        r.converged = true;
        done = true;
        break;
      }
    }
  }
  r.values = history.back();
  r.permutations_used = h;
  r.evaluations_used = memo.size();
  return r;
}

std::vector<double> normalize_rewards(std::span<const double> q) {
  std::vector<double> out(q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = std::max(0.0, q[i]);
    total += out[i];
  }
  if (!(total > 0.0)) throw Error(Errc::kDegenerateRewards, "rewards have no positive mass to normalize");
  for (auto& x : out) x /= total;
  return out;
}

RewardDistance distance_metrics(std::span<const double> exact, std::span<const double> candidate) {
  if (exact.size() != candidate.size()) throw Error(Errc::kLengthMismatch, "reward vectors differ in length");
  const auto q = normalize_rewards(candidate);
  double dot = 0.0, ne = 0.0, nq = 0.0, sq = 0.0, mx = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    dot += exact[i] * q[i];
    ne += exact[i] * exact[i];
    nq += q[i] * q[i];
    const double d = exact[i] - q[i];
    sq += d * d;
    mx = std::max(mx, std::abs(d));
  }
  if (ne == 0.0) throw Error(Errc::kZeroVector, "cosine distance is undefined for an all-zero vector");
  RewardDistance r;
  // Rounding can push cos slightly above 1.
  r.cosine = std::max(0.0, 1.0 - dot / (std::sqrt(ne) * std::sqrt(nq)));
  r.euclidean = std::sqrt(sq);
  r.max_diff = mx;
  return r;
}

namespace {

constexpr std::size_t kCountBits = 4;
constexpr std::uint64_t kCountMask = (1u << kCountBits) - 1;

struct PluralityModel {
  std::size_t labels;
  std::vector<double> prior;
  std::vector<Matrix> channels;  // effective signal channel per client

  double operator()(Coalition s) const {
    const double chance = 1.0 / static_cast<double>(labels);
    if (s == 0) return chance;
    double correct = 0.0;
    for (std::size_t y = 0; y < labels; ++y) {
      if (prior[y] == 0.0) continue;
      std::map<std::uint64_t, double> states{{0, 1.0}};
      for (std::size_t i = 0; i < channels.size(); ++i) {
        if (!(s >> i & 1)) continue;
        std::map<std::uint64_t, double> next;
        for (const auto& [hist, p] : states)
          for (std::size_t a = 0; a < labels; ++a) {
            const double pa = channels[i](y, a);
            if (pa == 0.0) continue;
            next[hist + (std::uint64_t{1} << (kCountBits * a))] += p * pa;
          }
        states = std::move(next);
      }
      double hit = 0.0;
      for (const auto& [hist, p] : states) {
        std::uint64_t top = 0;
        std::size_t tied = 0;
        for (std::size_t a = 0; a < labels; ++a) {
          const std::uint64_t c = hist >> (kCountBits * a) & kCountMask;
          if (c > top) {
            top = c;
            tied = 1;
          } else if (c == top) {
            ++tied;
          }
        }
        if ((hist >> (kCountBits * y) & kCountMask) == top) hit += p / static_cast<double>(tied);
      }
      correct += prior[y] * hit;
    }
    return correct;
  }
};

}  // namespace

CoalitionOracle signal_utility_oracle(const SignalWorld& world) {
  const std::size_t l = world.label_count();
  const std::size_t n = world.num_clients();
  if (l > 15 || n > 15) throw Error(Errc::kInvalidArgument, "plurality oracle supports L <= 15 and n <= 15");
  auto model = std::make_shared<PluralityModel>();
  model->labels = l;
  model->prior = world.prior();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = world.client(i);
    Matrix eff(l, l);
    for (std::size_t y = 0; y < l; ++y)
      for (std::size_t a = 0; a < l; ++a)
        eff(y, a) = c.effort_prob * c.confusion(y, a) + (1.0 - c.effort_prob) * c.baseline[a];
    model->channels.push_back(std::move(eff));
  }
  return CoalitionOracle(n, [model](Coalition s) { return (*model)(s); });
}

}  // namespace kfca
