#include "kfca/truthfulness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kfca/parallel.hpp"

namespace kfca {

StrategyMap::StrategyMap(std::span<const Label> image) {
  if (image.empty()) throw Error(Errc::kInvalidArgument, "empty strategy map");
  size_ = image.size();
  for (Label r : image)
    if (r >= size_) throw Error(Errc::kInvalidArgument, "map image outside [0, L)");
  image_.assign(image.begin(), image.end());
}

StrategyMap StrategyMap::from_code(std::size_t labels, std::uint32_t code) {
  std::array<Label, kMaxEnumerationLabels> img{};
  for (std::size_t a = 0; a < labels; ++a) {
    img[a] = code % labels;
    code /= static_cast<std::uint32_t>(labels);
  }
  return StrategyMap(std::span<const Label>(img.data(), labels));
}

std::vector<Label> StrategyMap::image() const { return image_; }

bool StrategyMap::is_bijection() const {
  std::vector<bool> seen(size_, false);
  for (std::size_t a = 0; a < size_; ++a) {
    if (seen[image_[a]]) return false;
    seen[image_[a]] = true;
  }
  return true;
}

bool StrategyMap::is_identity() const {
  for (std::size_t a = 0; a < size_; ++a)
    if (image_[a] != a) return false;
  return true;
}

namespace {

std::uint32_t map_count(std::size_t labels) {
  std::uint32_t c = 1;
  for (std::size_t i = 0; i < labels; ++i) c *= static_cast<std::uint32_t>(labels);
  return c;
}

}  // namespace

std::vector<StrategyProfileScore> enumerate_profiles(const DeltaMatrix& delta, const ScoreMatrix& score,
                                                     std::size_t workers) {
  const std::size_t l = delta.size();
  if (l > kMaxEnumerationLabels) {
    throw Error(Errc::kLabelSpaceTooLarge,
                "exhaustive enumeration supports L <= 5 (got L = " + std::to_string(l) + ")");
  }
  if (score.size() != l) throw Error(Errc::kLengthMismatch, "score and delta label counts differ");
  const std::uint32_t count = map_count(l);
  std::vector<StrategyMap> maps(count);
  for (std::uint32_t c = 0; c < count; ++c) maps[c] = StrategyMap::from_code(l, c);

  std::vector<StrategyProfileScore> out(static_cast<std::size_t>(count) * count);
  parallel_for(count, workers, [&](std::size_t c1) {
    const StrategyMap& f1 = maps[c1];
    // w(r2, b) = sum_a Delta(a, b) S(f1(a), r2); value = sum_b w(f2(b), b).
    std::array<double, kMaxEnumerationLabels * kMaxEnumerationLabels> w{};
    for (std::size_t r2 = 0; r2 < l; ++r2)
      for (std::size_t b = 0; b < l; ++b) {
        double s = 0.0;
        for (std::size_t a = 0; a < l; ++a) s += delta(a, b) * score(f1(static_cast<Label>(a)), static_cast<Label>(r2));
        w[r2 * l + b] = s;
      }
    const bool f1_bij = f1.is_bijection();
    for (std::uint32_t c2 = 0; c2 < count; ++c2) {
      const StrategyMap& f2 = maps[c2];
      double v = 0.0;
      for (std::size_t b = 0; b < l; ++b) v += w[f2(static_cast<Label>(b)) * l + b];
      auto& slot = out[c1 * count + c2];
      slot.value = v;
      slot.f1 = f1;
      slot.f2 = f2;
      slot.is_shared_bijection = f1_bij && c1 == c2;
    }
  });
  std::stable_sort(out.begin(), out.end(),
                   [](const StrategyProfileScore& x, const StrategyProfileScore& y) { return x.value > y.value; });
  return out;
}

ProfileSummary summarize_profiles(std::span<const StrategyProfileScore> profiles, double tol) {
  ProfileSummary s;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.profile_count = profiles.size();
  s.runner_up_value = nan;
  s.best_non_bijective_value = nan;
  s.truthful_value = nan;
  if (profiles.empty()) return s;
  s.max_value = -std::numeric_limits<double>::infinity();
  for (const auto& p : profiles) s.max_value = std::max(s.max_value, p.value);
  s.maximizers_all_shared_bijections = true;
  for (const auto& p : profiles) {
    const bool top = p.value >= s.max_value - tol;
    if (top) {
      ++s.maximizer_count;
      if (!p.is_shared_bijection) s.maximizers_all_shared_bijections = false;
    } else if (std::isnan(s.runner_up_value) || p.value > s.runner_up_value) {
      s.runner_up_value = p.value;
    }
    if (!p.is_shared_bijection && (std::isnan(s.best_non_bijective_value) || p.value > s.best_non_bijective_value)) {
      s.best_non_bijective_value = p.value;
    }
    if (p.f1.is_identity() && p.f2.is_identity()) {
      s.truthful_value = p.value;
      s.truthful_is_maximizer = top;
    }
  }
  return s;
}

StrategyProfileScore random_profile_search(const DeltaMatrix& delta, const ScoreMatrix& score,
                                           std::size_t samples, Stream& rng) {
  const std::size_t l = delta.size();
  std::vector<Label> id(l), f1(l), f2(l);
  std::iota(id.begin(), id.end(), Label{0});
  StrategyProfileScore best;
  best.f1 = best.f2 = StrategyMap(id);
  best.value = expected_reward(delta, score, std::span<const Label>(id), std::span<const Label>(id));
  best.is_shared_bijection = true;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t a = 0; a < l; ++a) {
      f1[a] = static_cast<Label>(rng.below(l));
      f2[a] = static_cast<Label>(rng.below(l));
    }
    const double v = expected_reward(delta, score, std::span<const Label>(f1), std::span<const Label>(f2));
    if (v > best.value) {
      best.value = v;
      best.f1 = StrategyMap(f1);
      best.f2 = StrategyMap(f2);
      best.is_shared_bijection = f1 == f2 && is_bijection(f1);
    }
  }
  return best;
}

namespace {

std::vector<double> random_simplex(std::size_t n, Stream& rng) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = -std::log1p(-rng.uniform());
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

Matrix random_channel(std::size_t l, Stream& rng) {
  Matrix c(l, l);
  for (std::size_t y = 0; y < l; ++y) {
    const double spread = 0.7 * rng.uniform();
    const auto noise = random_simplex(l, rng);
    for (std::size_t a = 0; a < l; ++a) c(y, a) = spread * noise[a] + (a == y ? 1.0 - spread : 0.0);
  }
  return c;
}

}  // namespace

DeltaMatrix random_categorical_delta(std::size_t labels, Stream& rng, std::size_t max_attempts) {
  static_cast<void>(LabelSpace(labels));
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    auto prior = random_simplex(labels, rng);
    for (auto& p : prior) p = 0.5 / static_cast<double>(labels) + 0.5 * p;
    const Matrix ci = random_channel(labels, rng);
    const Matrix cj = random_channel(labels, rng);
    DeltaMatrix d = analytic_delta(prior, ci, cj);
    if (check_categorical(d).holds) return d;
  }
  throw Error(Errc::kNotCategorical, "no categorical delta found within the attempt budget");
}

double binary_robustness(double alpha, double lambda) {
  if (!(alpha >= 0.0 && alpha < 0.5)) throw Error(Errc::kInvalidAlpha, "binary robustness needs alpha in [0, 0.5)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::kInvalidArgument, "lambda must lie in [0, 1]");
  return (1.0 - 2.0 * lambda) * (0.5 - 2.0 * alpha * (1.0 - alpha));
}

MulticlassRobustness multiclass_robustness(std::span<const double> prior, const Matrix& honest,
                                           const Matrix& malicious, double lambda) {
  const std::size_t l = prior.size();
  require_probability_vector(prior, 1e-9, "prior");
  if (honest.rows() != l || malicious.rows() != l || honest.cols() != malicious.cols()) {
    throw Error(Errc::kLengthMismatch, "prior and confusion shapes disagree");
  }
  require_row_stochastic(honest, 1e-9, "honest confusion");
  require_row_stochastic(malicious, 1e-9, "malicious confusion");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::kInvalidArgument, "lambda must lie in [0, 1]");
  MulticlassRobustness r;
  std::vector<double> q(honest.cols(), 0.0);
  for (std::size_t k = 0; k < l; ++k)
    for (std::size_t j = 0; j < honest.cols(); ++j) {
      r.a += prior[k] * honest(k, j) * honest(k, j);
      r.b += prior[k] * honest(k, j) * malicious(k, j);
      q[j] += prior[k] * ((1.0 - lambda) * honest(k, j) + lambda * malicious(k, j));
    }
  for (double x : q) r.penalty += x * x;
  r.total = (1.0 - lambda) * r.a + lambda * r.b - r.penalty;
  if (r.a > r.b) r.threshold = (r.a - r.penalty) / (r.a - r.b);
  return r;
}

namespace {

void require_nonidentity_bijection(std::span<const Label> pi, std::size_t l) {
  if (pi.size() != l) throw Error(Errc::kLengthMismatch, "permutation length differs from L");
  for (Label x : pi)
    if (x >= l) throw Error(Errc::kInvalidArgument, "permutation image outside [0, L)");
  if (!is_bijection(pi)) throw Error(Errc::kInvalidArgument, "pi is not a bijection");
  bool identity = true;
  for (std::size_t a = 0; a < l; ++a) identity = identity && pi[a] == a;
  if (identity) throw Error(Errc::kInvalidArgument, "pi must differ from the identity");
}

}  // namespace

double permutation_differential(const DeltaMatrix& delta, std::span<const Label> pi, double lambda) {
  require_nonidentity_bijection(pi, delta.size());
  if (!check_categorical(delta).holds) throw Error(Errc::kNotCategorical, "delta violates the categorical condition");
  double d = 0.0, o = 0.0;
  for (std::size_t a = 0; a < delta.size(); ++a) {
    d += delta(a, a);
    o -= delta(a, pi[a]);
  }
  return (1.0 - 2.0 * lambda) * (d + o);
}

std::vector<Label> worst_case_permutation(const DeltaMatrix& delta) {
  const std::size_t l = delta.size();
  if (l > kMaxEnumerationLabels) throw Error(Errc::kLabelSpaceTooLarge, "bijection search supports L <= 5");
  std::vector<Label> pi(l);
  std::iota(pi.begin(), pi.end(), Label{0});
  std::vector<Label> best;
  double best_o = -std::numeric_limits<double>::infinity();
  while (std::next_permutation(pi.begin(), pi.end())) {
    double o = 0.0;
    for (std::size_t a = 0; a < l; ++a) o -= delta(a, pi[a]);
    if (o > best_o) {
      best_o = o;
      best = pi;
    }
  }
  return best;
}

Matrix attack_channel(const AttackSpec& attack, const Matrix& channel, std::size_t tasks) {
  const std::size_t rows = channel.rows();
  const std::size_t l = channel.cols();
  Matrix out(rows, l);
  switch (attack.kind) {
    case AttackKind::kHonest: return channel;
    case AttackKind::kSignFlip:
      for (std::size_t y = 0; y < rows; ++y)
        for (std::size_t a = 0; a < l; ++a) out(y, l - 1 - a) = channel(y, a);
      return out;
    case AttackKind::kZero:
      for (std::size_t y = 0; y < rows; ++y) out(y, kZeroAttackLabel % l) = 1.0;
      return out;
    case AttackKind::kRandom:
      for (std::size_t y = 0; y < rows; ++y)
        for (std::size_t a = 0; a < l; ++a) out(y, a) = 1.0 / static_cast<double>(l);
      return out;
    case AttackKind::kSparse: {
      if (tasks == 0) throw Error(Errc::kInvalidArgument, "sparse channel needs the task count");
      const double h = static_cast<double>(std::llround(attack.honest_fraction * static_cast<double>(tasks))) /
                       static_cast<double>(tasks);
      for (std::size_t y = 0; y < rows; ++y)
        for (std::size_t a = 0; a < l; ++a) out(y, a) = h * channel(y, a) + (1.0 - h) / static_cast<double>(l);
      return out;
    }
    case AttackKind::kLagged:
    case AttackKind::kStale: break;
  }
  throw Error(Errc::kInvalidArgument, "attack " + attack.name() + " depends on round history");
}

AttackerCount attackers_for(double lambda, std::size_t clients) {
  if (clients < 2) throw Error(Errc::kNotEnoughPeers, "need at least two clients");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::kInvalidArgument, "lambda must lie in [0, 1]");
  const double others = static_cast<double>(clients - 1);
  AttackerCount c;
  c.attackers = static_cast<std::size_t>(std::llround(lambda * others));
  c.realized_lambda = static_cast<double>(c.attackers) / others;
  return c;
}

namespace {

double trace(const DeltaMatrix& d) {
  double t = 0.0;
  for (std::size_t a = 0; a < d.size(); ++a) t += d(a, a);
  return t;
}

}  // namespace

RobustnessReport simulate_robustness(const SignalWorld& world, const RobustnessConfig& config, StreamKey key,
                                     std::size_t workers) {
  const std::size_t n = config.clients;
  const std::size_t m = config.tasks;
  const auto count = attackers_for(config.lambda, n);
  const std::size_t k = count.attackers;
  const std::size_t honest_clients = n - k;
  if (honest_clients == 0) throw Error(Errc::kInvalidArgument, "no honest client left to score");
  if (config.trials == 0) throw Error(Errc::kInvalidArgument, "trials must be positive");

  const auto& c0 = world.client(0);
  const Matrix malicious = attack_channel(config.attack, c0.confusion, m);
  const double eta2 = c0.effort_prob * c0.effort_prob;
  const double d_hh = eta2 * trace(analytic_delta(world.prior(), c0.confusion, c0.confusion));
  const double d_hm = eta2 * trace(analytic_delta(world.prior(), c0.confusion, malicious));

  RobustnessReport rep;
  rep.lambda = config.lambda;
  rep.realized_lambda = count.realized_lambda;
  rep.attackers = k;
  rep.trials = config.trials;
  rep.analytic_reward = (1.0 - count.realized_lambda) * d_hh + count.realized_lambda * d_hm;
  if (d_hh > d_hm) rep.threshold = d_hh / (d_hh - d_hm);

  const ScoreMatrix score = ScoreMatrix::kfca(world.label_count());
  std::vector<double> per_trial(config.trials);
  parallel_for(config.trials, workers, [&](std::size_t t) {
    const StreamKey tk = key.child({stream_tag::kTrial, t});
    Stream truth_rng = tk.child(stream_tag::kTruth).stream();
    const auto truths = sample_truths(world, m, truth_rng);
    ReportMatrix reports(world.label_count(), n, m);
    for (std::size_t c = 0; c < n; ++c) {
      const StreamKey ck = tk.child({stream_tag::kClient, c});
      Stream signal_rng = ck.child(stream_tag::kSignal).stream();
      auto signals = sample_signals(world, c % world.num_clients(), truths, signal_rng);
      if (c >= honest_clients) {
        const std::vector<std::vector<Label>> history{std::move(signals)};
        reports.set_row(c, apply_attack(config.attack, history, 1, world.labels(), ck));
      } else {
        reports.set_row(c, signals);
      }
    }
    Stream part_rng = tk.child(stream_tag::kPartition).stream();
    const auto partition = make_partition(m, config.fractions, part_rng);
    double sum = 0.0;
    for (std::size_t i = 0; i < honest_clients; ++i) {
      sum += client_reward(i, reports, partition, score, config.peers, tk.child({stream_tag::kClient, i})).reward;
    }
    per_trial[t] = sum / static_cast<double>(honest_clients);
  });
  const auto est = estimate_mean(per_trial);
  rep.simulated_mean = est.mean;
  rep.simulated_stderr = est.std_error;
  return rep;
}

PermutationGapReport measure_permutation_gap(const SignalWorld& world, std::span<const Label> pi,
                                             const PermutationGapConfig& config, StreamKey key,
                                             std::size_t workers) {
  const std::size_t l = world.label_count();
  require_nonidentity_bijection(pi, l);
  const std::size_t bg = config.background;
  if (bg < 1) throw Error(Errc::kNotEnoughPeers, "the probe needs at least one background client");
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "lambda must lie in [0, 1]");
  }
  if (config.trials == 0) throw Error(Errc::kInvalidArgument, "trials must be positive");
  const std::size_t n = bg + 1;
  const std::size_t probe = bg;
  const std::size_t m = config.tasks;

  PermutationGapReport rep;
  rep.lambda = config.lambda;
  rep.flippers = static_cast<std::size_t>(std::llround(config.lambda * static_cast<double>(bg)));
  rep.realized_lambda = static_cast<double>(rep.flippers) / static_cast<double>(bg);
  const auto& c0 = world.client(0);
  const DeltaMatrix d = shirk_scale(analytic_delta(world, 0, 0), c0.effort_prob, c0.effort_prob);
  rep.analytic = permutation_differential(d, pi, rep.realized_lambda);

  const ScoreMatrix score = ScoreMatrix::kfca(l);
  const std::size_t first_flipper = bg - rep.flippers;
  std::vector<double> gaps(config.trials);
  parallel_for(config.trials, workers, [&](std::size_t t) {
    const StreamKey tk = key.child({stream_tag::kTrial, t});
    Stream truth_rng = tk.child(stream_tag::kTruth).stream();
    const auto truths = sample_truths(world, m, truth_rng);
    ReportMatrix reports(l, n, m);
    std::vector<Label> probe_signals;
    for (std::size_t c = 0; c < n; ++c) {
      Stream signal_rng = tk.child({stream_tag::kClient, c, stream_tag::kSignal}).stream();
      auto row = sample_signals(world, 0, truths, signal_rng);
      if (c == probe) {
        probe_signals = row;
      } else if (c >= first_flipper) {
        for (auto& r : row) r = pi[r];
      }
      reports.set_row(c, row);
    }
    Stream part_rng = tk.child(stream_tag::kPartition).stream();
    const auto partition = make_partition(m, config.fractions, part_rng);
    const StreamKey pk = tk.child({stream_tag::kClient, probe});
    const double honest = client_reward(probe, reports, partition, score, config.peers, pk).reward;
    for (auto& r : probe_signals) r = pi[r];
    reports.set_row(probe, probe_signals);
    const double flipped = client_reward(probe, reports, partition, score, config.peers, pk).reward;
    gaps[t] = honest - flipped;
  });
  rep.measured = estimate_mean(gaps);
  return rep;
}

}  // namespace kfca
