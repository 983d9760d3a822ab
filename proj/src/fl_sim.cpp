#include "kfca/fl_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kfca/parallel.hpp"

namespace kfca {

std::string_view to_string(SimMode mode) { return mode == SimMode::kKfcaD ? "kfca-d" : "kfca-qp"; }

std::string_view to_string(ScoringMode mode) { return mode == ScoringMode::kKfca ? "kfca" : "ca-empirical"; }

SimMode parse_sim_mode(std::string_view text) {
  if (text == "kfca-d" || text == "d") return SimMode::kKfcaD;
  if (text == "kfca-qp" || text == "qp") return SimMode::kKfcaQP;
  throw Error(Errc::kConfig, "unknown mode '" + std::string(text) + "' (expected kfca-d or kfca-qp)");
}

ScoringMode parse_scoring_mode(std::string_view text) {
  if (text == "kfca") return ScoringMode::kKfca;
  if (text == "ca-empirical" || text == "ca") return ScoringMode::kCaEmpirical;
  throw Error(Errc::kConfig, "unknown scoring '" + std::string(text) + "' (expected kfca or ca-empirical)");
}

const AttackSpec& SimConfig::attack_of(std::size_t client) const {
  static const AttackSpec honest{};
  return attacks.empty() ? honest : attacks.at(client);
}

void SimConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::kConfig, msg); };
  if (rounds < 1) fail("rounds T = " + std::to_string(rounds) + " violates T >= 1");
  if (clients < 2) fail("clients n = " + std::to_string(clients) + " violates n >= 2");
  if (tasks < 3) fail("tasks m = " + std::to_string(tasks) + " violates m >= 3");
  if (peers < 1 || peers > clients - 1) {
    fail("peers P = " + std::to_string(peers) + " violates 1 <= P <= n - 1 = " + std::to_string(clients - 1));
  }
  if (mode == SimMode::kKfcaD && labels < 2) fail("labels L = " + std::to_string(labels) + " violates L >= 2");
  if (mode == SimMode::kKfcaD && labels > 256) fail("labels L > 256 cannot be serialised as report bytes");
  if (!prior.empty() && prior.size() != label_count()) fail("prior length differs from the label count");
  if (!alphas.empty() && alphas.size() != clients) fail("alphas length differs from the client count");
  if (!attacks.empty() && attacks.size() != clients) fail("attack population size differs from the client count");
  if (!(rho >= 0.0 && rho <= 1.0)) fail("rho must lie in [0, 1]");
  if (!(effort >= 0.0 && effort <= 1.0)) fail("effort must lie in [0, 1]");
  if (concentration && !(*concentration > 0.0 && std::isfinite(*concentration))) {
    fail("concentration must be positive and finite");
  }
  const auto& f = fractions;
  if (!(f.bonus > 0.0 && f.penalty_1 > 0.0 && f.penalty_2 > 0.0) || f.bonus + f.penalty_1 + f.penalty_2 > 1.0 + 1e-12) {
    fail("partition fractions must be positive and sum to at most 1");
  }
  for (const auto& a : attacks)
    if (a.kind == AttackKind::kLagged && a.lag < 1) fail("lagged attack needs k >= 1");
}

std::vector<double> resolve_alphas(const SimConfig& config) {
  if (!config.alphas.empty()) return config.alphas;
  if (config.concentration) {
    Stream rng = StreamKey(config.seed).child(stream_tag::kNoiseProfile).stream();
    return noniid_noise_profile(*config.concentration, config.clients, rng, config.noise);
  }
  return std::vector<double>(config.clients, config.alpha);
}

SignalWorld build_world(const SimConfig& config) {
  config.validate();
  const std::size_t l = config.label_count();
  auto prior = config.prior.empty() ? std::vector<double>(l, 1.0 / static_cast<double>(l)) : config.prior;
  const auto alphas = resolve_alphas(config);
  return SignalWorld::symmetric_noise(l, std::move(prior), alphas, config.effort);
}

namespace {

double mean_or_nan(double sum, std::size_t count) {
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

}  // namespace

SimulationResult run_simulation(const SimConfig& config, std::size_t workers) {
  const SignalWorld world = build_world(config);
  const std::size_t n = config.clients;
  const std::size_t m = config.tasks;
  const std::size_t l = world.label_count();
  const StreamKey root(config.seed);
  const ScoreMatrix kfca_score = ScoreMatrix::kfca(l);

  SimulationResult result;
  result.config = config;
  result.alphas = resolve_alphas(config);

  std::vector<std::vector<std::vector<Label>>> history(n);
  std::vector<Label> truths;
  for (std::size_t t = 1; t <= config.rounds; ++t) {
    const StreamKey rk = root.child({stream_tag::kRound, t});

    // (a) latent truths, Markov-persistent across rounds.
    Stream truth_rng = rk.child(stream_tag::kTruth).stream();
    if (t == 1) {
      truths = sample_truths(world, m, truth_rng);
    } else {
      for (auto& y : truths)
        if (!truth_rng.bernoulli(config.rho)) y = static_cast<Label>(truth_rng.categorical(world.prior()));
    }

    // (b) honest rows; (c) attacker transforms with full history.
    ReportMatrix reports(l, n, m);
    std::vector<std::vector<Label>> honest_rows(n);
    parallel_for(n, workers, [&](std::size_t c) {
      const StreamKey ck = rk.child({stream_tag::kClient, c});
      Stream signal_rng = ck.child(stream_tag::kSignal).stream();
      auto signals = sample_signals(world, c, truths, signal_rng);
      if (config.mode == SimMode::kKfcaQP) {
        // Coordinate update with direction from the signal and magnitude in (0, 1].
        Stream update_rng = ck.child(stream_tag::kUpdate).stream();
        std::vector<double> update(m);
        for (std::size_t k = 0; k < m; ++k) {
          const double magnitude = 1.0 - update_rng.uniform();
          update[k] = signals[k] == 1 ? magnitude : -magnitude;
        }
        signals = sign_quantize(update);
      }
      honest_rows[c] = std::move(signals);
    });
    for (std::size_t c = 0; c < n; ++c) history[c].push_back(std::move(honest_rows[c]));
    parallel_for(n, workers, [&](std::size_t c) {
      const StreamKey ck = rk.child({stream_tag::kClient, c});
      const auto& spec = config.attack_of(c);
      if (spec.is_honest()) {
        reports.set_row(c, history[c].back());
      } else {
        reports.set_row(c, apply_attack(spec, history[c], t, world.labels(), ck));
      }
    });

    // (d) partition; (e) rewards.
    Stream part_rng = rk.child(stream_tag::kPartition).stream();
    const auto partition = make_partition(m, config.fractions, part_rng);
    RoundOutcome out;
    out.round = t;
    out.rewards.resize(n);
    std::optional<PairwiseScores> pairwise;
    if (config.scoring == ScoringMode::kCaEmpirical) pairwise.emplace(reports);
    parallel_for(n, workers, [&](std::size_t i) {
      const StreamKey ck = rk.child({stream_tag::kClient, i});
      out.rewards[i] = pairwise ? client_reward(i, reports, partition, *pairwise, config.peers, ck)
                                : client_reward(i, reports, partition, kfca_score, config.peers, ck);
      out.rewards[i].round = t;
    });
    double hs = 0.0, as = 0.0;
    std::size_t hc = 0, ac = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (config.attack_of(i).is_honest()) {
        hs += out.rewards[i].reward;
        ++hc;
      } else {
        as += out.rewards[i].reward;
        ++ac;
      }
    }
    out.honest_mean = mean_or_nan(hs, hc);
    out.attacker_mean = mean_or_nan(as, ac);

    // (f) floor(n/2) disjoint random pairs.
    Stream pair_rng = rk.child(stream_tag::kPairs).stream();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[pair_rng.below(i)]);
    const std::size_t pairs = n / 2;
    std::vector<std::optional<PairVerdict>> slots(pairs);
    parallel_for(pairs, workers, [&](std::size_t p) {
      std::size_t i = order[2 * p], j = order[2 * p + 1];
      if (i > j) std::swap(i, j);
      DeltaMatrix d = empirical_delta(reports.row(i), reports.row(j), l);
      CategoricalVerdict v = check_categorical(d);
      slots[p].emplace(PairVerdict{i, j, std::move(d), std::move(v)});
    });
    for (auto& s : slots) out.verdicts.push_back(std::move(*s));

    // FedAvg aggregation would happen here; the simulator only advances truths.
    result.rounds.push_back(std::move(out));
  }
  return result;
}

std::vector<MeanEstimate> client_reward_means(const SimulationResult& result, std::size_t first, std::size_t last) {
  if (first < 1 || last > result.rounds.size() || first > last) {
    throw Error(Errc::kInvalidArgument, "round window outside the simulated range");
  }
  const std::size_t n = result.config.clients;
  std::vector<MeanEstimate> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> xs;
    for (std::size_t t = first; t <= last; ++t) xs.push_back(result.rounds[t - 1].rewards[i].reward);
    out[i] = estimate_mean(xs);
  }
  return out;
}

std::vector<StrategyReward> strategy_rewards(const SimulationResult& result, std::size_t first, std::size_t last) {
  if (first < 1 || last > result.rounds.size() || first > last) {
    throw Error(Errc::kInvalidArgument, "round window outside the simulated range");
  }
  const auto& cfg = result.config;
  std::vector<AttackSpec> specs;
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    const auto& a = cfg.attack_of(i);
    if (std::find(specs.begin(), specs.end(), a) == specs.end()) specs.push_back(a);
  }
  std::vector<StrategyReward> out;
  for (const auto& spec : specs) {
    StrategyReward sr;
    sr.attack = spec;
    std::vector<double> per_round;
    for (std::size_t t = first; t <= last; ++t) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < cfg.clients; ++i)
        if (cfg.attack_of(i) == spec) {
          sum += result.rounds[t - 1].rewards[i].reward;
          ++count;
        }
      sr.clients = count;
      per_round.push_back(sum / static_cast<double>(count));
    }
    sr.reward = estimate_mean(per_round);
    out.push_back(std::move(sr));
  }
  return out;
}

std::vector<HeterogeneityPoint> heterogeneity_sweep(const std::vector<double>& concentrations,
                                                    const SimConfig& base, std::size_t workers) {
  std::vector<HeterogeneityPoint> out;
  for (double conc : concentrations) {
    if (!(conc > 0.0 && std::isfinite(conc))) {
      throw Error(Errc::kInvalidConcentration, "concentrations must be positive and finite");
    }
    SimConfig cfg = base;
    cfg.concentration = conc;
    cfg.alphas.clear();
    const auto result = run_simulation(cfg, workers);

    HeterogeneityPoint p;
    p.concentration = conc;
    p.mean_alpha = std::accumulate(result.alphas.begin(), result.alphas.end(), 0.0) /
                   static_cast<double>(result.alphas.size());
    std::size_t holds = 0;
    double hs = 0.0, fs = 0.0;
    std::size_t hc = 0, fc = 0;
    for (const auto& round : result.rounds) {
      for (const auto& pv : round.verdicts) {
        if (!cfg.attack_of(pv.i).is_honest() || !cfg.attack_of(pv.j).is_honest()) continue;
        ++p.honest_pairs;
        if (pv.verdict.holds) ++holds;
      }
      for (std::size_t i = 0; i < cfg.clients; ++i) {
        const auto& a = cfg.attack_of(i);
        if (a.is_honest()) {
          hs += round.rewards[i].reward;
          ++hc;
        } else if (a.kind == AttackKind::kSignFlip) {
          fs += round.rewards[i].reward;
          ++fc;
        }
      }
    }
    p.categorical_fraction = p.honest_pairs == 0 ? std::numeric_limits<double>::quiet_NaN()
                                                 : static_cast<double>(holds) / static_cast<double>(p.honest_pairs);
    p.honest_mean = mean_or_nan(hs, hc);
    p.flip_mean = mean_or_nan(fs, fc);
    p.gap = p.honest_mean - p.flip_mean;
    out.push_back(p);
  }
  return out;
}

std::vector<LagPoint> lagged_reward_profile(const SimConfig& config, std::size_t workers) {
  std::size_t max_lag = 1;
  for (std::size_t i = 0; i < config.clients; ++i) {
    const auto& a = config.attack_of(i);
    if (a.kind == AttackKind::kLagged) max_lag = std::max(max_lag, a.lag);
  }
  if (config.rounds <= max_lag) {
    throw Error(Errc::kConfig, "rounds T = " + std::to_string(config.rounds) + " must exceed the largest lag " +
                                   std::to_string(max_lag));
  }
  const auto result = run_simulation(config, workers);
  auto groups = strategy_rewards(result, max_lag + 1, config.rounds);
  std::stable_partition(groups.begin(), groups.end(), [](const StrategyReward& g) { return g.attack.is_honest(); });
  std::vector<LagPoint> out;
  for (const auto& g : groups) out.push_back(LagPoint{g.attack, g.reward});
  return out;
}

}  // namespace kfca
