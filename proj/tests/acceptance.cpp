// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Every random quantity derives from kSeed; no criterion is retried.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "kfca/bench.hpp"
#include "kfca/fl_sim.hpp"
#include "kfca/io.hpp"
#include "kfca/parallel.hpp"
#include "kfca/shapley.hpp"
#include "kfca/truthfulness.hpp"
#include "oracles.hpp"

using namespace kfca;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;
const StreamKey kRoot(kSeed);

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;

  void require(bool ok, const std::string& why) {
    if (ok) return;
    failures += (pass ? "" : "; ") + why;
    pass = false;
  }
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

std::size_t factorial(std::size_t n) { return n <= 1 ? 1 : n * factorial(n - 1); }

// 1 -------------------------------------------------------------------------
void flip_example(Outcome& o) {
  const std::vector<Label> ri{1, 0, 1, 0, 1, 0}, rj{0, 1, 0, 1, 0, 1};
  const auto d = empirical_delta(ri, rj, 2);
  const Matrix expect = Matrix::from_rows({{-0.25, 0.25}, {0.25, -0.25}});
  o.require(d.entries().max_abs_diff(expect) == 0.0, "empirical delta differs from [[-.25,.25],[.25,-.25]]");
  const auto ca = ca_score_matrix(d);
  const double truthful = expected_reward(d, ca, ReportStrategy::truthful(2), ReportStrategy::truthful(2));
  const double flipped = expected_reward(d, ca, ReportStrategy::flip(2), ReportStrategy::flip(2));
  o.require(std::abs(truthful - 0.5) <= 1e-12, "truthful CA reward " + fmt(truthful, 17));
  o.require(std::abs(flipped - 0.5) <= 1e-12, "flip CA reward " + fmt(flipped, 17));
  o.detail << "delta exact; E_CA(truthful) = " << truthful << ", E_CA(flip) = " << flipped;
}

// Shared by 2 and 3: 100 random categorical deltas per L.
std::vector<DeltaMatrix> sweep_deltas(std::size_t l) {
  Stream rng = kRoot.child({stream_tag::kStrategy, l}).stream();
  std::vector<DeltaMatrix> out;
  for (int t = 0; t < 100; ++t) out.push_back(random_categorical_delta(l, rng));
  return out;
}

// 2 -------------------------------------------------------------------------
void kfca_strict(Outcome& o) {
  std::size_t checked = 0;
  for (std::size_t l : {2u, 3u, 4u}) {
    for (const auto& d : sweep_deltas(l)) {
      const auto s = summarize_profiles(enumerate_profiles(d, ScoreMatrix::kfca(l), 0));
      o.require(s.maximizer_count == factorial(l),
                "L=" + std::to_string(l) + " maximizers " + std::to_string(s.maximizer_count));
      o.require(s.maximizers_all_shared_bijections, "L=" + std::to_string(l) + " non-bijective maximizer");
      o.require(s.truthful_value > s.best_non_bijective_value, "L=" + std::to_string(l) + " truthful not strict");
      ++checked;
    }
  }
  o.detail << checked << " deltas; maximizer set = L! shared bijections, truthful strictly above non-bijective";
}

// 3 -------------------------------------------------------------------------
void ca_weak(Outcome& o) {
  std::size_t checked = 0, ties = 0;
  double worst_constant = 0.0;
  for (std::size_t l : {2u, 3u, 4u}) {
    for (const auto& d : sweep_deltas(l)) {
      const auto profiles = enumerate_profiles(d, ca_score_matrix(d), 0);
      const auto s = summarize_profiles(profiles);
      o.require(s.truthful_is_maximizer, "L=" + std::to_string(l) + " truthful below max");
      if (s.maximizer_count > factorial(l)) ++ties;
      for (const auto& p : profiles) {
        const auto img = p.f1.image();
        if (std::all_of(img.begin(), img.end(), [&](Label r) { return r == img[0]; }))
          worst_constant = std::max(worst_constant, std::abs(p.value));
      }
      ++checked;
    }
  }
  o.require(worst_constant <= 1e-12, "constant strategy reward " + fmt(worst_constant));
  o.detail << checked << " deltas; (id,id) attains max; max |E(constant, .)| = " << worst_constant
           << "; deltas with extra maximizers: " << ties;
}

// 4 -------------------------------------------------------------------------
void binary_closed_form(Outcome& o) {
  std::size_t cells = 0;
  double worst_z = 0.0;
  for (double alpha : {0.0, 0.1, 0.2, 0.3, 0.4}) {
    const std::vector<double> a{alpha};
    const auto world = SignalWorld::binary_symmetric(a);
    for (double lambda : {0.0, 0.2, 0.4, 0.6}) {
      RobustnessConfig c;
      c.lambda = lambda;
      c.tasks = 10000;
      c.trials = 200;
      const auto r = simulate_robustness(world, c, kRoot.child(stream_tag::kTrial), 0);
      const double closed = binary_robustness(alpha, r.realized_lambda);
      const double z = std::abs(r.simulated_mean - closed) / r.simulated_stderr;
      worst_z = std::max(worst_z, z);
      o.require(z <= 3.0, "alpha=" + fmt(alpha) + " lambda=" + fmt(lambda) + " off by " + fmt(z, 3) + " sigma");
      ++cells;
    }
    // Sign change exactly at one half.
    o.require(binary_robustness(alpha, 0.5) == 0.0, "nonzero at lambda = 0.5");
    o.require(binary_robustness(alpha, 0.5 - 1e-9) > 0 && binary_robustness(alpha, 0.5 + 1e-9) < 0,
              "no sign change across 0.5 at alpha=" + fmt(alpha));
  }
  o.detail << cells << " cells at m=10^4, 200 trials; worst |z| = " << fmt(worst_z, 3);
}

// 5 -------------------------------------------------------------------------
void multiclass_reduction(Outcome& o) {
  const std::vector<double> prior{0.5, 0.5};
  double worst = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j <= 20; ++j) {
      const double a = 0.05 * i, lam = 0.05 * j;
      const auto honest = Matrix::from_rows({{1 - a, a}, {a, 1 - a}});
      const auto flipped = Matrix::from_rows({{a, 1 - a}, {1 - a, a}});
      worst = std::max(worst, std::abs(multiclass_robustness(prior, honest, flipped, lam).total - binary_robustness(a, lam)));
    }
  o.require(worst <= 1e-12, "max deviation " + fmt(worst));
  const auto half = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  const auto r = multiclass_robustness(prior, half, half, 0.3);
  o.require(r.a == r.b && !r.threshold.has_value(), "threshold reported when A = B");
  o.detail << "max |multiclass - binary| = " << worst << "; A = B gives no threshold";
}

// 6 -------------------------------------------------------------------------
void permutation_gap(Outcome& o) {
  struct Case {
    std::string name;
    SignalWorld world;
  };
  const std::vector<double> a2{0.2}, a3{0.3};
  ClientChannel c4;
  c4.confusion = Matrix::from_rows(
      {{0.7, 0.1, 0.1, 0.1}, {0.15, 0.6, 0.15, 0.1}, {0.05, 0.1, 0.8, 0.05}, {0.1, 0.2, 0.1, 0.6}});
  c4.baseline = {0.25, 0.25, 0.25, 0.25};
  std::vector<Case> cases{
      {"binary a=0.2", SignalWorld::binary_symmetric(a2)},
      {"L=3 a=0.3 skewed prior", SignalWorld::symmetric_noise(3, {0.5, 0.3, 0.2}, a3)},
      {"L=4 asymmetric channel", SignalWorld(LabelSpace(4), {0.4, 0.3, 0.2, 0.1}, {c4})},
  };
  double worst_z = 0.0;
  std::size_t idx = 0;
  for (const auto& c : cases) {
    const auto d = analytic_delta(c.world, 0, 0);
    o.require(check_categorical(d).holds, c.name + " is not categorical");
    const auto pi = worst_case_permutation(d);
    for (double lambda : {0.0, 0.25, 0.4}) {
      PermutationGapConfig cfg;
      cfg.lambda = lambda;
      cfg.trials = 200;
      const auto r = measure_permutation_gap(c.world, pi, cfg, kRoot.child({stream_tag::kPermutation, idx}), 0);
      const double z = std::abs(r.measured.mean - r.analytic) / r.measured.std_error;
      worst_z = std::max(worst_z, z);
      o.require(z <= 3.0, c.name + " lambda=" + fmt(lambda) + " off by " + fmt(z, 3) + " sigma");
      ++idx;
    }
  }
  o.detail << "3 worlds x lambda {0, .25, .4}; worst |z| = " << fmt(worst_z, 3);
}

// 7 -------------------------------------------------------------------------
void shirking(Outcome& o) {
  const std::vector<double> alphas{0.15, 0.25};
  const auto base = SignalWorld::symmetric_noise(3, {0.45, 0.35, 0.2}, alphas);
  const auto d_inf = analytic_delta(base, 0, 1);
  const std::size_t m = 1000000;
  double worst_z = 0.0;
  std::size_t idx = 0;
  for (auto [e1, e2] : std::vector<std::pair<double, double>>{{1, 1}, {0.5, 0.5}, {0.5, 1}, {0, 1}}) {
    const auto w = base.with_effort(0, e1).with_effort(1, e2);
    const StreamKey k = kRoot.child({stream_tag::kSignal, idx++});
    Stream t = k.child(stream_tag::kTruth).stream(), s0 = k.child({stream_tag::kClient, 0}).stream(),
           s1 = k.child({stream_tag::kClient, 1}).stream();
    const auto ys = sample_truths(w, m, t);
    const auto z1 = sample_signals(w, 0, ys, s0), z2 = sample_signals(w, 1, ys, s1);
    const auto d_hat = empirical_delta(z1, z2, 3);
    const auto expect = shirk_scale(d_inf, e1, e2);
    // Standard error of each entry from the influence function of
    // P(a,b) - P1(a) P2(b): 1{a,b} - P2(b) 1{Z1=a} - P1(a) 1{Z2=b}.
    std::vector<double> p1(3, 0), p2(3, 0);
    for (std::size_t k2 = 0; k2 < m; ++k2) {
      p1[z1[k2]] += 1.0 / m;
      p2[z2[k2]] += 1.0 / m;
    }
    for (Label a = 0; a < 3; ++a)
      for (Label b = 0; b < 3; ++b) {
        double s = 0, ss = 0;
        for (std::size_t k2 = 0; k2 < m; ++k2) {
          const double psi = (z1[k2] == a && z2[k2] == b) - p2[b] * (z1[k2] == a) - p1[a] * (z2[k2] == b);
          s += psi;
          ss += psi * psi;
        }
        const double var = ss / m - (s / m) * (s / m);
        const double se = std::sqrt(var / m);
        const double z = std::abs(d_hat(a, b) - expect(a, b)) / se;
        worst_z = std::max(worst_z, z);
        o.require(z <= 3.0, "eta=(" + fmt(e1) + "," + fmt(e2) + ") entry " + std::to_string(a) + std::to_string(b) +
                                " off by " + fmt(z, 3) + " sigma");
      }
  }
  o.detail << "4 effort pairs, 9 entries each, m=10^6; worst |z| = " << fmt(worst_z, 3);
}

// 8 -------------------------------------------------------------------------
void shapley_axioms(Outcome& o) {
  const auto g = CoalitionOracle::from_table({0.1, 0.7, 0.75, 0.85, 0.8, 0.9, 0.95, 0.98});
  const auto phi = exact_shapley(g).values;
  const auto ref = oracle::shapley_by_permutations(3, [&](std::uint64_t s) { return g(s); });
  const std::vector<double> stated{0.24333333333333, 0.29333333333333, 0.34333333333333};
  double sum = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    o.require(std::abs(phi[i] - ref[i]) <= 1e-9, "phi differs from permutation oracle");
    o.require(std::abs(phi[i] - stated[i]) <= 1e-9, "phi_" + std::to_string(i + 1) + " = " + fmt(phi[i], 12));
    sum += phi[i];
  }
  o.require(std::abs(sum - 0.88) <= 1e-9, "sum phi = " + fmt(sum, 12));

  Stream rng = kRoot.child(stream_tag::kPermutation).stream();
  std::vector<double> t1(1 << 5), t2(1 << 5);
  for (auto& x : t1) x = rng.uniform();
  for (auto& x : t2) x = rng.uniform();
  const auto g1 = CoalitionOracle::from_table(t1), g2 = CoalitionOracle::from_table(t2);
  const auto p1 = exact_shapley(g1).values, p2 = exact_shapley(g2).values;
  double eff = 0;
  for (double x : p1) eff += x;
  o.require(std::abs(eff - (g1(g1.grand()) - g1.empty_value())) <= 1e-9, "efficiency");
  const CoalitionOracle sym(5, [](Coalition s) { return std::log1p(static_cast<double>(std::popcount(s))); });
  const auto ps = exact_shapley(sym).values;
  for (double x : ps) o.require(std::abs(x - ps[0]) <= 1e-9, "symmetry");
  const CoalitionOracle null_game(5, [&](Coalition s) { return g1(s & ~Coalition{8}); });
  o.require(std::abs(exact_shapley(null_game).values[3]) <= 1e-9, "null player");
  const CoalitionOracle sum_game(5, [&](Coalition s) { return g1(s) + g2(s); });
  const auto pa = exact_shapley(sum_game).values;
  for (std::size_t i = 0; i < 5; ++i) o.require(std::abs(pa[i] - p1[i] - p2[i]) <= 1e-9, "additivity");
  o.detail << "phi = (" << fmt(phi[0], 8) << ", " << fmt(phi[1], 8) << ", " << fmt(phi[2], 8) << "), sum = " << sum
           << "; efficiency, symmetry, null player, additivity hold";
}

// 9 -------------------------------------------------------------------------
void mc_consistency(Outcome& o) {
  const auto g = CoalitionOracle::from_table({0.1, 0.7, 0.75, 0.85, 0.8, 0.9, 0.95, 0.98});
  const auto exact = exact_shapley(g).values;
  McShapleyConfig c;
  c.max_permutations = 10;
  c.use_stopping_rule = false;
  c.truncation_eps = 0.0;
  std::vector<std::vector<double>> samples(3);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto r = mc_shapley(g, c, kRoot.child({stream_tag::kPermutation, s}), 1);
    for (std::size_t i = 0; i < 3; ++i) samples[i].push_back(r.values[i]);
  }
  double worst_z = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto e = estimate_mean(samples[i]);
    const double z = std::abs(e.mean - exact[i]) / e.std_error;
    worst_z = std::max(worst_z, z);
    o.require(z <= 3.0, "client " + std::to_string(i) + " off by " + fmt(z, 3) + " sigma");
  }
  const std::vector<double> w{0.3, 0.1, 0.25, 0.15, 0.2};
  const CoalitionOracle additive(5, [&](Coalition s) {
    double v = 0;
    for (std::size_t i = 0; i < 5; ++i)
      if (s >> i & 1) v += w[i];
    return v;
  });
  McShapleyConfig stop;
  stop.max_permutations = 1000;
  const auto r = mc_shapley(additive, stop, kRoot.child(stream_tag::kPermutation), 1);
  o.require(r.converged && r.permutations_used == stop.window + 1,
            "stopping rule fired after " + std::to_string(r.permutations_used) + " permutations");
  o.detail << "200 seeds x 10 permutations, worst |z| = " << fmt(worst_z, 3) << "; additive game stops at h = "
           << r.permutations_used;
}

// 10 ------------------------------------------------------------------------
SimConfig attack_config(std::vector<AttackSpec> extra) {
  SimConfig c;
  c.alpha = 0.1;
  c.tasks = 10000;
  c.rounds = 10;
  c.rho = 0.8;
  c.attacks.assign(10, AttackSpec::honest());
  c.attacks.insert(c.attacks.end(), extra.begin(), extra.end());
  c.clients = c.attacks.size();
  c.seed = kRoot.child(stream_tag::kAttack).value();
  return c;
}

void attack_ordering(Outcome& o) {
  const auto cfg = attack_config({AttackSpec::sparse(0.75), AttackSpec::sparse(0.5), AttackSpec::sparse(0.25),
                                  AttackSpec::zero(), AttackSpec::random(), AttackSpec::sign_flip()});
  const auto res = run_simulation(cfg, 0);
  const auto g = strategy_rewards(res, 1, cfg.rounds);
  auto get = [&](const AttackSpec& a) {
    for (const auto& s : g)
      if (s.attack == a) return s.reward;
    throw std::logic_error("missing strategy");
  };
  const auto honest = get(AttackSpec::honest()), s75 = get(AttackSpec::sparse(0.75)), s50 = get(AttackSpec::sparse(0.5)),
             s25 = get(AttackSpec::sparse(0.25)), zero = get(AttackSpec::zero()), rnd = get(AttackSpec::random()),
             flip = get(AttackSpec::sign_flip());
  o.require(honest.mean > s75.mean, "Honest <= Sparse75");
  o.require(s75.mean > s50.mean, "Sparse75 <= Sparse50");
  o.require(s50.mean > s25.mean, "Sparse50 <= Sparse25");
  o.require(s25.mean > std::max(zero.mean, rnd.mean), "Sparse25 <= max(Zero, Random)");
  o.require(std::min(zero.mean, rnd.mean) > flip.mean, "min(Zero, Random) <= SignFlip");
  o.require(std::abs(zero.mean) <= 3 * zero.std_error, "Zero not within 3 sigma of 0");
  o.require(std::abs(rnd.mean) <= 3 * rnd.std_error, "Random not within 3 sigma of 0");
  o.require(flip.mean + 3 * flip.std_error < 0, "SignFlip not negative with 3 sigma margin");
  for (const auto& s : g)
    if (!s.attack.is_honest())
      o.require(s.reward.mean + 3 * std::hypot(s.reward.std_error, honest.std_error) < honest.mean,
                s.attack.name() + " not 3 sigma below Honest");

  const auto lag_cfg = attack_config({AttackSpec::lagged(2), AttackSpec::lagged(3), AttackSpec::lagged(4),
                                      AttackSpec::lagged(5), AttackSpec::stale()});
  const auto lag = lagged_reward_profile(lag_cfg, 0);
  std::ostringstream lags;
  for (std::size_t i = 0; i < lag.size(); ++i) {
    lags << (i ? " >= " : "") << lag[i].attack.name() << " " << fmt(lag[i].reward.mean, 3);
    if (i > 0) {
      const double slack = 3 * std::hypot(lag[i].reward.std_error, lag[i - 1].reward.std_error);
      o.require(lag[i].reward.mean <= lag[i - 1].reward.mean + slack,
                lag[i].attack.name() + " above " + lag[i - 1].attack.name());
    }
  }
  o.detail << "honest " << fmt(honest.mean, 3) << " > s75 " << fmt(s75.mean, 3) << " > s50 " << fmt(s50.mean, 3)
           << " > s25 " << fmt(s25.mean, 3) << " > {zero " << fmt(zero.mean, 2) << ", random " << fmt(rnd.mean, 2)
           << "} > flip " << fmt(flip.mean, 3) << "; lag: " << lags.str();
}

// 11 ------------------------------------------------------------------------
void heterogeneity(Outcome& o) {
  SimConfig base;
  base.tasks = 10000;
  base.rounds = 5;
  base.attacks.assign(10, AttackSpec::honest());
  base.attacks.push_back(AttackSpec::sign_flip());
  base.clients = base.attacks.size();
  base.seed = kRoot.child(stream_tag::kNoiseProfile).value();
  const auto pts = heterogeneity_sweep({0.1, 0.5, 1.0, 5.0, 100.0}, base, 0);
  std::ostringstream os;
  for (const auto& p : pts) {
    const auto res_alphas = p.mean_alpha;
    o.require(p.categorical_fraction == 1.0, "concentration " + fmt(p.concentration) + " holds fraction " +
                                                 fmt(p.categorical_fraction));
    os << fmt(p.concentration) << ":" << fmt(p.categorical_fraction) << " (mean alpha " << fmt(res_alphas, 3) << ") ";
  }
  for (double c : {0.1, 0.5, 1.0, 5.0, 100.0}) {
    SimConfig probe = base;
    probe.concentration = c;
    for (double a : resolve_alphas(probe)) o.require(a < 0.5, "noise rate >= 0.5");
  }
  SimConfig forced = base;
  forced.alphas.assign(base.clients, 0.5);
  const auto res = run_simulation(forced, 0);
  std::size_t pairs = 0, holds = 0;
  for (const auto& r : res.rounds)
    for (const auto& v : r.verdicts)
      if (forced.attack_of(v.i).is_honest() && forced.attack_of(v.j).is_honest()) {
        ++pairs;
        holds += v.verdict.holds;
      }
  const double forced_fraction = static_cast<double>(holds) / static_cast<double>(pairs);
  const std::vector<double> half{0.5, 0.5};
  o.require(!check_categorical(analytic_delta(SignalWorld::binary_symmetric(half), 0, 1)).holds,
            "analytic delta categorical at alpha = 0.5");
  o.require(forced_fraction < 1.0, "alpha = 0.5 still categorical on every pair");
  o.detail << "holds fraction by concentration " << os.str() << "; alpha = 0.5 gives " << fmt(forced_fraction, 3)
           << " over " << pairs << " pairs";
}

// 12 ------------------------------------------------------------------------
void scaling(Outcome& o) {
  const std::vector<std::size_t> grid{20, 40, 80, 160};
  auto slope = [&](ScoringMode mode, std::size_t repeats) {
    std::vector<double> ns, t;
    const std::size_t peers[] = {2};
    for (const auto& p : measure_scaling(mode, grid, peers, 10000, repeats, kSeed)) {
      ns.push_back(static_cast<double>(p.clients));
      t.push_back(p.median_seconds);
    }
    return loglog_slope(ns, t);
  };
  const double sk = slope(ScoringMode::kKfca, 21), sc = slope(ScoringMode::kCaEmpirical, 9);
  o.require(sk >= 0.8 && sk <= 1.2, "KFCA slope " + fmt(sk, 3));
  o.require(sc >= 1.7 && sc <= 2.3, "CA-empirical slope " + fmt(sc, 3));
  o.detail << "n in {20,40,80,160}, P=2, m=10^4: KFCA slope " << fmt(sk, 3) << ", CA-empirical slope " << fmt(sc, 3);
}

// 13 ------------------------------------------------------------------------
int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = kfca::cli::run(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

void determinism(Outcome& o) {
  const fs::path dir = fs::temp_directory_path() / "kfca_acceptance_replay";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file(dir / "sim.ini",
                  "[simulation]\nrounds = 4\ntasks = 3000\nseed = 5\n[noise]\nconcentration = 0.5\n"
                  "[attacks]\npopulation = honest*8, sparse:0.5, lagged:2, signflip\n");
  write_text_file(dir / "game.json", game_to_json(CoalitionOracle::from_table(
                                                      {0.1, 0.7, 0.75, 0.85, 0.8, 0.9, 0.95, 0.98}))
                                         .dump());
  write_text_file(dir / "reports.csv", "0,1,1,0,1,0,1,1\n0,1,1,0,0,0,1,1\n1,0,0,1,0,1,0,0\n1,1,1,0,1,0,1,0\n");
  const std::string d = dir.string();
  const std::vector<std::vector<std::string>> runs{
      {"--config", d + "/sim.ini", "--out-dir", d + "/simulate", "simulate"},
      {"--config", d + "/sim.ini", "--format", "json", "--out-dir", d + "/simulate_qp", "simulate", "--set",
       "simulation.mode=kfca-qp", "--set", "simulation.scoring=ca-empirical"},
      {"--seed", "3", "--out-dir", d + "/truthfulness", "truthfulness", "--labels", "4", "--top", "500"},
      {"--out-dir", d + "/robustness", "robustness", "--alphas", "0.1,0.3", "--lambdas", "0.2,0.6", "--trials", "10",
       "--tasks", "2000"},
      {"--out-dir", d + "/shapley_game", "shapley", "--game", d + "/game.json", "--permutations", "2000"},
      {"--out-dir", d + "/shapley_world", "shapley", "--permutations", "500", "--stopping", "on", "--tasks", "2000"},
      {"--out-dir", d + "/delta", "delta-check", "--reports", d + "/reports.csv"},
      {"--out-dir", d + "/commit", "commit", "--reports", d + "/reports.csv", "--salt", "x"},
  };
  const std::string max_workers = std::to_string(std::max<std::size_t>(4, resolve_workers(0)));
  std::size_t files = 0;
  for (const auto& args : runs) {
    std::string msg;
    if (cli(args, &msg) != 0) {
      o.require(false, "run failed: " + msg);
      continue;
    }
    const fs::path out = args[std::distance(args.begin(), std::find(args.begin(), args.end(), "--out-dir")) + 1];
    const auto m = nlohmann::json::parse(read_text_file(out / "manifest.json"));
    for (const std::string workers : {"1", max_workers.c_str()}) {
      const fs::path again = out.string() + "_w" + workers;
      const int code = cli({"--out-dir", again.string(), "--workers", workers, "replay", (out / "manifest.json").string(),
                            "--check"},
                           &msg);
      o.require(code == 0, out.filename().string() + " replay (workers " + workers + "): " + msg);
      for (const auto& f : m["outputs"]) {
        const auto name = f["path"].get<std::string>();
        o.require(read_binary_file(out / name) == read_binary_file(again / name),
                  out.filename().string() + "/" + name + " differs at workers " + workers);
        ++files;
      }
    }
  }
  fs::remove_all(dir);
  o.detail << runs.size() << " commands, " << files << " file comparisons at workers 1 and " << max_workers
           << "; all byte-identical";
}

}  // namespace

// Optional arguments pick criteria by number; none runs all.
int main(int argc, char** argv) {
  std::vector<bool> selected(13, argc <= 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k < 1 || k > 13) {
      std::cerr << "criterion numbers are 1..13\n";
      return 2;
    }
    selected[static_cast<std::size_t>(k - 1)] = true;
  }
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"CA label-flip reproduction", flip_example},
      {"KFCA strict truthfulness", kfca_strict},
      {"CA weak truthfulness", ca_weak},
      {"Binary robustness closed form", binary_closed_form},
      {"Multi-class reduction", multiclass_reduction},
      {"Permutation differential", permutation_gap},
      {"Shirking lemma", shirking},
      {"Shapley axioms and worked game", shapley_axioms},
      {"MC Shapley consistency", mc_consistency},
      {"Attack ordering", attack_ordering},
      {"Categorical condition under heterogeneity", heterogeneity},
      {"Scaling", scaling},
      {"Determinism", determinism},
  };
  const std::vector<double> budgets{1, 300, 300, 600, 60, 600, 600, 60, 60, 300, 600, 600, 600};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < budgets[i], "runtime " + fmt(secs, 3) + " s over budget " + fmt(budgets[i]) + " s");
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << " (" << fmt(secs, 3)
              << " s): " << o.detail.str() << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria fail") << std::endl;
  return failed == 0 ? 0 : 1;
}
