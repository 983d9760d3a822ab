#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kfca/bench.hpp"
#include "kfca/config.hpp"
#include "kfca/fl_sim.hpp"
#include "kfca/io.hpp"
#include "kfca/parallel.hpp"
#include "kfca/shapley.hpp"
#include "kfca/truthfulness.hpp"

#ifndef KFCA_VERSION
#define KFCA_VERSION "0.0.0"
#endif

namespace kfca::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

struct Globals {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::string out_dir;
  std::string format = "csv";
};

// Collects output files and phase timings for the manifest.
class Recorder {
 public:
  explicit Recorder(fs::path dir) : dir_(std::move(dir)) {}

  void phase(const std::string& name, Clock::time_point start) {
    phases_.push_back({{"name", name}, {"seconds", std::chrono::duration<double>(Clock::now() - start).count()}});
  }

  void write(const std::string& name, const std::string& content, bool deterministic = true) {
    write_text_file(dir_ / name, content);
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(content.data()), content.size());
    outputs_.push_back({{"path", name}, {"sha256", sha256_hex(bytes)}, {"deterministic", deterministic}});
  }

  const fs::path& dir() const { return dir_; }
  const json& phases() const { return phases_; }
  const json& outputs() const { return outputs_; }

 private:
  fs::path dir_;
  json phases_ = json::array();
  json outputs_ = json::array();
};

struct Invocation {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::string> args;  // canonical subcommand options
  json options = json::object();
  std::optional<std::string> config_text;
  std::uint64_t seed = 0;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const Invocation& inv, const Globals& g, const Recorder& rec) {
  json m;
  m["command"] = inv.command;
  m["argv"] = inv.argv;
  m["args"] = inv.args;
  m["options"] = inv.options;
  m["config"] = inv.config_text ? json(*inv.config_text) : json(nullptr);
  m["seed"] = inv.seed;
  m["format"] = g.format;
  m["workers"] = g.workers;
  m["tool_version"] = KFCA_VERSION;
  m["hash"] = "sha256";
  m["phases"] = rec.phases();
  m["outputs"] = rec.outputs();
  m["created_at"] = utc_now();
  write_text_file(rec.dir() / "manifest.json", m.dump(2) + "\n");
}

std::string num(double x) { return format_double(x); }

json num_or_null(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

std::string map_string(const StrategyMap& f) {
  std::string s;
  for (Label x : f.image()) s += std::to_string(x);
  return s;
}

json delta_entries(const DeltaMatrix& d) { return delta_to_json(d)["entries"]; }

json verdict_json(const CategoricalVerdict& v) {
  json bad = json::array();
  for (const auto& [a, b] : v.violating_entries) bad.push_back({a, b});
  return {{"holds", v.holds}, {"min_diagonal", v.min_diagonal}, {"max_offdiagonal", v.max_offdiagonal},
          {"violations", bad}};
}

// Writes rows either as CSV (header + rows) or as a JSON array of objects.
std::string table(const std::string& format, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows, const std::vector<std::vector<json>>& jrows) {
  if (format == "json") {
    json arr = json::array();
    for (const auto& r : jrows) {
      json o = json::object();
      for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = r[i];
      arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
  }
  std::string out = csv_row(header);
  for (const auto& r : rows) out += csv_row(r);
  return out;
}

std::string table_ext(const std::string& format) { return format == "json" ? ".json" : ".csv"; }

// --------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::vector<std::string> overrides;
};

void cmd_simulate(const SimulateOpts& o, const Globals& g, Invocation& inv, Recorder& rec) {
  auto t0 = Clock::now();
  if (!g.config) throw Error(Errc::kConfig, "simulate needs --config <file>");
  SimConfig cfg = load_sim_config(*g.config, o.overrides);
  if (g.seed) cfg.seed = *g.seed;
  inv.seed = cfg.seed;
  inv.config_text = sim_config_to_ini(cfg);
  rec.phase("load", t0);

  t0 = Clock::now();
  const auto result = run_simulation(cfg, g.workers);
  rec.phase("simulate", t0);

  t0 = Clock::now();
  const std::vector<std::string> header{"round", "client", "attack", "reward", "peers_used", "bonus_tasks"};
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<json>> jrows;
  json rounds = json::array();
  for (const auto& r : result.rounds) {
    for (const auto& rw : r.rewards) {
      const auto attack = cfg.attack_of(rw.client).name();
      rows.push_back({std::to_string(r.round), std::to_string(rw.client), attack, num(rw.reward),
                      std::to_string(rw.peers_used), std::to_string(rw.bonus_tasks)});
      jrows.push_back({r.round, rw.client, attack, rw.reward, rw.peers_used, rw.bonus_tasks});
    }
    json pairs = json::array();
    for (const auto& pv : r.verdicts) {
      pairs.push_back({{"i", pv.i}, {"j", pv.j}, {"delta", delta_entries(pv.delta)}, {"categorical", verdict_json(pv.verdict)}});
    }
    rounds.push_back({{"round", r.round},
                      {"honest_mean", num_or_null(r.honest_mean)},
                      {"attacker_mean", num_or_null(r.attacker_mean)},
                      {"pairs", std::move(pairs)}});
  }
  rec.write("rewards" + table_ext(g.format), table(g.format, header, rows, jrows));
  json alphas = result.alphas;
  rec.write("verdicts.json", json{{"mode", std::string(to_string(cfg.mode))}, {"alphas", alphas}, {"rounds", rounds}}.dump(2) + "\n");
  rec.phase("write", t0);
}

// --------------------------------------------------------------------------
// truthfulness

struct TruthOpts {
  std::size_t labels = 2;
  std::string mechanism = "kfca";
  std::string delta = "random";
  double alpha = 0.1;
  std::string delta_file;
  std::size_t top = 0;
};

DeltaMatrix delta_from_file(const std::string& path) {
  const auto j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::kConfig, "delta file is not JSON: " + path);
  const json& rows = j.is_object() && j.contains("entries") ? j["entries"] : j;
  if (!rows.is_array() || rows.empty()) throw Error(Errc::kConfig, "delta file needs an entries matrix");
  std::vector<std::vector<double>> m;
  for (const auto& r : rows) {
    if (!r.is_array() || r.size() != rows.size()) throw Error(Errc::kConfig, "delta matrix must be square");
    std::vector<double> row;
    for (const auto& x : r) {
      if (!x.is_number()) throw Error(Errc::kConfig, "delta entries must be numbers");
      row.push_back(x.get<double>());
    }
    m.push_back(std::move(row));
  }
  return DeltaMatrix(Matrix::from_rows(m), DeltaProvenance::kAnalytic);
}

void cmd_truthfulness(const TruthOpts& o, const Globals& g, Invocation& inv, Recorder& rec) {
  auto t0 = Clock::now();
  inv.seed = g.seed.value_or(0);
  if (o.labels > kMaxEnumerationLabels) {
    throw Error(Errc::kLabelSpaceTooLarge,
                "exhaustive enumeration supports L <= 5 (got L = " + std::to_string(o.labels) + ")");
  }
  std::optional<DeltaMatrix> delta;
  if (o.delta == "random") {
    Stream rng = StreamKey(inv.seed).child(stream_tag::kStrategy).stream();
    delta = random_categorical_delta(o.labels, rng);
  } else if (o.delta == "symmetric") {
    const std::vector<double> alphas{o.alpha, o.alpha};
    const auto world = SignalWorld::symmetric_noise(o.labels, std::vector<double>(o.labels, 1.0 / static_cast<double>(o.labels)), alphas);
    delta = analytic_delta(world, 0, 1);
  } else if (o.delta == "flip-example") {
    if (o.labels != 2) throw Error(Errc::kConfig, "the flip example is binary (--labels 2)");
    const std::vector<Label> ri{1, 0, 1, 0, 1, 0};
    const std::vector<Label> rj{0, 1, 0, 1, 0, 1};
    delta = empirical_delta(ri, rj, 2);
  } else if (o.delta == "file") {
    if (o.delta_file.empty()) throw Error(Errc::kConfig, "--delta file needs --delta-file <path>");
    delta = delta_from_file(o.delta_file);
    if (delta->size() != o.labels) throw Error(Errc::kConfig, "delta file size differs from --labels");
  } else {
    throw Error(Errc::kConfig, "unknown delta source '" + o.delta + "'");
  }
  const ScoreMatrix score = o.mechanism == "ca" ? ca_score_matrix(*delta) : ScoreMatrix::kfca(o.labels);
  rec.phase("setup", t0);

  t0 = Clock::now();
  const auto profiles = enumerate_profiles(*delta, score, g.workers);
  const auto summary = summarize_profiles(profiles);
  rec.phase("enumerate", t0);

  t0 = Clock::now();
  const std::size_t limit = o.top == 0 ? profiles.size() : std::min(o.top, profiles.size());
  const std::vector<std::string> header{"rank", "f1", "f2", "value", "shared_bijection"};
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<json>> jrows;
  json maximizers = json::array();
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    const auto& p = profiles[r];
    if (r < limit) {
      if (g.format == "json") {
        jrows.push_back({r + 1, map_string(p.f1), map_string(p.f2), p.value, p.is_shared_bijection});
      } else {
        rows.push_back({std::to_string(r + 1), map_string(p.f1), map_string(p.f2), num(p.value),
                        p.is_shared_bijection ? "true" : "false"});
      }
    }
    if (p.value >= summary.max_value - 1e-12) {
      maximizers.push_back({{"f1", map_string(p.f1)}, {"f2", map_string(p.f2)}, {"value", p.value}});
    }
  }
  rec.write("profiles" + table_ext(g.format), table(g.format, header, rows, jrows));
  json s{{"labels", o.labels},
         {"mechanism", o.mechanism},
         {"delta_source", o.delta},
         {"delta", delta_entries(*delta)},
         {"categorical", verdict_json(check_categorical(*delta))},
         {"profile_count", summary.profile_count},
         {"max_value", summary.max_value},
         {"maximizer_count", summary.maximizer_count},
         {"maximizers_all_shared_bijections", summary.maximizers_all_shared_bijections},
         {"truthful_value", summary.truthful_value},
         {"truthful_is_maximizer", summary.truthful_is_maximizer},
         {"runner_up_value", num_or_null(summary.runner_up_value)},
         {"maximizers", maximizers}};
  rec.write("summary.json", s.dump(2) + "\n");
  rec.phase("write", t0);
}

// --------------------------------------------------------------------------
// robustness

struct RobustOpts {
  std::vector<double> alphas{0.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<double> lambdas{0.0, 0.2, 0.4, 0.6};
  std::size_t clients = 11;
  std::size_t tasks = 10000;
  std::size_t peers = 4;
  std::size_t trials = 200;
  std::size_t labels = 2;
  std::string attack = "signflip";
};

void cmd_robustness(const RobustOpts& o, const Globals& g, Invocation& inv, Recorder& rec) {
  auto t0 = Clock::now();
  inv.seed = g.seed.value_or(0);
  const AttackSpec attack = AttackSpec::parse(o.attack);
  const StreamKey root(inv.seed);
  const std::vector<std::string> header{"alpha", "lambda", "realized_lambda", "attackers", "analytic", "closed_form",
                                        "simulated_mean", "simulated_stderr", "trials", "threshold", "seed"};
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<json>> jrows;
  for (double alpha : o.alphas) {
    const std::vector<double> a{alpha};
    const SignalWorld world = o.labels == 2 ? SignalWorld::binary_symmetric(a)
                                            : SignalWorld::symmetric_noise(o.labels, std::vector<double>(o.labels, 1.0 / static_cast<double>(o.labels)), a);
    for (double lambda : o.lambdas) {
      RobustnessConfig rc;
      rc.lambda = lambda;
      rc.attack = attack;
      rc.clients = o.clients;
      rc.tasks = o.tasks;
      rc.peers = o.peers;
      rc.trials = o.trials;
      const auto r = simulate_robustness(world, rc, root, g.workers);
      const bool binary_flip = o.labels == 2 && attack.kind == AttackKind::kSignFlip && alpha < 0.5;
      const double closed = binary_flip ? binary_robustness(alpha, r.realized_lambda) : std::nan("");
      const double thr = r.threshold.value_or(std::nan(""));
      rows.push_back({num(alpha), num(lambda), num(r.realized_lambda), std::to_string(r.attackers), num(r.analytic_reward),
                      binary_flip ? num(closed) : "", num(r.simulated_mean), num(r.simulated_stderr),
                      std::to_string(r.trials), r.threshold ? num(thr) : "", std::to_string(inv.seed)});
      jrows.push_back({alpha, lambda, r.realized_lambda, r.attackers, r.analytic_reward, num_or_null(closed),
                       r.simulated_mean, r.simulated_stderr, r.trials, num_or_null(thr), inv.seed});
    }
  }
  rec.phase("simulate", t0);
  t0 = Clock::now();
  rec.write("robustness" + table_ext(g.format), table(g.format, header, rows, jrows));
  rec.phase("write", t0);
}

// --------------------------------------------------------------------------
// shapley

struct ShapleyOpts {
  std::string game;
  std::vector<double> world_alphas{0.05, 0.1, 0.2, 0.3};
  std::size_t labels = 2;
  std::size_t permutations = 10000;
  std::string truncation = "0";
  std::string stopping = "off";
  std::size_t tasks = 10000;
};

void cmd_shapley(const ShapleyOpts& o, const Globals& g, Invocation& inv, Recorder& rec) {
  auto t0 = Clock::now();
  inv.seed = g.seed.value_or(0);
  const StreamKey root(inv.seed);
  std::optional<SignalWorld> world;
  std::optional<CoalitionOracle> oracle;
  if (!o.game.empty()) {
    oracle = load_game_json(o.game);
  } else {
    const std::size_t l = o.labels;
    world = l == 2 ? SignalWorld::binary_symmetric(o.world_alphas)
                   : SignalWorld::symmetric_noise(l, std::vector<double>(l, 1.0 / static_cast<double>(l)), o.world_alphas);
    oracle = signal_utility_oracle(*world);
  }
  const std::size_t n = oracle->clients();
  if (n > kMaxExactClients) {
    throw Error(Errc::kTooManyClients, "exact Shapley supports n <= 12 (got n = " + std::to_string(n) + ")");
  }
  McShapleyConfig mc;
  mc.max_permutations = o.permutations;
  if (o.truncation == "auto") {
    mc.truncation_eps.reset();
  } else {
    mc.truncation_eps = parse_number_list(o.truncation).at(0);
  }
  if (o.stopping != "on" && o.stopping != "off") throw Error(Errc::kConfig, "--stopping takes on or off");
  mc.use_stopping_rule = o.stopping == "on";
  rec.phase("setup", t0);

  t0 = Clock::now();
  const auto exact = exact_shapley(*oracle);
  rec.phase("exact", t0);
  t0 = Clock::now();
  const auto est = mc_shapley(*oracle, mc, root.child(stream_tag::kPermutation), g.workers);
  rec.phase("monte_carlo", t0);

  t0 = Clock::now();
  std::optional<std::vector<double>> kfca_rewards;
  if (world) {
    // One all-honest KFCA round over the same clients, every other client a peer.
    SimConfig sc;
    sc.clients = n;
    sc.peers = n - 1;
    sc.tasks = o.tasks;
    sc.rounds = 1;
    sc.labels = o.labels;
    sc.alphas = o.world_alphas;
    sc.seed = inv.seed;
    const auto sim = run_simulation(sc, g.workers);
    kfca_rewards.emplace();
    for (const auto& r : sim.rounds.front().rewards) kfca_rewards->push_back(r.reward);
  }
  Stream rng = root.child(stream_tag::kStrategy).stream();
  std::vector<double> random_baseline(n);
  for (auto& x : random_baseline) x = rng.uniform();
  rec.phase("rewards", t0);

  t0 = Clock::now();
  const auto reference = normalize_rewards(exact.values);
  std::vector<std::string> header{"client", "phi_exact", "phi_mc", "evaluations"};
  if (kfca_rewards) header.push_back("kfca_reward");
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<json>> jrows;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> r{std::to_string(i), num(exact.values[i]), num(est.values[i]),
                               std::to_string(est.evaluations_used)};
    std::vector<json> jr{i, exact.values[i], est.values[i], est.evaluations_used};
    if (kfca_rewards) {
      r.push_back(num((*kfca_rewards)[i]));
      jr.push_back((*kfca_rewards)[i]);
    }
    rows.push_back(std::move(r));
    jrows.push_back(std::move(jr));
  }
  rec.write("shapley" + table_ext(g.format), table(g.format, header, rows, jrows));

  const std::vector<std::string> dheader{"estimator", "cosine", "euclidean", "max_diff", "evaluations", "permutations", "converged"};
  std::vector<std::vector<std::string>> drows;
  std::vector<std::vector<json>> djrows;
  auto add = [&](const std::string& name, std::span<const double> candidate, std::size_t evals, std::size_t perms,
                 bool converged) {
    const auto d = distance_metrics(reference, candidate);
    drows.push_back({name, num(d.cosine), num(d.euclidean), num(d.max_diff), std::to_string(evals),
                     std::to_string(perms), converged ? "true" : "false"});
    djrows.push_back({name, d.cosine, d.euclidean, d.max_diff, evals, perms, converged});
  };
  add("exact", exact.values, exact.evaluations_used, 0, true);
  add("monte_carlo", est.values, est.evaluations_used, est.permutations_used, est.converged);
  if (kfca_rewards) add("kfca", *kfca_rewards, 0, 0, true);
  add("random", random_baseline, 0, 0, true);
  rec.write("distances" + table_ext(g.format), table(g.format, dheader, drows, djrows));
  rec.phase("write", t0);
}

// --------------------------------------------------------------------------
// bench

struct BenchOpts {
  std::vector<double> n_grid{20, 40, 80, 160};
  std::vector<double> p_grid{2, 4};
  std::size_t tasks = 10000;
  std::size_t repeats = 5;
  std::string mechanism = "both";
};

void cmd_bench(const BenchOpts& o, const Globals& g, Invocation& inv, Recorder& rec) {
  auto t0 = Clock::now();
  inv.seed = g.seed.value_or(0);
  if (o.n_grid.empty() || o.p_grid.empty()) throw Error(Errc::kConfig, "bench grids must be non-empty");
  std::vector<ScoringMode> modes;
  if (o.mechanism == "both" || o.mechanism == "kfca") modes.push_back(ScoringMode::kKfca);
  if (o.mechanism == "both" || o.mechanism == "ca-empirical") modes.push_back(ScoringMode::kCaEmpirical);
  if (modes.empty()) throw Error(Errc::kConfig, "--mechanism takes kfca, ca-empirical or both");
  auto as_size = [](double x) {
    if (!(x >= 1.0) || x != std::floor(x)) throw Error(Errc::kConfig, "grid values must be positive integers");
    return static_cast<std::size_t>(x);
  };
  const std::vector<std::string> header{"mechanism", "clients", "peers", "tasks", "repeats", "median_seconds"};
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<json>> jrows;
  const std::vector<std::string> fheader{"mechanism", "peers", "slope"};
  std::vector<std::vector<std::string>> frows;
  std::vector<std::vector<json>> fjrows;
  std::vector<std::size_t> ns, ps;
  for (double nd : o.n_grid) ns.push_back(as_size(nd));
  for (double pd : o.p_grid) ps.push_back(as_size(pd));
  if (*std::max_element(ps.begin(), ps.end()) >= *std::min_element(ns.begin(), ns.end()))
    throw Error(Errc::kConfig, "peers must be below every n in the grid");
  for (auto mode : modes) {
    const auto points = measure_scaling(mode, ns, ps, o.tasks, o.repeats, inv.seed);
    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
      const std::size_t p = ps[pi];
      std::vector<double> xs, ys;
      for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        const auto& bp = points[pi * ns.size() + ni];
        xs.push_back(static_cast<double>(bp.clients));
        ys.push_back(bp.median_seconds);
        rows.push_back({std::string(to_string(mode)), std::to_string(bp.clients), std::to_string(p),
                        std::to_string(o.tasks), std::to_string(o.repeats), num(bp.median_seconds)});
        jrows.push_back({std::string(to_string(mode)), bp.clients, p, o.tasks, o.repeats, bp.median_seconds});
      }
      const double slope = xs.size() >= 2 ? loglog_slope(xs, ys) : std::nan("");
      frows.push_back({std::string(to_string(mode)), std::to_string(p), num(slope)});
      fjrows.push_back({std::string(to_string(mode)), p, num_or_null(slope)});
    }
  }
  rec.phase("bench", t0);
  t0 = Clock::now();
  rec.write("bench" + table_ext(g.format), table(g.format, header, rows, jrows), false);
  rec.write("bench_fit" + table_ext(g.format), table(g.format, fheader, frows, fjrows), false);
  rec.phase("write", t0);
}

// --------------------------------------------------------------------------
// delta-check, commit, verify

struct ReportOpts {
  std::string reports;
  std::size_t labels = 0;
  double gamma = 0.0;
  std::string salt;
  std::string digest;
};

void cmd_delta_check(const ReportOpts& o, const Globals& g, Invocation& inv, Recorder& rec) {
  auto t0 = Clock::now();
  inv.seed = g.seed.value_or(0);
  const auto reports = read_reports(o.reports, o.labels);
  rec.phase("load", t0);
  t0 = Clock::now();
  const std::size_t n = reports.clients();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<json> slots(pairs.size());
  parallel_for(pairs.size(), g.workers, [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const auto d = empirical_delta(reports.row(i), reports.row(j), reports.labels());
    json item{{"i", i}, {"j", j}, {"delta", delta_entries(d)}, {"max_marginal_error", d.max_marginal_error()},
              {"categorical", verdict_json(check_categorical(d))}};
    if (o.gamma > 0.0) item["regularized"] = delta_to_json(regularize(d, o.gamma));
    slots[p] = std::move(item);
  });
  std::size_t holds = 0;
  for (const auto& s : slots) holds += s["categorical"]["holds"].get<bool>() ? 1 : 0;
  rec.phase("delta", t0);
  t0 = Clock::now();
  json out{{"labels", reports.labels()}, {"clients", n}, {"tasks", reports.tasks()},
           {"pairs_checked", pairs.size()}, {"pairs_categorical", holds}, {"pairs", slots}};
  rec.write("delta.json", out.dump(2) + "\n");
  rec.phase("write", t0);
}

void cmd_commit(const ReportOpts& o, const Globals& g, Invocation& inv, Recorder& rec, std::ostream& out) {
  auto t0 = Clock::now();
  inv.seed = g.seed.value_or(0);
  const auto reports = read_reports(o.reports, o.labels);
  const auto digest = commitment_digest(reports, o.salt);
  rec.phase("hash", t0);
  out << digest << "\n";
  rec.write("commit.json", json{{"digest", digest}, {"hash", "sha256"}, {"labels", reports.labels()},
                                {"clients", reports.clients()}, {"tasks", reports.tasks()}}
                               .dump(2) + "\n");
}

bool cmd_verify(const ReportOpts& o, const Globals& g, Invocation& inv, Recorder& rec, std::ostream& out) {
  auto t0 = Clock::now();
  inv.seed = g.seed.value_or(0);
  const auto reports = read_reports(o.reports, o.labels);
  const auto digest = commitment_digest(reports, o.salt);
  const bool match = digest == o.digest;
  rec.phase("hash", t0);
  out << (match ? "ok" : "mismatch") << "\n";
  rec.write("verify.json", json{{"match", match}, {"hash", "sha256"}, {"expected", o.digest}, {"actual", digest}}.dump(2) + "\n");
  return match;
}

// --------------------------------------------------------------------------

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kConfig:
    case Errc::kInvalidArgument:
    case Errc::kLabelSpaceTooLarge:
    case Errc::kTooManyClients:
    case Errc::kTooFewTasks:
    case Errc::kNotEnoughPeers:
    case Errc::kInvalidAlpha:
    case Errc::kInvalidConcentration:
    case Errc::kInvalidGamma: return kExitConfig;
    default: return kExitRuntime;
  }
}

// Canonical --name=value tokens for every option given on the command line.
std::vector<std::string> canonical_args(const CLI::App& sub, const std::set<std::string>& paths,
                                        const std::set<std::string>& skip) {
  std::vector<std::string> out;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->count() == 0 || opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || skip.contains(name)) continue;
    if (opt->get_type_size() == 0) {
      out.push_back("--" + name);
      continue;
    }
    for (const auto& r : opt->results()) {
      std::string v = r;
      if (paths.contains(name)) v = fs::absolute(v).lexically_normal().string();
      out.push_back("--" + name + "=" + v);
    }
  }
  return out;
}

json options_json(const CLI::App& sub) {
  json o = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    const auto name = opt->get_lnames().front();
    if (opt->count() > 0) {
      o[name] = opt->results();
    } else {
      o[name] = opt->get_default_str();
    }
  }
  return o;
}

int replay(const std::string& manifest_path, const Globals& g, bool workers_given, bool out_dir_given, bool check,
           std::ostream& out, std::ostream& err);

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peer-prediction reward mechanisms for federated clients: simulation, verification and benchmarks.",
               "kfca"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  if (const char* env = std::getenv("KFCA_OUT_DIR"); env && *env) g.out_dir = env;
  if (g.out_dir.empty()) g.out_dir = ".";
  app.add_option("--config", g.config, "config file (simulate: sectioned key=value, see `simulate --help`)");
  app.add_option("--seed", g.seed, "root seed (simulate: overrides simulation.seed; others default 0)");
  auto* workers_opt = app.add_option("--workers", g.workers, "worker threads; 0 = hardware concurrency")
                          ->capture_default_str();
  auto* out_dir_opt = app.add_option("--out-dir", g.out_dir, "output directory (default: $KFCA_OUT_DIR or .)")
                          ->capture_default_str();
  app.add_option("--format", g.format, "tabular output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  std::ostringstream sim_keys;
  sim_keys << "Config keys (section.key = default: meaning):\n";
  for (const auto& k : sim_config_keys()) {
    sim_keys << "  " << k.section << "." << k.key << " = " << (k.default_value.empty() ? "(unset)" : k.default_value)
             << ": " << k.meaning << "\n";
  }
  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "multi-round federated simulation; writes rewards, verdicts, manifest");
  simulate->footer(sim_keys.str());
  simulate->add_option("--set", sim.overrides, "override a config key, section.key=value (repeatable)");

  TruthOpts tru;
  auto* truth = app.add_subcommand("truthfulness", "exhaustive strategy-profile enumeration for L <= 5");
  truth->add_option("--labels", tru.labels, "label count L")->capture_default_str();
  truth->add_option("--mechanism", tru.mechanism, "scoring rule")->check(CLI::IsMember({"kfca", "ca"}))->capture_default_str();
  truth->add_option("--delta", tru.delta, "delta source")
      ->check(CLI::IsMember({"random", "symmetric", "flip-example", "file"}))
      ->capture_default_str();
  truth->add_option("--alpha", tru.alpha, "noise rate for --delta symmetric")->capture_default_str();
  truth->add_option("--delta-file", tru.delta_file, "JSON matrix (or {\"entries\": ...}) for --delta file");
  truth->add_option("--top", tru.top, "profile rows to write; 0 = all")->capture_default_str();

  RobustOpts rob;
  auto* robust = app.add_subcommand("robustness", "honest reward under a malicious fraction: closed form vs simulation");
  robust->add_option("--alphas", rob.alphas, "noise-rate grid")->delimiter(',');
  robust->add_option("--lambdas", rob.lambdas, "malicious-fraction grid")->delimiter(',');
  robust->add_option("--clients", rob.clients, "clients n")->capture_default_str();
  robust->add_option("--tasks", rob.tasks, "tasks m")->capture_default_str();
  robust->add_option("--peers", rob.peers, "peers P")->capture_default_str();
  robust->add_option("--trials", rob.trials, "trials per cell")->capture_default_str();
  robust->add_option("--labels", rob.labels, "label count L")->capture_default_str();
  robust->add_option("--attack", rob.attack, "attack spec")->capture_default_str();

  ShapleyOpts shp;
  auto* shap = app.add_subcommand("shapley", "exact vs Monte Carlo Shapley values and reward distances");
  shap->add_option("--game", shp.game, "game JSON {\"n\": ..., \"v\": {bitmask: value}}");
  shap->add_option("--world-alphas", shp.world_alphas, "synthetic world noise rates, one per client")->delimiter(',');
  shap->add_option("--labels", shp.labels, "label count for the synthetic world")->capture_default_str();
  shap->add_option("--permutations", shp.permutations, "Monte Carlo permutation budget")->capture_default_str();
  shap->add_option("--truncation", shp.truncation, "truncation eps, or auto")->capture_default_str();
  shap->add_option("--stopping", shp.stopping, "relative-change stopping rule (on|off)")->capture_default_str();
  shap->add_option("--tasks", shp.tasks, "tasks for the KFCA reward column")->capture_default_str();

  BenchOpts ben;
  auto* bench = app.add_subcommand("bench", "per-round reward cost scaling; timings are not reproducible");
  bench->add_option("--n-grid", ben.n_grid, "client counts")->delimiter(',');
  bench->add_option("--p-grid", ben.p_grid, "peer counts")->delimiter(',');
  bench->add_option("--tasks", ben.tasks, "tasks m")->capture_default_str();
  bench->add_option("--repeats", ben.repeats, "repeats per point (median reported)")->capture_default_str();
  bench->add_option("--mechanism", ben.mechanism, "kfca, ca-empirical or both")->capture_default_str();

  ReportOpts dc;
  auto* delta_check = app.add_subcommand("delta-check", "empirical delta and categorical check for every client pair");
  delta_check->add_option("--reports", dc.reports, "report file (CSV rows or binary)")->required();
  delta_check->add_option("--labels", dc.labels, "label count; 0 infers")->capture_default_str();
  delta_check->add_option("--gamma", dc.gamma, "also emit the regularized delta for gamma in (0, 1)");

  ReportOpts cm;
  auto* commit = app.add_subcommand("commit", "commitment digest SHA-256(report bytes || salt)");
  commit->add_option("--reports", cm.reports, "report file")->required();
  commit->add_option("--labels", cm.labels, "label count; 0 infers")->capture_default_str();
  commit->add_option("--salt", cm.salt, "salt")->required();

  ReportOpts vf;
  auto* verify = app.add_subcommand("verify", "recompute a commitment digest and compare; exit 1 on mismatch");
  verify->add_option("--reports", vf.reports, "report file")->required();
  verify->add_option("--labels", vf.labels, "label count; 0 infers")->capture_default_str();
  verify->add_option("--salt", vf.salt, "salt")->required();
  verify->add_option("--digest", vf.digest, "expected hex digest")->required();

  std::string manifest_path;
  bool check = false;
  auto* rep = app.add_subcommand("replay", "re-run a command from its manifest.json");
  rep->add_option("manifest", manifest_path, "manifest.json path")->required();
  rep->add_flag("--check", check, "compare regenerated deterministic outputs against the manifest digests");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  Invocation inv;
  inv.argv = args;
  try {
    CLI::App* sub = app.get_subcommands().front();
    inv.command = sub->get_name();
    if (sub == rep) {
      return replay(manifest_path, g, workers_opt->count() > 0, out_dir_opt->count() > 0, check, out, err);
    }
    inv.args = canonical_args(*sub, {"reports", "game", "delta-file"}, {"set"});
    inv.options = options_json(*sub);
    Recorder rec{fs::path(g.out_dir)};
    int code = kExitOk;
    if (sub == simulate) cmd_simulate(sim, g, inv, rec);
    else if (sub == truth) cmd_truthfulness(tru, g, inv, rec);
    else if (sub == robust) cmd_robustness(rob, g, inv, rec);
    else if (sub == shap) cmd_shapley(shp, g, inv, rec);
    else if (sub == bench) cmd_bench(ben, g, inv, rec);
    else if (sub == delta_check) cmd_delta_check(dc, g, inv, rec);
    else if (sub == commit) cmd_commit(cm, g, inv, rec, out);
    else if (sub == verify) code = cmd_verify(vf, g, inv, rec, out) ? kExitOk : kExitRuntime;
    write_manifest(inv, g, rec);
    return code;
  } catch (const Error& e) {
    err << "kfca " << inv.command << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "kfca " << inv.command << ": " << e.what() << "\n";
    return kExitRuntime;
  }
}

namespace {

int replay(const std::string& manifest_path, const Globals& g, bool workers_given, bool out_dir_given, bool check,
           std::ostream& out, std::ostream& err) {
  const auto m = json::parse(read_text_file(manifest_path), nullptr, false);
  if (m.is_discarded() || !m.contains("command") || !m.contains("args")) {
    throw Error(Errc::kConfig, "not a run manifest: " + manifest_path);
  }
  const fs::path out_dir = out_dir_given ? fs::path(g.out_dir) : fs::path(manifest_path).parent_path();
  std::vector<std::string> args{m["command"].get<std::string>()};
  for (const auto& a : m["args"]) args.push_back(a.get<std::string>());
  args.push_back("--seed=" + std::to_string(m["seed"].get<std::uint64_t>()));
  args.push_back("--format=" + m.value("format", std::string("csv")));
  args.push_back("--workers=" + std::to_string(workers_given ? g.workers : m.value("workers", std::size_t{0})));
  args.push_back("--out-dir=" + out_dir.string());
  std::optional<fs::path> temp_config;
  if (m.contains("config") && m["config"].is_string()) {
    temp_config = fs::temp_directory_path() /
                  ("kfca-replay-" + std::to_string(std::hash<std::string>{}(out_dir.string() + utc_now())) + ".ini");
    write_text_file(*temp_config, m["config"].get<std::string>());
    args.push_back("--config=" + temp_config->string());
  }
  const int code = run(args, out, err);
  if (temp_config) fs::remove(*temp_config);
  if (code != kExitOk || !check) return code;

  int mismatches = 0;
  for (const auto& o : m["outputs"]) {
    if (!o.value("deterministic", true)) continue;
    const auto bytes = read_binary_file(out_dir / o["path"].get<std::string>());
    if (sha256_hex(bytes) != o["sha256"].get<std::string>()) {
      err << "replay: " << o["path"].get<std::string>() << " differs from the manifest\n";
      ++mismatches;
    }
  }
  out << (mismatches == 0 ? "replay: outputs match\n" : "replay: outputs differ\n");
  return mismatches == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

}  // namespace kfca::cli
