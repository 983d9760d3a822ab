#include "kfca/signal_world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace kfca {

LabelSpace::LabelSpace(std::size_t size) : size_(size) {
  if (size < 2) throw Error(Errc::kInvalidArgument, "label space needs L >= 2");
}

namespace {

void validate_channel(const ClientChannel& c, std::size_t labels, std::size_t index) {
  const std::string who = "client " + std::to_string(index);
  if (c.confusion.rows() != labels || c.confusion.cols() != labels) {
    throw Error(Errc::kInvalidArgument, who + " channel is not L x L");
  }
  require_row_stochastic(c.confusion, kProbabilityTolerance, who + " channel");
  if (c.baseline.size() != labels) {
    throw Error(Errc::kInvalidArgument, who + " baseline has wrong length");
  }
  require_probability_vector(c.baseline, kProbabilityTolerance, who + " baseline");
  if (!(c.effort_prob >= 0.0 && c.effort_prob <= 1.0)) {
    throw Error(Errc::kInvalidArgument, who + " effort probability outside [0, 1]");
  }
  if (c.informative) {
    for (std::size_t y = 0; y < labels; ++y)
      for (std::size_t a = 0; a < labels; ++a)
        if (a != y && !(c.confusion(y, y) > c.confusion(y, a))) {
          throw Error(Errc::kInvalidArgument, who + " channel flagged informative is not diagonally dominant");
        }
  }
}

ClientChannel symmetric_channel(std::size_t labels, double alpha, double effort_prob) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::kInvalidAlpha, "noise rate outside [0, 1]");
  ClientChannel c;
  c.confusion = Matrix(labels, labels, alpha / static_cast<double>(labels - 1));
  for (std::size_t y = 0; y < labels; ++y) c.confusion(y, y) = 1.0 - alpha;
  c.baseline.assign(labels, 1.0 / static_cast<double>(labels));
  c.effort_prob = effort_prob;
  c.informative = alpha < static_cast<double>(labels - 1) / static_cast<double>(labels);
  return c;
}

}  // namespace

SignalWorld::SignalWorld(LabelSpace labels, std::vector<double> prior, std::vector<ClientChannel> clients)
    : labels_(labels), prior_(std::move(prior)), clients_(std::move(clients)) {
  if (prior_.size() != labels_.size()) throw Error(Errc::kInvalidArgument, "prior has wrong length");
  require_probability_vector(prior_, kProbabilityTolerance, "prior");
  for (std::size_t i = 0; i < clients_.size(); ++i) validate_channel(clients_[i], labels_.size(), i);
}

SignalWorld SignalWorld::binary_symmetric(std::span<const double> alphas, double effort_prob) {
  return symmetric_noise(2, {0.5, 0.5}, alphas, effort_prob);
}

SignalWorld SignalWorld::symmetric_noise(std::size_t labels, std::vector<double> prior,
                                         std::span<const double> alphas, double effort_prob) {
  std::vector<ClientChannel> clients;
  clients.reserve(alphas.size());
  for (double a : alphas) clients.push_back(symmetric_channel(labels, a, effort_prob));
  return SignalWorld(LabelSpace(labels), std::move(prior), std::move(clients));
}

const ClientChannel& SignalWorld::client(std::size_t i) const {
  if (i >= clients_.size()) throw Error(Errc::kInvalidArgument, "client index out of range");
  return clients_[i];
}

SignalWorld SignalWorld::with_effort(std::size_t i, double effort_prob) const {
  auto clients = clients_;
  if (i >= clients.size()) throw Error(Errc::kInvalidArgument, "client index out of range");
  clients[i].effort_prob = effort_prob;
  return SignalWorld(labels_, prior_, std::move(clients));
}

std::vector<Label> sample_truths(const SignalWorld& world, std::size_t m, Stream& rng) {
  std::vector<Label> out(m);
  for (auto& y : out) y = static_cast<Label>(rng.categorical(world.prior()));
  return out;
}

Label sample_signal(const SignalWorld& world, std::size_t client, Label truth, bool effort, Stream& rng) {
  const auto& c = world.client(client);
  if (!world.labels().contains(truth)) throw Error(Errc::kInvalidArgument, "truth outside label space");
  if (effort) return static_cast<Label>(rng.categorical(c.confusion.row(truth)));
  return static_cast<Label>(rng.categorical(c.baseline));
}

std::vector<Label> sample_signals(const SignalWorld& world, std::size_t client,
                                  std::span<const Label> truths, Stream& rng) {
  const double eta = world.client(client).effort_prob;
  std::vector<Label> out(truths.size());
  for (std::size_t k = 0; k < truths.size(); ++k) {
    const bool effort = eta >= 1.0 || (eta > 0.0 && rng.bernoulli(eta));
    out[k] = sample_signal(world, client, truths[k], effort, rng);
  }
  return out;
}

// ---------------------------------------------------------------------------

bool is_bijection(std::span<const Label> map) {
  std::vector<bool> seen(map.size(), false);
  for (Label r : map) {
    if (r >= map.size() || seen[r]) return false;
    seen[r] = true;
  }
  return true;
}

ReportStrategy::ReportStrategy(StrategyKind kind, std::size_t labels, std::vector<Label> map, Matrix f)
    : kind_(kind), labels_(labels), map_(std::move(map)), f_(std::move(f)) {}

ReportStrategy ReportStrategy::truthful(std::size_t labels) {
  static_cast<void>(LabelSpace(labels));
  std::vector<Label> id(labels);
  std::iota(id.begin(), id.end(), Label{0});
  return {StrategyKind::kTruthful, labels, std::move(id), {}};
}

ReportStrategy ReportStrategy::permutation(std::vector<Label> sigma) {
  static_cast<void>(LabelSpace(sigma.size()));
  if (!is_bijection(sigma)) throw Error(Errc::kInvalidArgument, "permutation strategy is not a bijection");
  const std::size_t l = sigma.size();
  return {StrategyKind::kPermutation, l, std::move(sigma), {}};
}

ReportStrategy ReportStrategy::constant(std::size_t labels, Label r) {
  LabelSpace space(labels);
  if (!space.contains(r)) throw Error(Errc::kInvalidArgument, "constant report outside label space");
  return {StrategyKind::kConstant, labels, std::vector<Label>(labels, r), {}};
}

ReportStrategy ReportStrategy::deterministic(std::vector<Label> map) {
  LabelSpace space(map.size());
  for (Label r : map)
    if (!space.contains(r)) throw Error(Errc::kInvalidArgument, "strategy image outside label space");
  const std::size_t l = map.size();
  return {StrategyKind::kDeterministicMap, l, std::move(map), {}};
}

ReportStrategy ReportStrategy::randomized(Matrix f) {
  static_cast<void>(LabelSpace(f.rows()));
  if (f.rows() != f.cols()) throw Error(Errc::kInvalidArgument, "randomized strategy must be L x L");
  require_row_stochastic(f, kProbabilityTolerance, "randomized strategy");
  const std::size_t l = f.rows();
  return {StrategyKind::kRandomized, l, {}, std::move(f)};
}

ReportStrategy ReportStrategy::flip(std::size_t labels) {
  std::vector<Label> sigma(labels);
  for (std::size_t a = 0; a < labels; ++a) sigma[a] = static_cast<Label>(labels - 1 - a);
  return permutation(std::move(sigma));
}

const std::vector<Label>& ReportStrategy::map() const {
  if (!is_deterministic()) throw Error(Errc::kInvalidArgument, "randomized strategy has no deterministic map");
  return map_;
}

Matrix ReportStrategy::as_matrix() const {
  if (!is_deterministic()) return f_;
  Matrix f(labels_, labels_);
  for (std::size_t a = 0; a < labels_; ++a) f(a, map_[a]) = 1.0;
  return f;
}

std::string ReportStrategy::name() const {
  switch (kind_) {
    case StrategyKind::kTruthful: return "truthful";
    case StrategyKind::kPermutation: {
      std::ostringstream os;
      os << "permutation(";
      for (std::size_t a = 0; a < map_.size(); ++a) os << (a ? "," : "") << map_[a];
      os << ")";
      return os.str();
    }
    case StrategyKind::kConstant: return "constant(" + std::to_string(map_.front()) + ")";
    case StrategyKind::kDeterministicMap: {
      std::ostringstream os;
      os << "map(";
      for (std::size_t a = 0; a < map_.size(); ++a) os << (a ? "," : "") << map_[a];
      os << ")";
      return os.str();
    }
    case StrategyKind::kRandomized: return "randomized";
  }
  return "unknown";
}

Label apply_strategy(const ReportStrategy& strategy, Label signal, Stream& rng) {
  if (signal >= strategy.labels()) throw Error(Errc::kInvalidArgument, "signal outside label space");
  if (strategy.is_deterministic()) return strategy.map()[signal];
  const Matrix f = strategy.as_matrix();
  return static_cast<Label>(rng.categorical(f.row(signal)));
}

// ---------------------------------------------------------------------------

AttackSpec AttackSpec::sparse(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::kInvalidArgument, "sparse honest fraction outside [0, 1]");
  AttackSpec a{AttackKind::kSparse};
  a.honest_fraction = p;
  return a;
}

AttackSpec AttackSpec::lagged(std::size_t k) {
  if (k < 1) throw Error(Errc::kInvalidArgument, "lag must be >= 1");
  AttackSpec a{AttackKind::kLagged};
  a.lag = k;
  return a;
}

AttackSpec AttackSpec::parse(const std::string& text) {
  std::string head = text;
  std::string arg;
  if (auto colon = text.find(':'); colon != std::string::npos) {
    head = text.substr(0, colon);
    arg = text.substr(colon + 1);
  }
  std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
  auto need_arg = [&] {
    if (arg.empty()) throw Error(Errc::kConfig, "attack '" + text + "' needs an argument");
  };
  try {
    if (head == "honest") return honest();
    if (head == "signflip" || head == "sign_flip" || head == "flip") return sign_flip();
    if (head == "zero") return zero();
    if (head == "random") return random();
    if (head == "stale") return stale();
    if (head == "sparse") {
      need_arg();
      double p = std::stod(arg);
      if (p > 1.0) p /= 100.0;  // accept "sparse:75"
      return sparse(p);
    }
    if (head == "lagged" || head == "lag") {
      need_arg();
      return lagged(static_cast<std::size_t>(std::stoul(arg)));
    }
  } catch (const std::logic_error&) {
    throw Error(Errc::kConfig, "bad attack argument in '" + text + "'");
  }
  throw Error(Errc::kConfig, "unknown attack '" + text + "'");
}

std::string AttackSpec::name() const {
  switch (kind) {
    case AttackKind::kHonest: return "honest";
    case AttackKind::kSignFlip: return "signflip";
    case AttackKind::kZero: return "zero";
    case AttackKind::kRandom: return "random";
    case AttackKind::kSparse: return "sparse:" + format_double(honest_fraction);
    case AttackKind::kLagged: return "lagged:" + std::to_string(lag);
    case AttackKind::kStale: return "stale";
  }
  return "unknown";
}

std::vector<std::size_t> sparse_honest_indices(std::size_t tasks, double honest_fraction, StreamKey key) {
  const auto keep = static_cast<std::size_t>(std::llround(honest_fraction * static_cast<double>(tasks)));
  std::vector<std::size_t> idx(tasks);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Stream rng = key.child(stream_tag::kSparseMask).stream();
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + rng.below(tasks - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<Label> apply_attack(const AttackSpec& attack, std::span<const std::vector<Label>> history,
                                std::size_t round, const LabelSpace& labels, StreamKey key) {
  if (round < 1 || history.size() < round) {
    throw Error(Errc::kInvalidArgument, "attack history does not reach the requested round");
  }
  const auto& current = history[round - 1];
  const std::size_t m = current.size();
  const std::size_t l = labels.size();

  // Uniform replacement labels: one draw per task index regardless of which
  // tasks end up used, so Sparse(0) and Random coincide under one key.
  auto random_row = [&] {
    Stream rng = key.child(stream_tag::kAttack).stream();
    std::vector<Label> row(m);
    for (auto& r : row) r = static_cast<Label>(rng.below(l));
    return row;
  };

  switch (attack.kind) {
    case AttackKind::kHonest: return current;
    case AttackKind::kSignFlip: {
      std::vector<Label> row(m);
      for (std::size_t k = 0; k < m; ++k) row[k] = static_cast<Label>(l - 1 - current[k]);
      return row;
    }
    case AttackKind::kZero: return std::vector<Label>(m, kZeroAttackLabel % static_cast<Label>(l));
    case AttackKind::kRandom: return random_row();
    case AttackKind::kSparse: {
      auto row = random_row();
      for (std::size_t k : sparse_honest_indices(m, attack.honest_fraction, key)) row[k] = current[k];
      return row;
    }
    case AttackKind::kLagged: {
      const std::size_t source = round > attack.lag ? round - attack.lag : 1;
      return history[source - 1];
    }
    case AttackKind::kStale: return history.front();
  }
  return current;
}

// ---------------------------------------------------------------------------

ReportMatrix::ReportMatrix(std::size_t labels, std::size_t clients, std::size_t tasks)
    : labels_(LabelSpace(labels).size()), clients_(clients), tasks_(tasks), data_(clients * tasks, 0) {
  if (tasks < 3) throw Error(Errc::kTooFewTasks, "report matrix needs m >= 3 tasks");
}

ReportMatrix::ReportMatrix(std::size_t labels, std::vector<std::vector<Label>> rows)
    : ReportMatrix(labels, rows.size(), rows.empty() ? 0 : rows.front().size()) {
  for (std::size_t i = 0; i < rows.size(); ++i) set_row(i, rows[i]);
}

std::span<const Label> ReportMatrix::row(std::size_t client) const {
  return {data_.data() + client * tasks_, tasks_};
}

std::span<Label> ReportMatrix::row(std::size_t client) { return {data_.data() + client * tasks_, tasks_}; }

void ReportMatrix::set_row(std::size_t client, std::span<const Label> values) {
  if (client >= clients_) throw Error(Errc::kInvalidArgument, "client index out of range");
  if (values.size() != tasks_) throw Error(Errc::kLengthMismatch, "report rows must all have length m");
  for (Label r : values)
    if (r >= labels_) throw Error(Errc::kInvalidArgument, "report label outside [0, L)");
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(client * tasks_));
}

// ---------------------------------------------------------------------------

std::vector<double> noniid_noise_profile(double concentration, std::size_t clients, Stream& rng,
                                         const NoiseProfileParams& params) {
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw Error(Errc::kInvalidConcentration, "Dirichlet concentration must be positive and finite");
  }
  if (params.classes < 2) throw Error(Errc::kInvalidArgument, "noise profile needs >= 2 classes");
  const double k = static_cast<double>(params.classes);
  std::vector<double> alphas(clients);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> w(params.classes);
  for (auto& alpha : alphas) {
    double sum = 0.0;
    for (auto& x : w) {
      x = gamma(rng);
      sum += x;
    }
    double tv = 0.0;
    if (sum > 0.0) {
      for (double x : w) tv += std::abs(x / sum - 1.0 / k);
      tv *= 0.5;
    } else {
      tv = 1.0 - 1.0 / k;  // all mass underflowed: maximal skew
    }
    alpha = std::clamp(params.base_noise * (1.0 + params.skew_gain * tv), 0.0, kMaxNoiseRate);
  }
  return alphas;
}

}  // namespace kfca
