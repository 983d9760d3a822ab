#include "kfca/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace kfca {

const std::vector<ConfigKeyDoc>& sim_config_keys() {
  static const std::vector<ConfigKeyDoc> keys{
      {"simulation", "mode", "kfca-d", "kfca-d (labels over [L]) or kfca-qp (sign-quantised updates, L = 2)"},
      {"simulation", "scoring", "kfca", "kfca or ca-empirical (per-pair score from the empirical delta)"},
      {"simulation", "rounds", "10", "rounds T >= 1"},
      {"simulation", "clients", "11", "clients n >= 2 (ignored when attacks.population is set)"},
      {"simulation", "peers", "4", "peers P per client, 1 <= P <= n - 1"},
      {"simulation", "tasks", "10000", "tasks m >= 3 per round"},
      {"simulation", "seed", "0", "root seed"},
      {"simulation", "rho", "0.8", "probability a truth coordinate persists into the next round"},
      {"world", "labels", "2", "label count L (kfca-d)"},
      {"world", "prior", "uniform", "comma list of L prior probabilities"},
      {"world", "alpha", "0.1", "shared noise rate"},
      {"world", "alphas", "", "comma list of per-client noise rates (overrides alpha)"},
      {"world", "effort", "1", "per-task effort probability"},
      {"noise", "concentration", "", "Dirichlet concentration; enables the non-IID noise profile"},
      {"noise", "base_noise", "0.1", "noise rate at zero label skew"},
      {"noise", "skew_gain", "2", "noise growth per unit of label-skew total variation"},
      {"noise", "classes", "10", "classes in the label-skew draw"},
      {"partition", "bonus", "0.5", "bonus task fraction"},
      {"partition", "penalty_1", "0.25", "first penalty set fraction"},
      {"partition", "penalty_2", "0.25", "second penalty set fraction"},
      {"attacks", "population", "honest*n", "per-client specs: honest, signflip, zero, random, sparse:p, lagged:k, stale; x*c repeats"},
  };
  return keys;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::kConfig, std::string(what) + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view what) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::kConfig, std::string(what) + ": '" + std::string(text) + "' is not a non-negative integer");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto at = text.find(sep);
    out.push_back(trim(text.substr(0, at)));
    if (at == std::string_view::npos) break;
    text.remove_prefix(at + 1);
  }
  return out;
}

std::string join_numbers(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

}  // namespace

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (auto field : split(text, ',')) out.push_back(parse_double(field, "number list"));
  return out;
}

std::vector<AttackSpec> parse_population(std::string_view text) {
  std::vector<AttackSpec> out;
  for (auto item : split(text, ',')) {
    if (item.empty()) throw Error(Errc::kConfig, "empty entry in attack population");
    std::size_t count = 1;
    if (const auto star = item.find('*'); star != std::string_view::npos) {
      count = parse_unsigned(item.substr(star + 1), "population repeat");
      item = trim(item.substr(0, star));
    }
    const auto spec = AttackSpec::parse(std::string(item));
    out.insert(out.end(), count, spec);
  }
  return out;
}

std::string population_to_string(const std::vector<AttackSpec>& attacks) {
  std::string out;
  for (std::size_t i = 0; i < attacks.size();) {
    std::size_t j = i;
    while (j < attacks.size() && attacks[j] == attacks[i]) ++j;
    if (!out.empty()) out += ", ";
    out += attacks[i].name();
    if (j - i > 1) out += "*" + std::to_string(j - i);
    i = j;
  }
  return out;
}

SimConfig parse_sim_config(std::istream& in, const std::vector<std::string>& overrides) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::kConfig, std::string("config syntax: ") + e.what());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw Error(Errc::kConfig, "override '" + o + "' is not section.key=value");
    }
    tree.put_child(pt::ptree::path_type(std::string(trim(o.substr(0, eq))), '.'),
                   pt::ptree(std::string(trim(std::string_view(o).substr(eq + 1)))));
  }
  std::set<std::pair<std::string, std::string>> known;
  for (const auto& k : sim_config_keys()) known.emplace(k.section, k.key);

  SimConfig c;
  std::optional<std::size_t> explicit_clients;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw Error(Errc::kConfig, "key '" + section + "' must sit inside a [section]");
    for (const auto& [key, node] : body) {
      if (!known.contains({section, key})) throw Error(Errc::kConfig, "unknown key " + section + "." + key);
      const std::string value = node.data();
      const std::string what = section + "." + key;
      if (section == "simulation") {
        if (key == "mode") c.mode = parse_sim_mode(trim(value));
        else if (key == "scoring") c.scoring = parse_scoring_mode(trim(value));
        else if (key == "rounds") c.rounds = parse_unsigned(value, what);
        else if (key == "clients") explicit_clients = parse_unsigned(value, what);
        else if (key == "peers") c.peers = parse_unsigned(value, what);
        else if (key == "tasks") c.tasks = parse_unsigned(value, what);
        else if (key == "seed") c.seed = parse_unsigned(value, what);
        else if (key == "rho") c.rho = parse_double(value, what);
      } else if (section == "world") {
        if (key == "labels") c.labels = parse_unsigned(value, what);
        else if (key == "prior") c.prior = parse_number_list(value);
        else if (key == "alpha") c.alpha = parse_double(value, what);
        else if (key == "alphas") c.alphas = parse_number_list(value);
        else if (key == "effort") c.effort = parse_double(value, what);
      } else if (section == "noise") {
        if (key == "concentration") c.concentration = parse_double(value, what);
        else if (key == "base_noise") c.noise.base_noise = parse_double(value, what);
        else if (key == "skew_gain") c.noise.skew_gain = parse_double(value, what);
        else if (key == "classes") c.noise.classes = parse_unsigned(value, what);
      } else if (section == "partition") {
        if (key == "bonus") c.fractions.bonus = parse_double(value, what);
        else if (key == "penalty_1") c.fractions.penalty_1 = parse_double(value, what);
        else if (key == "penalty_2") c.fractions.penalty_2 = parse_double(value, what);
      } else if (section == "attacks") {
        try {
          c.attacks = parse_population(value);
        } catch (const Error& e) {
          throw Error(Errc::kConfig, what + ": " + e.what());
        }
      }
    }
  }
  if (!c.attacks.empty()) {
    if (explicit_clients && *explicit_clients != c.attacks.size()) {
      throw Error(Errc::kConfig, "simulation.clients = " + std::to_string(*explicit_clients) +
                                     " disagrees with the population size " + std::to_string(c.attacks.size()));
    }
    c.clients = c.attacks.size();
  } else if (explicit_clients) {
    c.clients = *explicit_clients;
  }
  c.validate();
  return c;
}

SimConfig parse_sim_config_text(std::string_view text, const std::vector<std::string>& overrides) {
  std::istringstream in{std::string(text)};
  return parse_sim_config(in, overrides);
}

SimConfig load_sim_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfig, "cannot open config " + path.string());
  return parse_sim_config(in, overrides);
}

std::string sim_config_to_ini(const SimConfig& c) {
  std::ostringstream o;
  o << "[simulation]\n"
    << "mode = " << to_string(c.mode) << "\n"
    << "scoring = " << to_string(c.scoring) << "\n"
    << "rounds = " << c.rounds << "\n"
    << "clients = " << c.clients << "\n"
    << "peers = " << c.peers << "\n"
    << "tasks = " << c.tasks << "\n"
    << "seed = " << c.seed << "\n"
    << "rho = " << format_double(c.rho) << "\n\n"
    << "[world]\n"
    << "labels = " << c.labels << "\n";
  if (!c.prior.empty()) o << "prior = " << join_numbers(c.prior) << "\n";
  o << "alpha = " << format_double(c.alpha) << "\n";
  if (!c.alphas.empty()) o << "alphas = " << join_numbers(c.alphas) << "\n";
  o << "effort = " << format_double(c.effort) << "\n\n"
    << "[noise]\n";
  if (c.concentration) o << "concentration = " << format_double(*c.concentration) << "\n";
  o << "base_noise = " << format_double(c.noise.base_noise) << "\n"
    << "skew_gain = " << format_double(c.noise.skew_gain) << "\n"
    << "classes = " << c.noise.classes << "\n\n"
    << "[partition]\n"
    << "bonus = " << format_double(c.fractions.bonus) << "\n"
    << "penalty_1 = " << format_double(c.fractions.penalty_1) << "\n"
    << "penalty_2 = " << format_double(c.fractions.penalty_2) << "\n";
  if (!c.attacks.empty()) o << "\n[attacks]\npopulation = " << population_to_string(c.attacks) << "\n";
  return o.str();
}

}  // namespace kfca
