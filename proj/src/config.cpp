// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/cli.hpp"

#include "hyperg/errors.hpp"
#include "hyperg/format.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hyperg {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "data",     "response", "covariates",  "weights",   "family",     "link",
      "phi",      "hyperprior", "a",         "b",         "eb",         "criterion",
      "space",    "iterations", "seed",      "order",     "nodes",      "bracket_cap",
      "threads",  "out",      "burn_in",     "samples",   "thin",       "fit_top_k",
      "g_top_k",  "curve_points", "shift_to_positive"};
  return keys;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string unquote(std::string s) {
  s = trim(std::move(s));
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(trim(v));
  } catch (const DataError&) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  }
}

long to_long(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::size_t pos = 0;
  long out = 0;
  try {
    out = std::stol(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (t.empty() || pos != t.size()) {
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (t.empty() || pos != t.size() || t.front() == '-') {
    throw ConfigError("config key '" + key + "': '" + v + "' is not a nonnegative integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = lower(trim(v));
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// `{ kind = "iig", a = 0.01, b = 0.01 }` or a bare kind name.
void parse_hyperprior(const std::string& v, RunConfig& cfg, bool& has_a, bool& has_b) {
  const std::string t = trim(v);
  if (t.empty() || t.front() != '{') {
    cfg.hyperprior = unquote(t);
    return;
  }
  if (t.back() != '}') throw ConfigError("hyperprior: missing closing brace in '" + v + "'");
  const std::string body = t.substr(1, t.size() - 2);
  std::stringstream ss(body);
  std::string item;
  bool has_kind = false;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("hyperprior: expected key = value in '" + item + "'");
    const std::string k = lower(trim(item.substr(0, eq)));
    const std::string val = unquote(item.substr(eq + 1));
    if (k == "kind") {
      cfg.hyperprior = val;
      has_kind = true;
    } else if (k == "a") {
      cfg.prior_a = to_double("hyperprior.a", val);
      has_a = true;
    } else if (k == "b") {
      cfg.prior_b = to_double("hyperprior.b", val);
      has_b = true;
    } else {
      throw ConfigError("hyperprior: unknown field '" + k + "'");
    }
  }
  if (!has_kind) throw ConfigError("hyperprior: missing kind");
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  // Accept '#' comments as well as ';'.
  std::stringstream cleaned;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty() && t.front() == '#') continue;
    cleaned << line << '\n';
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(cleaned, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  std::map<std::string, std::string> kv;
  auto put = [&kv](const std::string& key, const std::string& value) {
    if (!kv.emplace(key, value).second) throw ConfigError("config key '" + key + "' given twice");
  };
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      put(key, node.data());
    } else {
      for (const auto& [k2, n2] : node) put(k2, n2.data());
    }
  }
  return load_config_map(kv, path.parent_path());
}

RunConfig load_config_map(const std::map<std::string, std::string>& kv,
                          const std::filesystem::path& base_dir) {
  RunConfig cfg;
  bool has_a = false, has_b = false;
  std::optional<bool> eb;
  bool has_criterion = false;
  for (const auto& [key, raw] : kv) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    const std::string v = unquote(raw);
    if (key == "data") {
      cfg.data_path = v;
      if (cfg.data_path.is_relative() && !base_dir.empty()) cfg.data_path = base_dir / cfg.data_path;
    } else if (key == "response") {
      cfg.response = v;
    } else if (key == "covariates") {
      cfg.covariates = split_list(v);
    } else if (key == "weights") {
      cfg.weights_column = v;
    } else if (key == "family") {
      cfg.family = lower(v);
    } else if (key == "link") {
      cfg.link = lower(v);
    } else if (key == "phi") {
      cfg.phi = to_double(key, v);
    } else if (key == "hyperprior") {
      parse_hyperprior(raw, cfg, has_a, has_b);
    } else if (key == "a") {
      cfg.prior_a = to_double(key, v);
      has_a = true;
    } else if (key == "b") {
      cfg.prior_b = to_double(key, v);
      has_b = true;
    } else if (key == "eb") {
      eb = to_bool(key, v);
    } else if (key == "criterion") {
      cfg.criterion = parse_criterion(lower(v));
      has_criterion = true;
    } else if (key == "space") {
      const std::string s = lower(v);
      if (s == "vs") {
        cfg.space = SpaceKind::variable_selection;
      } else if (s == "fp") {
        cfg.space = SpaceKind::fractional_polynomial;
      } else {
        throw ConfigError("space must be vs or fp, got '" + v + "'");
      }
    } else if (key == "iterations") {
      cfg.iterations = to_long(key, v);
    } else if (key == "seed") {
      cfg.seed = to_u64(key, v);
    } else if (key == "order") {
      if (lower(v) == "auto") {
        cfg.order.reset();
      } else {
        const long o = to_long(key, v);
        if (o != 2 && o != 6) throw ConfigError("order must be 2 or 6");
        cfg.order = static_cast<int>(o);
      }
    } else if (key == "nodes") {
      cfg.nodes = static_cast<int>(to_long(key, v));
    } else if (key == "bracket_cap") {
      cfg.bracket_cap = to_double(key, v);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(to_long(key, v));
    } else if (key == "out") {
      cfg.out_dir = v;
    } else if (key == "burn_in") {
      cfg.chain.burn_in = static_cast<int>(to_long(key, v));
    } else if (key == "samples") {
      cfg.chain.n_samples = static_cast<int>(to_long(key, v));
    } else if (key == "thin") {
      cfg.chain.thin = static_cast<int>(to_long(key, v));
    } else if (key == "fit_top_k") {
      cfg.fit_top_k = static_cast<int>(to_long(key, v));
    } else if (key == "g_top_k") {
      cfg.g_top_k = static_cast<int>(to_long(key, v));
    } else if (key == "shift_to_positive") {
      cfg.shift_to_positive = to_bool(key, v);
    } else if (key == "curve_points") {
      cfg.curve_points = static_cast<int>(to_long(key, v));
    }
  }
  if (eb.has_value()) {
    if (*eb && has_criterion && cfg.criterion != Criterion::eb) {
      throw ConfigError("eb = true conflicts with criterion = " + criterion_name(cfg.criterion));
    }
    if (*eb) cfg.criterion = Criterion::eb;
    if (!*eb && has_criterion && cfg.criterion == Criterion::eb) {
      throw ConfigError("eb = false conflicts with criterion = eb");
    }
  }
  const std::string kind = lower(cfg.hyperprior);
  if ((kind == "ig" || kind == "iig") && !(has_a && has_b)) {
    throw ConfigError("hyperprior " + cfg.hyperprior + " needs parameters a and b");
  }
  if (cfg.data_path.empty()) throw ConfigError("config key 'data' is required");
  if (cfg.response.empty()) throw ConfigError("config key 'response' is required");
  if (cfg.iterations <= 0) throw ConfigError("iterations must be positive");
  if (cfg.nodes < 1 || cfg.nodes > 64) throw ConfigError("nodes must lie in 1..64");
  if (!(cfg.bracket_cap > 0.0)) throw ConfigError("bracket_cap must be positive");
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  if (cfg.fit_top_k < 1 || cfg.g_top_k < 1) throw ConfigError("top_k values must be positive");
  if (cfg.curve_points < 2) throw ConfigError("curve_points must be at least 2");
  cfg.chain.validate();
  return cfg;
}

std::map<std::string, std::string> RunConfig::echo() const {
  std::map<std::string, std::string> kv;
  kv["data"] = data_path.string();
  kv["response"] = response;
  std::string cov;
  for (std::size_t i = 0; i < covariates.size(); ++i) cov += (i ? "," : "") + covariates[i];
  kv["covariates"] = cov;
  kv["weights"] = weights_column;
  kv["family"] = family;
  kv["link"] = link;
  kv["phi"] = format_double(phi);
  kv["hyperprior"] = hyperprior;
  const std::string kind = lower(hyperprior);
  if (kind == "ig" || kind == "iig") {
    kv["a"] = format_double(prior_a);
    kv["b"] = format_double(prior_b);
  }
  kv["criterion"] = criterion_name(criterion);
  kv["space"] = space == SpaceKind::variable_selection ? "vs" : "fp";
  kv["iterations"] = std::to_string(iterations);
  kv["seed"] = std::to_string(seed);
  kv["order"] = order ? std::to_string(*order) : "auto";
  kv["nodes"] = std::to_string(nodes);
  kv["bracket_cap"] = format_double(bracket_cap);
  kv["threads"] = std::to_string(threads);
  kv["out"] = out_dir.string();
  kv["burn_in"] = std::to_string(chain.burn_in);
  kv["samples"] = std::to_string(chain.n_samples);
  kv["thin"] = std::to_string(chain.thin);
  kv["fit_top_k"] = std::to_string(fit_top_k);
  kv["g_top_k"] = std::to_string(g_top_k);
  kv["curve_points"] = std::to_string(curve_points);
  kv["shift_to_positive"] = shift_to_positive ? "true" : "false";
  return kv;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

Dataset ingest_csv(const RunConfig& cfg) {
  std::ifstream in(cfg.data_path);
  if (!in) throw DataError("cannot open data file " + cfg.data_path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw DataError("data file " + cfg.data_path.string() + " is empty");
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
  const std::vector<std::string> header = split_csv_line(line);
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in " + cfg.data_path.string());
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t y_col = column(cfg.response);
  std::vector<std::string> names = cfg.covariates;
  if (names.empty()) {
    for (const auto& h : header) {
      if (h != cfg.response && h != cfg.weights_column) names.push_back(h);
    }
  }
  std::vector<std::size_t> x_cols;
  for (const auto& nm : names) x_cols.push_back(column(nm));
  std::optional<std::size_t> w_col;
  if (!cfg.weights_column.empty()) w_col = column(cfg.weights_column);

  std::vector<double> yv, wv;
  std::vector<std::vector<double>> xv;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    auto cell = [&](std::size_t c) {
      try {
        return parse_double(fields[c]);
      } catch (const DataError&) {
        throw DataError("line " + std::to_string(line_no) + ", column '" + header[c] + "': '" +
                        fields[c] + "' is not a number");
      }
    };
    auto finite_cell = [&](std::size_t c) {
      const double v = cell(c);
      if (!std::isfinite(v)) {
        throw DataError("line " + std::to_string(line_no) + ", column '" + header[c] +
                        "': value is not finite");
      }
      return v;
    };
    yv.push_back(finite_cell(y_col));
    std::vector<double> row;
    for (std::size_t c : x_cols) row.push_back(finite_cell(c));
    xv.push_back(std::move(row));
    wv.push_back(w_col ? finite_cell(*w_col) : 1.0);
  }
  if (yv.empty()) throw DataError("data file " + cfg.data_path.string() + " has no data rows");
  const auto n = static_cast<Eigen::Index>(yv.size());
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(yv.data(), n);
  Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(wv.data(), n);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(names.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) x(i, static_cast<Eigen::Index>(j)) = xv[static_cast<std::size_t>(i)][j];
  }
  FamilyLink fl = [&] {
    try {
      return FamilyLink::parse(cfg.family, cfg.link);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }();
  return Dataset(std::move(y), std::move(x), std::move(w), cfg.phi, fl, names);
}

HyperPrior make_hyperprior(const RunConfig& cfg, double n) {
  const std::string kind = lower(cfg.hyperprior);
  try {
    if (kind == "f1" || kind == "zellner-siow") return HyperPrior::zellner_siow(n);
    if (kind == "f2" || kind == "hyper-g/n") return HyperPrior::hyper_g_n(n);
    if (kind == "f3") return HyperPrior::vague_inverse_gamma();
    if (kind == "ig") return HyperPrior::inverse_gamma(cfg.prior_a, cfg.prior_b);
    if (kind == "iig") return HyperPrior::incomplete_inverse_gamma(cfg.prior_a, cfg.prior_b);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown hyperprior kind '" + cfg.hyperprior + "' (F1, F2, F3, ig, iig)");
}

EvidenceSpec make_evidence_spec(const RunConfig& cfg, const Dataset& ds) {
  EvidenceSpec spec;
  spec.criterion = cfg.criterion;
  if (cfg.criterion == Criterion::bayes) spec.prior = make_hyperprior(cfg, static_cast<double>(ds.n()));
  if (cfg.order) {
    spec.ila.order = *cfg.order == 6 ? LaplaceOrder::sixth : LaplaceOrder::second;
    if (spec.ila.order == LaplaceOrder::sixth && !ds.family_link().canonical()) {
      throw ConfigError("order 6 requires a canonical link");
    }
  } else {
    spec.ila.order = default_order(ds.family_link());
  }
  spec.ila.nodes = cfg.nodes;
  spec.ila.bracket_cap = cfg.bracket_cap;
  return spec;
}

}  // namespace hyperg
