// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/model_space.hpp"

#include "hyperg/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace hyperg {

namespace {

int power_index(double power) {
  for (std::size_t j = 0; j < kFpPowers.size(); ++j) {
    if (kFpPowers[j] == power) return static_cast<int>(j);
  }
  throw DomainError("power " + std::to_string(power) + " is not in the FP power set");
}

std::string format_power(double power) {
  std::ostringstream os;
  os << power;
  return os.str();
}

double parse_number(std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DomainError("cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Distinct results of each applicable move type on one FP tuple.
struct MoveSets {
  std::vector<std::vector<FpTuple>> by_type;
};

MoveSets fp_moves(const FpTuple& t) {
  MoveSets out;
  const int deg = t.degree();
  if (deg < 2) {
    std::set<FpTuple> add;
    for (int j = 0; j < 8; ++j) {
      std::vector<int> idx;
      for (int s = 0; s < deg; ++s) idx.push_back(t.index(s));
      idx.push_back(j);
      add.insert(FpTuple::from_indices(idx));
    }
    out.by_type.emplace_back(add.begin(), add.end());
  }
  if (deg > 0) {
    std::set<FpTuple> remove;
    for (int s = 0; s < deg; ++s) {
      std::vector<int> idx;
      for (int r = 0; r < deg; ++r) {
        if (r != s) idx.push_back(t.index(r));
      }
      remove.insert(FpTuple::from_indices(idx));
    }
    out.by_type.emplace_back(remove.begin(), remove.end());

    std::set<FpTuple> replace;
    for (int s = 0; s < deg; ++s) {
      for (int j = 0; j < 8; ++j) {
        if (j == t.index(s)) continue;
        std::vector<int> idx;
        for (int r = 0; r < deg; ++r) idx.push_back(r == s ? j : t.index(r));
        replace.insert(FpTuple::from_indices(idx));
      }
    }
    out.by_type.emplace_back(replace.begin(), replace.end());
  }
  return out;
}

double log_tuple_move_probability(const FpTuple& from, const FpTuple& to) {
  const MoveSets moves = fp_moves(from);
  const double n_types = static_cast<double>(moves.by_type.size());
  for (const auto& options : moves.by_type) {
    if (std::binary_search(options.begin(), options.end(), to)) {
      return -std::log(n_types) - std::log(static_cast<double>(options.size()));
    }
  }
  return -std::numeric_limits<double>::infinity();
}

}  // namespace

// ---------------------------------------------------------------------------
// FpTuple

FpTuple FpTuple::from_powers(std::span<const double> powers) {
  std::vector<int> idx;
  for (double p : powers) idx.push_back(power_index(p));
  return from_indices(idx);
}

FpTuple FpTuple::from_indices(std::span<const int> indices) {
  if (indices.size() > 2) throw DomainError("an FP tuple holds at most two powers");
  FpTuple t;
  std::array<int, 2> sorted{0, 0};
  for (std::size_t s = 0; s < indices.size(); ++s) {
    if (indices[s] < 0 || indices[s] >= 8) throw DomainError("FP power index out of range");
    sorted[s] = indices[s];
  }
  if (indices.size() == 2 && sorted[0] > sorted[1]) std::swap(sorted[0], sorted[1]);
  t.degree_ = static_cast<std::int8_t>(indices.size());
  for (std::size_t s = 0; s < indices.size(); ++s) t.idx_[s] = static_cast<std::int8_t>(sorted[s]);
  return t;
}

std::vector<double> FpTuple::powers() const {
  std::vector<double> out;
  for (int s = 0; s < degree_; ++s) out.push_back(power(s));
  return out;
}

int FpTuple::ordinal() const {
  if (degree_ == 0) return 0;
  if (degree_ == 1) return 1 + idx_[0];
  int ord = 9;
  for (int i = 0; i < idx_[0]; ++i) ord += 8 - i;
  return ord + (idx_[1] - idx_[0]);
}

FpTuple FpTuple::from_ordinal(int ordinal) {
  if (ordinal < 0 || ordinal >= kFpTuplesPerCovariate) throw DomainError("FP tuple ordinal out of range");
  if (ordinal == 0) return FpTuple{};
  if (ordinal <= 8) {
    const std::array<int, 1> idx{ordinal - 1};
    return from_indices(idx);
  }
  int rest = ordinal - 9;
  int i = 0;
  while (rest >= 8 - i) {
    rest -= 8 - i;
    ++i;
  }
  const std::array<int, 2> idx{i, i + rest};
  return from_indices(idx);
}

std::string FpTuple::to_string() const {
  std::string out = "(";
  for (int s = 0; s < degree_; ++s) {
    if (s > 0) out += ",";
    out += format_power(power(s));
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// ModelIndex

ModelIndex ModelIndex::variable_selection(std::vector<bool> bits) {
  if (bits.empty()) throw DomainError("model index needs at least one covariate");
  ModelIndex g;
  g.kind_ = SpaceKind::variable_selection;
  g.bits_ = std::move(bits);
  return g;
}

ModelIndex ModelIndex::fractional_polynomial(std::vector<FpTuple> tuples) {
  if (tuples.empty()) throw DomainError("model index needs at least one covariate");
  ModelIndex g;
  g.kind_ = SpaceKind::fractional_polynomial;
  g.tuples_ = std::move(tuples);
  return g;
}

ModelIndex ModelIndex::null_model(SpaceKind kind, int m) {
  if (kind == SpaceKind::variable_selection) return variable_selection(std::vector<bool>(static_cast<std::size_t>(m), false));
  return fractional_polynomial(std::vector<FpTuple>(static_cast<std::size_t>(m)));
}

int ModelIndex::num_covariates() const {
  return static_cast<int>(kind_ == SpaceKind::variable_selection ? bits_.size() : tuples_.size());
}

int ModelIndex::size() const {
  if (kind_ == SpaceKind::variable_selection) {
    return static_cast<int>(std::count(bits_.begin(), bits_.end(), true));
  }
  int p = 0;
  for (const auto& t : tuples_) p += t.degree();
  return p;
}

bool ModelIndex::includes(int k) const {
  const auto kk = static_cast<std::size_t>(k);
  return kind_ == SpaceKind::variable_selection ? bits_.at(kk) : tuples_.at(kk).degree() > 0;
}

std::string ModelIndex::to_string() const {
  std::string out;
  if (kind_ == SpaceKind::variable_selection) {
    for (bool b : bits_) out += b ? '1' : '0';
    return out;
  }
  for (std::size_t k = 0; k < tuples_.size(); ++k) {
    if (k > 0) out += ";";
    out += "x" + std::to_string(k + 1) + ":" + tuples_[k].to_string();
  }
  return out;
}

ModelIndex ModelIndex::parse(std::string_view text) {
  text = trim(text);
  if (text.find(':') == std::string_view::npos) {
    std::vector<bool> bits;
    for (char c : text) {
      if (c != '0' && c != '1') throw DomainError("invalid variable-selection index '" + std::string(text) + "'");
      bits.push_back(c == '1');
    }
    return variable_selection(std::move(bits));
  }
  std::vector<FpTuple> tuples;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    const std::string_view item = trim(text.substr(start, end - start));
    const std::size_t colon = item.find(':');
    const std::size_t open = item.find('(');
    const std::size_t close = item.rfind(')');
    if (colon == std::string_view::npos || open == std::string_view::npos ||
        close == std::string_view::npos || close < open) {
      throw DomainError("invalid FP index component '" + std::string(item) + "'");
    }
    const std::string expected = "x" + std::to_string(tuples.size() + 1);
    if (trim(item.substr(0, colon)) != expected) {
      throw DomainError("FP index components must be listed as x1, x2, ... in order");
    }
    std::vector<double> powers;
    std::string_view inner = item.substr(open + 1, close - open - 1);
    while (!trim(inner).empty()) {
      const std::size_t comma = std::min(inner.find(','), inner.size());
      powers.push_back(parse_number(trim(inner.substr(0, comma))));
      inner = comma < inner.size() ? inner.substr(comma + 1) : std::string_view{};
    }
    tuples.push_back(FpTuple::from_powers(powers));
    start = end + 1;
  }
  return fractional_polynomial(std::move(tuples));
}

std::strong_ordering operator<=>(const ModelIndex& a, const ModelIndex& b) {
  if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
  if (a.kind_ == SpaceKind::variable_selection) {
    if (a.bits_.size() != b.bits_.size()) return a.bits_.size() <=> b.bits_.size();
    for (std::size_t k = 0; k < a.bits_.size(); ++k) {
      if (a.bits_[k] != b.bits_[k]) return a.bits_[k] <=> b.bits_[k];
    }
    return std::strong_ordering::equal;
  }
  if (a.tuples_.size() != b.tuples_.size()) return a.tuples_.size() <=> b.tuples_.size();
  for (std::size_t k = 0; k < a.tuples_.size(); ++k) {
    if (auto c = a.tuples_[k] <=> b.tuples_[k]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::size_t ModelIndexHash::operator()(const ModelIndex& index) const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  mix(static_cast<std::uint64_t>(index.kind()));
  if (index.kind() == SpaceKind::variable_selection) {
    for (bool b : index.bits()) mix(b ? 1u : 0u);
  } else {
    for (const auto& t : index.tuples()) mix(static_cast<std::uint64_t>(t.ordinal()));
  }
  return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------
// Designs

std::vector<Eigen::VectorXd> fp_transform(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          const FpTuple& powers,
                                          std::string_view covariate_name) {
  if (powers.degree() > 0 && !(x.minCoeff() > 0.0)) {
    throw DomainError("covariate " + std::string(covariate_name) +
                      " has nonpositive values; fractional polynomials are undefined");
  }
  auto column = [&x](double p) -> Eigen::VectorXd {
    if (p == 0.0) return x.array().log().matrix();
    if (p == 1.0) return x;
    return x.array().pow(p).matrix();
  };
  std::vector<Eigen::VectorXd> out;
  if (powers.degree() >= 1) out.push_back(column(powers.power(0)));
  if (powers.degree() == 2) {
    if (powers.index(0) == powers.index(1)) {
      out.push_back((out[0].array() * x.array().log()).matrix());
    } else {
      out.push_back(column(powers.power(1)));
    }
  }
  return out;
}

DesignMatrix build_design(const Dataset& ds, const ModelIndex& gamma) {
  if (gamma.num_covariates() != ds.m()) {
    throw DomainError("model index has " + std::to_string(gamma.num_covariates()) +
                      " covariates but the dataset has " + std::to_string(ds.m()));
  }
  DesignMatrix d;
  d.parent = gamma;
  d.p = gamma.size();
  d.x_centered.resize(ds.n(), d.p);
  d.column_means.resize(d.p);
  int col = 0;
  for (int k = 0; k < ds.m(); ++k) {
    if (gamma.kind() == SpaceKind::variable_selection) {
      if (gamma.bits()[static_cast<std::size_t>(k)]) d.x_centered.col(col++) = ds.x_raw().col(k);
    } else {
      for (auto& c : fp_transform(ds.x_raw().col(k), gamma.tuples()[static_cast<std::size_t>(k)],
                                  ds.covariate_names()[static_cast<std::size_t>(k)])) {
        d.x_centered.col(col++) = c;
      }
    }
  }
  const double wsum = ds.weights().sum();
  for (int j = 0; j < d.p; ++j) {
    d.column_means[j] = ds.weights().dot(d.x_centered.col(j)) / wsum;
    d.x_centered.col(j).array() -= d.column_means[j];
  }
  return d;
}

// ---------------------------------------------------------------------------
// Priors and enumeration

double model_log_prior(const ModelIndex& gamma) {
  const int m = gamma.num_covariates();
  if (gamma.kind() == SpaceKind::variable_selection) {
    return -std::log(m + 1.0) - log_choose(m, gamma.size());
  }
  double out = 0.0;
  for (const auto& t : gamma.tuples()) {
    out += -std::log(3.0) - log_choose(7 + t.degree(), t.degree());
  }
  return out;
}

double model_space_size(SpaceKind kind, int m) {
  return kind == SpaceKind::variable_selection ? std::pow(2.0, m)
                                               : std::pow(static_cast<double>(kFpTuplesPerCovariate), m);
}

std::vector<ModelIndex> enumerate_models(SpaceKind kind, int m, double cap) {
  if (m < 1) throw DomainError("enumerate_models: m must be positive");
  const double count = model_space_size(kind, m);
  if (count > cap) {
    throw DomainError("model space of " + std::to_string(count) +
                      " models exceeds the enumeration cap; use stochastic search (mc3)");
  }
  const auto total = static_cast<std::uint64_t>(count);
  std::vector<ModelIndex> out;
  out.reserve(total);
  const auto mm = static_cast<std::size_t>(m);
  for (std::uint64_t i = 0; i < total; ++i) {
    if (kind == SpaceKind::variable_selection) {
      std::vector<bool> bits(mm);
      for (std::size_t k = 0; k < mm; ++k) bits[k] = ((i >> (mm - 1 - k)) & 1u) != 0;
      out.push_back(ModelIndex::variable_selection(std::move(bits)));
    } else {
      std::vector<FpTuple> tuples(mm);
      std::uint64_t rest = i;
      for (std::size_t k = mm; k-- > 0;) {
        tuples[k] = FpTuple::from_ordinal(static_cast<int>(rest % kFpTuplesPerCovariate));
        rest /= kFpTuplesPerCovariate;
      }
      out.push_back(ModelIndex::fractional_polynomial(std::move(tuples)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Neighborhood moves

double log_neighbor_probability(const ModelIndex& from, const ModelIndex& to) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (from.kind() != to.kind() || from.num_covariates() != to.num_covariates()) return neg_inf;
  const int m = from.num_covariates();
  int differing = -1;
  for (int k = 0; k < m; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const bool same = from.kind() == SpaceKind::variable_selection
                          ? from.bits()[kk] == to.bits()[kk]
                          : from.tuples()[kk] == to.tuples()[kk];
    if (!same) {
      if (differing >= 0) return neg_inf;
      differing = k;
    }
  }
  if (differing < 0) return neg_inf;
  if (from.kind() == SpaceKind::variable_selection) return -std::log(static_cast<double>(m));
  const auto kk = static_cast<std::size_t>(differing);
  return -std::log(static_cast<double>(m)) + log_tuple_move_probability(from.tuples()[kk], to.tuples()[kk]);
}

std::vector<ModelIndex> neighbors(const ModelIndex& gamma) {
  std::vector<ModelIndex> out;
  const int m = gamma.num_covariates();
  for (int k = 0; k < m; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (gamma.kind() == SpaceKind::variable_selection) {
      auto bits = gamma.bits();
      bits[kk] = !bits[kk];
      out.push_back(ModelIndex::variable_selection(std::move(bits)));
      continue;
    }
    for (const auto& options : fp_moves(gamma.tuples()[kk]).by_type) {
      for (const auto& t : options) {
        auto tuples = gamma.tuples();
        tuples[kk] = t;
        out.push_back(ModelIndex::fractional_polynomial(std::move(tuples)));
      }
    }
  }
  return out;
}

NeighborProposal propose_neighbor(const ModelIndex& gamma, std::mt19937_64& rng) {
  const int m = gamma.num_covariates();
  std::uniform_int_distribution<int> pick_covariate(0, m - 1);
  const auto k = static_cast<std::size_t>(pick_covariate(rng));
  if (gamma.kind() == SpaceKind::variable_selection) {
    auto bits = gamma.bits();
    bits[k] = !bits[k];
    return {ModelIndex::variable_selection(std::move(bits)), 0.0};
  }
  const MoveSets moves = fp_moves(gamma.tuples()[k]);
  std::uniform_int_distribution<std::size_t> pick_type(0, moves.by_type.size() - 1);
  const auto& options = moves.by_type[pick_type(rng)];
  std::uniform_int_distribution<std::size_t> pick_option(0, options.size() - 1);
  auto tuples = gamma.tuples();
  tuples[k] = options[pick_option(rng)];
  ModelIndex proposed = ModelIndex::fractional_polynomial(std::move(tuples));
  const double ratio = log_neighbor_probability(proposed, gamma) - log_neighbor_probability(gamma, proposed);
  return {std::move(proposed), ratio};
}

}  // namespace hyperg
