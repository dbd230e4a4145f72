// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/sampler.hpp"

#include "hyperg/errors.hpp"
#include "hyperg/format.hpp"
#include "hyperg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace hyperg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kBatches = 20;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// ZProposal

ZProposal ZProposal::from_density(std::vector<std::pair<double, double>> knots) {
  std::sort(knots.begin(), knots.end());
  ZProposal q;
  for (const auto& [z, f] : knots) {
    if (!std::isfinite(z) || !(f >= 0.0) || !std::isfinite(f)) {
      throw DomainError("proposal knots must be finite with nonnegative density");
    }
    if (!q.z_.empty() && z == q.z_.back()) {
      q.f_.back() = std::max(q.f_.back(), f);
      continue;
    }
    q.z_.push_back(z);
    q.f_.push_back(f);
  }
  if (q.z_.size() < 2) throw DomainError("proposal needs at least two distinct knots");
  q.cdf_.assign(q.z_.size(), 0.0);
  for (std::size_t i = 1; i < q.z_.size(); ++i) {
    q.cdf_[i] = q.cdf_[i - 1] + 0.5 * (q.f_[i - 1] + q.f_[i]) * (q.z_[i] - q.z_[i - 1]);
  }
  const double total = q.cdf_.back();
  if (!(total > 0.0) || !std::isfinite(total)) throw DomainError("proposal has no mass");
  for (std::size_t i = 0; i < q.z_.size(); ++i) {
    q.f_[i] /= total;
    q.cdf_[i] /= total;
  }
  q.cdf_.back() = 1.0;
  return q;
}

ZProposal ZProposal::from_log_density(std::vector<std::pair<double, double>> knots) {
  double mx = kNegInf;
  for (const auto& k : knots) mx = std::max(mx, k.second);
  if (!std::isfinite(mx)) throw DomainError("proposal log density has no finite value");
  for (auto& k : knots) k.second = std::exp(k.second - mx);
  return from_density(std::move(knots));
}

std::size_t ZProposal::segment(double z) const {
  const auto it = std::upper_bound(z_.begin(), z_.end(), z);
  const auto idx = static_cast<std::size_t>(it - z_.begin());
  return std::clamp<std::size_t>(idx, 1, z_.size() - 1) - 1;
}

double ZProposal::density(double z) const {
  if (!(z >= z_.front() && z <= z_.back())) return 0.0;
  const std::size_t i = segment(z);
  const double h = z_[i + 1] - z_[i];
  const double t = (z - z_[i]) / h;
  return (1.0 - t) * f_[i] + t * f_[i + 1];
}

double ZProposal::log_density(double z) const {
  const double d = density(z);
  return d > 0.0 ? std::log(d) : kNegInf;
}

double ZProposal::cdf(double z) const {
  if (z <= z_.front()) return 0.0;
  if (z >= z_.back()) return 1.0;
  const std::size_t i = segment(z);
  const double x = z - z_[i];
  const double slope = (f_[i + 1] - f_[i]) / (z_[i + 1] - z_[i]);
  return cdf_[i] + f_[i] * x + 0.5 * slope * x * x;
}

double ZProposal::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
  i = std::clamp<std::size_t>(i, 1, z_.size() - 1) - 1;
  const double h = z_[i + 1] - z_[i];
  const double r = u - cdf_[i];
  const double f0 = f_[i];
  const double slope = (f_[i + 1] - f0) / h;
  // f0 x + slope x^2 / 2 = r, solved without cancellation.
  const double disc = std::max(f0 * f0 + 2.0 * slope * r, 0.0);
  const double denom = f0 + std::sqrt(disc);
  const double x = denom > 0.0 ? 2.0 * r / denom : 0.0;
  return z_[i] + std::clamp(x, 0.0, h);
}

double ZProposal::sample(std::mt19937_64& rng) const { return quantile(uniform01(rng)); }

// ---------------------------------------------------------------------------

void ChainConfig::validate() const {
  if (burn_in < 0 || n_samples < 1 || thin < 1) {
    throw ConfigError("chain needs burn_in >= 0, n_samples >= 1 and thin >= 1");
  }
}

SamplerSetup prepare_sampler(const GlmProblem& problem, const HyperPrior& hp_or_eb,
                             const IlaOptions& options) {
  if (problem.p() < 1) {
    throw DomainError("the null model has no g to sample; its evidence is available in closed form");
  }
  SamplerSetup setup;
  if (hp_or_eb.is_empirical_bayes()) {
    const EbResult eb = eb_optimize(problem, options.order, options.bracket_cap);
    setup.fixed_z = eb.at_boundary ? -options.bracket_cap : std::log(eb.g_hat);
    setup.z_star = setup.fixed_z;
  } else {
    setup.prior = hp_or_eb;
    setup.ila = log_marglik(problem, hp_or_eb, options);
    std::vector<std::pair<double, double>> knots = setup.ila.grid;
    knots.emplace_back(setup.ila.z_star, setup.ila.log_joint_at_mode);
    setup.proposal = ZProposal::from_log_density(std::move(knots));
    setup.z_star = setup.ila.z_star;
  }
  setup.beta_star = iwls_gauss_approx(problem, std::exp(setup.z_star)).mean();
  return setup;
}

// ---------------------------------------------------------------------------
// MhKernel

MhKernel::MhKernel(const GlmProblem& problem, const SamplerSetup& setup)
    : problem_(problem), setup_(setup) {}

double MhKernel::z_log_density(double z) const {
  if (setup_.empirical_bayes()) return 0.0;
  return setup_.proposal->log_density(z);
}

double MhKernel::log_target(const ChainState& s) const {
  const double g = std::exp(s.z);
  double value = log_likelihood(problem_, s.beta) + log_coefficient_prior(problem_, g, s.beta);
  if (!setup_.empirical_bayes()) value += setup_.prior->log_density_z(s.z);
  return value;
}

double MhKernel::log_proposal_density(const ChainState& from, const ChainState& to) const {
  if (setup_.empirical_bayes() && to.z != setup_.fixed_z) return kNegInf;
  const double lz = z_log_density(to.z);
  if (!std::isfinite(lz)) return kNegInf;
  const GaussApprox q = iwls_one_step(problem_, std::exp(to.z), from.beta);
  return lz + q.log_density(to.beta);
}

ChainState MhKernel::propose(const ChainState& from, std::mt19937_64& rng) const {
  ChainState to;
  to.z = setup_.empirical_bayes() ? setup_.fixed_z : setup_.proposal->sample(rng);
  const GaussApprox q = iwls_one_step(problem_, std::exp(to.z), from.beta);
  to.beta = q.sample(rng);
  return to;
}

double MhKernel::log_acceptance(const ChainState& from, const ChainState& to) const {
  double num = kNegInf;
  double den = kNegInf;
  try {
    num = log_target(to) + log_proposal_density(to, from);
  } catch (const NumericalError&) {
    return kNegInf;
  }
  den = log_target(from) + log_proposal_density(from, to);
  if (!std::isfinite(num)) return kNegInf;
  if (!std::isfinite(den)) return 0.0;
  return std::min(0.0, num - den);
}

bool MhKernel::step(ChainState& state, std::mt19937_64& rng, int& failures) const {
  ChainState next;
  double log_alpha = kNegInf;
  try {
    next.z = setup_.empirical_bayes() ? setup_.fixed_z : setup_.proposal->sample(rng);
    const GaussApprox fwd = iwls_one_step(problem_, std::exp(next.z), state.beta);
    next.beta = fwd.sample(rng);
    const double lq_fwd = z_log_density(next.z) + fwd.log_density(next.beta);
    const GaussApprox rev = iwls_one_step(problem_, std::exp(state.z), next.beta);
    const double lq_rev = z_log_density(state.z) + rev.log_density(state.beta);
    const double lt_next = log_target(next);
    const double lt_cur = log_target(state);
    log_alpha = std::min(0.0, (lt_next + lq_rev) - (lt_cur + lq_fwd));
    if (std::isnan(log_alpha)) log_alpha = kNegInf;
  } catch (const NumericalError&) {
    ++failures;
    log_alpha = kNegInf;
  }
  const double u = uniform01(rng);
  if (std::isfinite(log_alpha) && std::log(u) < log_alpha) {
    state = std::move(next);
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

std::uint64_t model_stream_seed(std::uint64_t seed, const ModelIndex& model) {
  return splitmix64(splitmix64(seed) ^ fnv1a(model.to_string()));
}

PosteriorDraws run_chain(const GlmProblem& problem, const SamplerSetup& setup,
                         const ChainConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(model_stream_seed(cfg.seed, problem.design().parent));
  const MhKernel kernel(problem, setup);
  ChainState state{setup.beta_star, setup.z_star};

  PosteriorDraws out;
  out.samples.resize(cfg.n_samples, problem.dim() + 1);
  out.log_likelihood.resize(cfg.n_samples);
  for (int i = 0; i < cfg.burn_in; ++i) kernel.step(state, rng, out.failed_steps);
  long accepted = 0;
  long proposed = 0;
  for (int s = 0; s < cfg.n_samples; ++s) {
    for (int t = 0; t < cfg.thin; ++t) {
      accepted += kernel.step(state, rng, out.failed_steps) ? 1 : 0;
      ++proposed;
    }
    out.samples.row(s).head(problem.dim()) = state.beta.transpose();
    out.samples(s, problem.dim()) = state.z;
    out.log_likelihood[s] = log_likelihood(problem, state.beta);
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct BatchStats {
  double log_mean;
  std::vector<double> batch_means;  // on the exp(term - shift) scale
  double shift;
};

BatchStats batch_statistics(const std::vector<double>& terms) {
  BatchStats st;
  st.shift = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(st.shift)) throw NumericalError("all estimator terms vanish");
  const std::size_t n = terms.size();
  const std::size_t nb = std::min<std::size_t>(kBatches, n);
  st.batch_means.assign(nb, 0.0);
  std::vector<std::size_t> counts(nb, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(terms[i] - st.shift);
    const std::size_t b = std::min(i * nb / n, nb - 1);
    st.batch_means[b] += v;
    ++counts[b];
    total += v;
  }
  for (std::size_t b = 0; b < nb; ++b) st.batch_means[b] /= static_cast<double>(counts[b]);
  st.log_mean = st.shift + std::log(total / static_cast<double>(n));
  return st;
}

}  // namespace

ChibJeliazkov chib_jeliazkov(const GlmProblem& problem, const SamplerSetup& setup,
                             const PosteriorDraws& draws, const ChainConfig& cfg) {
  cfg.validate();
  const MhKernel kernel(problem, setup);
  const ChainState star{setup.beta_star, setup.z_star};
  const double log_target_star = kernel.log_target(star);
  if (!std::isfinite(log_target_star)) throw NumericalError("theta* has zero posterior density");

  const int d = problem.dim();
  std::vector<double> num(static_cast<std::size_t>(draws.samples.rows()));
  for (Eigen::Index j = 0; j < draws.samples.rows(); ++j) {
    ChainState s{draws.samples.row(j).head(d).transpose(), draws.samples(j, d)};
    double term = kNegInf;
    try {
      const double lq = kernel.log_proposal_density(s, star);
      if (std::isfinite(lq)) term = kernel.log_acceptance(s, star) + lq;
    } catch (const NumericalError&) {
    }
    num[static_cast<std::size_t>(j)] = term;
  }

  std::mt19937_64 rng(model_stream_seed(cfg.seed ^ 0x6a09e667f3bcc909ULL, problem.design().parent));
  std::vector<double> den(static_cast<std::size_t>(cfg.n_samples));
  for (auto& term : den) {
    term = kNegInf;
    try {
      const ChainState prop = kernel.propose(star, rng);
      term = kernel.log_acceptance(star, prop);
    } catch (const NumericalError&) {
    }
  }

  const BatchStats ns = batch_statistics(num);
  BatchStats ds;
  try {
    ds = batch_statistics(den);
  } catch (const NumericalError&) {
    throw NumericalError("Chib-Jeliazkov denominator is zero");
  }
  const double log_ordinate = ns.log_mean - ds.log_mean;

  // Delta method on log(mean num) - log(mean den) with batch means.
  const std::size_t nb = std::min(ns.batch_means.size(), ds.batch_means.size());
  double mn = 0.0, md = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    mn += ns.batch_means[b];
    md += ds.batch_means[b];
  }
  mn /= static_cast<double>(nb);
  md /= static_cast<double>(nb);
  double vn = 0.0, vd = 0.0, cnd = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double a = ns.batch_means[b] - mn;
    const double c = ds.batch_means[b] - md;
    vn += a * a;
    vd += c * c;
    cnd += a * c;
  }
  const double denom_df = static_cast<double>(nb) * static_cast<double>(nb - 1);
  vn /= denom_df;
  vd /= denom_df;
  cnd /= denom_df;
  const double var = vn / (mn * mn) + vd / (md * md) - 2.0 * cnd / (mn * md);
  return {log_target_star - log_ordinate, std::sqrt(std::max(var, 0.0))};
}

void write_draws_csv(std::ostream& os, const PosteriorDraws& draws) {
  const Eigen::Index cols = draws.samples.cols();
  os << "beta0";
  for (Eigen::Index j = 1; j + 1 < cols; ++j) os << ",beta_" << j;
  os << ",z,loglik\n";
  for (Eigen::Index i = 0; i < draws.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) os << format_double(draws.samples(i, j)) << ',';
    os << format_double(draws.log_likelihood[i]) << '\n';
  }
}

}  // namespace hyperg
