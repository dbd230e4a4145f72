// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/glm.hpp"
#include "hyperg/hyperprior.hpp"
#include "hyperg/laplace.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace hyperg {

/// Normalized piecewise-linear density through (z_j, f_j) knots, sampled by
/// inverting its piecewise-quadratic CDF. Zero outside [min knot, max knot].
class ZProposal {
 public:
  /// Knots with nonnegative density values (any scale). Needs at least two
  /// distinct z values and positive total mass.
  static ZProposal from_density(std::vector<std::pair<double, double>> knots);
  /// Knots with log density values; shifted by their maximum before
  /// exponentiation.
  static ZProposal from_log_density(std::vector<std::pair<double, double>> knots);

  double density(double z) const;
  double log_density(double z) const;
  double cdf(double z) const;
  double quantile(double u) const;
  double sample(std::mt19937_64& rng) const;

  double lower() const { return z_.front(); }
  double upper() const { return z_.back(); }
  const std::vector<double>& knots() const { return z_; }
  const std::vector<double>& values() const { return f_; }

 private:
  ZProposal() = default;
  std::size_t segment(double z) const;

  std::vector<double> z_;
  std::vector<double> f_;    // normalized density at knots
  std::vector<double> cdf_;  // CDF at knots
};

struct ChainConfig {
  int burn_in = 1000;
  int n_samples = 4500;
  int thin = 2;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Everything fixed before a chain starts: the target (hyperprior or fixed
/// empirical-Bayes z), the z proposal, and the reference point theta*.
struct SamplerSetup {
  std::optional<HyperPrior> prior;  // empty for empirical Bayes
  double fixed_z = 0.0;             // empirical Bayes only
  std::optional<ZProposal> proposal;
  Eigen::VectorXd beta_star;
  double z_star = 0.0;
  MargLikResult ila;  // empty grid for empirical Bayes
  bool empirical_bayes() const { return !prior.has_value(); }
};

/// Runs the ILA (or EB optimization) and builds the proposal. EB with the
/// maximum at g -> 0 fixes z at -bracket_cap.
SamplerSetup prepare_sampler(const GlmProblem& problem, const HyperPrior& hp_or_eb,
                             const IlaOptions& options = {});

struct ChainState {
  Eigen::VectorXd beta;  // (beta0, beta_gamma)
  double z;
};

/// Tuning-free independence-type MH kernel: z' ~ q(z), then beta' from one
/// Bayesian IWLS step at g' = exp(z') started from the current beta.
class MhKernel {
 public:
  MhKernel(const GlmProblem& problem, const SamplerSetup& setup);

  /// log-likelihood + log g-prior + log density of z (omitted for EB).
  double log_target(const ChainState& s) const;
  /// log q(to | from).
  double log_proposal_density(const ChainState& from, const ChainState& to) const;
  ChainState propose(const ChainState& from, std::mt19937_64& rng) const;
  /// log of the acceptance probability for a move from -> to (<= 0).
  double log_acceptance(const ChainState& from, const ChainState& to) const;

  /// One MH transition; returns true when the proposal was accepted. A failed
  /// IWLS step counts as a rejection and increments `failures`.
  bool step(ChainState& state, std::mt19937_64& rng, int& failures) const;

  const GlmProblem& problem() const { return problem_; }

 private:
  double z_log_density(double z) const;

  const GlmProblem& problem_;
  const SamplerSetup& setup_;
};

struct PosteriorDraws {
  Eigen::MatrixXd samples;  // n_samples x (p + 2): beta0, beta_1..p, z
  Eigen::VectorXd log_likelihood;
  double acceptance_rate = 0.0;
  int failed_steps = 0;
};

/// Seed of the stream belonging to one model, mixed from the run seed and
/// the model's canonical text.
std::uint64_t model_stream_seed(std::uint64_t seed, const ModelIndex& model);

/// Deterministic given cfg.seed and the model; starts at theta*.
PosteriorDraws run_chain(const GlmProblem& problem, const SamplerSetup& setup,
                         const ChainConfig& cfg);

struct ChibJeliazkov {
  double log_evidence;
  double standard_error;
};

/// Posterior-ordinate estimate of log f(y | gamma) at theta*, with a
/// 20-batch-means standard error. Uses cfg.n_samples fresh proposals.
ChibJeliazkov chib_jeliazkov(const GlmProblem& problem, const SamplerSetup& setup,
                             const PosteriorDraws& draws, const ChainConfig& cfg);

/// CSV with header beta0,beta_1..beta_p,z,loglik.
void write_draws_csv(std::ostream& os, const PosteriorDraws& draws);

}  // namespace hyperg
