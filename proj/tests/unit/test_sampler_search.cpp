// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/conjugate.hpp"
#include "hyperg/errors.hpp"
#include "hyperg/sampler.hpp"
#include "hyperg/search.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

using namespace hyperg;
using testing_support::simulate_gaussian;
using testing_support::simulate_logistic;

namespace {

ModelIndex all_in(int m) { return ModelIndex::variable_selection(std::vector<bool>(static_cast<std::size_t>(m), true)); }

double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  return d;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("piecewise-linear proposal") {
  const ZProposal q = ZProposal::from_density({{-1.0, 0.0}, {0.0, 2.0}, {1.0, 1.0}, {3.0, 0.0}});
  // area of the unnormalized shape: 1 + 1.5 + 1 = 3.5
  CHECK(q.density(0.0) == doctest::Approx(2.0 / 3.5));
  CHECK(q.density(2.0) == doctest::Approx(0.5 / 3.5));
  CHECK(q.density(-2.0) == 0.0);
  CHECK(q.cdf(0.0) == doctest::Approx(1.0 / 3.5));
  CHECK(q.cdf(3.0) == doctest::Approx(1.0));
  for (double u : {0.0, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0}) CHECK(q.cdf(q.quantile(u)) == doctest::Approx(u).epsilon(1e-12));
  std::mt19937_64 rng(4);
  std::vector<double> draws;
  for (int i = 0; i < 20000; ++i) draws.push_back(q.sample(rng));
  CHECK(ks_statistic(draws, [&q](double z) { return q.cdf(z); }) < 0.015);
  const ZProposal lq = ZProposal::from_log_density({{-1.0, -3.0}, {0.0, 0.0}, {1.0, -1.0}});
  CHECK(lq.density(0.0) / lq.density(1.0) == doctest::Approx(std::exp(1.0)));
  CHECK_THROWS_AS(ZProposal::from_density({{0.0, 1.0}}), DomainError);
  CHECK_THROWS_AS(ZProposal::from_density({{0.0, 0.0}, {1.0, 0.0}}), DomainError);
}

TEST_CASE("chain config validation") {
  ChainConfig c;
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ChainConfig{};
  c.n_samples = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("same seed gives identical draws, different seed does not") {
  const Dataset ds = simulate_logistic(80, 2, 6, {0.2, 1.0, -0.5});
  const GlmProblem pr(ds, build_design(ds, all_in(2)));
  const SamplerSetup setup = prepare_sampler(pr, HyperPrior::zellner_siow(80));
  ChainConfig cfg;
  cfg.burn_in = 100;
  cfg.n_samples = 300;
  cfg.seed = 17;
  const PosteriorDraws a = run_chain(pr, setup, cfg);
  const PosteriorDraws b = run_chain(pr, setup, cfg);
  CHECK(a.samples == b.samples);
  std::ostringstream sa, sb;
  write_draws_csv(sa, a);
  write_draws_csv(sb, b);
  CHECK(sa.str() == sb.str());
  cfg.seed = 18;
  CHECK_FALSE(run_chain(pr, setup, cfg).samples == a.samples);
  CHECK(model_stream_seed(1, all_in(2)) != model_stream_seed(1, ModelIndex::variable_selection({true, false})));
}

TEST_CASE("conjugate model: high acceptance, z draws follow the exact posterior, CJ covers") {
  const Dataset ds = simulate_gaussian(120, 3, 21, {1, 0.5, -0.4, 0.0}, 1.0, 1.0);
  const GlmProblem pr(ds, build_design(ds, all_in(3)));
  const SamplerSetup setup = prepare_sampler(pr, HyperPrior::incomplete_inverse_gamma(0.01, 0.01));
  ChainConfig cfg;
  cfg.seed = 3;
  const PosteriorDraws d = run_chain(pr, setup, cfg);
  CHECK(d.acceptance_rate > 0.9);
  CHECK(d.failed_steps == 0);
  std::vector<double> z(static_cast<std::size_t>(d.samples.rows()));
  for (Eigen::Index i = 0; i < d.samples.rows(); ++i) z[static_cast<std::size_t>(i)] = d.samples(i, pr.dim());
  CHECK(ks_statistic(z, [&pr](double v) { return iig_posterior_z_cdf(pr, 0.01, 0.01, v); }) < 0.03);
  const ChibJeliazkov cj = chib_jeliazkov(pr, setup, d, cfg);
  const double ex = log_marglik_exact_iig(pr, 0.01, 0.01);
  CHECK(cj.standard_error > 0.0);
  CHECK(std::abs(cj.log_evidence - ex) <= 4.0 * cj.standard_error);
  // beta draws: posterior mean of the intercept is ybar exactly
  CHECK(d.samples.col(0).mean() == doctest::Approx(sums_of_squares(pr).y_bar).epsilon(1e-2));
}

TEST_CASE("empirical Bayes fixes z") {
  const Dataset ds = simulate_gaussian(60, 2, 2, {0, 1, 1}, 1.0, 1.0);
  const GlmProblem pr(ds, build_design(ds, all_in(2)));
  const SamplerSetup setup = prepare_sampler(pr, HyperPrior::empirical_bayes());
  CHECK(setup.empirical_bayes());
  ChainConfig cfg;
  cfg.burn_in = 10;
  cfg.n_samples = 200;
  const PosteriorDraws d = run_chain(pr, setup, cfg);
  const double zhat = std::log(eb_optimize(pr, LaplaceOrder::second).g_hat);
  CHECK(d.samples.col(pr.dim()).minCoeff() == doctest::Approx(zhat).epsilon(1e-6));
  CHECK(d.samples.col(pr.dim()).maxCoeff() == doctest::Approx(zhat).epsilon(1e-6));
}

TEST_CASE("null model cannot be sampled") {
  const Dataset ds = simulate_gaussian(20, 2, 2, {0, 1, 1}, 1.0, 1.0);
  const GlmProblem pr(ds, build_design(ds, ModelIndex::null_model(SpaceKind::variable_selection, 2)));
  CHECK_THROWS_AS(prepare_sampler(pr, HyperPrior::zellner_siow(20)), DomainError);
}

}  // TEST_SUITE

TEST_SUITE("search") {

TEST_CASE("exhaustive posterior: normalized, thread count and order do not matter") {
  const Dataset ds = simulate_logistic(150, 5, 31, {0.0, 1.0, 0.0, -0.6, 0.0, 0.3});
  EvidenceSpec spec;
  spec.prior = HyperPrior::zellner_siow(150);
  const ModelEvaluator ev(ds, spec);
  const ModelPosterior a = exhaustive_posterior(ev, SpaceKind::variable_selection, 1);
  const ModelPosterior b = exhaustive_posterior(ev, SpaceKind::variable_selection, 3);
  REQUIRE(a.entries().size() == 32);
  double total = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    total += a.probability(i);
    CHECK(a.entries()[i].model == b.entries()[i].model);
    CHECK(a.entries()[i].log_marglik == b.entries()[i].log_marglik);
    CHECK(a.probability(i) == b.probability(i));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // a posterior built from the entries in reverse order is identical
  std::vector<ModelEntry> rev(a.entries().rbegin(), a.entries().rend());
  const ModelPosterior c(rev, SearchMethod::exhaustive);
  CHECK(c.log_normalizer() == a.log_normalizer());
  for (std::size_t i = 0; i < a.entries().size(); ++i) CHECK(c.entries()[i].model == a.entries()[i].model);

  // cache soundness: the same model evaluates to the same value
  const ModelIndex g = ModelIndex::variable_selection({true, false, true, false, false});
  CHECK(ev.evaluate(g).log_marglik == ev.evaluate(g).log_marglik);
}

TEST_CASE("inclusion probabilities, MAP and median") {
  const Dataset ds = simulate_logistic(150, 4, 41, {0.0, 1.2, 0.0, -0.8, 0.0});
  EvidenceSpec spec;
  spec.prior = HyperPrior::hyper_g_n(150);
  const ModelEvaluator ev(ds, spec);
  const ModelPosterior mp = exhaustive_posterior(ev, SpaceKind::variable_selection);
  const std::vector<double> inc = inclusion_probabilities(mp);
  std::vector<double> direct(4, 0.0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < mp.entries().size(); ++i) {
    for (int k = 0; k < 4; ++k) {
      if (mp.entries()[i].model.includes(k)) direct[static_cast<std::size_t>(k)] += mp.probability(i);
    }
    if (mp.probability(i) > mp.probability(best)) best = i;
  }
  for (int k = 0; k < 4; ++k) CHECK(inc[static_cast<std::size_t>(k)] == doctest::Approx(direct[static_cast<std::size_t>(k)]).epsilon(1e-12));
  const MapMedian mm = map_and_median_models(mp);
  CHECK(mm.map == mp.entries()[best].model);
  for (int k = 0; k < 4; ++k) CHECK(mm.median.includes(k) == (inc[static_cast<std::size_t>(k)] > 0.5));
  CHECK(mp.ranking().front() == best);
}

TEST_CASE("MC3 converges to the exhaustive posterior on 45 models") {
  Dataset raw = simulate_logistic(200, 1, 8, {0.0, 0.0});
  // response depends on log x of a positive covariate
  Eigen::MatrixXd x = raw.x_raw().array().abs() + 0.2;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif;
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-0.8 * std::log(x(i, 0)))) ? 1.0 : 0.0;
  const Dataset ds(y, x, 1.0, FamilyLink::make(Family::bernoulli, Link::logit));
  EvidenceSpec spec;
  spec.prior = HyperPrior::zellner_siow(200);
  const ModelEvaluator ev(ds, spec);
  const ModelPosterior ex = exhaustive_posterior(ev, SpaceKind::fractional_polynomial);
  REQUIRE(ex.entries().size() == 45);
  const long iters = 100000;
  const Mc3Result r = mc3_search(ev, SpaceKind::fractional_polynomial, iters, 99);
  std::map<ModelIndex, long> visits;
  long total_visits = 0;
  for (const auto& e : r.posterior.entries()) {
    visits[e.model] = e.visits;
    total_visits += e.visits;
  }
  CHECK(total_visits == iters);
  double tv_freq = 0.0, tv_renorm = 0.0;
  for (std::size_t i = 0; i < ex.entries().size(); ++i) {
    const ModelIndex& m = ex.entries()[i].model;
    tv_freq += std::abs(static_cast<double>(visits[m]) / static_cast<double>(iters) - ex.probability(i));
  }
  for (std::size_t i = 0; i < r.posterior.entries().size(); ++i) {
    const auto& m = r.posterior.entries()[i].model;
    const auto it = std::find_if(ex.entries().begin(), ex.entries().end(), [&](const ModelEntry& e) { return e.model == m; });
    tv_renorm += std::abs(r.posterior.probability(i) - ex.probability(static_cast<std::size_t>(it - ex.entries().begin())));
  }
  MESSAGE("TV of the returned posterior " << 0.5 * tv_renorm << ", of raw visit frequencies " << 0.5 * tv_freq);
  CHECK(0.5 * tv_renorm <= 0.01);
  // raw frequencies carry Monte Carlo error of about 0.01 at this length;
  // a wrong proposal ratio would bias them far beyond this
  CHECK(0.5 * tv_freq <= 0.03);
  CHECK(r.acceptance_rate > 0.0);
  // determinism
  const Mc3Result again = mc3_search(ev, SpaceKind::fractional_polynomial, 2000, 99);
  const Mc3Result again2 = mc3_search(ev, SpaceKind::fractional_polynomial, 2000, 99);
  CHECK(again.acceptance_rate == again2.acceptance_rate);
  REQUIRE(again.posterior.entries().size() == again2.posterior.entries().size());
  for (std::size_t i = 0; i < again.posterior.entries().size(); ++i) {
    CHECK(again.posterior.entries()[i].visits == again2.posterior.entries()[i].visits);
  }
}

TEST_CASE("failed models are reported, not fatal") {
  // x1 separates the response perfectly, so AIC cannot be computed with it
  Eigen::MatrixXd x(12, 2);
  Eigen::VectorXd y(12);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> norm;
  for (int i = 0; i < 12; ++i) {
    y[i] = i < 6 ? 0.0 : 1.0;
    x(i, 0) = i;
    x(i, 1) = norm(rng);
  }
  const Dataset ds(y, x, 1.0, FamilyLink::make(Family::bernoulli, Link::logit));
  EvidenceSpec spec;
  spec.criterion = Criterion::aic;
  const ModelPosterior mp = exhaustive_posterior(ModelEvaluator(ds, spec), SpaceKind::variable_selection);
  CHECK(mp.failures().size() == 2);
  CHECK(mp.entries().size() == 2);
  double total = 0.0;
  for (std::size_t i = 0; i < mp.entries().size(); ++i) total += mp.probability(i);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("criteria: AIC without model prior, BIC with") {
  const Dataset ds = simulate_logistic(100, 3, 12, {0.1, 1, 0, 0.5});
  const ModelIndex g = ModelIndex::variable_selection({true, false, true});
  const GlmProblem pr(ds, build_design(ds, g));
  const InfoCriteria ic = info_criteria(pr);
  EvidenceSpec aic;
  aic.criterion = Criterion::aic;
  EvidenceSpec bic;
  bic.criterion = Criterion::bic;
  const ModelEvaluation ea = ModelEvaluator(ds, aic).evaluate(g);
  const ModelEvaluation eb = ModelEvaluator(ds, bic).evaluate(g);
  CHECK(ea.log_marglik + ea.log_prior == doctest::Approx(ic.log_weight_aic));
  CHECK(eb.log_marglik + eb.log_prior == doctest::Approx(ic.log_weight_bic + model_log_prior(g)));
  CHECK(parse_criterion("bic") == Criterion::bic);
  CHECK_THROWS(parse_criterion("dic"));
}

}  // TEST_SUITE
