// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/search.hpp"

#include "hyperg/errors.hpp"
#include "hyperg/glm.hpp"
#include "hyperg/numerics.hpp"

#include <boost/math/quadrature/sinh_sinh.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace hyperg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNegligibleWeight = 1e-10;

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

HyperPrior sampling_prior(const EvidenceSpec& spec) {
  switch (spec.criterion) {
    case Criterion::bayes:
      return *spec.prior;
    case Criterion::eb:
      return HyperPrior::empirical_bayes();
    default:
      throw UnsupportedError("posterior sampling needs the bayes or eb criterion");
  }
}

// Weighted quantile of values with weights summing to one.
double weighted_quantile(std::vector<std::pair<double, double>>& vw, double q) {
  std::sort(vw.begin(), vw.end());
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (acc >= q) return v;
  }
  return vw.back().first;
}

// Posterior mean of h(beta0) in the intercept-only model.
double null_posterior_mean_response(const GlmProblem& problem) {
  const FamilyLink& fl = problem.family_link();
  const GaussApprox fit = iwls_gauss_approx(problem, std::numeric_limits<double>::infinity());
  const double mode = fit.mean()[0];
  const double sd = 1.0 / std::sqrt(fit.precision()(0, 0));
  Eigen::VectorXd b(1);
  b[0] = mode;
  const double peak = log_likelihood(problem, b);
  auto density = [&](double u) {
    Eigen::VectorXd bb(1);
    bb[0] = mode + sd * u;
    try {
      return std::exp(log_likelihood(problem, bb) - peak);
    } catch (const NumericalError&) {
      return 0.0;
    }
  };
  boost::math::quadrature::sinh_sinh<double> integrator(12);
  const double mass = integrator.integrate(density, 1e-10);
  const double moment = integrator.integrate(
      [&](double u) {
        const double d = density(u);
        return d > 0.0 ? d * fl.response(mode + sd * u) : 0.0;
      },
      1e-10);
  return moment / mass;
}

struct WeightedModels {
  std::vector<std::size_t> entry;
  std::vector<double> weight;
};

// Top-k entries by posterior probability, with weights renormalized over them.
WeightedModels top_models(const ModelPosterior& mp, int top_k, bool skip_null) {
  if (top_k < 1) throw DomainError("top_k must be at least 1");
  WeightedModels out;
  for (std::size_t i : mp.ranking()) {
    if (static_cast<int>(out.entry.size()) >= top_k) break;
    if (skip_null && mp.entries()[i].model.size() == 0) continue;
    out.entry.push_back(i);
    out.weight.push_back(mp.log_probability(i));
  }
  if (out.entry.empty()) throw DomainError("no model available for averaging");
  const double lse = log_sum_exp(out.weight);
  for (double& w : out.weight) w = std::exp(w - lse);
  return out;
}

void renormalize(std::vector<double>& w) {
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(s > 0.0)) throw NumericalError("no model could be sampled");
  for (double& v : w) v /= s;
}

}  // namespace

Criterion parse_criterion(std::string_view text) {
  if (text == "bayes") return Criterion::bayes;
  if (text == "eb") return Criterion::eb;
  if (text == "aic") return Criterion::aic;
  if (text == "bic") return Criterion::bic;
  throw ConfigError("unknown criterion '" + std::string(text) + "' (bayes, eb, aic, bic)");
}

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::bayes: return "bayes";
    case Criterion::eb: return "eb";
    case Criterion::aic: return "aic";
    case Criterion::bic: return "bic";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ModelEvaluator

ModelEvaluator::ModelEvaluator(const Dataset& ds, EvidenceSpec spec) : ds_(ds), spec_(std::move(spec)) {
  if (spec_.criterion == Criterion::bayes) {
    if (!spec_.prior || spec_.prior->is_empirical_bayes()) {
      throw ConfigError("the bayes criterion needs a proper hyperprior");
    }
  }
  if (spec_.ila.order == LaplaceOrder::sixth && !ds.family_link().canonical()) {
    throw ConfigError("order 6 requires a canonical link");
  }
  if (spec_.criterion == Criterion::bayes || spec_.criterion == Criterion::eb) {
    null_value_ = null_model_marglik(ds);
  }
}

ModelEvaluation ModelEvaluator::evaluate(const ModelIndex& model) const {
  ModelEvaluation ev;
  try {
    ev.log_prior = model_log_prior(model);
    const bool null = model.size() == 0;
    switch (spec_.criterion) {
      case Criterion::bayes: {
        if (null) {
          ev.log_marglik = null_value_;
        } else {
          const GlmProblem problem(ds_, build_design(ds_, model));
          const MargLikResult r = log_marglik(problem, *spec_.prior, spec_.ila);
          ev.log_marglik = r.log_evidence;
          ev.fell_back = r.fell_back;
        }
        break;
      }
      case Criterion::eb: {
        if (null) {
          ev.log_marglik = null_value_;
        } else {
          const GlmProblem problem(ds_, build_design(ds_, model));
          ev.log_marglik = eb_optimize(problem, spec_.ila.order, spec_.ila.bracket_cap).log_marglik;
        }
        break;
      }
      case Criterion::aic:
      case Criterion::bic: {
        const GlmProblem problem(ds_, build_design(ds_, model));
        const InfoCriteria ic = info_criteria(problem);
        ev.log_marglik = spec_.criterion == Criterion::aic ? ic.log_weight_aic : ic.log_weight_bic;
        if (spec_.criterion == Criterion::aic) ev.log_prior = 0.0;
        break;
      }
    }
    if (!std::isfinite(ev.log_marglik)) throw NumericalError("non-finite evidence");
  } catch (const Error& e) {
    ev.failed = true;
    ev.error = e.what();
  }
  return ev;
}

// ---------------------------------------------------------------------------
// ModelPosterior

ModelPosterior::ModelPosterior(std::vector<ModelEntry> entries, SearchMethod method,
                               std::vector<ModelFailure> failures)
    : entries_(std::move(entries)), failures_(std::move(failures)), method_(method) {
  if (entries_.empty()) throw NumericalError("no model could be evaluated");
  std::sort(entries_.begin(), entries_.end(),
            [](const ModelEntry& a, const ModelEntry& b) { return a.model < b.model; });
  std::sort(failures_.begin(), failures_.end(),
            [](const ModelFailure& a, const ModelFailure& b) { return a.model < b.model; });
  std::vector<double> terms(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    terms[i] = entries_[i].log_marglik + entries_[i].log_prior;
  }
  log_normalizer_ = log_sum_exp(terms);
}

double ModelPosterior::log_probability(std::size_t i) const {
  return entries_.at(i).log_marglik + entries_[i].log_prior - log_normalizer_;
}

double ModelPosterior::probability(std::size_t i) const { return std::exp(log_probability(i)); }

std::vector<std::size_t> ModelPosterior::ranking() const {
  std::vector<std::size_t> idx(entries_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [this](std::size_t a, std::size_t b) {
    return log_probability(a) > log_probability(b);
  });
  return idx;
}

int ModelPosterior::num_covariates() const { return entries_.front().model.num_covariates(); }

SpaceKind ModelPosterior::kind() const { return entries_.front().model.kind(); }

// ---------------------------------------------------------------------------
// Searches

ModelPosterior exhaustive_posterior(const ModelEvaluator& evaluator, SpaceKind kind, int threads) {
  const std::vector<ModelIndex> models = enumerate_models(kind, evaluator.dataset().m());
  std::vector<ModelEvaluation> evals(models.size());
  parallel_for(models.size(), threads, [&](std::size_t i) { evals[i] = evaluator.evaluate(models[i]); });
  std::vector<ModelEntry> entries;
  std::vector<ModelFailure> failures;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (evals[i].failed) {
      failures.push_back({models[i], evals[i].error});
    } else {
      entries.push_back({models[i], evals[i].log_marglik, evals[i].log_prior, evals[i].fell_back});
    }
  }
  return ModelPosterior(std::move(entries), SearchMethod::exhaustive, std::move(failures));
}

Mc3Result mc3_search(const ModelEvaluator& evaluator, SpaceKind kind, long iterations,
                     std::uint64_t seed) {
  if (iterations < 1) throw ConfigError("mc3 needs at least one iteration");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::unordered_map<ModelIndex, ModelEvaluation, ModelIndexHash> cache;
  std::unordered_map<ModelIndex, long, ModelIndexHash> visits;

  auto lookup = [&](const ModelIndex& m) -> const ModelEvaluation& {
    auto it = cache.find(m);
    if (it == cache.end()) it = cache.emplace(m, evaluator.evaluate(m)).first;
    return it->second;
  };

  ModelIndex current = ModelIndex::null_model(kind, evaluator.dataset().m());
  const ModelEvaluation* cur_eval = &lookup(current);
  if (cur_eval->failed) throw NumericalError("null model evaluation failed: " + cur_eval->error);
  long accepted = 0;
  for (long it = 0; it < iterations; ++it) {
    const NeighborProposal prop = propose_neighbor(current, rng);
    const ModelEvaluation& ev = lookup(prop.model);
    const double u = unif(rng);
    if (!ev.failed) {
      const double log_alpha = (ev.log_marglik + ev.log_prior) -
                               (cur_eval->log_marglik + cur_eval->log_prior) +
                               prop.log_proposal_ratio;
      if (std::log(u) < log_alpha) {
        current = prop.model;
        cur_eval = &ev;
        ++accepted;
      }
    }
    ++visits[current];
  }

  std::vector<ModelEntry> entries;
  std::vector<ModelFailure> failures;
  for (const auto& [model, ev] : cache) {
    if (ev.failed) {
      failures.push_back({model, ev.error});
    } else {
      const auto v = visits.find(model);
      entries.push_back({model, ev.log_marglik, ev.log_prior, ev.fell_back,
                         v == visits.end() ? 0 : v->second});
    }
  }
  return {ModelPosterior(std::move(entries), SearchMethod::mc3, std::move(failures)),
          static_cast<double>(accepted) / static_cast<double>(iterations), iterations};
}

// ---------------------------------------------------------------------------
// Summaries

std::vector<double> inclusion_probabilities(const ModelPosterior& mp) {
  std::vector<double> out(static_cast<std::size_t>(mp.num_covariates()), 0.0);
  for (std::size_t i = 0; i < mp.entries().size(); ++i) {
    const double p = mp.probability(i);
    for (int k = 0; k < mp.num_covariates(); ++k) {
      if (mp.entries()[i].model.includes(k)) out[static_cast<std::size_t>(k)] += p;
    }
  }
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);  // rounding in the sum
  return out;
}

MapMedian map_and_median_models(const ModelPosterior& mp) {
  const ModelIndex map = mp.entries()[mp.ranking().front()].model;
  const std::vector<double> incl = inclusion_probabilities(mp);
  const int m = mp.num_covariates();
  if (mp.kind() == SpaceKind::variable_selection) {
    std::vector<bool> bits(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) bits[static_cast<std::size_t>(k)] = incl[static_cast<std::size_t>(k)] > 0.5;
    return {map, ModelIndex::variable_selection(std::move(bits))};
  }
  std::vector<FpTuple> tuples(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    if (!(incl[static_cast<std::size_t>(k)] > 0.5)) continue;
    std::vector<double> mass(kFpTuplesPerCovariate, 0.0);
    for (std::size_t i = 0; i < mp.entries().size(); ++i) {
      mass[static_cast<std::size_t>(mp.entries()[i].model.tuples()[static_cast<std::size_t>(k)].ordinal())] +=
          mp.probability(i);
    }
    const auto best = std::max_element(mass.begin() + 1, mass.end()) - mass.begin();
    tuples[static_cast<std::size_t>(k)] = FpTuple::from_ordinal(static_cast<int>(best));
  }
  return {map, ModelIndex::fractional_polynomial(std::move(tuples))};
}

AveragedFit model_average_fit(const ModelEvaluator& evaluator, const ModelPosterior& mp,
                              int top_k, const ChainConfig& cfg) {
  const Dataset& ds = evaluator.dataset();
  const WeightedModels top = top_models(mp, top_k, false);
  const bool sample = evaluator.spec().criterion == Criterion::bayes ||
                      evaluator.spec().criterion == Criterion::eb;
  AveragedFit out;
  out.fitted = Eigen::VectorXd::Zero(ds.n());
  std::vector<Eigen::VectorXd> fits;
  for (std::size_t j = 0; j < top.entry.size(); ++j) {
    const ModelIndex& model = mp.entries()[top.entry[j]].model;
    try {
      const GlmProblem problem(ds, build_design(ds, model));
      const FamilyLink& fl = problem.family_link();
      Eigen::VectorXd fit = Eigen::VectorXd::Zero(ds.n());
      if (model.size() == 0) {
        fit.setConstant(null_posterior_mean_response(problem));
      } else if (!sample) {
        const GaussApprox ml = iwls_gauss_approx(problem, std::numeric_limits<double>::infinity());
        const Eigen::VectorXd eta = problem.augmented() * ml.mean();
        for (Eigen::Index i = 0; i < ds.n(); ++i) fit[i] = fl.response(eta[i]);
      } else {
        const SamplerSetup setup = prepare_sampler(problem, sampling_prior(evaluator.spec()),
                                                   evaluator.spec().ila);
        const PosteriorDraws draws = run_chain(problem, setup, cfg);
        const Eigen::MatrixXd eta =
            problem.augmented() * draws.samples.leftCols(problem.dim()).transpose();
        for (Eigen::Index i = 0; i < ds.n(); ++i) {
          double acc = 0.0;
          for (Eigen::Index s = 0; s < eta.cols(); ++s) acc += fl.response(eta(i, s));
          fit[i] = acc / static_cast<double>(eta.cols());
        }
      }
      fits.push_back(std::move(fit));
      out.models.push_back(model);
      out.weights.push_back(top.weight[j]);
    } catch (const Error&) {
      // skipped; weights renormalized below
    }
  }
  renormalize(out.weights);
  for (std::size_t j = 0; j < fits.size(); ++j) out.fitted += out.weights[j] * fits[j];
  return out;
}

EffectCurve fp_effect_curve(const ModelEvaluator& evaluator, const ModelPosterior& mp, int k,
                            const Eigen::VectorXd& grid, const ChainConfig& cfg) {
  if (mp.kind() != SpaceKind::fractional_polynomial) {
    throw DomainError("effect curves need a fractional polynomial posterior");
  }
  const Dataset& ds = evaluator.dataset();
  if (k < 0 || k >= ds.m()) throw DomainError("covariate index out of range");
  const ModelIndex map = map_and_median_models(mp).map;
  const auto ku = static_cast<std::size_t>(k);
  const std::string& name = ds.covariate_names()[ku];
  if (!map.includes(k)) {
    throw DomainError("covariate " + name +
                      " is not in the MAP model; see the inclusion probabilities instead");
  }
  if (grid.size() < 1) throw DomainError("effect curve grid is empty");
  const HyperPrior prior = sampling_prior(evaluator.spec());
  const Eigen::VectorXd grid_shifted = grid.array() + ds.covariate_shift()[k];

  int offset = 1;
  for (int j = 0; j < k; ++j) offset += map.tuples()[static_cast<std::size_t>(j)].degree();

  // Posterior weights of the 44 variants.
  std::vector<ModelIndex> variants;
  std::vector<double> logw;
  for (int ord = 1; ord < kFpTuplesPerCovariate; ++ord) {
    std::vector<FpTuple> tuples = map.tuples();
    tuples[ku] = FpTuple::from_ordinal(ord);
    ModelIndex model = ModelIndex::fractional_polynomial(std::move(tuples));
    const ModelEvaluation ev = evaluator.evaluate(model);
    if (ev.failed) continue;
    variants.push_back(std::move(model));
    logw.push_back(ev.log_marglik + ev.log_prior);
  }
  if (variants.empty()) throw NumericalError("no variant model could be evaluated");
  const double lse = log_sum_exp(logw);

  EffectCurve out;
  out.x = grid;
  const Eigen::Index ng = grid.size();
  std::vector<Eigen::VectorXd> curves;
  std::vector<double> curve_weights;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const double w = std::exp(logw[v] - lse);
    if (w < kNegligibleWeight) continue;
    try {
      const GlmProblem problem(ds, build_design(ds, variants[v]));
      const FpTuple& tuple = variants[v].tuples()[ku];
      const std::vector<Eigen::VectorXd> data_cols = fp_transform(ds.x_raw().col(k), tuple, name);
      const std::vector<Eigen::VectorXd> grid_cols = fp_transform(grid_shifted, tuple, name);
      Eigen::MatrixXd basis(ng, tuple.degree());
      for (int c = 0; c < tuple.degree(); ++c) {
        const double mean = ds.weights().dot(data_cols[static_cast<std::size_t>(c)]) / ds.weights().sum();
        basis.col(c) = grid_cols[static_cast<std::size_t>(c)].array() - mean;
      }
      const SamplerSetup setup = prepare_sampler(problem, prior, evaluator.spec().ila);
      const PosteriorDraws draws = run_chain(problem, setup, cfg);
      const Eigen::MatrixXd coef = draws.samples.middleCols(offset, tuple.degree());
      const Eigen::MatrixXd vals = basis * coef.transpose();  // ng x draws
      for (Eigen::Index s = 0; s < vals.cols(); ++s) {
        curves.push_back(vals.col(s));
        curve_weights.push_back(w / static_cast<double>(vals.cols()));
      }
      out.models.push_back(variants[v]);
      out.weights.push_back(w);
    } catch (const Error&) {
    }
  }
  renormalize(out.weights);
  renormalize(curve_weights);

  out.mean = Eigen::VectorXd::Zero(ng);
  for (std::size_t s = 0; s < curves.size(); ++s) out.mean += curve_weights[s] * curves[s];
  Eigen::VectorXd sd = Eigen::VectorXd::Zero(ng);
  for (std::size_t s = 0; s < curves.size(); ++s) {
    sd += curve_weights[s] * (curves[s] - out.mean).array().square().matrix();
  }
  sd = sd.array().sqrt();

  out.lower.resize(ng);
  out.upper.resize(ng);
  std::vector<std::pair<double, double>> vw(curves.size());
  for (Eigen::Index g = 0; g < ng; ++g) {
    for (std::size_t s = 0; s < curves.size(); ++s) vw[s] = {curves[s][g], curve_weights[s]};
    out.lower[g] = weighted_quantile(vw, 0.025);
    out.upper[g] = weighted_quantile(vw, 0.975);
  }
  for (std::size_t s = 0; s < curves.size(); ++s) {
    double mx = 0.0;
    for (Eigen::Index g = 0; g < ng; ++g) {
      if (sd[g] > 0.0) mx = std::max(mx, std::abs(curves[s][g] - out.mean[g]) / sd[g]);
    }
    vw[s] = {mx, curve_weights[s]};
  }
  const double crit = weighted_quantile(vw, 0.95);
  out.simultaneous_lower = out.mean - crit * sd;
  out.simultaneous_upper = out.mean + crit * sd;
  return out;
}

GPosteriorSummary g_posterior_summary(const ModelEvaluator& evaluator, const ModelPosterior& mp,
                                      int top_k, const ChainConfig& cfg, int threads) {
  if (evaluator.spec().criterion != Criterion::bayes) {
    throw UnsupportedError("the g posterior needs a proper hyperprior");
  }
  const Dataset& ds = evaluator.dataset();
  const WeightedModels top = top_models(mp, top_k, true);
  std::vector<std::optional<Eigen::VectorXd>> zdraws(top.entry.size());
  parallel_for(top.entry.size(), threads, [&](std::size_t j) {
    try {
      const GlmProblem problem(ds, build_design(ds, mp.entries()[top.entry[j]].model));
      const SamplerSetup setup = prepare_sampler(problem, *evaluator.spec().prior, evaluator.spec().ila);
      const PosteriorDraws draws = run_chain(problem, setup, cfg);
      zdraws[j] = draws.samples.col(problem.dim());
    } catch (const Error&) {
    }
  });

  GPosteriorSummary out;
  for (std::size_t j = 0; j < top.entry.size(); ++j) {
    if (!zdraws[j]) continue;
    out.models.push_back(mp.entries()[top.entry[j]].model);
    out.model_weights.push_back(top.weight[j]);
  }
  renormalize(out.model_weights);
  const double log_n = std::log(static_cast<double>(ds.n()));
  out.mean_g = out.prob_g_below_n = out.mean_z = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < top.entry.size(); ++j) {
    if (!zdraws[j]) continue;
    const Eigen::VectorXd& z = *zdraws[j];
    const double w = out.model_weights[used++] / static_cast<double>(z.size());
    for (Eigen::Index s = 0; s < z.size(); ++s) {
      out.z.push_back(z[s]);
      out.weights.push_back(w);
      out.mean_g += w * std::exp(z[s]);
      out.mean_z += w * z[s];
      if (z[s] < log_n) out.prob_g_below_n += w;
    }
  }
  return out;
}

}  // namespace hyperg
