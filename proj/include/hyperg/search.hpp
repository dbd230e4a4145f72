// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/dataset.hpp"
#include "hyperg/hyperprior.hpp"
#include "hyperg/laplace.hpp"
#include "hyperg/model_space.hpp"
#include "hyperg/sampler.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hyperg {

/// bayes: ILA evidence; eb: maximized conditional evidence; bic:
/// exp(-BIC/2) in place of the evidence. All three are combined with the
/// model prior. aic: Akaike weights exp(-AIC/2) alone, without model prior.
enum class Criterion { bayes, eb, aic, bic };

Criterion parse_criterion(std::string_view text);
std::string criterion_name(Criterion c);

/// Which evidence surrogate ranks the models.
struct EvidenceSpec {
  Criterion criterion = Criterion::bayes;
  std::optional<HyperPrior> prior;  // required for bayes
  IlaOptions ila;
};

struct ModelEvaluation {
  double log_marglik = 0.0;  // evidence or its surrogate
  double log_prior = 0.0;
  bool fell_back = false;    // sixth-order factor was non-positive somewhere
  bool failed = false;
  std::string error;
};

/// Evaluates models of one dataset under one EvidenceSpec. Pure and safe to
/// share between threads.
class ModelEvaluator {
 public:
  ModelEvaluator(const Dataset& ds, EvidenceSpec spec);
  ModelEvaluation evaluate(const ModelIndex& model) const;
  const Dataset& dataset() const { return ds_; }
  const EvidenceSpec& spec() const { return spec_; }

 private:
  const Dataset& ds_;
  EvidenceSpec spec_;
  double null_value_ = 0.0;
};

enum class SearchMethod { exhaustive, mc3 };

struct ModelEntry {
  ModelIndex model;
  double log_marglik;
  double log_prior;
  bool fell_back;
  long visits = 0;  // MC3 only
};

struct ModelFailure {
  ModelIndex model;
  std::string error;
};

/// Posterior over a set of models, normalized over the entries it holds.
/// Entries are kept in canonical model order.
class ModelPosterior {
 public:
  ModelPosterior(std::vector<ModelEntry> entries, SearchMethod method,
                 std::vector<ModelFailure> failures = {});

  const std::vector<ModelEntry>& entries() const { return entries_; }
  const std::vector<ModelFailure>& failures() const { return failures_; }
  SearchMethod method() const { return method_; }
  double log_normalizer() const { return log_normalizer_; }
  std::size_t visited_count() const { return entries_.size(); }

  double log_probability(std::size_t i) const;
  double probability(std::size_t i) const;
  /// Entry indices by decreasing posterior probability (ties in canonical order).
  std::vector<std::size_t> ranking() const;
  int num_covariates() const;
  SpaceKind kind() const;

 private:
  std::vector<ModelEntry> entries_;
  std::vector<ModelFailure> failures_;
  SearchMethod method_;
  double log_normalizer_ = 0.0;
};

ModelPosterior exhaustive_posterior(const ModelEvaluator& evaluator, SpaceKind kind,
                                    int threads = 1);

struct Mc3Result {
  ModelPosterior posterior;
  double acceptance_rate;
  long iterations;
};

/// MC3 from the null model over neighbor moves; evidences are cached, the
/// posterior is renormalized over the visited set.
Mc3Result mc3_search(const ModelEvaluator& evaluator, SpaceKind kind, long iterations,
                     std::uint64_t seed);

/// Posterior inclusion probability of each covariate.
std::vector<double> inclusion_probabilities(const ModelPosterior& mp);

struct MapMedian {
  ModelIndex map;
  ModelIndex median;
};

/// MAP model and median-probability model (inclusion probability strictly
/// above 0.5; FP covariates take their highest-probability tuple).
MapMedian map_and_median_models(const ModelPosterior& mp);

struct AveragedFit {
  Eigen::VectorXd fitted;          // model-averaged E(mu_i | y)
  std::vector<ModelIndex> models;  // models actually used
  std::vector<double> weights;     // renormalized, sum to 1
};

/// Posterior-mean fitted means of the top_k models, averaged with
/// renormalized posterior probabilities. AIC/BIC use the ML fit per model.
AveragedFit model_average_fit(const ModelEvaluator& evaluator, const ModelPosterior& mp,
                              int top_k, const ChainConfig& cfg);

struct EffectCurve {
  Eigen::VectorXd x;  // grid on the original covariate scale
  Eigen::VectorXd mean;
  Eigen::VectorXd lower;  // pointwise 2.5%
  Eigen::VectorXd upper;  // pointwise 97.5%
  Eigen::VectorXd simultaneous_lower;
  Eigen::VectorXd simultaneous_upper;
  std::vector<ModelIndex> models;
  std::vector<double> weights;
};

/// Effect of covariate k (0-based), averaged over its 44 non-empty FP
/// tuples with every other covariate fixed at its MAP configuration. The
/// curve is centered to mean zero over the data locations.
EffectCurve fp_effect_curve(const ModelEvaluator& evaluator, const ModelPosterior& mp, int k,
                            const Eigen::VectorXd& grid, const ChainConfig& cfg);

struct GPosteriorSummary {
  std::vector<double> z;        // pooled z draws
  std::vector<double> weights;  // per draw, sum to 1
  double mean_g;
  double prob_g_below_n;
  double mean_z;
  std::vector<ModelIndex> models;
  std::vector<double> model_weights;
};

/// Pools z draws of the top_k models, weighted by renormalized posterior
/// probabilities. Needs a proper hyperprior.
GPosteriorSummary g_posterior_summary(const ModelEvaluator& evaluator, const ModelPosterior& mp,
                                      int top_k, const ChainConfig& cfg, int threads = 1);

}  // namespace hyperg
