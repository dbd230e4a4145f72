// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/glm.hpp"
#include "hyperg/hyperprior.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace hyperg {

enum class LaplaceOrder { second = 2, sixth = 6 };

/// sixth for canonical links, second otherwise.
LaplaceOrder default_order(const FamilyLink& fl);

struct IlaOptions {
  LaplaceOrder order = LaplaceOrder::sixth;
  int nodes = 20;
  double bracket_cap = 30.0;
};

struct CondMargLik {
  double log_value;
  LaplaceOrder order_used;
  bool fell_back;  // sixth-order factor was non-positive
  GaussApprox approx;
};

/// Laplace approximation of log f(y | g, gamma), optionally times the
/// sixth-order correction factor. The likelihood kernel omits data-only
/// terms, so for gaussian-identity the value is the exact conditional
/// evidence times sqrt(2 pi phi / sum w).
/// `start` seeds IWLS; it only affects speed when the log joint is concave.
CondMargLik cond_marglik(const GlmProblem& problem, double g, LaplaceOrder order,
                         const Eigen::VectorXd* start = nullptr);
double cond_log_marglik(const GlmProblem& problem, double g, LaplaceOrder order);

/// cond_log_marglik(e^z) + log prior density of z.
double log_joint_z(const GlmProblem& problem, const HyperPrior& hp, double z, LaplaceOrder order);

struct ZMode {
  double z_star;
  double sigma_star;
  double log_joint;
};

ZMode find_mode_z(const GlmProblem& problem, const HyperPrior& hp, LaplaceOrder order,
                  double bracket_cap = 30.0);

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights for the weight function exp(-t^2), 1 <= n <= 64.
GaussHermiteRule gauss_hermite_nodes(int n);

struct MargLikResult {
  double log_evidence = 0.0;
  double z_star = 0.0;
  double sigma_star = 0.0;
  double log_joint_at_mode = 0.0;
  std::vector<std::pair<double, double>> grid;  // (z_j, log f(z_j, y)), sorted by z
  LaplaceOrder order = LaplaceOrder::second;
  int n_nodes = 0;
  bool fell_back = false;
  bool null_model = false;
};

/// Integrated Laplace approximation of log f(y | gamma) under a proper
/// hyperprior. Models without covariates return null_model_marglik.
MargLikResult log_marglik(const GlmProblem& problem, const HyperPrior& hp,
                          const IlaOptions& options = {});

/// log of the integral of exp(log-likelihood) over the intercept (flat prior).
/// Closed form for gaussian-identity, adaptive quadrature otherwise.
double null_model_marglik(const Dataset& ds);
double null_model_marglik(const GlmProblem& problem);

struct EbResult {
  double g_hat;
  double log_marglik;  // maximized conditional log evidence
  bool at_boundary;    // maximum at g -> 0; value is then the null model's
};

EbResult eb_optimize(const GlmProblem& problem, LaplaceOrder order, double bracket_cap = 30.0);

struct InfoCriteria {
  double max_log_likelihood;
  double aic;
  double bic;
  double log_weight_aic;
  double log_weight_bic;
};

/// AIC/BIC from the maximum likelihood fit. Throws NumericalError when the
/// fit diverges (e.g. separation in binary data).
InfoCriteria info_criteria(const GlmProblem& problem);

}  // namespace hyperg
