// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/glm.hpp"

#include <Eigen/Dense>

namespace hyperg {

// Closed forms for gaussian-identity with known phi. Log evidences carry
// the same data constant as the Laplace path: they integrate
// exp(-sum w (y - mu)^2 / (2 phi)) over the coefficients, so each includes
// the factor sqrt(2 pi phi / sum w) from the flat intercept.

struct SumsOfSquares {
  double sse;
  double ssr;
  Eigen::VectorXd beta_hat;  // least-squares slopes on the centered design
  double y_bar;
};

SumsOfSquares sums_of_squares(const GlmProblem& problem);

struct ConjugatePosterior {
  double intercept_mean;
  double intercept_variance;
  Eigen::VectorXd slope_mean;
  Eigen::MatrixXd slope_covariance;
};

ConjugatePosterior cond_posterior_params(const GlmProblem& problem, double g);

/// log f(y | g, gamma). g = 0 gives the intercept-only value.
double log_cond_marglik_exact(const GlmProblem& problem, double g);

/// log f(y | gamma) under the incomplete inverse-gamma prior IIG(a, b).
double log_marglik_exact_iig(const GlmProblem& problem, double a, double b);

/// Posterior CDF of z = log g under IIG(a, b): g + 1 is inverse-gamma(a_g,
/// b_g) truncated to g > 0.
double iig_posterior_z_cdf(const GlmProblem& problem, double a, double b, double z);

/// Log posterior density of z under IIG(a, b).
double iig_posterior_z_log_density(const GlmProblem& problem, double a, double b, double z);

/// E(g | y) under IIG(a, b); +infinity when a + p/2 <= 1.
double iig_posterior_mean_g(const GlmProblem& problem, double a, double b);

/// Updated parameters (a + p/2, SSR/(2 phi) + b).
std::pair<double, double> iig_updated_parameters(const GlmProblem& problem, double a, double b);

}  // namespace hyperg
