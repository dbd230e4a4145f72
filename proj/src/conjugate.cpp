// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/conjugate.hpp"

#include "hyperg/errors.hpp"
#include "hyperg/hyperprior.hpp"

#include <cmath>
#include <limits>

namespace hyperg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_conjugate(const GlmProblem& problem) {
  const FamilyLink& fl = problem.family_link();
  if (fl.family() != Family::gaussian || fl.link() != Link::identity) {
    throw UnsupportedError("closed-form evidence needs the gaussian-identity model");
  }
}

double intercept_constant(const GlmProblem& problem) {
  return 0.5 * (kLog2Pi + std::log(problem.phi() / problem.weights().sum()));
}

}  // namespace

SumsOfSquares sums_of_squares(const GlmProblem& problem) {
  require_conjugate(problem);
  const Eigen::VectorXd& y = problem.y();
  const Eigen::VectorXd& w = problem.weights();
  SumsOfSquares out;
  out.y_bar = w.dot(y) / w.sum();
  const Eigen::VectorXd r = (y.array() - out.y_bar).matrix();
  const double sst = (w.array() * r.array().square()).sum();
  if (problem.p() == 0) {
    out.sse = sst;
    out.ssr = 0.0;
    out.beta_hat.resize(0);
    return out;
  }
  const Eigen::MatrixXd& x = problem.design().x_centered;
  Eigen::LLT<Eigen::MatrixXd> llt(problem.cross_product());
  if (llt.info() != Eigen::Success) throw NumericalError("X'WX is singular");
  out.beta_hat = llt.solve(x.transpose() * (w.array() * r.array()).matrix());
  const Eigen::VectorXd resid = r - x * out.beta_hat;
  out.sse = (w.array() * resid.array().square()).sum();
  out.ssr = out.beta_hat.dot(problem.cross_product() * out.beta_hat);
  return out;
}

ConjugatePosterior cond_posterior_params(const GlmProblem& problem, double g) {
  if (!(g >= 0.0)) throw DomainError("g must be nonnegative");
  const SumsOfSquares ss = sums_of_squares(problem);
  const double shrink = std::isinf(g) ? 1.0 : g / (g + 1.0);
  ConjugatePosterior out;
  out.intercept_mean = ss.y_bar;
  out.intercept_variance = problem.phi() / problem.weights().sum();
  out.slope_mean = shrink * ss.beta_hat;
  if (problem.p() > 0) {
    out.slope_covariance = shrink * problem.phi() * problem.cross_product().inverse();
  }
  return out;
}

double log_cond_marglik_exact(const GlmProblem& problem, double g) {
  if (!(g >= 0.0) || std::isinf(g)) throw DomainError("g must be nonnegative and finite");
  const SumsOfSquares ss = sums_of_squares(problem);
  const double phi = problem.phi();
  return -0.5 * problem.p() * std::log1p(g) - ss.ssr / (2.0 * phi * (g + 1.0)) -
         ss.sse / (2.0 * phi) + intercept_constant(problem);
}

std::pair<double, double> iig_updated_parameters(const GlmProblem& problem, double a, double b) {
  const SumsOfSquares ss = sums_of_squares(problem);
  return {a + 0.5 * problem.p(), ss.ssr / (2.0 * problem.phi()) + b};
}

double log_marglik_exact_iig(const GlmProblem& problem, double a, double b) {
  const SumsOfSquares ss = sums_of_squares(problem);
  const auto [ag, bg] = iig_updated_parameters(problem, a, b);
  return log_iig_normalizer(a, b) - log_iig_normalizer(ag, bg) - ss.sse / (2.0 * problem.phi()) +
         intercept_constant(problem);
}

double iig_posterior_z_cdf(const GlmProblem& problem, double a, double b, double z) {
  const auto [ag, bg] = iig_updated_parameters(problem, a, b);
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  const double x = bg / (1.0 + std::exp(z));
  if (x == 0.0) return 1.0;
  const double log_ratio = log_lower_incomplete_gamma(ag, x) - log_lower_incomplete_gamma(ag, bg);
  return -std::expm1(log_ratio);
}

double iig_posterior_z_log_density(const GlmProblem& problem, double a, double b, double z) {
  const auto [ag, bg] = iig_updated_parameters(problem, a, b);
  return HyperPrior::incomplete_inverse_gamma(ag, bg).log_density_z(z);
}

double iig_posterior_mean_g(const GlmProblem& problem, double a, double b) {
  const auto [ag, bg] = iig_updated_parameters(problem, a, b);
  if (!(ag > 1.0)) return std::numeric_limits<double>::infinity();
  // E(g + 1) = b_g gamma(a_g - 1, b_g) / gamma(a_g, b_g)
  const double log_mean_u = std::log(bg) + log_lower_incomplete_gamma(ag - 1.0, bg) -
                            log_lower_incomplete_gamma(ag, bg);
  return std::exp(log_mean_u) - 1.0;
}

}  // namespace hyperg
