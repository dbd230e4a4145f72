// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/laplace.hpp"

#include "hyperg/errors.hpp"
#include "hyperg/numerics.hpp"

#include <boost/math/quadrature/sinh_sinh.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hyperg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kEtaDivergence = 30.0;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double sixth_order_factor(const GlmProblem& problem, const GaussApprox& approx) {
  const Eigen::MatrixXd& x0 = problem.augmented();
  const Eigen::VectorXd eta = x0 * approx.mean();
  const Eigen::MatrixXd v = approx.solve_lower(x0.transpose());  // d x n
  const Eigen::VectorXd b = v.colwise().squaredNorm().transpose();
  const Eigen::VectorXd& w = problem.weights();
  const double phi = problem.phi();

  double t3 = 0.0;
  double t5 = 0.0;
  Eigen::VectorXd k = Eigen::VectorXd::Zero(problem.dim());
  for (Eigen::Index i = 0; i < problem.n(); ++i) {
    std::array<double, 5> d;
    response_derivatives(problem.family_link(), eta[i], d);
    const double s = w[i] / phi;
    t3 += s * d[2] * b[i] * b[i];
    t5 += s * d[4] * b[i] * b[i] * b[i];
    k += (s * d[1] * b[i]) * x0.row(i).transpose();
  }
  const double quad = approx.inverse_quadratic_form(k);
  return 1.0 - t3 / 8.0 - t5 / 48.0 + 5.0 * quad / 24.0;
}

}  // namespace

LaplaceOrder default_order(const FamilyLink& fl) {
  return fl.canonical() ? LaplaceOrder::sixth : LaplaceOrder::second;
}

CondMargLik cond_marglik(const GlmProblem& problem, double g, LaplaceOrder order,
                         const Eigen::VectorXd* start) {
  if (problem.p() < 1) throw DomainError("conditional evidence needs at least one covariate");
  if (!(g > 0.0) || std::isinf(g)) throw DomainError("g must be positive and finite");
  if (order == LaplaceOrder::sixth && !problem.family_link().canonical()) {
    throw UnsupportedError("sixth-order correction requires a canonical link");
  }
  GaussApprox approx = iwls_gauss_approx(problem, g, start);
  const double log_joint = log_joint_coefficients(problem, g, approx.mean());
  double value = log_joint + 0.5 * problem.dim() * kLog2Pi - 0.5 * approx.log_det_precision();
  LaplaceOrder used = LaplaceOrder::second;
  bool fell_back = false;
  if (order == LaplaceOrder::sixth && !problem.fixed_working_weights()) {
    const double factor = sixth_order_factor(problem, approx);
    if (factor > 0.0 && std::isfinite(factor)) {
      value += std::log(factor);
      used = LaplaceOrder::sixth;
    } else {
      fell_back = true;
    }
  } else if (order == LaplaceOrder::sixth) {
    used = LaplaceOrder::sixth;  // factor is exactly one
  }
  return {value, used, fell_back, std::move(approx)};
}

double cond_log_marglik(const GlmProblem& problem, double g, LaplaceOrder order) {
  return cond_marglik(problem, g, order).log_value;
}

double log_joint_z(const GlmProblem& problem, const HyperPrior& hp, double z, LaplaceOrder order) {
  if (hp.is_empirical_bayes()) throw UnsupportedError("log_joint_z needs a proper hyperprior");
  const double prior = hp.log_density_z(z);
  if (!std::isfinite(prior)) return -std::numeric_limits<double>::infinity();
  return cond_log_marglik(problem, std::exp(z), order) + prior;
}

ZMode find_mode_z(const GlmProblem& problem, const HyperPrior& hp, LaplaceOrder order,
                  double bracket_cap) {
  // Canonical links have a concave log joint in beta, so the previous
  // solution is a safe IWLS start.
  const bool warm = problem.family_link().canonical();
  Eigen::VectorXd last;
  auto f = [&](double z) {
    if (hp.is_empirical_bayes()) throw UnsupportedError("log_joint_z needs a proper hyperprior");
    const double prior = hp.log_density_z(z);
    if (!std::isfinite(prior)) return -std::numeric_limits<double>::infinity();
    CondMargLik cm = cond_marglik(problem, std::exp(z), order, warm && last.size() ? &last : nullptr);
    if (warm) last = cm.approx.mean();
    return cm.log_value + prior;
  };
  const double center = std::log(static_cast<double>(problem.n()));
  const Bracket br = bracket_maximum(f, center, 2.0, bracket_cap);
  if (br.hit_lower_cap || br.hit_upper_cap) {
    throw NumericalError("no interior mode of the z posterior within |z| <= " + fmt(bracket_cap) +
                         " for model " + problem.design().parent.to_string());
  }
  const Maximum mx = brent_maximize(f, br.lo, br.mid, br.hi);
  const DerivativeEstimate curv = ridders_second_derivative(f, mx.x, mx.value);
  if (!(curv.value < 0.0) || !std::isfinite(curv.value)) {
    throw NumericalError("non-negative curvature " + fmt(curv.value) + " at the z mode of model " +
                         problem.design().parent.to_string());
  }
  return {mx.x, 1.0 / std::sqrt(-curv.value), mx.value};
}

GaussHermiteRule gauss_hermite_nodes(int n) {
  if (n < 1 || n > 64) throw DomainError("Gauss-Hermite rule needs 1 <= n <= 64");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(0.5 * k);
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = std::sqrt(std::numbers::pi);
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const double p0 = std::pow(std::numbers::pi, -0.25);
  for (int j = 0; j < n; ++j) {
    double t = solver.eigenvalues()[j];
    // Christoffel numbers from the orthonormal recurrence keep small tail
    // weights accurate to full relative precision; one Newton step polishes
    // the eigenvalue.
    double sum_sq = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      double prev = 0.0;
      double cur = p0;
      sum_sq = cur * cur;
      for (int k = 0; k < n; ++k) {
        const double next = t * cur * std::sqrt(2.0 / (k + 1)) - std::sqrt(double(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
        if (k < n - 1) sum_sq += cur * cur;
      }
      // cur = p_n(t), prev = p_{n-1}(t); p_n' = sqrt(2n) p_{n-1}
      if (pass == 0) t -= cur / (std::sqrt(2.0 * n) * prev);
    }
    rule.nodes[static_cast<std::size_t>(j)] = t;
    rule.weights[static_cast<std::size_t>(j)] = 1.0 / sum_sq;
  }
  // Symmetrize against rounding.
  for (int j = 0; j < n / 2; ++j) {
    const auto lo = static_cast<std::size_t>(j);
    const auto hi = static_cast<std::size_t>(n - 1 - j);
    const double t = 0.5 * (rule.nodes[hi] - rule.nodes[lo]);
    const double w = 0.5 * (rule.weights[hi] + rule.weights[lo]);
    rule.nodes[lo] = -t;
    rule.nodes[hi] = t;
    rule.weights[lo] = rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

MargLikResult log_marglik(const GlmProblem& problem, const HyperPrior& hp,
                          const IlaOptions& options) {
  if (hp.is_empirical_bayes()) throw UnsupportedError("log_marglik needs a proper hyperprior");
  MargLikResult result;
  result.order = options.order;
  if (problem.p() == 0) {
    result.null_model = true;
    result.log_evidence = null_model_marglik(problem);
    return result;
  }
  const ZMode mode = find_mode_z(problem, hp, options.order, options.bracket_cap);
  result.z_star = mode.z_star;
  result.sigma_star = mode.sigma_star;
  result.log_joint_at_mode = mode.log_joint;
  result.n_nodes = options.nodes;

  const GaussHermiteRule rule = gauss_hermite_nodes(options.nodes);
  const double log_scale = std::log(std::numbers::sqrt2 * mode.sigma_star);
  std::vector<double> terms(rule.nodes.size());
  result.grid.reserve(rule.nodes.size());
  const bool warm = problem.family_link().canonical();
  Eigen::VectorXd last;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double t = rule.nodes[j];
    const double z = mode.z_star + std::numbers::sqrt2 * mode.sigma_star * t;
    const double prior = hp.log_density_z(z);
    double value = -std::numeric_limits<double>::infinity();
    if (std::isfinite(prior)) {
      const CondMargLik cm =
          cond_marglik(problem, std::exp(z), options.order, warm && last.size() ? &last : nullptr);
      if (warm) last = cm.approx.mean();
      result.fell_back = result.fell_back || cm.fell_back;
      value = cm.log_value + prior;
    }
    result.grid.emplace_back(z, value);
    terms[j] = std::log(rule.weights[j]) + t * t + log_scale + value;
  }
  result.log_evidence = log_sum_exp(terms);
  if (!std::isfinite(result.log_evidence)) {
    throw NumericalError("non-finite evidence for model " + problem.design().parent.to_string());
  }
  return result;
}

namespace {

double null_marglik_impl(const GlmProblem& null_problem) {
  const FamilyLink& fl = null_problem.family_link();
  const Eigen::VectorXd& y = null_problem.y();
  const Eigen::VectorXd& w = null_problem.weights();
  const double phi = null_problem.phi();
  const double wsum = w.sum();
  if (fl.family() == Family::gaussian && fl.link() == Link::identity) {
    const double ybar = w.dot(y) / wsum;
    const double ss = (w.array() * (y.array() - ybar).square()).sum();
    return -ss / (2.0 * phi) + 0.5 * (kLog2Pi + std::log(phi / wsum));
  }
  const GaussApprox fit = iwls_gauss_approx(null_problem, std::numeric_limits<double>::infinity());
  const double mode = fit.mean()[0];
  const double sd = 1.0 / std::sqrt(fit.precision()(0, 0));
  Eigen::VectorXd beta(1);
  beta[0] = mode;
  const double peak = log_likelihood(null_problem, beta);
  auto integrand = [&](double u) {
    Eigen::VectorXd b(1);
    b[0] = mode + sd * u;
    try {
      return std::exp(log_likelihood(null_problem, b) - peak);
    } catch (const NumericalError&) {
      return 0.0;
    }
  };
  boost::math::quadrature::sinh_sinh<double> integrator(12);
  const double integral = integrator.integrate(integrand, 1e-12);
  return peak + std::log(sd * integral);
}

}  // namespace

double null_model_marglik(const Dataset& ds) {
  return null_marglik_impl(
      GlmProblem(ds, build_design(ds, ModelIndex::null_model(SpaceKind::variable_selection, ds.m()))));
}

double null_model_marglik(const GlmProblem& problem) {
  if (problem.p() == 0) return null_marglik_impl(problem);
  return null_marglik_impl(problem.intercept_only());
}

EbResult eb_optimize(const GlmProblem& problem, LaplaceOrder order, double bracket_cap) {
  auto f = [&](double z) { return cond_log_marglik(problem, std::exp(z), order); };
  const double center = std::log(static_cast<double>(problem.n()));
  const Bracket br = bracket_maximum(f, center, 2.0, bracket_cap);
  if (br.hit_lower_cap) return {0.0, null_model_marglik(problem), true};
  if (br.hit_upper_cap) {
    throw NumericalError("empirical-Bayes g exceeds exp(" + fmt(bracket_cap) + ") for model " +
                         problem.design().parent.to_string());
  }
  const Maximum mx = brent_maximize(f, br.lo, br.mid, br.hi);
  return {std::exp(mx.x), mx.value, false};
}

InfoCriteria info_criteria(const GlmProblem& problem) {
  const GaussApprox fit = iwls_gauss_approx(problem, std::numeric_limits<double>::infinity());
  if (problem.family_link().family() == Family::bernoulli) {
    const Eigen::VectorXd eta = problem.augmented() * fit.mean();
    if (eta.cwiseAbs().maxCoeff() > kEtaDivergence) {
      throw NumericalError("maximum likelihood fit diverges (separation) for model " +
                           problem.design().parent.to_string());
    }
  }
  InfoCriteria ic{};
  ic.max_log_likelihood = log_likelihood(problem, fit.mean());
  const double k = problem.dim();
  ic.aic = -2.0 * ic.max_log_likelihood + 2.0 * k;
  ic.bic = -2.0 * ic.max_log_likelihood + k * std::log(static_cast<double>(problem.n()));
  ic.log_weight_aic = -0.5 * ic.aic;
  ic.log_weight_bic = -0.5 * ic.bic;
  return ic;
}

}  // namespace hyperg
