// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/glm.hpp"

#include "hyperg/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hyperg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct WorkingSystem {
  Eigen::MatrixXd precision;
  Eigen::VectorXd score;
};

double prior_scale(const GlmProblem& problem, double g) {
  if (std::isinf(g)) return 0.0;
  return 1.0 / (g * problem.phi() * problem.c());
}

// Working normal equations R beta = s at `beta`, R including the g-prior.
WorkingSystem working_system(const GlmProblem& problem, double g,
                             const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (!(g > 0.0)) throw DomainError("g must be positive");
  WorkingSystem sys;
  if (problem.fixed_working_weights()) {
    sys.precision = problem.fixed_information();
    sys.score = problem.fixed_score();
  } else {
    const Eigen::MatrixXd& x0 = problem.augmented();
    const Eigen::VectorXd eta = x0 * beta;
    const auto& fl = problem.family_link();
    const Eigen::VectorXd& y = problem.y();
    const Eigen::VectorXd& w = problem.weights();
    const double phi = problem.phi();
    Eigen::VectorXd sqrt_weight(problem.n());
    Eigen::VectorXd s(problem.n());
    for (Eigen::Index i = 0; i < problem.n(); ++i) {
      const WorkingQuantities wq = fl.working(eta[i]);
      const double wt = w[i] * wq.weight_factor / phi;
      if (!std::isfinite(wt) || !std::isfinite(wq.mu)) {
        throw NumericalError("non-finite working weight at observation " + std::to_string(i + 1));
      }
      sqrt_weight[i] = std::sqrt(wt);
      s[i] = wt * eta[i] + w[i] * wq.score_factor * (y[i] - wq.mu) / phi;
    }
    const Eigen::MatrixXd xw = x0.array().colwise() * sqrt_weight.array();
    sys.precision = Eigen::MatrixXd::Zero(problem.dim(), problem.dim());
    sys.precision.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
    sys.precision = sys.precision.selfadjointView<Eigen::Lower>();
    sys.score = x0.transpose() * s;
  }
  const double kappa = prior_scale(problem, g);
  if (kappa > 0.0 && problem.p() > 0) {
    sys.precision.bottomRightCorner(problem.p(), problem.p()) += kappa * problem.cross_product();
  }
  return sys;
}

}  // namespace

// ---------------------------------------------------------------------------
// GlmProblem

GlmProblem::GlmProblem(const Dataset& ds, DesignMatrix design)
    : family_link_(ds.family_link()),
      y_(ds.y()),
      w_(ds.weights()),
      phi_(ds.phi()),
      design_(std::move(design)) {
  if (design_.x_centered.rows() != ds.n()) {
    throw DomainError("design row count differs from the number of observations");
  }
  const int p = design_.p;
  x0_.resize(ds.n(), p + 1);
  x0_.col(0).setOnes();
  if (p > 0) x0_.rightCols(p) = design_.x_centered;

  c_ = link_constant(family_link_);
  if (p > 0) {
    const Eigen::MatrixXd xw = design_.x_centered.array().colwise() * w_.array().sqrt();
    xtwx_ = xw.transpose() * xw;
    // Judge singularity on the unit-diagonal scaling: FP columns differ in
    // scale by many orders of magnitude.
    const Eigen::VectorXd col_scale = xtwx_.diagonal().array().sqrt();
    if (!(col_scale.minCoeff() > 0.0)) {
      throw NumericalError("X'WX of model " + design_.parent.to_string() + " is singular");
    }
    const Eigen::VectorXd inv_scale = col_scale.cwiseInverse();
    const Eigen::MatrixXd corr = inv_scale.asDiagonal() * xtwx_ * inv_scale.asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    if (llt.info() != Eigen::Success || !(diag.minCoeff() > 0.0) ||
        diag.array().square().minCoeff() < 1e-12) {
      throw NumericalError("X'WX of model " + design_.parent.to_string() + " is singular");
    }
    log_det_xtwx_ = 2.0 * (diag.array().log().sum() + col_scale.array().log().sum());
  } else {
    xtwx_.resize(0, 0);
  }

  fixed_ = family_link_.family() == Family::gaussian && family_link_.link() == Link::identity;
  if (fixed_) {
    const Eigen::MatrixXd xw = x0_.array().colwise() * w_.array().sqrt();
    fixed_info_ = xw.transpose() * xw / phi_;
    fixed_score_ = x0_.transpose() * (w_.array() * y_.array()).matrix() / phi_;
  }
}

GlmProblem GlmProblem::intercept_only() const {
  GlmProblem out = *this;
  out.design_.x_centered.resize(n(), 0);
  out.design_.column_means.resize(0);
  out.design_.p = 0;
  out.design_.parent = ModelIndex::null_model(design_.parent.kind(), design_.parent.num_covariates());
  out.x0_ = Eigen::MatrixXd::Ones(n(), 1);
  out.xtwx_.resize(0, 0);
  out.log_det_xtwx_ = 0.0;
  if (fixed_) {
    out.fixed_info_ = fixed_info_.topLeftCorner(1, 1);
    out.fixed_score_ = fixed_score_.head(1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// GaussApprox

GaussApprox::GaussApprox(Eigen::VectorXd mean, Eigen::MatrixXd precision)
    : mean_(std::move(mean)), precision_(std::move(precision)), llt_(precision_) {
  if (llt_.info() != Eigen::Success) {
    throw NumericalError("working precision is not positive definite");
  }
  const Eigen::VectorXd diag = llt_.matrixLLT().diagonal();
  if (!(diag.minCoeff() > 0.0) || !diag.allFinite()) {
    throw NumericalError("working precision is singular");
  }
  log_det_ = 2.0 * diag.array().log().sum();
}

double GaussApprox::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd r = x - mean_;
  const double quad = r.dot(precision_ * r);
  return 0.5 * log_det_ - 0.5 * static_cast<double>(mean_.size()) * kLog2Pi - 0.5 * quad;
}

double GaussApprox::inverse_quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return llt_.matrixL().solve(x).squaredNorm();
}

Eigen::MatrixXd GaussApprox::solve_lower(const Eigen::Ref<const Eigen::MatrixXd>& b) const {
  return llt_.matrixL().solve(b);
}

Eigen::VectorXd GaussApprox::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal;
  Eigen::VectorXd eps(mean_.size());
  for (Eigen::Index j = 0; j < eps.size(); ++j) eps[j] = normal(rng);
  return mean_ + llt_.matrixU().solve(eps);
}

// ---------------------------------------------------------------------------
// Likelihood and prior

double log_likelihood(const GlmProblem& problem,
                      const Eigen::Ref<const Eigen::VectorXd>& beta0gamma) {
  if (beta0gamma.size() != problem.dim()) {
    throw DomainError("coefficient vector length differs from p + 1");
  }
  const Eigen::VectorXd eta = problem.augmented() * beta0gamma;
  const auto& fl = problem.family_link();
  const Eigen::VectorXd& y = problem.y();
  const Eigen::VectorXd& w = problem.weights();
  double total = 0.0;
  for (Eigen::Index i = 0; i < problem.n(); ++i) {
    const double term = w[i] * fl.log_kernel(y[i], eta[i]);
    if (!std::isfinite(term)) {
      throw NumericalError("log-likelihood is not finite at observation " + std::to_string(i + 1));
    }
    total += term;
  }
  return total / problem.phi();
}

double log_likelihood(const Dataset& ds, const DesignMatrix& design,
                      const Eigen::Ref<const Eigen::VectorXd>& beta0gamma) {
  return log_likelihood(GlmProblem(ds, design), beta0gamma);
}

double log_coefficient_prior(const GlmProblem& problem, double g,
                             const Eigen::Ref<const Eigen::VectorXd>& beta0gamma) {
  const int p = problem.p();
  if (p == 0 || std::isinf(g)) return 0.0;
  const double scale = g * problem.phi() * problem.c();
  const Eigen::VectorXd slopes = beta0gamma.tail(p);
  const double quad = slopes.dot(problem.cross_product() * slopes);
  return -0.5 * p * (kLog2Pi + std::log(scale)) + 0.5 * problem.log_det_cross_product() -
         0.5 * quad / scale;
}

double log_joint_coefficients(const GlmProblem& problem, double g,
                              const Eigen::Ref<const Eigen::VectorXd>& beta0gamma) {
  return log_likelihood(problem, beta0gamma) + log_coefficient_prior(problem, g, beta0gamma);
}

// ---------------------------------------------------------------------------
// IWLS

GaussApprox iwls_one_step(const GlmProblem& problem, double g,
                          const Eigen::Ref<const Eigen::VectorXd>& from) {
  WorkingSystem sys = working_system(problem, g, from);
  Eigen::LLT<Eigen::MatrixXd> llt(sys.precision);
  if (llt.info() != Eigen::Success) throw NumericalError("working precision is singular");
  Eigen::VectorXd mean = llt.solve(sys.score);
  return GaussApprox(std::move(mean), std::move(sys.precision));
}

GaussApprox iwls_gauss_approx(const GlmProblem& problem, double g,
                              const Eigen::VectorXd* start, const IwlsOptions& options) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  auto safe_joint = [&](const Eigen::VectorXd& b) {
    try {
      return log_joint_coefficients(problem, g, b);
    } catch (const NumericalError&) {
      return neg_inf;
    }
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(problem.dim());
  if (start != nullptr && start->size() == problem.dim() && start->allFinite()) beta = *start;
  double current = safe_joint(beta);
  if (!std::isfinite(current)) {
    beta.setZero();
    current = safe_joint(beta);
  }

  bool converged = false;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    WorkingSystem sys = working_system(problem, g, beta);
    Eigen::LLT<Eigen::MatrixXd> llt(sys.precision);
    if (llt.info() != Eigen::Success) throw NumericalError("working precision is singular");
    Eigen::VectorXd proposal = llt.solve(sys.score);
    double next = safe_joint(proposal);
    // Step halving while the log joint decreases.
    for (int halving = 0; halving < 40 && !(next >= current - 1e-12 * std::abs(current)); ++halving) {
      proposal = 0.5 * (beta + proposal);
      next = safe_joint(proposal);
    }
    if (!std::isfinite(next)) {
      throw ConvergenceError("IWLS produced a non-finite log joint density", beta);
    }
    const double change = std::abs(next - current);
    beta = std::move(proposal);
    current = next;
    if (change <= options.tol * (std::abs(current) + 1.0)) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("IWLS did not converge within " + std::to_string(options.max_iter) +
                               " iterations",
                           beta);
  }
  WorkingSystem final_sys = working_system(problem, g, beta);
  return GaussApprox(std::move(beta), std::move(final_sys.precision));
}

}  // namespace hyperg
