// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/dataset.hpp"
#include "hyperg/model_space.hpp"

#include <Eigen/Dense>

#include <random>

namespace hyperg {

/// A dataset bound to one model's design, with the design-only quantities
/// every evidence and sampling routine needs precomputed: the
/// intercept-augmented design, X'WX with its Cholesky log-determinant, and
/// (for gaussian-identity) the fixed working cross products.
///
/// Holds copies of everything it uses, so it is independent of the Dataset
/// lifetime and safe to share read-only between threads.
class GlmProblem {
 public:
  GlmProblem(const Dataset& ds, DesignMatrix design);

  /// The same data with only the intercept column.
  GlmProblem intercept_only() const;

  const FamilyLink& family_link() const { return family_link_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& weights() const { return w_; }
  double phi() const { return phi_; }
  const DesignMatrix& design() const { return design_; }

  Eigen::Index n() const { return y_.size(); }
  /// Number of non-intercept columns p_gamma.
  int p() const { return design_.p; }
  /// Coefficient vector length p_gamma + 1.
  int dim() const { return design_.p + 1; }

  /// [1 | X_centered], n x (p + 1).
  const Eigen::MatrixXd& augmented() const { return x0_; }
  /// X'WX of the centered design (p x p).
  const Eigen::MatrixXd& cross_product() const { return xtwx_; }
  double log_det_cross_product() const { return log_det_xtwx_; }
  /// The prior constant c of the family/link.
  double c() const { return c_; }

  /// True when the working weights do not depend on the coefficients.
  bool fixed_working_weights() const { return fixed_; }
  const Eigen::MatrixXd& fixed_information() const { return fixed_info_; }
  const Eigen::VectorXd& fixed_score() const { return fixed_score_; }

 private:
  FamilyLink family_link_;
  Eigen::VectorXd y_;
  Eigen::VectorXd w_;
  double phi_;
  DesignMatrix design_;
  Eigen::MatrixXd x0_;
  Eigen::MatrixXd xtwx_;
  double log_det_xtwx_ = 0.0;
  double c_ = 1.0;
  bool fixed_ = false;
  Eigen::MatrixXd fixed_info_;
  Eigen::VectorXd fixed_score_;
};

/// Gaussian approximation N(mean, precision^{-1}) of the conditional
/// coefficient posterior, with the precision kept in Cholesky form.
class GaussApprox {
 public:
  GaussApprox(Eigen::VectorXd mean, Eigen::MatrixXd precision);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& precision() const { return precision_; }
  /// Lower Cholesky factor L with precision = L L'.
  Eigen::MatrixXd factor() const { return llt_.matrixL(); }
  double log_det_precision() const { return log_det_; }

  /// Log density of the Gaussian at x.
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// x' precision^{-1} x.
  double inverse_quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// L^{-1} b.
  Eigen::MatrixXd solve_lower(const Eigen::Ref<const Eigen::MatrixXd>& b) const;
  Eigen::VectorXd sample(std::mt19937_64& rng) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd precision_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

/// sum_i w_i (y_i theta_i - b(theta_i)) / phi, without data-only terms (see
/// FamilyLink::log_kernel). Throws NumericalError naming the first
/// observation with a non-finite contribution.
double log_likelihood(const GlmProblem& problem,
                      const Eigen::Ref<const Eigen::VectorXd>& beta0gamma);
double log_likelihood(const Dataset& ds, const DesignMatrix& design,
                      const Eigen::Ref<const Eigen::VectorXd>& beta0gamma);

/// Log density of the generalized g-prior N(0, g phi c (X'WX)^{-1}) on the
/// slope coefficients; the flat intercept prior contributes zero.
double log_coefficient_prior(const GlmProblem& problem, double g,
                             const Eigen::Ref<const Eigen::VectorXd>& beta0gamma);

struct IwlsOptions {
  int max_iter = 50;
  double tol = 1e-10;
};

/// Converged Bayesian IWLS Gaussian approximation of f(beta | y, g) under
/// the prior precision diag{0, (g phi c)^{-1} X'WX}. g = +infinity gives the
/// maximum likelihood fit. `start` defaults to the zero vector.
GaussApprox iwls_gauss_approx(const GlmProblem& problem, double g,
                              const Eigen::VectorXd* start = nullptr,
                              const IwlsOptions& options = {});

/// Moments after exactly one Bayesian IWLS update from `from`; the precision
/// is evaluated at `from`.
GaussApprox iwls_one_step(const GlmProblem& problem, double g,
                          const Eigen::Ref<const Eigen::VectorXd>& from);

/// Log of the conditional posterior kernel: log-likelihood plus g-prior.
double log_joint_coefficients(const GlmProblem& problem, double g,
                              const Eigen::Ref<const Eigen::VectorXd>& beta0gamma);

}  // namespace hyperg
