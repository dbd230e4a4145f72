// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/dataset.hpp"

#include "hyperg/errors.hpp"

#include <cmath>

namespace hyperg {

Dataset::Dataset(Eigen::VectorXd y, Eigen::MatrixXd x_raw,
                 Eigen::VectorXd weights, double phi, FamilyLink family_link,
                 std::vector<std::string> covariate_names)
    : y_(std::move(y)),
      x_raw_(std::move(x_raw)),
      w_(std::move(weights)),
      phi_(phi),
      family_link_(family_link),
      names_(std::move(covariate_names)),
      shift_(Eigen::VectorXd::Zero(x_raw_.cols())) {
  const Eigen::Index n = y_.size();
  if (n < 2) throw DataError("dataset needs at least 2 observations");
  if (x_raw_.cols() < 1) throw DataError("dataset needs at least 1 covariate");
  if (x_raw_.rows() != n) throw DataError("covariate matrix row count differs from response length");
  if (w_.size() != n) throw DataError("weight vector length differs from response length");
  if (!(phi_ > 0.0) || !std::isfinite(phi_)) throw DataError("dispersion phi must be positive and finite");
  if (!x_raw_.allFinite()) throw DataError("covariates contain non-finite values");

  if (names_.empty()) {
    for (int k = 0; k < x_raw_.cols(); ++k) names_.push_back("x" + std::to_string(k + 1));
  }
  if (static_cast<Eigen::Index>(names_.size()) != x_raw_.cols()) {
    throw DataError("covariate name count differs from covariate count");
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string row = "row " + std::to_string(i + 1);
    if (!(w_[i] > 0.0) || !std::isfinite(w_[i])) throw DataError(row + ": weight must be positive");
    const double yi = y_[i];
    if (!std::isfinite(yi)) throw DataError(row + ": response is not finite");
    switch (family_link_.family()) {
      case Family::bernoulli: {
        if (yi < 0.0 || yi > 1.0) throw DataError(row + ": bernoulli proportion outside [0, 1]");
        const double successes = w_[i] * yi;
        if (std::abs(successes - std::round(successes)) > 1e-8 * std::max(1.0, w_[i])) {
          throw DataError(row + ": weight * response is not an integer success count");
        }
        break;
      }
      case Family::poisson:
        if (yi < 0.0) throw DataError(row + ": poisson response is negative");
        break;
      case Family::gamma:
      case Family::inverse_gaussian:
        if (yi <= 0.0) throw DataError(row + ": response must be positive");
        break;
      case Family::gaussian:
        break;
    }
  }
}

Dataset::Dataset(Eigen::VectorXd y, Eigen::MatrixXd x_raw, double phi,
                 FamilyLink family_link, std::vector<std::string> covariate_names)
    : Dataset(y, std::move(x_raw), Eigen::VectorXd::Ones(y.size()), phi,
              family_link, std::move(covariate_names)) {}

Dataset Dataset::shifted_to_positive() const {
  Dataset out = *this;
  for (Eigen::Index k = 0; k < x_raw_.cols(); ++k) {
    const double lo = x_raw_.col(k).minCoeff();
    if (lo <= 0.0) {
      const double delta = 1.0 - lo;
      out.x_raw_.col(k).array() += delta;
      out.shift_[k] += delta;
    }
  }
  return out;
}

}  // namespace hyperg
