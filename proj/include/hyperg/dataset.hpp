// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/family.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hyperg {

/// The immutable analysis input: response, raw covariates, weights, the fixed
/// dispersion and the family/link.
///
/// Bernoulli responses are proportions y_i = s_i / w_i with trial counts in
/// the weights. Construction validates every invariant and throws DataError.
class Dataset {
 public:
  Dataset(Eigen::VectorXd y, Eigen::MatrixXd x_raw, Eigen::VectorXd weights,
          double phi, FamilyLink family_link,
          std::vector<std::string> covariate_names = {});

  /// Unit weights.
  Dataset(Eigen::VectorXd y, Eigen::MatrixXd x_raw, double phi,
          FamilyLink family_link,
          std::vector<std::string> covariate_names = {});

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& x_raw() const { return x_raw_; }
  const Eigen::VectorXd& weights() const { return w_; }
  double phi() const { return phi_; }
  const FamilyLink& family_link() const { return family_link_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  /// Amount added to each raw covariate by shifted_to_positive(); zero otherwise.
  const Eigen::VectorXd& covariate_shift() const { return shift_; }

  Eigen::Index n() const { return y_.size(); }
  int m() const { return static_cast<int>(x_raw_.cols()); }

  /// Copy where every covariate with a nonpositive minimum is shifted by
  /// (1 - min) so fractional polynomial transforms are defined.
  Dataset shifted_to_positive() const;

 private:
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_raw_;
  Eigen::VectorXd w_;
  double phi_;
  FamilyLink family_link_;
  std::vector<std::string> names_;
  Eigen::VectorXd shift_;
};

}  // namespace hyperg
