// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <functional>
#include <string>
#include <variant>

namespace hyperg {

/// log of the lower incomplete gamma function, log int_0^x t^{a-1} e^{-t} dt.
/// Series expansion for x < a + 1, Lentz continued fraction for the upper
/// function otherwise.
double log_lower_incomplete_gamma(double a, double x);

/// Regularized lower incomplete gamma P(a, x).
double regularized_lower_gamma(double a, double x);

/// log M(a, b), M(a, b) = b^a / int_0^b t^{a-1} e^{-t} dt.
double log_iig_normalizer(double a, double b);

/// M(a, b); throws NumericalError when the value overflows a double.
double iig_normalizer(double a, double b);

/// A proper prior f(g) on the g-prior covariance factor, or the
/// empirical-Bayes marker.
class HyperPrior {
 public:
  struct InverseGamma { double a, b; };
  struct HyperGOverN { double n; };
  struct IncompleteInverseGamma { double a, b, log_normalizer; };
  struct Custom { std::function<double(double)> log_density_g; std::string name; };
  struct EmpiricalBayes {};

  static HyperPrior inverse_gamma(double a, double b);
  static HyperPrior hyper_g_over_n(double n);
  static HyperPrior incomplete_inverse_gamma(double a, double b);
  /// Verifies once that exp(log_density_g) integrates to 1 within 1e-4.
  static HyperPrior custom(std::function<double(double)> log_density_g, std::string name);
  static HyperPrior empirical_bayes();

  /// IG(1/2, n/2), Zellner-Siow.
  static HyperPrior zellner_siow(double n) { return inverse_gamma(0.5, 0.5 * n); }
  /// The hyper-g/n prior (1/n)(1 + g/n)^{-2}.
  static HyperPrior hyper_g_n(double n) { return hyper_g_over_n(n); }
  /// IG(0.001, 0.001).
  static HyperPrior vague_inverse_gamma() { return inverse_gamma(0.001, 0.001); }

  bool is_empirical_bayes() const { return std::holds_alternative<EmpiricalBayes>(kind_); }

  /// Normalized log f(g).
  double log_density_g(double g) const;
  /// log f(e^z) + z, the density of z = log g.
  double log_density_z(double z) const;

  std::string describe() const;

  const auto& kind() const { return kind_; }

 private:
  using Kind = std::variant<InverseGamma, HyperGOverN, IncompleteInverseGamma, Custom, EmpiricalBayes>;
  explicit HyperPrior(Kind kind) : kind_(std::move(kind)) {}

  Kind kind_;
};

/// Numerical integral of exp(log_density_z) over the real line.
double integrate_z_density(const std::function<double(double)>& log_density_z);

}  // namespace hyperg
