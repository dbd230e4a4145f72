// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hyperg {

enum class Family { gaussian, bernoulli, poisson, gamma, inverse_gaussian };
enum class Link { identity, logit, probit, cloglog, cauchit, log };

/// Per-observation quantities needed by iteratively weighted least squares.
struct WorkingQuantities {
  double mu;              // h(eta)
  double weight_factor;   // (dh/deta)^2 / v(mu)
  double score_factor;    // (dh/deta) / v(mu)
};

/// An exponential family paired with a link function.
///
/// Only the non-parenthesized combinations of the usual table are
/// constructible: gaussian-identity, poisson-log, bernoulli with
/// logit/probit/cloglog/cauchit, and gamma-log. Pairs whose prior mode is not
/// guaranteed to be unique (poisson-identity, gaussian-log,
/// inverse_gaussian-log) are rejected with a DomainError.
class FamilyLink {
 public:
  static FamilyLink make(Family family, Link link);
  static FamilyLink parse(std::string_view family, std::string_view link);

  Family family() const { return family_; }
  Link link() const { return link_; }

  /// True iff the response function equals db/dtheta.
  bool canonical() const;

  /// Response function h (inverse link).
  double response(double eta) const;
  /// dh/deta.
  double response_derivative(double eta) const;
  /// Variance function v(mu).
  double variance(double mu) const;
  /// Canonical parameter theta = (db/dtheta)^{-1}(mu).
  double theta(double mu) const;
  /// Cumulant function b(theta).
  double cumulant(double theta) const;

  /// y*theta - b(theta) for one observation with unit weight and dispersion,
  /// evaluated stably from eta. Data-only terms are dropped, except that the
  /// gaussian kernel is -(y - mu)^2 / 2 so a perfect fit scores zero.
  double log_kernel(double y, double eta) const;

  WorkingQuantities working(double eta) const;

  std::string family_name() const;
  std::string link_name() const;

 private:
  FamilyLink(Family f, Link l) : family_(f), link_(l) {}

  Family family_;
  Link link_;
};

/// The generalized g-prior constant c = v(h(0)) * (dh/deta(0))^{-2}.
double link_constant(const FamilyLink& fl);

/// Exact derivatives d^m h / d eta^m at eta, for m = 1..max_order.
/// Defined for canonical links only.
std::vector<double> response_derivatives(const FamilyLink& fl, double eta,
                                         int max_order);
/// Same, filling out[0..k) with orders 1..k (k <= 6).
void response_derivatives(const FamilyLink& fl, double eta, std::span<double> out);

}  // namespace hyperg
