// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/family.hpp"

#include "hyperg/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace hyperg {

namespace {

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double cauchit(double eta) { return 0.5 + std::atan(eta) / std::numbers::pi; }

// log h(eta) and log(1 - h(eta)) for the binary links.
std::pair<double, double> binary_log_probs(Link link, double eta) {
  switch (link) {
    case Link::logit:
      return {-softplus(-eta), -softplus(eta)};
    case Link::probit:
      return {std::log(normal_cdf(eta)), std::log(normal_cdf(-eta))};
    case Link::cloglog: {
      const double e = std::exp(eta);
      return {std::log(-std::expm1(-e)), -e};
    }
    case Link::cauchit:
      return {std::log(cauchit(eta)), std::log(cauchit(-eta))};
    default:
      throw UnsupportedError("binary_log_probs: not a binary link");
  }
}

}  // namespace

FamilyLink FamilyLink::make(Family family, Link link) {
  const bool ok = (family == Family::gaussian && link == Link::identity) ||
                  (family == Family::poisson && link == Link::log) ||
                  (family == Family::gamma && link == Link::log) ||
                  (family == Family::bernoulli &&
                   (link == Link::logit || link == Link::probit ||
                    link == Link::cloglog || link == Link::cauchit));
  if (ok) return FamilyLink(family, link);

  const FamilyLink tmp(family, link);
  const std::string pair = tmp.family_name() + "-" + tmp.link_name();
  const bool parenthesized =
      (family == Family::poisson && link == Link::identity) ||
      (family == Family::gaussian && link == Link::log) ||
      (family == Family::inverse_gaussian && link == Link::log);
  if (parenthesized) {
    throw DomainError("family/link " + pair +
                      " is not allowed: uniqueness of the prior mode at zero "
                      "is not guaranteed");
  }
  throw DomainError("unsupported family/link combination " + pair);
}

FamilyLink FamilyLink::parse(std::string_view family, std::string_view link) {
  Family f;
  if (family == "gaussian" || family == "normal") {
    f = Family::gaussian;
  } else if (family == "bernoulli" || family == "binomial") {
    f = Family::bernoulli;
  } else if (family == "poisson") {
    f = Family::poisson;
  } else if (family == "gamma") {
    f = Family::gamma;
  } else if (family == "inverse_gaussian" || family == "inverse-gaussian") {
    f = Family::inverse_gaussian;
  } else {
    throw DomainError("unknown family '" + std::string(family) + "'");
  }
  Link l;
  if (link == "identity") {
    l = Link::identity;
  } else if (link == "logit") {
    l = Link::logit;
  } else if (link == "probit") {
    l = Link::probit;
  } else if (link == "cloglog") {
    l = Link::cloglog;
  } else if (link == "cauchit") {
    l = Link::cauchit;
  } else if (link == "log") {
    l = Link::log;
  } else {
    throw DomainError("unknown link '" + std::string(link) + "'");
  }
  return make(f, l);
}

bool FamilyLink::canonical() const {
  return (family_ == Family::gaussian && link_ == Link::identity) ||
         (family_ == Family::bernoulli && link_ == Link::logit) ||
         (family_ == Family::poisson && link_ == Link::log);
}

double FamilyLink::response(double eta) const {
  switch (link_) {
    case Link::identity: return eta;
    case Link::logit: return expit(eta);
    case Link::probit: return normal_cdf(eta);
    case Link::cloglog: return -std::expm1(-std::exp(eta));
    case Link::cauchit: return cauchit(eta);
    case Link::log: return std::exp(eta);
  }
  return 0.0;
}

double FamilyLink::response_derivative(double eta) const {
  switch (link_) {
    case Link::identity: return 1.0;
    case Link::logit: return expit(eta) * expit(-eta);
    case Link::probit: return normal_pdf(eta);
    case Link::cloglog: return std::exp(eta - std::exp(eta));
    case Link::cauchit: return 1.0 / (std::numbers::pi * (1.0 + eta * eta));
    case Link::log: return std::exp(eta);
  }
  return 0.0;
}

double FamilyLink::variance(double mu) const {
  switch (family_) {
    case Family::gaussian: return 1.0;
    case Family::bernoulli: return mu * (1.0 - mu);
    case Family::poisson: return mu;
    case Family::gamma: return mu * mu;
    case Family::inverse_gaussian: return mu * mu * mu;
  }
  return 0.0;
}

double FamilyLink::theta(double mu) const {
  switch (family_) {
    case Family::gaussian: return mu;
    case Family::bernoulli: return std::log(mu / (1.0 - mu));
    case Family::poisson: return std::log(mu);
    case Family::gamma: return -1.0 / mu;
    case Family::inverse_gaussian: return -0.5 / (mu * mu);
  }
  return 0.0;
}

double FamilyLink::cumulant(double theta) const {
  switch (family_) {
    case Family::gaussian: return 0.5 * theta * theta;
    case Family::bernoulli: return softplus(theta);
    case Family::poisson: return std::exp(theta);
    case Family::gamma: return -std::log(-theta);
    case Family::inverse_gaussian: return -std::sqrt(-2.0 * theta);
  }
  return 0.0;
}

double FamilyLink::log_kernel(double y, double eta) const {
  switch (family_) {
    case Family::gaussian: {
      const double r = y - eta;
      return -0.5 * r * r;
    }
    case Family::bernoulli: {
      if (link_ == Link::logit) return y * eta - softplus(eta);
      const auto [log_p, log_q] = binary_log_probs(link_, eta);
      double out = 0.0;
      if (y > 0.0) out += y * log_p;
      if (y < 1.0) out += (1.0 - y) * log_q;
      return out;
    }
    case Family::poisson:
      return y * eta - std::exp(eta);
    case Family::gamma:
      return -y * std::exp(-eta) - eta;
    case Family::inverse_gaussian: {
      const double mu = response(eta);
      return y * theta(mu) - cumulant(theta(mu));
    }
  }
  return 0.0;
}

WorkingQuantities FamilyLink::working(double eta) const {
  switch (link_) {
    case Link::identity:
      return {eta, 1.0, 1.0};
    case Link::logit: {
      const double mu = expit(eta);
      const double v = mu * expit(-eta);
      return {mu, v, 1.0};
    }
    case Link::log: {
      const double mu = std::exp(eta);
      if (family_ == Family::poisson) return {mu, mu, 1.0};
      // gamma: v = mu^2, dmu/deta = mu
      return {mu, 1.0, 1.0 / mu};
    }
    case Link::probit:
    case Link::cloglog:
    case Link::cauchit: {
      const double mu = response(eta);
      const double d = response_derivative(eta);
      double one_minus;
      if (link_ == Link::cloglog) {
        one_minus = std::exp(-std::exp(eta));
      } else if (link_ == Link::probit) {
        one_minus = normal_cdf(-eta);
      } else {
        one_minus = cauchit(-eta);
      }
      const double v = mu * one_minus;
      if (!(v > 0.0) || !(d > 0.0)) return {mu, 0.0, 0.0};
      const double sf = d / v;
      return {mu, d * sf, sf};
    }
  }
  return {0.0, 0.0, 0.0};
}

std::string FamilyLink::family_name() const {
  switch (family_) {
    case Family::gaussian: return "gaussian";
    case Family::bernoulli: return "bernoulli";
    case Family::poisson: return "poisson";
    case Family::gamma: return "gamma";
    case Family::inverse_gaussian: return "inverse_gaussian";
  }
  return "?";
}

std::string FamilyLink::link_name() const {
  switch (link_) {
    case Link::identity: return "identity";
    case Link::logit: return "logit";
    case Link::probit: return "probit";
    case Link::cloglog: return "cloglog";
    case Link::cauchit: return "cauchit";
    case Link::log: return "log";
  }
  return "?";
}

double link_constant(const FamilyLink& fl) {
  switch (fl.link()) {
    case Link::identity: return 1.0;
    case Link::log: return 1.0;
    case Link::logit: return 4.0;
    case Link::probit: return std::numbers::pi / 2.0;
    case Link::cloglog: return std::numbers::e - 1.0;
    case Link::cauchit: return std::numbers::pi * std::numbers::pi / 4.0;
  }
  return 1.0;
}

namespace {

// Coefficients of d^m/deta^m expit as polynomials in s = expit(eta), m = 1..6,
// from d/deta P(s) = P'(s) * (s - s^2).
const std::array<std::array<double, 8>, 6>& logit_polynomials() {
  static const auto table = [] {
    std::array<std::array<double, 8>, 6> t{};
    std::array<double, 8> poly{};
    poly[1] = 1.0;
    for (int m = 0; m < 6; ++m) {
      std::array<double, 8> next{};
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        const double dk = static_cast<double>(k) * poly[k];
        next[k] += dk;
        next[k + 1] -= dk;
      }
      poly = next;
      t[static_cast<std::size_t>(m)] = poly;
    }
    return t;
  }();
  return table;
}

}  // namespace

void response_derivatives(const FamilyLink& fl, double eta, std::span<double> out) {
  if (!fl.canonical()) {
    throw UnsupportedError("response derivatives are only provided for canonical links, not " +
                           fl.family_name() + "-" + fl.link_name());
  }
  if (out.empty() || out.size() > 6) {
    throw DomainError("response_derivatives: max_order must be in 1..6");
  }
  std::fill(out.begin(), out.end(), 0.0);
  switch (fl.link()) {
    case Link::identity:
      out[0] = 1.0;
      break;
    case Link::log:
      std::fill(out.begin(), out.end(), std::exp(eta));
      break;
    case Link::logit: {
      const double s = expit(eta);
      const auto& table = logit_polynomials();
      for (std::size_t m = 0; m < out.size(); ++m) {
        double value = 0.0;
        for (std::size_t k = table[m].size(); k-- > 0;) value = value * s + table[m][k];
        out[m] = value;
      }
      break;
    }
    default:
      break;
  }
}

std::vector<double> response_derivatives(const FamilyLink& fl, double eta, int max_order) {
  if (max_order < 1 || max_order > 6) {
    throw DomainError("response_derivatives: max_order must be in 1..6");
  }
  std::vector<double> out(static_cast<std::size_t>(max_order));
  response_derivatives(fl, eta, std::span<double>(out));
  return out;
}

}  // namespace hyperg
