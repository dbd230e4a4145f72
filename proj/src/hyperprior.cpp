// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/hyperprior.hpp"

#include "hyperg/errors.hpp"

#include <boost/math/quadrature/sinh_sinh.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace hyperg {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// log of the series sum in gamma(a, x) = x^a e^{-x} sum_n x^n / (a (a+1) ... (a+n)).
double log_gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < 100000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return std::log(sum);
}

// log of the continued fraction in Gamma(a, x) = x^a e^{-x} * CF (modified Lentz).
double log_gamma_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::log(h);
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

void require_positive(double a, double b, const char* what) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError(std::string(what) + ": parameters must be positive and finite");
  }
}

}  // namespace

double log_lower_incomplete_gamma(double a, double x) {
  if (!(a > 0.0)) throw DomainError("incomplete gamma: shape must be positive");
  if (x < 0.0 || std::isnan(x)) throw DomainError("incomplete gamma: argument must be nonnegative");
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (std::isinf(x)) return std::lgamma(a);
  const double prefix = a * std::log(x) - x;
  if (x < a + 1.0) return prefix + log_gamma_series(a, x);
  const double log_upper = prefix + log_gamma_fraction(a, x);
  const double lg = std::lgamma(a);
  return lg + std::log1p(-std::exp(log_upper - lg));
}

double regularized_lower_gamma(double a, double x) {
  if (x == 0.0) return 0.0;
  return std::exp(log_lower_incomplete_gamma(a, x) - std::lgamma(a));
}

double log_iig_normalizer(double a, double b) {
  require_positive(a, b, "iig_normalizer");
  return a * std::log(b) - log_lower_incomplete_gamma(a, b);
}

double iig_normalizer(double a, double b) {
  const double log_m = log_iig_normalizer(a, b);
  if (!(log_m < std::log(std::numeric_limits<double>::max()))) {
    throw NumericalError("iig_normalizer overflows for a = " + std::to_string(a) +
                         ", b = " + std::to_string(b));
  }
  return std::exp(log_m);
}

// ---------------------------------------------------------------------------

HyperPrior HyperPrior::inverse_gamma(double a, double b) {
  require_positive(a, b, "inverse-gamma hyperprior");
  return HyperPrior(InverseGamma{a, b});
}

HyperPrior HyperPrior::hyper_g_over_n(double n) {
  if (!(n >= 1.0) || !std::isfinite(n)) throw DomainError("hyper-g/n prior: n must be at least 1");
  return HyperPrior(HyperGOverN{n});
}

HyperPrior HyperPrior::incomplete_inverse_gamma(double a, double b) {
  require_positive(a, b, "incomplete inverse-gamma hyperprior");
  return HyperPrior(IncompleteInverseGamma{a, b, log_iig_normalizer(a, b)});
}

HyperPrior HyperPrior::custom(std::function<double(double)> log_density_g, std::string name) {
  if (!log_density_g) throw DomainError("custom hyperprior needs a log-density");
  HyperPrior prior(Custom{std::move(log_density_g), std::move(name)});
  const double total = integrate_z_density([&prior](double z) { return prior.log_density_z(z); });
  if (!(std::abs(total - 1.0) <= 1e-4)) {
    std::ostringstream os;
    os << "custom hyperprior is not proper: density integrates to " << total;
    throw DomainError(os.str());
  }
  return prior;
}

HyperPrior HyperPrior::empirical_bayes() { return HyperPrior(EmpiricalBayes{}); }

double HyperPrior::log_density_g(double g) const {
  if (!(g > 0.0)) throw DomainError("hyperprior density requires g > 0");
  return std::visit(
      Overloaded{
          [g](const InverseGamma& p) {
            return p.a * std::log(p.b) - std::lgamma(p.a) - (p.a + 1.0) * std::log(g) - p.b / g;
          },
          [g](const HyperGOverN& p) { return -std::log(p.n) - 2.0 * std::log1p(g / p.n); },
          [g](const IncompleteInverseGamma& p) {
            return p.log_normalizer - (p.a + 1.0) * std::log1p(g) - p.b / (1.0 + g);
          },
          [g](const Custom& p) { return p.log_density_g(g); },
          [](const EmpiricalBayes&) -> double {
            throw UnsupportedError("empirical Bayes has no hyperprior density");
          },
      },
      kind_);
}

double HyperPrior::log_density_z(double z) const {
  if (std::isnan(z)) throw DomainError("hyperprior density at NaN");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  // Written in z directly: heavy-tailed priors keep mass far beyond the
  // range where exp(z) is representable.
  return std::visit(
      Overloaded{
          [z](const InverseGamma& p) {
            return p.a * std::log(p.b) - std::lgamma(p.a) - p.a * z - p.b * std::exp(-z);
          },
          [z](const HyperGOverN& p) { return -std::log(p.n) - 2.0 * softplus(z - std::log(p.n)) + z; },
          [z](const IncompleteInverseGamma& p) {
            return p.log_normalizer - (p.a + 1.0) * softplus(z) - p.b / (1.0 + std::exp(z)) + z;
          },
          [z, neg_inf](const Custom& p) {
            const double g = std::exp(z);
            if (g == 0.0 || std::isinf(g)) return neg_inf;
            return p.log_density_g(g) + z;
          },
          [](const EmpiricalBayes&) -> double {
            throw UnsupportedError("empirical Bayes has no hyperprior density");
          },
      },
      kind_);
}

std::string HyperPrior::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&os](const InverseGamma& p) { os << "IG(" << p.a << ", " << p.b << ")"; },
                 [&os](const HyperGOverN& p) { os << "hyper-g/n(n=" << p.n << ")"; },
                 [&os](const IncompleteInverseGamma& p) { os << "IIG(" << p.a << ", " << p.b << ")"; },
                 [&os](const Custom& p) { os << "custom(" << p.name << ")"; },
                 [&os](const EmpiricalBayes&) { os << "EB"; },
             },
             kind_);
  return os.str();
}

double integrate_z_density(const std::function<double(double)>& log_density_z) {
  boost::math::quadrature::sinh_sinh<double> integrator(12);
  auto f = [&log_density_z](double z) {
    const double v = log_density_z(z);
    return std::isfinite(v) ? std::exp(v) : 0.0;
  };
  return integrator.integrate(f, 1e-10);
}

}  // namespace hyperg
