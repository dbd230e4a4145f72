// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/errors.hpp"
#include "hyperg/hyperprior.hpp"
#include "hyperg/laplace.hpp"
#include "hyperg/numerics.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace hyperg;

namespace {

std::vector<std::pair<std::string, HyperPrior>> proper_priors() {
  return {{"zellner-siow n=532", HyperPrior::zellner_siow(532)},
          {"hyper-g/n n=532", HyperPrior::hyper_g_n(532)},
          {"IG(0.001,0.001)", HyperPrior::vague_inverse_gamma()},
          {"IG(2,3)", HyperPrior::inverse_gamma(2, 3)},
          {"IIG(0.01,0.01)", HyperPrior::incomplete_inverse_gamma(0.01, 0.01)},
          {"IIG(1,10)", HyperPrior::incomplete_inverse_gamma(1, 10)}};
}

}  // namespace

TEST_SUITE("hyperprior") {

TEST_CASE("densities integrate to one on both scales") {
  boost::math::quadrature::exp_sinh<double> half_line;
  boost::math::quadrature::sinh_sinh<double> line;
  for (const auto& [name, hp] : proper_priors()) {
    CAPTURE(name);
    // g^{-1-a} tails with a near 0 are out of reach of quadrature on the g scale
    const bool light_tail = name != "IG(0.001,0.001)" && name != "IIG(0.01,0.01)";
    const auto fg = [&hp](double g) { return g > 0 ? std::exp(hp.log_density_g(g)) : 0.0; };
    const auto fz = [&hp](double z) { return std::exp(hp.log_density_z(z)); };
    const double on_z = line.integrate(fz);
    CHECK(std::abs(on_z - 1.0) <= 1e-6);
    CHECK(std::abs(integrate_z_density([&hp](double z) { return hp.log_density_z(z); }) - 1.0) <= 1e-6);
    if (!light_tail) continue;
    // g over (1, inf) directly and over (0, 1) on the log scale
    const double upper = half_line.integrate([&](double t) { return fg(1.0 + t); });
    const double lower = half_line.integrate([&](double t) { return fz(-t); });
    CHECK(std::abs(upper + lower - 1.0) <= 1e-6);
  }
}

TEST_CASE("z density is the g density plus the Jacobian") {
  for (const auto& [name, hp] : proper_priors()) {
    for (double z : {-5.0, -0.3, 0.0, 2.0, 7.5}) {
      CHECK(hp.log_density_z(z) == doctest::Approx(hp.log_density_g(std::exp(z)) + z).epsilon(1e-14));
    }
  }
}

TEST_CASE("hyper-g/n density") {
  const auto hp = HyperPrior::hyper_g_n(50);
  CHECK(hp.log_density_g(10.0) == doctest::Approx(std::log(1.0 / 50.0 / std::pow(1.2, 2))).epsilon(1e-14));
}

TEST_CASE("incomplete gamma against boost") {
  for (double a : {0.01, 0.5, 1.0, 3.5, 50.0}) {
    for (double x : {1e-3, 0.5, 2.0, 10.0, 200.0}) {
      CAPTURE(a);
      CAPTURE(x);
      const double ref = std::log(boost::math::tgamma_lower(a, x));
      CHECK(log_lower_incomplete_gamma(a, x) == doctest::Approx(ref).epsilon(1e-12));
      CHECK(regularized_lower_gamma(a, x) == doctest::Approx(boost::math::gamma_p(a, x)).epsilon(1e-12));
    }
  }
  CHECK(iig_normalizer(1.0, 10.0) == doctest::Approx(10.0 / (1.0 - std::exp(-10.0))).epsilon(1e-13));
}

TEST_CASE("bad parameters are rejected") {
  CHECK_THROWS_AS(HyperPrior::inverse_gamma(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(HyperPrior::incomplete_inverse_gamma(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(HyperPrior::hyper_g_over_n(0.5), DomainError);
  CHECK_THROWS_AS(HyperPrior::custom([](double g) { return -2.0 * g; }, "half mass"), DomainError);
  const auto ok = HyperPrior::custom([](double g) { return -2.0 * std::log1p(g); }, "hyper-g a=4");
  CHECK(ok.log_density_g(1.0) == doctest::Approx(-2.0 * std::log(2.0)));
  CHECK_THROWS_AS(HyperPrior::empirical_bayes().log_density_z(0.0), UnsupportedError);
}

}  // TEST_SUITE

TEST_SUITE("numerics") {

TEST_CASE("brent finds an interior maximum") {
  const auto f = [](double x) { return -std::pow(x - 1.234, 2) + std::sin(x) * 0.1; };
  const Maximum mx = brent_maximize(f, -3.0, 0.0, 4.0, 1e-10);
  const double h = 1e-6;
  CHECK(std::abs((f(mx.x + h) - f(mx.x - h)) / (2 * h)) < 1e-5);
}

TEST_CASE("bracketing flags the caps") {
  const Bracket b = bracket_maximum([](double x) { return -std::pow(x - 7.0, 2); }, 0.0, 2.0, 30.0);
  CHECK(b.lo < 7.0);
  CHECK(b.hi > 7.0);
  CHECK(b.f_mid >= b.f_lo);
  CHECK(b.f_mid >= b.f_hi);
  CHECK_FALSE(b.hit_upper_cap);
  const Bracket up = bracket_maximum([](double x) { return x; }, 0.0, 2.0, 30.0);
  CHECK(up.hit_upper_cap);
  const Bracket down = bracket_maximum([](double x) { return -x; }, 0.0, 2.0, 30.0);
  CHECK(down.hit_lower_cap);
}

TEST_CASE("ridders second derivative") {
  const auto f = [](double x) { return std::sin(x) + x * x * x; };
  const double x = 0.7;
  const DerivativeEstimate d = ridders_second_derivative(f, x, f(x));
  CHECK(d.value == doctest::Approx(-std::sin(x) + 6 * x).epsilon(1e-8));
}

TEST_CASE("log-sum-exp") {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> v = {1000.0, 1000.0, -inf};
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::vector<double> none = {-inf, -inf};
  CHECK(log_sum_exp(none) == -inf);
}

}  // TEST_SUITE

TEST_SUITE("gauss_hermite") {

TEST_CASE("moments are exact up to degree 2N-1") {
  for (int n : {1, 2, 5, 10, 20, 40, 64}) {
    const GaussHermiteRule r = gauss_hermite_nodes(n);
    REQUIRE(r.nodes.size() == static_cast<std::size_t>(n));
    for (int k = 0; k <= 2 * n - 1 && k <= 40; ++k) {
      double s = 0.0, scale = 0.0;
      for (int j = 0; j < n; ++j) {
        const double term = r.weights[static_cast<std::size_t>(j)] * std::pow(r.nodes[static_cast<std::size_t>(j)], k);
        s += term;
        scale += std::abs(term);
      }
      const double exact = k % 2 ? 0.0 : std::tgamma((k + 1) / 2.0);
      CAPTURE(n);
      CAPTURE(k);
      // relative to the absolute moment: odd moments cancel in floating point
      CHECK(std::abs(s - exact) <= 1e-12 * std::max(1.0, scale));
    }
  }
  CHECK_THROWS_AS(gauss_hermite_nodes(0), DomainError);
  CHECK_THROWS_AS(gauss_hermite_nodes(65), DomainError);
}

TEST_CASE("nodes are symmetric and sorted") {
  const GaussHermiteRule r = gauss_hermite_nodes(20);
  for (int j = 0; j < 20; ++j) {
    CHECK(r.nodes[static_cast<std::size_t>(j)] == -r.nodes[static_cast<std::size_t>(19 - j)]);
    CHECK(r.weights[static_cast<std::size_t>(j)] == r.weights[static_cast<std::size_t>(19 - j)]);
    if (j) CHECK(r.nodes[static_cast<std::size_t>(j)] > r.nodes[static_cast<std::size_t>(j - 1)]);
  }
  // largest node, so sqrt(2) t_20 is about 7.6
  CHECK(std::sqrt(2.0) * r.nodes.back() == doctest::Approx(7.62).epsilon(1e-2));
}

TEST_CASE("rescaled rule integrates normal times polynomial exactly") {
  // int N(z | mu, s^2) P(z) dz with P of degree 2N-1, through the
  // m_j = w_j exp(t_j^2) sqrt(2) s weights applied to the full integrand
  const int n = 20;
  const GaussHermiteRule r = gauss_hermite_nodes(n);
  const double mu = 1.3, s = 0.7;
  // P(z) = (z - mu)^(2k) has E = s^(2k) (2k-1)!!
  for (int k = 0; 2 * k <= 2 * n - 1; k += 3) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double t = r.nodes[static_cast<std::size_t>(j)];
      const double z = mu + std::sqrt(2.0) * s * t;
      const double f = std::exp(-0.5 * std::pow((z - mu) / s, 2)) / (s * std::sqrt(2 * std::numbers::pi)) *
                       std::pow(z - mu, 2 * k);
      sum += r.weights[static_cast<std::size_t>(j)] * std::exp(t * t) * std::sqrt(2.0) * s * f;
    }
    double dfact = 1.0;
    for (int i = 2 * k - 1; i > 1; i -= 2) dfact *= i;
    const double exact = std::pow(s, 2 * k) * dfact;
    CAPTURE(k);
    CHECK(sum == doctest::Approx(exact).epsilon(1e-10));
  }
}

}  // TEST_SUITE
