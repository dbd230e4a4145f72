// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/errors.hpp"
#include "hyperg/family.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hyperg;

namespace {

std::vector<FamilyLink> constructible() {
  return {FamilyLink::make(Family::gaussian, Link::identity),
          FamilyLink::make(Family::bernoulli, Link::logit),
          FamilyLink::make(Family::bernoulli, Link::probit),
          FamilyLink::make(Family::bernoulli, Link::cloglog),
          FamilyLink::make(Family::bernoulli, Link::cauchit),
          FamilyLink::make(Family::poisson, Link::log),
          FamilyLink::make(Family::gamma, Link::log)};
}

}  // namespace

TEST_SUITE("family") {

TEST_CASE("c-values in closed form") {
  const double pi = std::numbers::pi;
  const double e = std::numbers::e;
  CHECK(link_constant(FamilyLink::make(Family::gaussian, Link::identity)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(link_constant(FamilyLink::make(Family::bernoulli, Link::logit)) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(link_constant(FamilyLink::make(Family::bernoulli, Link::probit)) == doctest::Approx(pi / 2).epsilon(1e-12));
  CHECK(link_constant(FamilyLink::make(Family::bernoulli, Link::cloglog)) == doctest::Approx(e - 1).epsilon(1e-12));
  CHECK(link_constant(FamilyLink::make(Family::bernoulli, Link::cauchit)) == doctest::Approx(pi * pi / 4).epsilon(1e-12));
  CHECK(link_constant(FamilyLink::make(Family::poisson, Link::log)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(link_constant(FamilyLink::make(Family::gamma, Link::log)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("c equals v(h(0)) / h'(0)^2 from the family and link pieces") {
  for (const auto& fl : constructible()) {
    CAPTURE(fl.family_name());
    CAPTURE(fl.link_name());
    // h'(0) by finite differences, independent of response_derivative
    const double h = 1e-5;
    const double d = (fl.response(h) - fl.response(-h)) / (2 * h);
    const double c = fl.variance(fl.response(0.0)) / (d * d);
    CHECK(std::abs(link_constant(fl) - c) <= 1e-8 * c);
    CHECK(std::abs(link_constant(fl) - fl.variance(fl.response(0.0)) /
                                           std::pow(fl.response_derivative(0.0), 2)) <= 1e-12 * c);
  }
}

TEST_CASE("pairs without a unique prior mode are rejected") {
  CHECK_THROWS_AS(FamilyLink::make(Family::poisson, Link::identity), DomainError);
  CHECK_THROWS_AS(FamilyLink::make(Family::gaussian, Link::log), DomainError);
  CHECK_THROWS_AS(FamilyLink::make(Family::inverse_gaussian, Link::log), DomainError);
  CHECK_THROWS_AS(FamilyLink::parse("bernoulli", "identity"), DomainError);
  CHECK(FamilyLink::parse("bernoulli", "logit").canonical());
  CHECK_FALSE(FamilyLink::parse("bernoulli", "probit").canonical());
}

TEST_CASE("logit response derivatives at zero") {
  const auto fl = FamilyLink::make(Family::bernoulli, Link::logit);
  const auto d = response_derivatives(fl, 0.0, 3);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(std::abs(d[1]) < 1e-15);
  CHECK(d[2] == doctest::Approx(-0.125).epsilon(1e-14));
}

TEST_CASE("response derivatives match finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  const std::vector<FamilyLink> canon = {FamilyLink::make(Family::gaussian, Link::identity),
                                         FamilyLink::make(Family::bernoulli, Link::logit),
                                         FamilyLink::make(Family::poisson, Link::log)};
  for (const auto& fl : canon) {
    for (int r = 0; r < 20; ++r) {
      const double eta = unif(rng);
      const auto d = response_derivatives(fl, eta, 6);
      // derivative m from derivative m-1 by a central difference
      const double h = 1e-4;
      for (int m = 1; m <= 4; ++m) {
        double fd;
        if (m == 1) {
          fd = (fl.response(eta + h) - fl.response(eta - h)) / (2 * h);
        } else {
          fd = (response_derivatives(fl, eta + h, m - 1)[static_cast<std::size_t>(m - 2)] -
                response_derivatives(fl, eta - h, m - 1)[static_cast<std::size_t>(m - 2)]) /
               (2 * h);
        }
        CHECK(std::abs(d[static_cast<std::size_t>(m - 1)] - fd) <= 1e-5);
      }
    }
  }
  CHECK_THROWS_AS(response_derivatives(FamilyLink::make(Family::bernoulli, Link::probit), 0.0, 2),
                  UnsupportedError);
}

TEST_CASE("log kernel is stable far out") {
  const auto fl = FamilyLink::make(Family::bernoulli, Link::logit);
  CHECK(std::isfinite(fl.log_kernel(1.0, 800.0)));
  CHECK(std::isfinite(fl.log_kernel(0.0, -800.0)));
  CHECK(fl.log_kernel(1.0, 800.0) == doctest::Approx(0.0));
  const auto g = FamilyLink::make(Family::gaussian, Link::identity);
  CHECK(g.log_kernel(2.0, 2.0) == 0.0);
}

}  // TEST_SUITE
