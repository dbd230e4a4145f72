// Apache License, Version 2.0, refer to LICENSE.txt

#include "hyperg/errors.hpp"
#include "hyperg/model_space.hpp"
#include "hyperg/numerics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <unordered_set>

using namespace hyperg;

TEST_SUITE("dataset") {

TEST_CASE("validation") {
  const auto gauss = FamilyLink::make(Family::gaussian, Link::identity);
  const auto bern = FamilyLink::make(Family::bernoulli, Link::logit);
  const auto pois = FamilyLink::make(Family::poisson, Link::log);
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  Eigen::VectorXd y(3);
  y << 0, 1, 0;
  CHECK_NOTHROW(Dataset(y, x, 1.0, bern));
  CHECK_THROWS_AS(Dataset(y, x, 0.0, gauss), DataError);
  CHECK_THROWS_AS(Dataset(y, x, Eigen::VectorXd::Constant(3, -1.0), 1.0, gauss), DataError);
  Eigen::VectorXd yb(3);
  yb << 0, 2, 0;
  CHECK_THROWS_AS(Dataset(yb, x, 1.0, bern), DataError);
  Eigen::VectorXd yp(3);
  yp << 0.5, 0.5, 1.0;
  CHECK_THROWS_AS(Dataset(yp, x, 1.0, bern), DataError);               // 0.5 successes of 1
  CHECK_NOTHROW(Dataset(yp, x, Eigen::VectorXd::Constant(3, 2.0), 1.0, bern));  // 1 of 2
  Eigen::VectorXd yn(3);
  yn << 1, -1, 0;
  CHECK_THROWS_AS(Dataset(yn, x, 1.0, pois), DataError);
  Eigen::MatrixXd xn = x;
  xn(1, 0) = std::nan("");
  CHECK_THROWS_AS(Dataset(y, xn, 1.0, gauss), DataError);
  CHECK_THROWS_AS(Dataset(y, x, 1.0, gauss, {"a", "b"}), DataError);
}

TEST_CASE("shift to positive") {
  Eigen::MatrixXd x(3, 2);
  x << 0, 1, 2, 2, -1, 3;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const Dataset ds(y, x, 1.0, FamilyLink::make(Family::gaussian, Link::identity));
  const Dataset s = ds.shifted_to_positive();
  CHECK(s.covariate_shift()[0] == 2.0);
  CHECK(s.covariate_shift()[1] == 0.0);
  CHECK(s.x_raw().col(0).minCoeff() == 1.0);
  CHECK(s.x_raw().col(1) == ds.x_raw().col(1));
}

}  // TEST_SUITE

TEST_SUITE("model_space") {

TEST_CASE("fp tuples: 45 per covariate, ordinal round trip") {
  std::set<std::vector<double>> seen;
  for (int o = 0; o < kFpTuplesPerCovariate; ++o) {
    const FpTuple t = FpTuple::from_ordinal(o);
    CHECK(t.ordinal() == o);
    seen.insert(t.powers());
  }
  CHECK(seen.size() == 45);
  CHECK(FpTuple::from_ordinal(0).degree() == 0);
  const double bad[] = {1.5};
  CHECK_THROWS_AS(FpTuple::from_powers(bad), DomainError);
}

TEST_CASE("fp transform") {
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, 4.0;
  const double p0[] = {0.0};
  auto cols = fp_transform(x, FpTuple::from_powers(p0));
  REQUIRE(cols.size() == 1);
  CHECK(cols[0][2] == doctest::Approx(std::log(4.0)));
  const double rep[] = {-0.5, -0.5};
  cols = fp_transform(x, FpTuple::from_powers(rep));
  REQUIRE(cols.size() == 2);
  CHECK(cols[0][1] == doctest::Approx(std::pow(2.0, -0.5)));
  CHECK(cols[1][1] == doctest::Approx(std::pow(2.0, -0.5) * std::log(2.0)));
  const double two[] = {-2.0, 3.0};
  cols = fp_transform(x, FpTuple::from_powers(two));
  CHECK(cols[0][2] == doctest::Approx(1.0 / 16.0));
  CHECK(cols[1][2] == doctest::Approx(64.0));
  Eigen::VectorXd neg(2);
  neg << 1.0, 0.0;
  CHECK_THROWS(fp_transform(neg, FpTuple::from_powers(p0)));
}

TEST_CASE("index text round trip") {
  for (const auto& g : enumerate_models(SpaceKind::variable_selection, 5)) {
    CHECK(ModelIndex::parse(g.to_string()) == g);
  }
  for (const auto& g : enumerate_models(SpaceKind::fractional_polynomial, 2)) {
    CHECK(ModelIndex::parse(g.to_string()) == g);
  }
  const auto g = ModelIndex::parse("x1:();x2:(1);x3:(-0.5,-0.5)");
  CHECK(g.size() == 3);
  CHECK_FALSE(g.includes(0));
  CHECK(g.includes(2));
  CHECK_THROWS(ModelIndex::parse("10a1"));
}

TEST_CASE("model prior normalizes exactly") {
  for (int m = 1; m <= 12; ++m) {
    const auto models = enumerate_models(SpaceKind::variable_selection, m);
    CHECK(models.size() == (std::size_t{1} << m));
    std::vector<double> lp;
    for (const auto& g : models) lp.push_back(model_log_prior(g));
    CHECK(std::abs(std::exp(log_sum_exp(lp)) - 1.0) <= 1e-12);
  }
  for (int m = 1; m <= 2; ++m) {
    const auto models = enumerate_models(SpaceKind::fractional_polynomial, m);
    CHECK(models.size() == static_cast<std::size_t>(std::pow(45, m)));
    std::vector<double> lp;
    for (const auto& g : models) lp.push_back(model_log_prior(g));
    CHECK(std::abs(std::exp(log_sum_exp(lp)) - 1.0) <= 1e-12);
  }
  // multiplicity adjustment: each model size carries mass 1/(m+1)
  std::map<int, double> by_size;
  for (const auto& g : enumerate_models(SpaceKind::variable_selection, 6)) {
    by_size[g.size()] += std::exp(model_log_prior(g));
  }
  for (const auto& [k, mass] : by_size) CHECK(mass == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("enumeration is complete and distinct") {
  const auto models = enumerate_models(SpaceKind::fractional_polynomial, 2);
  std::unordered_set<ModelIndex, ModelIndexHash> set(models.begin(), models.end());
  CHECK(set.size() == models.size());
  CHECK_THROWS_AS(enumerate_models(SpaceKind::fractional_polynomial, 7), DomainError);
}

TEST_CASE("neighbor kernel: probabilities sum to one, ratio is consistent") {
  std::mt19937_64 rng(5);
  for (auto kind : {SpaceKind::variable_selection, SpaceKind::fractional_polynomial}) {
    const auto models = enumerate_models(kind, 2);
    for (std::size_t i = 0; i < models.size(); i += 7) {
      const auto& g = models[i];
      double total = 0.0;
      for (const auto& nb : neighbors(g)) {
        CHECK(nb != g);
        total += std::exp(log_neighbor_probability(g, nb));
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      for (int r = 0; r < 5; ++r) {
        const NeighborProposal prop = propose_neighbor(g, rng);
        CHECK(prop.log_proposal_ratio ==
              doctest::Approx(log_neighbor_probability(prop.model, g) -
                              log_neighbor_probability(g, prop.model)));
      }
    }
  }
}

TEST_CASE("every model is reachable from the null model") {
  for (auto [kind, m] : {std::pair{SpaceKind::variable_selection, 5}, std::pair{SpaceKind::fractional_polynomial, 2}}) {
    const ModelIndex start = ModelIndex::null_model(kind, m);
    std::unordered_set<ModelIndex, ModelIndexHash> seen{start};
    std::queue<ModelIndex> q;
    q.push(start);
    while (!q.empty()) {
      const ModelIndex g = q.front();
      q.pop();
      for (const auto& nb : neighbors(g)) {
        if (seen.insert(nb).second) q.push(nb);
      }
    }
    CHECK(seen.size() == static_cast<std::size_t>(model_space_size(kind, m)));
  }
}

TEST_CASE("design is centered by the weighted mean") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> norm;
  Eigen::MatrixXd x(20, 2);
  for (int i = 0; i < 20; ++i) x.row(i) << norm(rng), 1.0 + std::abs(norm(rng));
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(20, 1.0, 3.0);
  const Dataset ds(Eigen::VectorXd::Ones(20), x, w, 1.0, FamilyLink::make(Family::poisson, Link::log));
  const auto d = build_design(ds, ModelIndex::variable_selection({true, true}));
  CHECK(d.p == 2);
  CHECK(std::abs(w.dot(d.x_centered.col(0))) < 1e-12);
  CHECK(std::abs(w.dot(d.x_centered.col(1))) < 1e-12);
  const auto fp = build_design(ds.shifted_to_positive(), ModelIndex::parse("x1:(0,1);x2:(2)"));
  CHECK(fp.p == 3);
}

}  // TEST_SUITE
