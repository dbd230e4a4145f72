// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/dataset.hpp"
#include "hyperg/family.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testing_support {

// Gaussian covariates, response from coefs (intercept first) plus N(0, sigma^2) noise.
inline hyperg::Dataset simulate_gaussian(int n, int m, std::uint64_t seed,
                                         const std::vector<double>& coefs, double sigma,
                                         double phi) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  Eigen::MatrixXd x(n, m);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) x(i, j) = norm(rng);
  }
  for (int i = 0; i < n; ++i) {
    double eta = coefs.empty() ? 0.0 : coefs[0];
    for (int j = 0; j < m && j + 1 < static_cast<int>(coefs.size()); ++j) eta += coefs[j + 1] * x(i, j);
    y[i] = eta + sigma * norm(rng);
  }
  return hyperg::Dataset(y, x, phi,
                         hyperg::FamilyLink::make(hyperg::Family::gaussian, hyperg::Link::identity));
}

inline hyperg::Dataset simulate_logistic(int n, int m, std::uint64_t seed,
                                         const std::vector<double>& coefs) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> unif;
  Eigen::MatrixXd x(n, m);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) x(i, j) = norm(rng);
  }
  for (int i = 0; i < n; ++i) {
    double eta = coefs.empty() ? 0.0 : coefs[0];
    for (int j = 0; j < m && j + 1 < static_cast<int>(coefs.size()); ++j) eta += coefs[j + 1] * x(i, j);
    y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return hyperg::Dataset(y, x, 1.0,
                         hyperg::FamilyLink::make(hyperg::Family::bernoulli, hyperg::Link::logit));
}

// The Pima file shipped in data/: seven covariates, diabetes indicator last.
inline hyperg::Dataset load_pima() {
  std::ifstream in(std::string(HYPERG_DATA_DIR) + "/pima.csv");
  if (!in) throw std::runtime_error("pima.csv not found");
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> r;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(std::move(r));
  }
  const int n = static_cast<int>(rows.size());
  Eigen::MatrixXd x(n, 7);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 7; ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    y[i] = rows[static_cast<std::size_t>(i)][7];
  }
  return hyperg::Dataset(y, x, 1.0,
                         hyperg::FamilyLink::make(hyperg::Family::bernoulli, hyperg::Link::logit),
                         {"npreg", "glu", "bp", "skin", "bmi", "ped", "age"});
}

}  // namespace testing_support
