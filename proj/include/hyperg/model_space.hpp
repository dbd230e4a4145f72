// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "hyperg/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hyperg {

enum class SpaceKind { variable_selection, fractional_polynomial };

/// The fixed fractional polynomial power set, in ascending order.
inline constexpr std::array<double, 8> kFpPowers = {-2.0, -1.0, -0.5, 0.0,
                                                    0.5,  1.0,  2.0,  3.0};

/// Number of distinct power tuples per covariate: the empty tuple, 8 single
/// powers and 36 unordered pairs (repeats allowed).
inline constexpr int kFpTuplesPerCovariate = 45;

/// A sorted multiset of at most two fractional polynomial powers, stored as
/// indices into kFpPowers.
class FpTuple {
 public:
  FpTuple() = default;

  /// From power values; each must be an element of kFpPowers.
  static FpTuple from_powers(std::span<const double> powers);
  /// From indices into kFpPowers.
  static FpTuple from_indices(std::span<const int> indices);

  int degree() const { return degree_; }
  int index(int slot) const { return idx_[static_cast<std::size_t>(slot)]; }
  double power(int slot) const { return kFpPowers[static_cast<std::size_t>(idx_[static_cast<std::size_t>(slot)])]; }
  std::vector<double> powers() const;

  /// Position in the canonical 0..44 ordering (0 = empty).
  int ordinal() const;
  static FpTuple from_ordinal(int ordinal);

  std::string to_string() const;

  friend auto operator<=>(const FpTuple&, const FpTuple&) = default;

 private:
  std::array<std::int8_t, 2> idx_{0, 0};
  std::int8_t degree_ = 0;
};

/// Identifies a model: an inclusion bitset or a per-covariate FP tuple list.
class ModelIndex {
 public:
  static ModelIndex variable_selection(std::vector<bool> bits);
  static ModelIndex fractional_polynomial(std::vector<FpTuple> tuples);
  static ModelIndex null_model(SpaceKind kind, int m);

  SpaceKind kind() const { return kind_; }
  int num_covariates() const;
  /// Total design column count p_gamma.
  int size() const;
  bool includes(int k) const;

  const std::vector<bool>& bits() const { return bits_; }
  const std::vector<FpTuple>& tuples() const { return tuples_; }

  /// Canonical text: "1011001" or "x1:(-2);x2:();x3:(0,3)".
  std::string to_string() const;
  static ModelIndex parse(std::string_view text);

  friend bool operator==(const ModelIndex&, const ModelIndex&) = default;
  friend std::strong_ordering operator<=>(const ModelIndex& a, const ModelIndex& b);

 private:
  SpaceKind kind_ = SpaceKind::variable_selection;
  std::vector<bool> bits_;
  std::vector<FpTuple> tuples_;
};

struct ModelIndexHash {
  std::size_t operator()(const ModelIndex& index) const;
};

/// Centered design matrix of one model.
struct DesignMatrix {
  Eigen::MatrixXd x_centered;      // n x p_gamma
  Eigen::VectorXd column_means;    // weighted means removed by centering
  int p = 0;
  ModelIndex parent;
};

/// FP columns of a strictly positive covariate. Distinct powers give
/// (x^p1, x^p2) with x^0 = log x; a repeated power p gives (x^p, x^p log x).
std::vector<Eigen::VectorXd> fp_transform(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          const FpTuple& powers,
                                          std::string_view covariate_name = "x");

DesignMatrix build_design(const Dataset& ds, const ModelIndex& gamma);

/// Log prior model probability: multiplicity-adjusted for variable selection,
/// product of per-covariate FP tuple probabilities otherwise.
double model_log_prior(const ModelIndex& gamma);

/// Number of models in the full space.
double model_space_size(SpaceKind kind, int m);

/// Every model exactly once in a deterministic order. Throws when the space
/// exceeds `cap` models.
std::vector<ModelIndex> enumerate_models(SpaceKind kind, int m, double cap = 1e6);

struct NeighborProposal {
  ModelIndex model;
  double log_proposal_ratio;  // log q(gamma | gamma') - log q(gamma' | gamma)
};

/// Log probability that propose_neighbor moves `from` to `to`; -inf when `to`
/// is not a neighbor.
double log_neighbor_probability(const ModelIndex& from, const ModelIndex& to);

/// All distinct neighbors of a model under the move kernel.
std::vector<ModelIndex> neighbors(const ModelIndex& gamma);

/// One local move. FP: a covariate uniformly, then a move type uniformly among
/// the applicable {add, remove, replace}, then a distinct result uniformly.
/// Variable selection: flip one uniformly chosen bit.
NeighborProposal propose_neighbor(const ModelIndex& gamma, std::mt19937_64& rng);

}  // namespace hyperg
