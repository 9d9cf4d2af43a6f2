#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "tensorlim/psd.hpp"

namespace tensorlim {

// Finite-support parameter law with a feature table phi: atom -> R^d.
// Feature maps are stored evaluated, never as callables.
struct DiscretePrior {
  std::vector<std::string> labels;  // L entries
  Eigen::VectorXd weights;          // L, nonnegative, sums to 1
  Eigen::MatrixXd features;         // d x L

  DiscretePrior() = default;
  DiscretePrior(std::vector<std::string> labels, Eigen::VectorXd weights,
                Eigen::MatrixXd features);

  int size() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(features.rows()); }
};

struct TypeWeights {
  Eigen::VectorXd beta;  // k entries on the simplex

  TypeWeights() = default;
  explicit TypeWeights(Eigen::VectorXd b);
  static TypeWeights single() { return TypeWeights(Eigen::VectorXd::Ones(1)); }

  int k() const { return static_cast<int>(beta.size()); }
};

// Uniformly random permutation of a fixed atom vector u in [0,1]^n.
struct PermutationPrior {
  Eigen::VectorXd base_atoms;  // n entries in [0,1]

  explicit PermutationPrior(Eigen::VectorXd u);
  int n() const { return static_cast<int>(base_atoms.size()); }
};

// Empirical measure of the base atoms; features evaluated through `phi`.
DiscretePrior empirical_measure(const PermutationPrior& pp,
                                const std::function<Eigen::VectorXd(double)>& phi);

PsdMatrix second_moment(const DiscretePrior& p);

// Built-in priors.
DiscretePrior rademacher_prior();
// Uniform grid on [-range, range] with weights proportional to the standard
// normal density.
DiscretePrior quantized_gaussian_prior(int atoms = 129, double range = 6.0);
// Midpoint quantization of Unif[0,1] with identity features.
DiscretePrior quantized_uniform_prior(int atoms = 64);

}  // namespace tensorlim
