#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tensorlim/prior.hpp"
#include "tensorlim/saddle.hpp"

namespace tensorlim {

// Inverse-noise profile Omega on [0,1]^q, cell-centered samples on a uniform
// grid with `resolution` points per axis; infinite variance encodes as zero.
struct VarianceProfile {
  int q = 2;
  int resolution = 2;
  std::vector<double> values;  // resolution^q, row-major
  double bound = 0;
};

VarianceProfile make_profile(int q, int resolution, std::vector<double> values);

// Piecewise-constant stepping of Omega^2 over the dyadic partition with k
// intervals; values are exact cell averages of the squared grid.
struct SteppedProfile {
  int q = 2;
  int k = 1;
  std::vector<double> values;  // k^q
  TypeWeights beta;            // interval lengths
};

SteppedProfile step(const VarianceProfile& profile, int k);
// Re-stepping to the same or a coarser dyadic partition (k_coarse divides k).
SteppedProfile restep(const SteppedProfile& sp, int k_coarse);
// L2([0,1]^q) distance between the squared profile and its stepping.
double stepping_l2_error(const VarianceProfile& profile, const SteppedProfile& sp);

// k-type multilinear model with A_kappa^T A_kappa = Omega_k^2(kappa) b b^T.
MultilinearModel reduce(const SteppedProfile& sp, const Eigen::VectorXd& b,
                        const DiscretePrior& prior, double t, uint64_t seed = 1);

struct HeteroCurve {
  std::vector<int> ks;
  std::vector<SaddleResult> results;
  double limit_estimate = 0;  // last F^(k)
  double cauchy_gap = 0;      // F^(k_max) - F^(k_max/2)
};

HeteroCurve hetero_free_energy(const VarianceProfile& profile,
                               const Eigen::VectorXd& b, const DiscretePrior& prior,
                               double t, const std::vector<int>& k_sequence,
                               const SaddleConfig& cfg, uint64_t seed = 1);

}  // namespace tensorlim
