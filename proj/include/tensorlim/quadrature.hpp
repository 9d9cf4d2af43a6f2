#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tensorlim {

// Gauss-Hermite rule transformed so that sum_i w_i g(x_i) = E[g(Z)], Z ~ N(0,1).
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Golub-Welsch on the Jacobi matrix; results are cached per n.
const GaussHermiteRule& gauss_hermite(int n);

// Kronecker (R_d) low-discrepancy sequence on [0,1)^dim with an additive shift.
class RSequence {
 public:
  RSequence(int dim, uint64_t shift_seed);
  // Writes the i-th point into out[0..dim).
  void point(int64_t i, double* out) const;
  int dim() const { return static_cast<int>(alpha_.size()); }

 private:
  std::vector<double> alpha_;
  std::vector<double> shift_;
};

}  // namespace tensorlim
