#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "tensorlim/errors.hpp"

namespace tensorlim {

// Symmetric PSD matrix. Construction symmetrizes (m+m^T)/2 after checking the
// asymmetry is within 1e-12 relative tolerance; the eigenvalue gate is applied
// by the factorizing operations.
class PsdMatrix {
 public:
  PsdMatrix() = default;
  explicit PsdMatrix(const Eigen::MatrixXd& m);

  static PsdMatrix identity(int dim);
  static PsdMatrix zero(int dim);
  // Skips the symmetry check; caller guarantees m is symmetric.
  static PsdMatrix from_symmetric(Eigen::MatrixXd m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

struct PsdTuple {
  std::vector<PsdMatrix> blocks;

  PsdTuple() = default;
  explicit PsdTuple(std::vector<PsdMatrix> b);
  static PsdTuple zero(int k, int dim);

  int k() const { return static_cast<int>(blocks.size()); }
  int dim() const { return blocks.empty() ? 0 : blocks.front().dim(); }
};

double frobenius_distance(const PsdTuple& a, const PsdTuple& b);

// Symmetric square root; eigenvalues in [-1e-8*specnorm, 0) are clipped to
// zero, anything below that raises NotPsd.
PsdMatrix psd_sqrt(const PsdMatrix& m);

// Frobenius-nearest PSD matrix (eigenvalue clipping at zero).
PsdMatrix psd_project(const Eigen::MatrixXd& m);

// <gram, qs[0] x ... x qs[q-1]> with gram a d^q x d^q symmetric matrix.
// Contracts slot by slot; the Kronecker product is never materialized.
double kron_contract(const Eigen::MatrixXd& gram, std::span<const PsdMatrix> qs);

// Partial derivative of kron_contract with respect to qs[slot]; symmetric.
Eigen::MatrixXd kron_contract_grad(const Eigen::MatrixXd& gram,
                                   std::span<const PsdMatrix> qs, int slot);

}  // namespace tensorlim
