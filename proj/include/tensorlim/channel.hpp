#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "tensorlim/prior.hpp"
#include "tensorlim/psd.hpp"

namespace tensorlim {

struct Quadrature {
  enum class Kind { GaussHermite, QuasiMonteCarlo };
  Kind kind = Kind::GaussHermite;
  int gh_nodes = 200;           // per axis
  int64_t mc_samples = 1 << 16; // total, split across shifts
  int mc_shifts = 16;
  uint64_t seed = 1;
};

// Single-letter linear Gaussian channel y = S^{1/2} phi(theta) + z.
// Gauss-Hermite is valid whenever the factored observation dimension
// (rank of span{S^{1/2} phi_l}) is at most 2; otherwise use QMC.
struct ChannelSpec {
  DiscretePrior prior;
  Quadrature quadrature;
};

// Default quadrature by feature dimension: GH(200) for d=1, QMC 2^16 above.
ChannelSpec make_channel(DiscretePrior prior, uint64_t seed = 1);

struct ValueWithError {
  double value = 0;
  double error = 0;
};

struct OverlapGrad {
  PsdMatrix grad;
  double error = 0;
};

// Relative entropy H(S) = D((S^{1/2} phi)_# P * g || g), nonnegative.
ValueWithError channel_entropy(const ChannelSpec& spec, const PsdMatrix& s);

// dH/dS = (1/2) E[eta eta^T] with eta = E[phi(theta) | y]; PSD, and
// 2*grad <= E[phi phi^T] in the PSD order.
OverlapGrad overlap_grad(const ChannelSpec& spec, const PsdMatrix& s);

struct ConjugateResult {
  double value = 0;
  PsdMatrix s_star;
  bool unbounded = false;
  double residual = 0;
  int iterations = 0;
};

// Convex conjugate H*(q) = sup_{S >= 0} <S, q> - H(S) by projected gradient
// ascent with Armijo backtracking; flags divergence (|S|_F > 1e6) as unbounded.
ConjugateResult conjugate(const ChannelSpec& spec, const PsdMatrix& q_half);

// Same with the entropy argument shifted: sup_S <S, q> - H(S + shift).
ConjugateResult conjugate_shifted(const ChannelSpec& spec, const PsdMatrix& q_half,
                                  const PsdMatrix& shift);

}  // namespace tensorlim
