#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "tensorlim/channel.hpp"
#include "tensorlim/prior.hpp"
#include "tensorlim/psd.hpp"

namespace tensorlim {

// One instance of the multilinear interaction class: couplings A_kappa
// (m x d^q, kappa in [k]^q row-major), a finite-support prior with d-dim
// features, type weights beta, side information and SNR t.
struct MultilinearModel {
  int q = 2, m = 1, d = 1, k = 1;
  std::vector<Eigen::MatrixXd> couplings;  // k^q entries
  std::vector<Eigen::MatrixXd> grams;      // cached A^T A
  TypeWeights weights;
  ChannelSpec channel;
  PsdTuple side_info;
  double snr_t = 0;
};

// Validates shapes, fills grams and zero side_info if absent.
void finalize_model(MultilinearModel& model);

int64_t kappa_count(const MultilinearModel& model);
void kappa_digits(int64_t flat, int q, int k, int* out);

// Coupling term sum_kappa beta_{k1}...beta_{kq} <A^T A, Q_{k1} x ... x Q_{kq}>
// and its per-type gradient (beta-weighted convention throughout).
double coupling_value(const MultilinearModel& model, const PsdTuple& Q);
std::vector<Eigen::MatrixXd> coupling_grad(const MultilinearModel& model,
                                           const PsdTuple& Q);

// Potential Psi(Q,S) = sum_j beta_j H(S_j + ring S_j)
//   - 1/2 sum_j beta_j <S_j, Q_j> + (t/2) * coupling_value(Q).
ValueWithError psi(const MultilinearModel& model, const PsdTuple& Q,
                   const PsdTuple& S);

struct PsiGrads {
  std::vector<Eigen::MatrixXd> dQ, dS;
  double error = 0;
};
PsiGrads psi_grads(const MultilinearModel& model, const PsdTuple& Q,
                   const PsdTuple& S);

// Lifted matrix tensor product embedding: features e_{type} x phi(theta) in
// R^{dk}, stacked coupling A_hat, slot permutation realizing Pi_q, and the
// orthogonal projector family U_kappa (diagonal 0/1 masks in the source basis).
struct LiftedModel {
  MultilinearModel base;
  int lifted_dim = 0;                 // d*k
  Eigen::MatrixXd a_hat;              // m x (dk)^q
  std::vector<int64_t> slot_permutation;  // source index -> target index
  std::vector<std::vector<int>> type_digits;  // per source index, q type digits
};

LiftedModel lift(const MultilinearModel& model);

std::vector<uint8_t> projector_mask(const LiftedModel& lifted,
                                    std::span<const int> kappa);
// P_q(M): zero out entries whose row/col type-digit patterns differ.
Eigen::MatrixXd apply_projector_family(const LiftedModel& lifted,
                                       const Eigen::MatrixXd& m);
// P_1 on dk x dk matrices (block-diagonal restriction by type).
Eigen::MatrixXd apply_p1(int d, int k, const Eigen::MatrixXd& m);

struct LiftedCheck {
  double lhs = 0, rhs = 0, error = 0;
};
// Lemma-style identity: Psi^P(P1(Qhat), P1(Shat)) against the base potential
// evaluated at the extracted d x d blocks (paper convention with Q_j unscaled).
LiftedCheck lifted_identity_check(const LiftedModel& lifted, const PsdMatrix& q_hat,
                                  const PsdMatrix& s_hat);

}  // namespace tensorlim
