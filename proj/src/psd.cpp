#include "tensorlim/psd.hpp"

#include <cmath>

namespace tensorlim {

namespace {

constexpr double kSymTol = 1e-12;
constexpr double kEigGate = 1e-8;  // relative to spectral norm

void check_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw NotSymmetricError("matrix is not square");
  double asym = (m - m.transpose()).norm();
  if (asym > kSymTol * (1.0 + m.norm()))
    throw NotSymmetricError("matrix asymmetry exceeds tolerance");
}

// Contract the fastest-varying slot of a staged tensor (row/col block size d).
Eigen::MatrixXd contract_last(const Eigen::MatrixXd& t, const Eigen::MatrixXd& q) {
  const int d = static_cast<int>(q.rows());
  const int outer = static_cast<int>(t.rows()) / d;
  Eigen::MatrixXd out(outer, outer);
  for (int rh = 0; rh < outer; ++rh)
    for (int ch = 0; ch < outer; ++ch)
      out(rh, ch) = t.block(rh * d, ch * d, d, d).cwiseProduct(q).sum();
  return out;
}

// Contract the slowest-varying slot.
Eigen::MatrixXd contract_first(const Eigen::MatrixXd& t, const Eigen::MatrixXd& q) {
  const int d = static_cast<int>(q.rows());
  const int outer = static_cast<int>(t.rows()) / d;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(outer, outer);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      out += q(a, b) * t.block(a * outer, b * outer, outer, outer);
  return out;
}

int64_t checked_pow(int d, int q) {
  int64_t v = 1;
  for (int i = 0; i < q; ++i) v *= d;
  return v;
}

void check_kron_args(const Eigen::MatrixXd& gram, std::span<const PsdMatrix> qs) {
  if (qs.empty()) throw DimensionMismatchError("empty slot list");
  const int d = qs.front().dim();
  for (const auto& q : qs)
    if (q.dim() != d) throw DimensionMismatchError("slot dimension mismatch");
  const int64_t dq = checked_pow(d, static_cast<int>(qs.size()));
  if (gram.rows() != dq || gram.cols() != dq)
    throw DimensionMismatchError("gram dimension does not equal d^q");
}

}  // namespace

PsdMatrix::PsdMatrix(const Eigen::MatrixXd& m) {
  check_symmetric(m);
  m_ = 0.5 * (m + m.transpose());
}

PsdMatrix PsdMatrix::identity(int dim) {
  return from_symmetric(Eigen::MatrixXd::Identity(dim, dim));
}

PsdMatrix PsdMatrix::zero(int dim) {
  return from_symmetric(Eigen::MatrixXd::Zero(dim, dim));
}

PsdMatrix PsdMatrix::from_symmetric(Eigen::MatrixXd m) {
  PsdMatrix p;
  p.m_ = std::move(m);
  return p;
}

PsdTuple::PsdTuple(std::vector<PsdMatrix> b) : blocks(std::move(b)) {
  if (blocks.empty()) throw DimensionMismatchError("PsdTuple needs k >= 1 blocks");
  for (const auto& m : blocks)
    if (m.dim() != blocks.front().dim())
      throw DimensionMismatchError("PsdTuple blocks must share dim");
}

PsdTuple PsdTuple::zero(int k, int dim) {
  PsdTuple t;
  t.blocks.assign(k, PsdMatrix::zero(dim));
  return t;
}

double frobenius_distance(const PsdTuple& a, const PsdTuple& b) {
  if (a.k() != b.k()) throw DimensionMismatchError("tuple size mismatch");
  double s = 0;
  for (int j = 0; j < a.k(); ++j) s += (a.blocks[j].mat() - b.blocks[j].mat()).squaredNorm();
  return std::sqrt(s);
}

PsdMatrix psd_sqrt(const PsdMatrix& m) {
  const Eigen::MatrixXd& a = m.mat();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  const double specnorm = ev.cwiseAbs().maxCoeff();
  const double gate = -kEigGate * specnorm - 1e-14;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < gate) throw NotPsdError("eigenvalue below PSD tolerance");
    if (ev(i) < 0) ev(i) = 0;
  }
  Eigen::MatrixXd r = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
                      es.eigenvectors().transpose();
  return PsdMatrix::from_symmetric(0.5 * (r + r.transpose()));
}

PsdMatrix psd_project(const Eigen::MatrixXd& m) {
  check_symmetric(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return PsdMatrix::from_symmetric(0.5 * (r + r.transpose()));
}

double kron_contract(const Eigen::MatrixXd& gram, std::span<const PsdMatrix> qs) {
  check_kron_args(gram, qs);
  Eigen::MatrixXd t = gram;
  for (int p = static_cast<int>(qs.size()) - 1; p >= 1; --p)
    t = contract_last(t, qs[p].mat());
  return t.cwiseProduct(qs[0].mat()).sum();
}

Eigen::MatrixXd kron_contract_grad(const Eigen::MatrixXd& gram,
                                   std::span<const PsdMatrix> qs, int slot) {
  check_kron_args(gram, qs);
  const int q = static_cast<int>(qs.size());
  if (slot < 0 || slot >= q) throw SlotOutOfRangeError("slot out of range");
  Eigen::MatrixXd t = gram;
  for (int p = q - 1; p > slot; --p) t = contract_last(t, qs[p].mat());
  for (int p = 0; p < slot; ++p) t = contract_first(t, qs[p].mat());
  return 0.5 * (t + t.transpose());
}

}  // namespace tensorlim
