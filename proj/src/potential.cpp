#include "tensorlim/potential.hpp"

#include <cmath>

#include "tensorlim/errors.hpp"

namespace tensorlim {

namespace {

int64_t ipow(int b, int e) {
  int64_t v = 1;
  for (int i = 0; i < e; ++i) v *= b;
  return v;
}

void gather_slots(const MultilinearModel& model, const PsdTuple& Q,
                  const int* digits, std::vector<PsdMatrix>& out) {
  out.clear();
  for (int p = 0; p < model.q; ++p) out.push_back(Q.blocks[digits[p]]);
}

}  // namespace

void finalize_model(MultilinearModel& model) {
  const int64_t kq = ipow(model.k, model.q);
  const int64_t dq = ipow(model.d, model.q);
  if (static_cast<int64_t>(model.couplings.size()) != kq)
    throw DimensionMismatchError("need k^q coupling matrices");
  for (const auto& a : model.couplings) {
    if (a.rows() != model.m || a.cols() != dq)
      throw DimensionMismatchError("coupling matrix must be m x d^q");
    if (!a.allFinite()) throw ConfigError("non-finite coupling entry");
  }
  if (model.weights.k() != model.k) throw DimensionMismatchError("type weights size");
  if (model.channel.prior.dim() != model.d)
    throw DimensionMismatchError("prior feature dim != d");
  if (model.snr_t < 0) throw ConfigError("t must be nonnegative");
  if (model.side_info.blocks.empty())
    model.side_info = PsdTuple::zero(model.k, model.d);
  if (model.side_info.k() != model.k || model.side_info.dim() != model.d)
    throw DimensionMismatchError("side_info shape");
  model.grams.clear();
  model.grams.reserve(model.couplings.size());
  for (const auto& a : model.couplings) {
    Eigen::MatrixXd g = a.transpose() * a;
    model.grams.push_back(0.5 * (g + g.transpose()));
  }
}

int64_t kappa_count(const MultilinearModel& model) { return ipow(model.k, model.q); }

void kappa_digits(int64_t flat, int q, int k, int* out) {
  for (int p = q - 1; p >= 0; --p) {
    out[p] = static_cast<int>(flat % k);
    flat /= k;
  }
}

double coupling_value(const MultilinearModel& model, const PsdTuple& Q) {
  std::vector<int> digits(model.q);
  std::vector<PsdMatrix> slots;
  double total = 0;
  for (int64_t flat = 0; flat < kappa_count(model); ++flat) {
    kappa_digits(flat, model.q, model.k, digits.data());
    double bw = 1.0;
    for (int p = 0; p < model.q; ++p) bw *= model.weights.beta(digits[p]);
    if (bw == 0.0) continue;
    gather_slots(model, Q, digits.data(), slots);
    total += bw * kron_contract(model.grams[flat], slots);
  }
  return total;
}

std::vector<Eigen::MatrixXd> coupling_grad(const MultilinearModel& model,
                                           const PsdTuple& Q) {
  std::vector<Eigen::MatrixXd> grad(model.k,
                                    Eigen::MatrixXd::Zero(model.d, model.d));
  std::vector<int> digits(model.q);
  std::vector<PsdMatrix> slots;
  for (int64_t flat = 0; flat < kappa_count(model); ++flat) {
    kappa_digits(flat, model.q, model.k, digits.data());
    double bw = 1.0;
    for (int p = 0; p < model.q; ++p) bw *= model.weights.beta(digits[p]);
    if (bw == 0.0) continue;
    gather_slots(model, Q, digits.data(), slots);
    for (int p = 0; p < model.q; ++p)
      grad[digits[p]] += bw * kron_contract_grad(model.grams[flat], slots, p);
  }
  return grad;
}

ValueWithError psi(const MultilinearModel& model, const PsdTuple& Q,
                   const PsdTuple& S) {
  if (Q.k() != model.k || S.k() != model.k || Q.dim() != model.d ||
      S.dim() != model.d)
    throw DimensionMismatchError("psi argument shape");
  double value = 0, err = 0;
  for (int j = 0; j < model.k; ++j) {
    const double bj = model.weights.beta(j);
    if (bj == 0) continue;
    PsdMatrix arg = PsdMatrix::from_symmetric(S.blocks[j].mat() +
                                              model.side_info.blocks[j].mat());
    ValueWithError h = channel_entropy(model.channel, arg);
    value += bj * h.value;
    err += bj * h.error;
    value -= 0.5 * bj * (S.blocks[j].mat().cwiseProduct(Q.blocks[j].mat())).sum();
  }
  value += 0.5 * model.snr_t * coupling_value(model, Q);
  return {value, err};
}

PsiGrads psi_grads(const MultilinearModel& model, const PsdTuple& Q,
                   const PsdTuple& S) {
  PsiGrads out;
  out.dQ.assign(model.k, Eigen::MatrixXd::Zero(model.d, model.d));
  out.dS.assign(model.k, Eigen::MatrixXd::Zero(model.d, model.d));
  std::vector<Eigen::MatrixXd> cg = coupling_grad(model, Q);
  for (int j = 0; j < model.k; ++j) {
    const double bj = model.weights.beta(j);
    PsdMatrix arg = PsdMatrix::from_symmetric(S.blocks[j].mat() +
                                              model.side_info.blocks[j].mat());
    OverlapGrad g = overlap_grad(model.channel, arg);
    out.error += bj * g.error;
    out.dS[j] = bj * (g.grad.mat() - 0.5 * Q.blocks[j].mat());
    out.dQ[j] = -0.5 * bj * S.blocks[j].mat() + 0.5 * model.snr_t * cg[j];
  }
  return out;
}

LiftedModel lift(const MultilinearModel& model) {
  const int dk = model.d * model.k;
  if (dk > 16) throw SizeExceededError("lifted dimension d*k exceeds 16");
  LiftedModel out;
  out.base = model;
  out.lifted_dim = dk;
  const int64_t n = ipow(dk, model.q);
  const int64_t dq = ipow(model.d, model.q);
  out.slot_permutation.resize(n);
  out.type_digits.assign(n, std::vector<int>(model.q));
  out.a_hat.resize(model.m, n);
  std::vector<int> adig(model.q), bdig(model.q);
  for (int64_t s = 0; s < n; ++s) {
    int64_t rem = s;
    for (int p = model.q - 1; p >= 0; --p) {
      int e = static_cast<int>(rem % dk);
      rem /= dk;
      adig[p] = e / model.d;
      bdig[p] = e % model.d;
    }
    int64_t aflat = 0, bflat = 0;
    for (int p = 0; p < model.q; ++p) {
      aflat = aflat * model.k + adig[p];
      bflat = bflat * model.d + bdig[p];
    }
    out.slot_permutation[s] = aflat * dq + bflat;
    out.type_digits[s] = adig;
    out.a_hat.col(s) = model.couplings[aflat].col(bflat);
  }
  return out;
}

std::vector<uint8_t> projector_mask(const LiftedModel& lifted,
                                    std::span<const int> kappa) {
  if (static_cast<int>(kappa.size()) != lifted.base.q)
    throw DimensionMismatchError("kappa length");
  std::vector<uint8_t> mask(lifted.slot_permutation.size(), 0);
  for (size_t s = 0; s < mask.size(); ++s) {
    bool match = true;
    for (int p = 0; p < lifted.base.q; ++p)
      if (lifted.type_digits[s][p] != kappa[p]) {
        match = false;
        break;
      }
    mask[s] = match ? 1 : 0;
  }
  return mask;
}

Eigen::MatrixXd apply_projector_family(const LiftedModel& lifted,
                                       const Eigen::MatrixXd& m) {
  const int64_t n = static_cast<int64_t>(lifted.slot_permutation.size());
  if (m.rows() != n || m.cols() != n)
    throw DimensionMismatchError("projector argument shape");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int64_t r = 0; r < n; ++r)
    for (int64_t c = 0; c < n; ++c)
      if (lifted.type_digits[r] == lifted.type_digits[c]) out(r, c) = m(r, c);
  return out;
}

Eigen::MatrixXd apply_p1(int d, int k, const Eigen::MatrixXd& m) {
  if (m.rows() != d * k || m.cols() != d * k)
    throw DimensionMismatchError("p1 argument shape");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d * k, d * k);
  for (int j = 0; j < k; ++j)
    out.block(j * d, j * d, d, d) = m.block(j * d, j * d, d, d);
  return out;
}

LiftedCheck lifted_identity_check(const LiftedModel& lifted, const PsdMatrix& q_hat,
                                  const PsdMatrix& s_hat) {
  const MultilinearModel& model = lifted.base;
  const int d = model.d, k = model.k, dk = lifted.lifted_dim;
  if (q_hat.dim() != dk || s_hat.dim() != dk)
    throw DimensionMismatchError("lifted check argument dim");
  const int64_t n = static_cast<int64_t>(lifted.slot_permutation.size());
  if (n > 4096) throw SizeExceededError("lifted gram too large to materialize");

  Eigen::MatrixXd p1q = apply_p1(d, k, q_hat.mat());
  Eigen::MatrixXd p1s = apply_p1(d, k, s_hat.mat());
  Eigen::MatrixXd ring_lift = Eigen::MatrixXd::Zero(dk, dk);
  for (int j = 0; j < k; ++j)
    ring_lift.block(j * d, j * d, d, d) = model.side_info.blocks[j].mat();

  LiftedCheck out;
  // Lifted entropy with known types: per-type channel on e_j x phi features.
  double lhs = 0;
  for (int j = 0; j < k; ++j) {
    const double bj = model.weights.beta(j);
    if (bj == 0) continue;
    Eigen::MatrixXd feats = Eigen::MatrixXd::Zero(dk, model.channel.prior.size());
    feats.block(j * d, 0, d, model.channel.prior.size()) =
        model.channel.prior.features;
    ChannelSpec lifted_channel{DiscretePrior(model.channel.prior.labels,
                                             model.channel.prior.weights, feats),
                               model.channel.quadrature};
    ValueWithError h = channel_entropy(
        lifted_channel, PsdMatrix::from_symmetric(p1s + ring_lift));
    lhs += bj * h.value;
    out.error += h.error;
  }
  lhs -= 0.5 * p1q.cwiseProduct(p1s).sum();
  Eigen::MatrixXd gram_hat = lifted.a_hat.transpose() * lifted.a_hat;
  Eigen::MatrixXd pq_gram =
      apply_projector_family(lifted, 0.5 * (gram_hat + gram_hat.transpose()));
  std::vector<PsdMatrix> lifted_slots(model.q,
                                      PsdMatrix::from_symmetric(p1q));
  lhs += 0.5 * model.snr_t * kron_contract(pq_gram, lifted_slots);
  out.lhs = lhs;

  // Base potential in the paper convention (no beta outside the entropy term).
  double rhs = 0;
  std::vector<PsdMatrix> qblocks, sblocks;
  for (int j = 0; j < k; ++j) {
    qblocks.push_back(PsdMatrix::from_symmetric(q_hat.mat().block(j * d, j * d, d, d)));
    sblocks.push_back(PsdMatrix::from_symmetric(s_hat.mat().block(j * d, j * d, d, d)));
  }
  for (int j = 0; j < k; ++j) {
    const double bj = model.weights.beta(j);
    if (bj == 0) continue;
    PsdMatrix arg = PsdMatrix::from_symmetric(sblocks[j].mat() +
                                              model.side_info.blocks[j].mat());
    ValueWithError h = channel_entropy(model.channel, arg);
    rhs += bj * h.value;
    out.error += h.error;
  }
  std::vector<int> digits(model.q);
  std::vector<PsdMatrix> slots;
  for (int j = 0; j < k; ++j)
    rhs -= 0.5 * qblocks[j].mat().cwiseProduct(sblocks[j].mat()).sum();
  for (int64_t flat = 0; flat < kappa_count(model); ++flat) {
    kappa_digits(flat, model.q, model.k, digits.data());
    slots.clear();
    for (int p = 0; p < model.q; ++p) slots.push_back(qblocks[digits[p]]);
    rhs += 0.5 * model.snr_t * kron_contract(model.grams[flat], slots);
  }
  out.rhs = rhs;
  return out;
}

}  // namespace tensorlim
