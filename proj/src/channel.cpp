#include "tensorlim/channel.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "tensorlim/errors.hpp"
#include "tensorlim/quadrature.hpp"
#include "tensorlim/rng.hpp"

namespace tensorlim {

namespace {

uint64_t hash_matrix(const Eigen::MatrixXd& m, uint64_t seed) {
  uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    uint64_t bits;
    double v = m.data()[i];
    std::memcpy(&bits, &v, sizeof(bits));
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return h;
}

struct Prepared {
  int d = 0, L = 0, r = 0;
  Eigen::MatrixXd vtv;   // L x L inner products <v_l, v_a>
  Eigen::MatrixXd gproj; // r x L projected directions U^T v_l
  std::vector<double> logw;
  uint64_t point_key = 0;
};

Prepared prepare(const ChannelSpec& spec, const PsdMatrix& s) {
  const DiscretePrior& p = spec.prior;
  if (s.dim() != p.dim()) throw DimensionMismatchError("channel S dim != feature dim");
  Prepared out;
  out.d = p.dim();
  out.L = p.size();
  PsdMatrix root = psd_sqrt(s);
  Eigen::MatrixXd v = root.mat() * p.features;  // d x L
  out.vtv = v.transpose() * v;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeThinU);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-12 * smax + 1e-300) ++r;
  out.r = r;
  out.gproj = svd.matrixU().leftCols(r).transpose() * v;  // r x L
  out.logw.resize(out.L);
  for (int l = 0; l < out.L; ++l)
    out.logw[l] = p.weights(l) > 0 ? std::log(p.weights(l))
                                   : -std::numeric_limits<double>::infinity();
  out.point_key = hash_matrix(s.mat(), spec.quadrature.seed);
  return out;
}

// Accumulates a weighted functional of the posterior over one quadrature or
// MC point: visit(outer_weight, point_weight, exponents) where
// exponents[l] = logw_l + <v_l, v_a> - |v_l|^2/2 + <g_l, xi>.
template <typename Visit>
void sweep_gauss_hermite(const ChannelSpec& spec, const Prepared& pre, Visit&& visit) {
  if (pre.r > 2) throw QuadratureUnsupportedError(
      "gauss_hermite limited to factored dimension <= 2");
  const auto& rule = gauss_hermite(spec.quadrature.gh_nodes);
  const int n = static_cast<int>(rule.nodes.size());
  Eigen::VectorXd expo(pre.L);
  for (int a = 0; a < pre.L; ++a) {
    const double wa = spec.prior.weights(a);
    if (wa <= 0) continue;
    if (pre.r == 0) {
      for (int l = 0; l < pre.L; ++l)
        expo(l) = pre.logw[l] + pre.vtv(l, a) - 0.5 * pre.vtv(l, l);
      visit(wa, 1.0, expo);
    } else if (pre.r == 1) {
      for (int i = 0; i < n; ++i) {
        const double xi = rule.nodes(i);
        for (int l = 0; l < pre.L; ++l)
          expo(l) = pre.logw[l] + pre.vtv(l, a) - 0.5 * pre.vtv(l, l) +
                    pre.gproj(0, l) * xi;
        visit(wa, rule.weights(i), expo);
      }
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double x0 = rule.nodes(i), x1 = rule.nodes(j);
          for (int l = 0; l < pre.L; ++l)
            expo(l) = pre.logw[l] + pre.vtv(l, a) - 0.5 * pre.vtv(l, l) +
                      pre.gproj(0, l) * x0 + pre.gproj(1, l) * x1;
          visit(wa, rule.weights(i) * rule.weights(j), expo);
        }
    }
  }
}

// One randomized-shift replicate of the QMC rule.
template <typename Visit>
void sweep_qmc_shift(const ChannelSpec& spec, const Prepared& pre, int shift,
                     Visit&& visit) {
  const int64_t per_shift =
      std::max<int64_t>(1, spec.quadrature.mc_samples / spec.quadrature.mc_shifts);
  RSequence seq(std::max(pre.r, 1), mix(pre.point_key, 7700 + shift));
  std::vector<double> u(std::max(pre.r, 1));
  Eigen::VectorXd xi(pre.r), expo(pre.L);
  const double pw = 1.0 / static_cast<double>(per_shift);
  for (int a = 0; a < pre.L; ++a) {
    const double wa = spec.prior.weights(a);
    if (wa <= 0) continue;
    if (pre.r == 0) {
      for (int l = 0; l < pre.L; ++l)
        expo(l) = pre.logw[l] + pre.vtv(l, a) - 0.5 * pre.vtv(l, l);
      visit(wa, 1.0, expo);
      continue;
    }
    for (int64_t i = 0; i < per_shift; ++i) {
      seq.point(i + a * per_shift, u.data());
      for (int j = 0; j < pre.r; ++j) xi(j) = inverse_normal_cdf(u[j]);
      for (int l = 0; l < pre.L; ++l)
        expo(l) = pre.logw[l] + pre.vtv(l, a) - 0.5 * pre.vtv(l, l) +
                  pre.gproj.col(l).dot(xi);
      visit(wa, pw, expo);
    }
  }
}

double logsumexp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v(i) - m);
  return m + std::log(s);
}

void check_quadrature(const Quadrature& q) {
  if (q.kind == Quadrature::Kind::QuasiMonteCarlo && q.mc_samples < 1000)
    throw ConfigError("mc_samples must be at least 10^3");
  if (q.kind == Quadrature::Kind::GaussHermite && q.gh_nodes < 1)
    throw ConfigError("gauss_hermite_nodes must be >= 1");
}

}  // namespace

ChannelSpec make_channel(DiscretePrior prior, uint64_t seed) {
  ChannelSpec spec;
  spec.quadrature.seed = seed;
  if (prior.dim() >= 2) {
    spec.quadrature.kind = Quadrature::Kind::QuasiMonteCarlo;
  }
  spec.prior = std::move(prior);
  return spec;
}

ValueWithError channel_entropy(const ChannelSpec& spec, const PsdMatrix& s) {
  check_quadrature(spec.quadrature);
  Prepared pre = prepare(spec, s);
  if (spec.quadrature.kind == Quadrature::Kind::GaussHermite) {
    double acc = 0;
    sweep_gauss_hermite(spec, pre,
                        [&](double wa, double pw, const Eigen::VectorXd& expo) {
                          acc += wa * pw * logsumexp(expo);
                        });
    return {acc, 0.0};
  }
  const int M = spec.quadrature.mc_shifts;
  std::vector<double> means(M, 0.0);
  for (int m = 0; m < M; ++m)
    sweep_qmc_shift(spec, pre, m,
                    [&](double wa, double pw, const Eigen::VectorXd& expo) {
                      means[m] += wa * pw * logsumexp(expo);
                    });
  double mean = 0;
  for (double v : means) mean += v;
  mean /= M;
  double var = 0;
  for (double v : means) var += (v - mean) * (v - mean);
  double se = M > 1 ? std::sqrt(var / (M - 1) / M) : 0.0;
  return {mean, se};
}

OverlapGrad overlap_grad(const ChannelSpec& spec, const PsdMatrix& s) {
  check_quadrature(spec.quadrature);
  Prepared pre = prepare(spec, s);
  const Eigen::MatrixXd& phi = spec.prior.features;
  Eigen::VectorXd post(pre.L);
  auto accumulate = [&](Eigen::MatrixXd& acc, double wa, double pw,
                        const Eigen::VectorXd& expo) {
    double lse = logsumexp(expo);
    for (int l = 0; l < pre.L; ++l) post(l) = std::exp(expo(l) - lse);
    Eigen::VectorXd eta = phi * post;
    acc.noalias() += (0.5 * wa * pw) * (eta * eta.transpose());
  };
  if (spec.quadrature.kind == Quadrature::Kind::GaussHermite) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(pre.d, pre.d);
    sweep_gauss_hermite(spec, pre,
                        [&](double wa, double pw, const Eigen::VectorXd& expo) {
                          accumulate(acc, wa, pw, expo);
                        });
    return {psd_project(0.5 * (acc + acc.transpose())), 0.0};
  }
  const int M = spec.quadrature.mc_shifts;
  std::vector<Eigen::MatrixXd> means(M, Eigen::MatrixXd::Zero(pre.d, pre.d));
  for (int m = 0; m < M; ++m)
    sweep_qmc_shift(spec, pre, m,
                    [&](double wa, double pw, const Eigen::VectorXd& expo) {
                      accumulate(means[m], wa, pw, expo);
                    });
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(pre.d, pre.d);
  for (const auto& v : means) mean += v;
  mean /= M;
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(pre.d, pre.d);
  for (const auto& v : means) var += (v - mean).cwiseProduct(v - mean);
  double se = M > 1 ? std::sqrt((var / (M - 1) / M).sum()) : 0.0;
  return {psd_project(0.5 * (mean + mean.transpose())), se};
}

namespace {

ConjugateResult run_conjugate(const ChannelSpec& spec, const PsdMatrix& q_half,
                              const PsdMatrix* shift) {
  const int d = spec.prior.dim();
  if (q_half.dim() != d) throw DimensionMismatchError("conjugate argument dim");
  auto shifted = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd t = shift ? (m + shift->mat()).eval() : m;
    return PsdMatrix::from_symmetric(0.5 * (t + t.transpose()));
  };
  auto objective = [&](const PsdMatrix& s) {
    return (s.mat().cwiseProduct(q_half.mat())).sum() -
           channel_entropy(spec, shifted(s.mat())).value;
  };
  PsdMatrix s = PsdMatrix::zero(d);
  double f = objective(s);
  ConjugateResult res;
  const int max_iters = 5000;
  const double grad_tol = 1e-6;
  double alpha = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd g = q_half.mat() - overlap_grad(spec, shifted(s.mat())).grad.mat();
    PsdMatrix unit_step = psd_project(s.mat() + g);
    res.residual = (unit_step.mat() - s.mat()).norm();
    res.iterations = it;
    if (res.residual <= grad_tol) {
      res.value = f;
      res.s_star = s;
      return res;
    }
    bool moved = false;
    for (int bt = 0; bt < 80; ++bt) {
      PsdMatrix cand = psd_project(s.mat() + alpha * g);
      double fc = objective(cand);
      double gain = (g.cwiseProduct(cand.mat() - s.mat())).sum();
      if (fc >= f + 1e-4 * gain && gain > 0) {
        s = cand;
        f = fc;
        moved = true;
        break;
      }
      alpha *= 0.5;
      if (alpha < 1e-14) break;
    }
    if (!moved) break;  // stalled at numerical floor
    alpha = std::min(alpha * 2.0, 1e12);
    if (s.mat().norm() > 1e6) {
      res.unbounded = true;
      res.value = f;
      res.s_star = s;
      return res;
    }
  }
  res.value = f;
  res.s_star = s;
  return res;
}

}  // namespace

ConjugateResult conjugate(const ChannelSpec& spec, const PsdMatrix& q_half) {
  return run_conjugate(spec, q_half, nullptr);
}

ConjugateResult conjugate_shifted(const ChannelSpec& spec, const PsdMatrix& q_half,
                                  const PsdMatrix& shift) {
  return run_conjugate(spec, q_half, &shift);
}

}  // namespace tensorlim
