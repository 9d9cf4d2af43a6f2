#include "tensorlim/approx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tensorlim/errors.hpp"
#include "tensorlim/rng.hpp"

namespace tensorlim {

namespace {

constexpr uint64_t kTagGapTheta = 0xE3;

int64_t ipow64(int64_t b, int e) {
  int64_t v = 1;
  for (int i = 0; i < e; ++i) v *= b;
  return v;
}

void check_tables_match(const SignalTable& a, const SignalTable& b) {
  if (a.q != b.q || a.m != b.m || a.k != b.k || a.L != b.L)
    throw ShapeMismatchError("signal tables have different shapes");
}

template <typename Fn>
void for_each_alpha(const FiniteInstance& inst, Fn&& fn) {
  const int n = inst.n, q = inst.signal.q;
  std::vector<int> dig(q);
  const int64_t total = ipow64(n, q);
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    for (int p = q - 1; p >= 0; --p) {
      dig[p] = static_cast<int>(rem % n);
      rem /= n;
    }
    if (inst.distinct_indices_only) {
      bool repeat = false;
      for (int p = 0; p < q && !repeat; ++p)
        for (int p2 = p + 1; p2 < q; ++p2)
          if (dig[p] == dig[p2]) {
            repeat = true;
            break;
          }
      if (repeat) continue;
    }
    fn(dig);
  }
}

int64_t kappa_of(const FiniteInstance& inst, const std::vector<int>& dig) {
  int64_t kf = 0;
  for (int p = 0; p < inst.signal.q; ++p)
    kf = kf * inst.signal.k + inst.type_of_index[dig[p]];
  return kf;
}

int64_t atom_flat(const FiniteInstance& inst, const std::vector<int>& dig,
                  const std::vector<int>& assign) {
  int64_t f = 0;
  for (int p = 0; p < inst.signal.q; ++p)
    f = f * inst.signal.L + assign[dig[p]];
  return f;
}

std::vector<int> draw_assignment(const FiniteInstance& inst, uint64_t seed, int r) {
  std::vector<int> truth(inst.n);
  if (inst.mode == FiniteInstance::Mode::IidAtoms) {
    std::vector<double> cdf(inst.signal.L);
    double acc = 0;
    for (int l = 0; l < inst.signal.L; ++l) {
      acc += inst.atom_weights(l);
      cdf[l] = acc;
    }
    for (int i = 0; i < inst.n; ++i) {
      double u = u01_at(mix(seed, kTagGapTheta, static_cast<uint64_t>(r),
                            static_cast<uint64_t>(i)));
      int l = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) -
                               cdf.begin());
      truth[i] = std::min(l, inst.signal.L - 1);
    }
  } else {
    std::iota(truth.begin(), truth.end(), 0);
    Rng rng(mix(seed, kTagGapTheta, static_cast<uint64_t>(r)));
    for (int i = inst.n - 1; i > 0; --i) std::swap(truth[i], truth[rng.below(i + 1)]);
  }
  return truth;
}

}  // namespace

double fe_stability_bound(double c, double delta, double t) {
  if (c < 0 || delta < 0 || t < 0)
    throw ConfigError("bound arguments must be nonnegative");
  return t * (std::sqrt(c * delta + delta * delta) + 0.5 * delta * delta);
}

ValueWithError l2_gap(const FiniteInstance& inst, const SignalTable& fhat,
                      int samples, uint64_t seed) {
  validate_instance(inst);
  check_tables_match(inst.signal, fhat);
  const int m = inst.signal.m;
  const double scale =
      1.0 / (inst.n * static_cast<double>(ipow64(inst.n, inst.signal.q - 1)));
  std::vector<double> vals(samples, 0.0);
  for (int r = 0; r < samples; ++r) {
    std::vector<int> assign = draw_assignment(inst, seed, r);
    double acc = 0;
    for_each_alpha(inst, [&](const std::vector<int>& dig) {
      const int64_t kf = kappa_of(inst, dig);
      const int64_t af = atom_flat(inst, dig, assign);
      const double* a = inst.signal.at(kf, af);
      const double* b = fhat.at(kf, af);
      for (int c = 0; c < m; ++c) acc += (a[c] - b[c]) * (a[c] - b[c]);
    });
    vals[r] = scale * acc;
  }
  double mean = 0;
  for (double v : vals) mean += v;
  mean /= samples;
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  return {mean, samples > 1 ? std::sqrt(var / (samples - 1) / samples) : 0.0};
}

double l2_gap_exact(const FiniteInstance& inst, const SignalTable& fhat) {
  validate_instance(inst);
  check_tables_match(inst.signal, fhat);
  const int q = inst.signal.q, m = inst.signal.m, L = inst.signal.L;
  const double scale =
      1.0 / (inst.n * static_cast<double>(ipow64(inst.n, q - 1)));
  double total = 0;
  if (inst.mode == FiniteInstance::Mode::Permutation) {
    std::vector<int> ident(inst.n);
    std::iota(ident.begin(), ident.end(), 0);
    for_each_alpha(inst, [&](const std::vector<int>& dig) {
      const int64_t kf = kappa_of(inst, dig);
      const int64_t af = atom_flat(inst, dig, ident);
      const double* a = inst.signal.at(kf, af);
      const double* b = fhat.at(kf, af);
      for (int c = 0; c < m; ++c) total += (a[c] - b[c]) * (a[c] - b[c]);
    });
  } else {
    for_each_alpha(inst, [&](const std::vector<int>& dig) {
      const int64_t kf = kappa_of(inst, dig);
      std::vector<int> uniq, slot_of(q);
      for (int p = 0; p < q; ++p) {
        int found = -1;
        for (size_t p2 = 0; p2 < uniq.size(); ++p2)
          if (uniq[p2] == dig[p]) found = static_cast<int>(p2);
        if (found < 0) {
          uniq.push_back(dig[p]);
          found = static_cast<int>(uniq.size()) - 1;
        }
        slot_of[p] = found;
      }
      const int rr = static_cast<int>(uniq.size());
      std::vector<int> aidx(rr);
      const int64_t combos = ipow64(L, rr);
      for (int64_t cf = 0; cf < combos; ++cf) {
        int64_t rem = cf;
        double w = 1.0;
        for (int p = rr - 1; p >= 0; --p) {
          aidx[p] = static_cast<int>(rem % L);
          rem /= L;
          w *= inst.atom_weights(aidx[p]);
        }
        if (w == 0) continue;
        int64_t af = 0;
        for (int p = 0; p < q; ++p) af = af * L + aidx[slot_of[p]];
        const double* a = inst.signal.at(kf, af);
        const double* b = fhat.at(kf, af);
        for (int c = 0; c < m; ++c) total += w * (a[c] - b[c]) * (a[c] - b[c]);
      }
    });
  }
  return scale * total;
}

double moment_entropy_bound(const Eigen::MatrixXd& u_samples,
                            const Eigen::MatrixXd& v_samples) {
  if (u_samples.cols() != v_samples.cols() || u_samples.rows() != v_samples.rows())
    throw CountMismatchError("paired sample shapes differ");
  const int n = static_cast<int>(u_samples.cols());
  if (n < 1) throw CountMismatchError("need at least one sample");
  double mu = u_samples.squaredNorm() / n;
  double mv = v_samples.squaredNorm() / n;
  double md = (u_samples - v_samples).squaredNorm() / n;
  return std::sqrt(std::max(mu, mv)) * std::sqrt(md) + 0.5 * md;
}

GapReport gap_report(const FiniteInstance& inst, const SignalTable& fhat, double t) {
  GapReport rep;
  rep.t = t;
  rep.l2_gap = l2_gap_exact(inst, fhat);
  FiniteInstance alt = inst;
  alt.signal = fhat;
  rep.moment_bound = std::max(mean_square_signal(inst), mean_square_signal(alt)) /
                     inst.n;
  rep.fe_bound = fe_stability_bound(rep.moment_bound, rep.l2_gap, t);
  return rep;
}

}  // namespace tensorlim
