#include "tensorlim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tensorlim/errors.hpp"
#include "tensorlim/rng.hpp"
#include "tensorlim/threads.hpp"

namespace tensorlim {

namespace {

constexpr uint64_t kTagTheta = 0xA1;
constexpr uint64_t kTagSigma = 0xA2;
constexpr uint64_t kTagNoise = 0xB1;
constexpr uint64_t kTagRing = 0xC1;

int64_t ipow64(int64_t b, int e) {
  int64_t v = 1;
  for (int i = 0; i < e; ++i) v *= b;
  return v;
}

struct AlphaIndex {
  int64_t count = 0;
  std::vector<int> digits;          // count * q
  std::vector<int64_t> kappa_flat;  // count
  std::vector<uint64_t> code64;     // count, n-independent noise addressing
  std::vector<std::vector<int32_t>> touching;  // per index i, alphas containing i
};

AlphaIndex build_alpha_index(const FiniteInstance& inst) {
  const int n = inst.n, q = inst.signal.q, k = inst.signal.k;
  AlphaIndex ai;
  ai.touching.resize(n);
  std::vector<int> dig(q, 0);
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
    const int32_t pos = static_cast<int32_t>(ai.count++);
    for (int p = 0; p < q; ++p) ai.digits.push_back(dig[p]);
    int64_t kf = 0;
    uint64_t code = 0;
    for (int p = 0; p < q; ++p) {
      kf = kf * k + inst.type_of_index[dig[p]];
      code = code * 64 + static_cast<uint64_t>(dig[p]);
    }
    ai.kappa_flat.push_back(kf);
    ai.code64.push_back(code);
    for (int p = 0; p < q; ++p) {
      bool first = true;
      for (int p2 = 0; p2 < p; ++p2)
        if (dig[p2] == dig[p]) first = false;
      if (first) ai.touching[dig[p]].push_back(pos);
    }
  }
  return ai;
}

int64_t atom_flat_of(const FiniteInstance& inst, const int* dig,
                     const std::vector<int>& assign) {
  int64_t f = 0;
  for (int p = 0; p < inst.signal.q; ++p) f = f * inst.signal.L + assign[dig[p]];
  return f;
}

struct Replicate {
  std::vector<int> truth;
  std::vector<double> f_true;  // count * m
  std::vector<double> z;       // count * m
  std::vector<double> lin;     // n * L, empty if no side channel
};

Replicate draw_replicate(const FiniteInstance& inst, const AlphaIndex& ai,
                         const PsdTuple* ring_s, int r) {
  const int n = inst.n, m = inst.signal.m, L = inst.signal.L;
  Replicate rep;
  rep.truth.resize(n);
  if (inst.mode == FiniteInstance::Mode::IidAtoms) {
    std::vector<double> cdf(L);
    double acc = 0;
    for (int l = 0; l < L; ++l) {
      acc += inst.atom_weights(l);
      cdf[l] = acc;
    }
    for (int i = 0; i < n; ++i) {
      double u = u01_at(mix(inst.seed, kTagTheta, static_cast<uint64_t>(r),
                            static_cast<uint64_t>(i)));
      int l = static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) -
                               cdf.begin());
      rep.truth[i] = std::min(l, L - 1);
    }
  } else {
    std::iota(rep.truth.begin(), rep.truth.end(), 0);
    Rng rng(mix(inst.seed, kTagSigma, static_cast<uint64_t>(r)));
    for (int i = n - 1; i > 0; --i)
      std::swap(rep.truth[i], rep.truth[rng.below(i + 1)]);
  }
  rep.f_true.resize(ai.count * m);
  rep.z.resize(ai.count * m);
  for (int64_t pos = 0; pos < ai.count; ++pos) {
    const int* dig = ai.digits.data() + pos * inst.signal.q;
    const double* f = inst.signal.at(ai.kappa_flat[pos],
                                     atom_flat_of(inst, dig, rep.truth));
    for (int c = 0; c < m; ++c) {
      rep.f_true[pos * m + c] = f[c];
      rep.z[pos * m + c] = gauss_at(mix(inst.seed, kTagNoise,
                                        static_cast<uint64_t>(r), ai.code64[pos],
                                        static_cast<uint64_t>(c)));
    }
  }
  if (ring_s) {
    const int d = static_cast<int>(inst.features.rows());
    rep.lin.assign(static_cast<size_t>(n) * L, 0.0);
    std::vector<Eigen::MatrixXd> v(ring_s->k());
    for (int j = 0; j < ring_s->k(); ++j)
      v[j] = psd_sqrt(ring_s->blocks[j]).mat() * inst.features;
    for (int i = 0; i < n; ++i) {
      const int tj = inst.type_of_index[i];
      Eigen::VectorXd ring_y = v[tj].col(rep.truth[i]);
      for (int c = 0; c < d; ++c)
        ring_y(c) += gauss_at(mix(inst.seed, kTagRing, static_cast<uint64_t>(r),
                                  static_cast<uint64_t>(i), static_cast<uint64_t>(c)));
      for (int l = 0; l < L; ++l)
        rep.lin[static_cast<size_t>(i) * L + l] =
            v[tj].col(l).dot(ring_y) - 0.5 * v[tj].col(l).squaredNorm();
    }
  }
  return rep;
}

struct Sums {
  double s1 = 0, s2 = 0, s3 = 0;
};

Sums full_sums(const FiniteInstance& inst, const AlphaIndex& ai, const Replicate& rep,
               const std::vector<int>& assign) {
  Sums s;
  const int m = inst.signal.m;
  for (int64_t pos = 0; pos < ai.count; ++pos) {
    const int* dig = ai.digits.data() + pos * inst.signal.q;
    const double* f =
        inst.signal.at(ai.kappa_flat[pos], atom_flat_of(inst, dig, assign));
    for (int c = 0; c < m; ++c) {
      s.s1 += f[c] * rep.f_true[pos * m + c];
      s.s2 += f[c] * f[c];
      s.s3 += f[c] * rep.z[pos * m + c];
    }
  }
  return s;
}

struct Scale {
  double inv_pow;   // 1 / n^{q-1}
  double inv_sqrt;  // 1 / sqrt(n^{q-1})
};

Scale scale_of(const FiniteInstance& inst) {
  double p = static_cast<double>(ipow64(inst.n, inst.signal.q - 1));
  return {1.0 / p, 1.0 / std::sqrt(p)};
}

double qwise_energy(double t, const Scale& sc, const Sums& s) {
  return t * (s.s1 - 0.5 * s.s2) * sc.inv_pow + std::sqrt(t) * sc.inv_sqrt * s.s3;
}

double lin_energy(const FiniteInstance& inst, const Replicate& rep,
                  const std::vector<int>& assign) {
  if (rep.lin.empty()) return 0;
  double e = 0;
  for (int i = 0; i < inst.n; ++i)
    e += rep.lin[static_cast<size_t>(i) * inst.signal.L + assign[i]];
  return e;
}

class StreamingLse {
 public:
  void add(double x) {
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const { return max_ + std::log(sum_); }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0;
};

// Walks every candidate configuration of `c` (which must be all zeros on
// entry) along a mixed-radix reflected Gray code. `flip(i, a, b)` runs before
// the digit write so incremental updates can read the old state from `c`.
template <typename PerConfig, typename Flip>
void enumerate_iid(int n, int L, std::vector<int>& c, PerConfig&& visit,
                   Flip&& flip) {
  if (L == 1) {
    visit();
    return;
  }
  std::vector<int> dir(n, 1), focus(n + 1);
  std::iota(focus.begin(), focus.end(), 0);
  while (true) {
    visit();
    int j = focus[0];
    focus[0] = 0;
    if (j == n) break;
    const int a = c[j];
    const int b = a + dir[j];
    flip(j, a, b);
    c[j] = b;
    if (b == 0 || b == L - 1) {
      dir[j] = -dir[j];
      focus[j] = focus[j + 1];
      focus[j + 1] = j + 1;
    }
  }
}

void flip_update(const FiniteInstance& inst, const AlphaIndex& ai,
                 const Replicate& rep, std::vector<int>& assign, int i, int a, int b,
                 Sums& s) {
  const int q = inst.signal.q, m = inst.signal.m, L = inst.signal.L;
  for (int32_t pos : ai.touching[i]) {
    const int* dig = ai.digits.data() + static_cast<int64_t>(pos) * q;
    int64_t fo = 0, fn = 0;
    for (int p = 0; p < q; ++p) {
      const int idx = dig[p];
      fo = fo * L + (idx == i ? a : assign[idx]);
      fn = fn * L + (idx == i ? b : assign[idx]);
    }
    const double* vo = inst.signal.at(ai.kappa_flat[pos], fo);
    const double* vn = inst.signal.at(ai.kappa_flat[pos], fn);
    const int64_t off = static_cast<int64_t>(pos) * m;
    for (int comp = 0; comp < m; ++comp) {
      const double d = vn[comp] - vo[comp];
      s.s1 += d * rep.f_true[off + comp];
      s.s2 += vn[comp] * vn[comp] - vo[comp] * vo[comp];
      s.s3 += d * rep.z[off + comp];
    }
  }
}

struct LogPartition {
  double log_z = 0;
  double h_true = 0;
};

LogPartition replicate_log_partition(const FiniteInstance& inst, const AlphaIndex& ai,
                                     const Replicate& rep, double t) {
  const Scale sc = scale_of(inst);
  StreamingLse lse;
  if (inst.mode == FiniteInstance::Mode::IidAtoms) {
    std::vector<double> logw(inst.signal.L);
    for (int l = 0; l < inst.signal.L; ++l)
      logw[l] = inst.atom_weights(l) > 0
                    ? std::log(inst.atom_weights(l))
                    : -std::numeric_limits<double>::infinity();
    std::vector<int> c(inst.n, 0);
    Sums s = (t > 0) ? full_sums(inst, ai, rep, c) : Sums{};
    double logprior = inst.n * logw[0];
    double lin_sum = lin_energy(inst, rep, c);
    enumerate_iid(
        inst.n, inst.signal.L, c,
        [&] {
          lse.add(logprior + (t > 0 ? qwise_energy(t, sc, s) : 0.0) + lin_sum);
        },
        [&](int i, int a, int b) {
          if (t > 0) flip_update(inst, ai, rep, c, i, a, b, s);
          logprior += logw[b] - logw[a];
          if (!rep.lin.empty())
            lin_sum += rep.lin[static_cast<size_t>(i) * inst.signal.L + b] -
                       rep.lin[static_cast<size_t>(i) * inst.signal.L + a];
        });
  } else {
    std::vector<int> perm(inst.n);
    std::iota(perm.begin(), perm.end(), 0);
    double logfact = 0;
    for (int i = 2; i <= inst.n; ++i) logfact += std::log(static_cast<double>(i));
    do {
      double e = (t > 0) ? qwise_energy(t, sc, full_sums(inst, ai, rep, perm)) : 0.0;
      lse.add(-logfact + e + lin_energy(inst, rep, perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  LogPartition out;
  out.log_z = lse.value();
  out.h_true = (t > 0 ? qwise_energy(t, sc, full_sums(inst, ai, rep, rep.truth)) : 0.0) +
               lin_energy(inst, rep, rep.truth);
  return out;
}

OracleResult run_free_energy(const FiniteInstance& inst, const PsdTuple* ring_s,
                             double t) {
  validate_instance(inst);
  if (t < 0) throw ConfigError("t must be nonnegative");
  const AlphaIndex ai = build_alpha_index(inst);
  OracleResult res;
  res.replicates = inst.replicates;
  res.per_replicate.resize(inst.replicates);
  res.per_replicate_h_true.resize(inst.replicates);
  parallel_for(inst.replicates, [&](int64_t r) {
    Replicate rep = draw_replicate(inst, ai, ring_s, static_cast<int>(r));
    LogPartition lp = replicate_log_partition(inst, ai, rep, t);
    res.per_replicate[r] = lp.log_z / inst.n;
    res.per_replicate_h_true[r] = lp.h_true / inst.n;
  });
  double mean = 0;
  for (double v : res.per_replicate) mean += v;
  mean /= res.replicates;
  double var = 0;
  for (double v : res.per_replicate) var += (v - mean) * (v - mean);
  res.value = mean;
  res.std_error = res.replicates > 1
                      ? std::sqrt(var / (res.replicates - 1) / res.replicates)
                      : 0.0;
  return res;
}

OverlapResult run_overlaps(const FiniteInstance& inst, const PsdTuple* ring_s,
                           double t) {
  validate_instance(inst);
  const AlphaIndex ai = build_alpha_index(inst);
  const Scale sc = scale_of(inst);
  const int m = inst.signal.m, n = inst.n;
  const int d = static_cast<int>(inst.features.rows());
  const int k = inst.signal.k;
  const int R = inst.replicates;

  std::vector<double> tensor(R, 0.0);
  std::vector<std::vector<Eigen::MatrixXd>> feats(
      R, std::vector<Eigen::MatrixXd>(k, Eigen::MatrixXd::Zero(d, d)));

  parallel_for(R, [&](int64_t r) {
    Replicate rep = draw_replicate(inst, ai, ring_s, static_cast<int>(r));
    // Pass 1: collect log-weights of all configurations.
    std::vector<double> lw;
    std::vector<std::vector<int>> configs;
    auto record = [&](const std::vector<int>& assign, double logprior) {
      double e = (t > 0) ? qwise_energy(t, sc, full_sums(inst, ai, rep, assign)) : 0.0;
      lw.push_back(logprior + e + lin_energy(inst, rep, assign));
      configs.push_back(assign);
    };
    if (inst.mode == FiniteInstance::Mode::IidAtoms) {
      std::vector<double> logw(inst.signal.L);
      for (int l = 0; l < inst.signal.L; ++l)
        logw[l] = inst.atom_weights(l) > 0
                      ? std::log(inst.atom_weights(l))
                      : -std::numeric_limits<double>::infinity();
      std::vector<int> c(n, 0);
      enumerate_iid(
          inst.n, inst.signal.L, c,
          [&] {
            double lp = 0;
            for (int i = 0; i < n; ++i) lp += logw[c[i]];
            record(c, lp);
          },
          [&](int, int, int) {});
    } else {
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double logfact = 0;
      for (int i = 2; i <= n; ++i) logfact += std::log(static_cast<double>(i));
      do {
        record(perm, -logfact);
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    double mx = *std::max_element(lw.begin(), lw.end());
    double zsum = 0;
    for (double v : lw) zsum += std::exp(v - mx);
    // Pass 2: posterior means of the signal array and per-index features.
    std::vector<double> mbar(ai.count * m, 0.0);
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(d, n);
    for (size_t ci = 0; ci < configs.size(); ++ci) {
      const double w = std::exp(lw[ci] - mx) / zsum;
      if (w == 0) continue;
      const auto& assign = configs[ci];
      for (int64_t pos = 0; pos < ai.count; ++pos) {
        const int* dig = ai.digits.data() + pos * inst.signal.q;
        const double* f =
            inst.signal.at(ai.kappa_flat[pos], atom_flat_of(inst, dig, assign));
        for (int c = 0; c < m; ++c) mbar[pos * m + c] += w * f[c];
      }
      for (int i = 0; i < n; ++i) eta.col(i) += w * inst.features.col(assign[i]);
    }
    double norm2 = 0;
    for (double v : mbar) norm2 += v * v;
    tensor[r] = 0.5 / n * sc.inv_pow * norm2;
    for (int i = 0; i < n; ++i)
      feats[r][inst.type_of_index[i]] +=
          0.5 / n * (eta.col(i) * eta.col(i).transpose());
  });

  OverlapResult out;
  out.replicates = R;
  double mean = 0;
  for (double v : tensor) mean += v;
  mean /= R;
  double var = 0;
  for (double v : tensor) var += (v - mean) * (v - mean);
  out.tensor_overlap = mean;
  out.tensor_overlap_err = R > 1 ? std::sqrt(var / (R - 1) / R) : 0.0;
  out.feature_overlaps.assign(k, Eigen::MatrixXd::Zero(d, d));
  for (int r = 0; r < R; ++r)
    for (int j = 0; j < k; ++j) out.feature_overlaps[j] += feats[r][j] / R;
  double fvar = 0;
  for (int r = 0; r < R; ++r)
    for (int j = 0; j < k; ++j)
      fvar += (feats[r][j] - out.feature_overlaps[j]).squaredNorm();
  out.feature_err = R > 1 ? std::sqrt(fvar / (R - 1) / R) : 0.0;
  return out;
}

}  // namespace

void SignalTable::finalize() {
  lq_ = ipow64(L, q);
  const int64_t expect = ipow64(k, q) * lq_ * m;
  if (static_cast<int64_t>(values.size()) != expect)
    throw ShapeMismatchError("signal table size != k^q * L^q * m");
}

SignalTable signal_from_model(const MultilinearModel& model) {
  SignalTable t;
  t.q = model.q;
  t.m = model.m;
  t.k = model.k;
  t.L = model.channel.prior.size();
  const int64_t lq = ipow64(t.L, t.q);
  const int64_t kq = ipow64(t.k, t.q);
  t.values.resize(kq * lq * t.m);
  std::vector<int> atoms(t.q);
  const int64_t dq = ipow64(model.d, model.q);
  Eigen::VectorXd kron(dq);
  for (int64_t kf = 0; kf < kq; ++kf) {
    for (int64_t af = 0; af < lq; ++af) {
      int64_t rem = af;
      for (int p = t.q - 1; p >= 0; --p) {
        atoms[p] = static_cast<int>(rem % t.L);
        rem /= t.L;
      }
      // feature Kronecker product, slot 0 slowest
      for (int64_t idx = 0; idx < dq; ++idx) {
        int64_t r = idx;
        double v = 1.0;
        for (int p = t.q - 1; p >= 0; --p) {
          v *= model.channel.prior.features(static_cast<int>(r % model.d), atoms[p]);
          r /= model.d;
        }
        kron(idx) = v;
      }
      Eigen::VectorXd out = model.couplings[kf] * kron;
      for (int c = 0; c < t.m; ++c) t.values[(kf * lq + af) * t.m + c] = out(c);
    }
  }
  t.finalize();
  return t;
}

void validate_instance(const FiniteInstance& inst) {
  if (inst.n < 1) throw ConfigError("n must be >= 1");
  if (static_cast<int>(inst.type_of_index.size()) != inst.n)
    throw ShapeMismatchError("type_of_index size != n");
  for (int ti : inst.type_of_index)
    if (ti < 0 || ti >= inst.signal.k) throw ShapeMismatchError("type out of range");
  if (inst.mode == FiniteInstance::Mode::IidAtoms) {
    if (inst.atom_weights.size() != inst.signal.L)
      throw ShapeMismatchError("atom_weights size != L");
    if (inst.n * std::log(static_cast<double>(std::max(inst.signal.L, 1))) >
        std::log(1e7) + 1e-9)
      throw BudgetExceededError("atoms^n exceeds enumeration budget 1e7");
  } else {
    if (inst.signal.L != inst.n)
      throw ShapeMismatchError("permutation mode needs L == n atom slots");
    if (inst.n > 8) throw BudgetExceededError("n! enumeration limited to n <= 8");
  }
  if (inst.features.cols() != inst.signal.L)
    throw ShapeMismatchError("feature table must have L columns");
}

int64_t included_alpha_count(const FiniteInstance& inst) {
  return build_alpha_index(inst).count;
}

double hamiltonian(const FiniteInstance& inst, const std::vector<int>& theta_true,
                   const std::vector<double>& z, const std::vector<int>& theta_cand,
                   double t) {
  validate_instance(inst);
  if (t < 0) throw ConfigError("t must be nonnegative");
  const AlphaIndex ai = build_alpha_index(inst);
  const int m = inst.signal.m;
  if (static_cast<int>(theta_true.size()) != inst.n ||
      static_cast<int>(theta_cand.size()) != inst.n)
    throw ShapeMismatchError("assignment length != n");
  if (static_cast<int64_t>(z.size()) != ai.count * m)
    throw ShapeMismatchError("noise array length != included alphas * m");
  Sums s;
  for (int64_t pos = 0; pos < ai.count; ++pos) {
    const int* dig = ai.digits.data() + pos * inst.signal.q;
    const double* fc =
        inst.signal.at(ai.kappa_flat[pos], atom_flat_of(inst, dig, theta_cand));
    const double* ft =
        inst.signal.at(ai.kappa_flat[pos], atom_flat_of(inst, dig, theta_true));
    for (int c = 0; c < m; ++c) {
      s.s1 += fc[c] * ft[c];
      s.s2 += fc[c] * fc[c];
      s.s3 += fc[c] * z[pos * m + c];
    }
  }
  return qwise_energy(t, scale_of(inst), s);
}

OracleResult free_energy_n(const FiniteInstance& inst, double t) {
  return run_free_energy(inst, nullptr, t);
}

OracleResult augmented_free_energy_n(const FiniteInstance& inst,
                                     const PsdTuple& ring_s, double t) {
  if (ring_s.k() != inst.signal.k || ring_s.dim() != inst.features.rows())
    throw DimensionMismatchError("ring S shape");
  return run_free_energy(inst, &ring_s, t);
}

double mean_square_signal(const FiniteInstance& inst) {
  validate_instance(inst);
  const AlphaIndex ai = build_alpha_index(inst);
  const int q = inst.signal.q, m = inst.signal.m, L = inst.signal.L;
  double total = 0;
  if (inst.mode == FiniteInstance::Mode::Permutation) {
    std::vector<int> ident(inst.n);
    std::iota(ident.begin(), ident.end(), 0);
    for (int64_t pos = 0; pos < ai.count; ++pos) {
      const int* dig = ai.digits.data() + pos * q;
      const double* f =
          inst.signal.at(ai.kappa_flat[pos], atom_flat_of(inst, dig, ident));
      for (int c = 0; c < m; ++c) total += f[c] * f[c];
    }
  } else {
    std::vector<int> uniq(q), aidx(q);
    for (int64_t pos = 0; pos < ai.count; ++pos) {
      const int* dig = ai.digits.data() + pos * q;
      int r = 0;
      std::vector<int> slot_of(q);
      for (int p = 0; p < q; ++p) {
        int found = -1;
        for (int p2 = 0; p2 < r; ++p2)
          if (uniq[p2] == dig[p]) found = p2;
        if (found < 0) {
          uniq[r] = dig[p];
          found = r++;
        }
        slot_of[p] = found;
      }
      const int64_t combos = ipow64(L, r);
      for (int64_t cf = 0; cf < combos; ++cf) {
        int64_t rem = cf;
        double w = 1.0;
        for (int p = r - 1; p >= 0; --p) {
          aidx[p] = static_cast<int>(rem % L);
          rem /= L;
          w *= inst.atom_weights(aidx[p]);
        }
        if (w == 0) continue;
        int64_t af = 0;
        for (int p = 0; p < q; ++p) af = af * L + aidx[slot_of[p]];
        const double* f = inst.signal.at(ai.kappa_flat[pos], af);
        for (int c = 0; c < m; ++c) total += w * f[c] * f[c];
      }
    }
  }
  return total * scale_of(inst).inv_pow;
}

ValueWithError mutual_information_n(const FiniteInstance& inst, double t) {
  OracleResult fe = free_energy_n(inst, t);
  double ms = mean_square_signal(inst);
  return {0.5 * t / inst.n * ms - fe.value, fe.std_error};
}

OverlapResult posterior_overlap_n(const FiniteInstance& inst, double t) {
  return run_overlaps(inst, nullptr, t);
}

OverlapResult augmented_posterior_overlap_n(const FiniteInstance& inst,
                                            const PsdTuple& ring_s, double t) {
  return run_overlaps(inst, &ring_s, t);
}

}  // namespace tensorlim
