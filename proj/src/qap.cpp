#include "tensorlim/qap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tensorlim/errors.hpp"
#include "tensorlim/rng.hpp"
#include "tensorlim/threads.hpp"

namespace tensorlim {

namespace {

constexpr uint64_t kTagSigmaLhs = 0xD7;
constexpr uint64_t kTagNoiseLhs = 0xD8;

int64_t ipow64(int64_t b, int e) {
  int64_t v = 1;
  for (int i = 0; i < e; ++i) v *= b;
  return v;
}

double chebyshev01(int j, double x) {
  // T_j on [0,1]: T_j(2x-1) by recurrence.
  const double u = 2.0 * x - 1.0;
  double tkm1 = 1.0, tk = u;
  if (j == 0) return 1.0;
  if (j == 1) return u;
  for (int i = 2; i <= j; ++i) {
    double tnext = 2.0 * u * tk - tkm1;
    tkm1 = tk;
    tk = tnext;
  }
  return tk;
}

double basis_eval(const SeparableSignal& sig, int j, double x) {
  if (!sig.supplied_basis.empty()) {
    if (j >= static_cast<int>(sig.supplied_basis.size()))
      throw SlotOutOfRangeError("supplied basis too small");
    return sig.supplied_basis[j](x);
  }
  return chebyshev01(j, x);
}

// Applies matrix M (rows x dims[p]) to mode p of a flat row-major tensor.
std::vector<double> mode_apply(const std::vector<double>& t,
                               std::vector<int>& dims, int p,
                               const Eigen::MatrixXd& m) {
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < p; ++i) outer *= dims[i];
  for (size_t i = p + 1; i < dims.size(); ++i) inner *= dims[i];
  const int mid = dims[p];
  const int rows = static_cast<int>(m.rows());
  std::vector<double> out(outer * rows * inner, 0.0);
  for (int64_t o = 0; o < outer; ++o)
    for (int a = 0; a < rows; ++a)
      for (int mi = 0; mi < mid; ++mi) {
        const double w = m(a, mi);
        if (w == 0) continue;
        const double* src = t.data() + (o * mid + mi) * inner;
        double* dst = out.data() + (o * rows + a) * inner;
        for (int64_t i = 0; i < inner; ++i) dst[i] += w * src[i];
      }
  dims[p] = rows;
  return out;
}

}  // namespace

SeparableSignal make_signal_from_grid(int q, int grid_res, std::vector<double> grid) {
  if (grid_res < 2) throw ResolutionTooCoarseError("signal grid resolution < 2");
  if (static_cast<int64_t>(grid.size()) != ipow64(grid_res, q))
    throw ShapeMismatchError("signal grid size != grid_res^q");
  SeparableSignal s;
  s.q = q;
  s.grid_res = grid_res;
  s.grid = std::move(grid);
  return s;
}

SeparableSignal builtin_signal(const std::string& name, int q, int grid_res) {
  std::function<double(const double*)> f;
  if (name == "product") {
    f = [q](const double* x) {
      double v = 1;
      for (int p = 0; p < q; ++p) v *= x[p];
      return v;
    };
  } else if (name == "exp_product") {
    f = [q](const double* x) {
      double v = 1;
      for (int p = 0; p < q; ++p) v *= x[p];
      return std::exp(v);
    };
  } else if (name == "min") {
    f = [q](const double* x) {
      double v = x[0];
      for (int p = 1; p < q; ++p) v = std::min(v, x[p]);
      return v;
    };
  } else {
    throw ConfigError("unknown builtin signal: " + name);
  }
  SeparableSignal s;
  s.q = q;
  s.grid_res = grid_res;
  s.exact = f;
  s.grid.resize(ipow64(grid_res, q));
  std::vector<double> x(q);
  for (int64_t flat = 0; flat < static_cast<int64_t>(s.grid.size()); ++flat) {
    int64_t rem = flat;
    for (int p = q - 1; p >= 0; --p) {
      x[p] = static_cast<double>(rem % grid_res) / (grid_res - 1);
      rem /= grid_res;
    }
    s.grid[flat] = f(x.data());
  }
  return s;
}

double eval_signal(const SeparableSignal& sig, const double* x) {
  if (sig.exact) return sig.exact(x);
  // Multilinear interpolation on the inclusive-endpoint grid.
  const int q = sig.q, R = sig.grid_res;
  std::vector<int> base(q);
  std::vector<double> frac(q);
  for (int p = 0; p < q; ++p) {
    double v = std::clamp(x[p], 0.0, 1.0) * (R - 1);
    int b = std::min(static_cast<int>(v), R - 2);
    base[p] = b;
    frac[p] = v - b;
  }
  double acc = 0;
  for (int corner = 0; corner < (1 << q); ++corner) {
    double w = 1;
    int64_t flat = 0;
    for (int p = 0; p < q; ++p) {
      const int bit = (corner >> p) & 1;
      w *= bit ? frac[p] : 1.0 - frac[p];
      flat = flat * R + base[p] + bit;
    }
    acc += w * sig.grid[flat];
  }
  return acc;
}

TruncationResult truncate(const SeparableSignal& sig, double epsilon,
                          const Eigen::VectorXd& atoms, int max_d) {
  const int q = sig.q, R = sig.grid_res;
  if (!sig.supplied_basis.empty())
    max_d = std::min<int>(max_d, static_cast<int>(sig.supplied_basis.size()));
  TruncationResult best;
  for (int d = 1; d <= max_d; ++d) {
    Eigen::MatrixXd phi(R, d);
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < d; ++j)
        phi(i, j) = basis_eval(sig, j, static_cast<double>(i) / (R - 1));
    Eigen::MatrixXd pinv =
        (phi.transpose() * phi).ldlt().solve(phi.transpose());  // d x R
    std::vector<double> coeff = sig.grid;
    std::vector<int> dims(q, R);
    for (int p = 0; p < q; ++p) coeff = mode_apply(coeff, dims, p, pinv);
    std::vector<double> recon = coeff;
    for (int p = 0; p < q; ++p) recon = mode_apply(recon, dims, p, phi);
    double sup = 0;
    for (size_t i = 0; i < recon.size(); ++i)
      sup = std::max(sup, std::fabs(recon[i] - sig.grid[i]));
    TruncationResult cur;
    cur.d = d;
    cur.b_vec = Eigen::Map<Eigen::VectorXd>(coeff.data(),
                                            static_cast<int64_t>(ipow64(d, q)));
    cur.sup_error = sup;
    cur.features.resize(d, atoms.size());
    for (int l = 0; l < atoms.size(); ++l)
      for (int j = 0; j < d; ++j) cur.features(j, l) = basis_eval(sig, j, atoms(l));
    if (best.d == 0 || sup < best.sup_error) best = cur;
    if (sup <= epsilon) {
      cur.achieved = true;
      return cur;
    }
  }
  best.achieved = false;
  return best;
}

ScalarLaw quantized_uniform_law(int atoms) {
  ScalarLaw law;
  law.atoms.resize(atoms);
  law.weights = Eigen::VectorXd::Constant(atoms, 1.0 / atoms);
  for (int i = 0; i < atoms; ++i) law.atoms(i) = (i + 0.5) / atoms;
  return law;
}

ScalarLaw law_from_permutation(const PermutationPrior& pp) {
  std::map<double, int> counts;
  for (int i = 0; i < pp.n(); ++i) counts[pp.base_atoms(i)]++;
  ScalarLaw law;
  law.atoms.resize(counts.size());
  law.weights.resize(counts.size());
  int l = 0;
  for (const auto& [a, c] : counts) {
    law.atoms(l) = a;
    law.weights(l) = static_cast<double>(c) / pp.n();
    ++l;
  }
  return law;
}

QapCurve qap_free_energy(const SeparableSignal& sig, const ScalarLaw& law, double t,
                         const std::vector<double>& epsilons, const SaddleConfig& cfg,
                         int max_d, uint64_t seed) {
  for (size_t i = 1; i < epsilons.size(); ++i)
    if (epsilons[i] >= epsilons[i - 1])
      throw ConfigError("epsilon schedule must be strictly descending");
  QapCurve out;
  for (double eps : epsilons) {
    TruncationResult tr = truncate(sig, eps, law.atoms, max_d);
    if (!tr.achieved) {
      out.epsilon_unreachable = true;
      break;
    }
    MultilinearModel model;
    model.q = sig.q;
    model.m = 1;
    model.d = tr.d;
    model.k = 1;
    model.couplings = {tr.b_vec.transpose()};
    model.weights = TypeWeights::single();
    std::vector<std::string> labels(law.atoms.size());
    for (int l = 0; l < law.atoms.size(); ++l) labels[l] = std::to_string(law.atoms(l));
    model.channel = make_channel(DiscretePrior(labels, law.weights, tr.features), seed);
    model.snr_t = t;
    finalize_model(model);
    QapPoint point;
    point.epsilon = eps;
    point.truncation = tr;
    point.saddle = solve(model, cfg);
    out.points.push_back(std::move(point));
  }
  if (!out.points.empty()) {
    out.limit_estimate = out.points.back().saddle.free_energy;
    if (out.points.size() >= 2)
      out.cauchy_gap = std::fabs(out.points.back().saddle.free_energy -
                                 out.points[out.points.size() - 2].saddle.free_energy);
  }
  return out;
}

FiniteInstance assignment_oracle_instance(const AssignmentInstance& inst,
                                          const SeparableSignal& sig) {
  const int n = inst.u.n(), q = sig.q;
  FiniteInstance fi;
  fi.n = n;
  fi.mode = FiniteInstance::Mode::Permutation;
  fi.seed = inst.seed;
  fi.replicates = inst.replicates;
  fi.type_of_index.assign(n, 0);
  fi.signal.q = q;
  fi.signal.m = 1;
  fi.signal.k = 1;
  fi.signal.L = n;
  fi.signal.values.resize(ipow64(n, q));
  std::vector<double> x(q);
  for (int64_t flat = 0; flat < static_cast<int64_t>(fi.signal.values.size());
       ++flat) {
    int64_t rem = flat;
    for (int p = q - 1; p >= 0; --p) {
      x[p] = inst.u.base_atoms(static_cast<int>(rem % n));
      rem /= n;
    }
    fi.signal.values[flat] = eval_signal(sig, x.data());
  }
  fi.signal.finalize();
  fi.features.resize(1, n);
  for (int i = 0; i < n; ++i) fi.features(0, i) = inst.u.base_atoms(i);
  return fi;
}

InfoIdentity info_identity_check(const AssignmentInstance& inst,
                                 const SeparableSignal& sig) {
  const int n = inst.u.n();
  if (n > 6) throw BudgetExceededError("info identity check limited to n <= 6");
  FiniteInstance fi = assignment_oracle_instance(inst, sig);
  InfoIdentity out;
  ValueWithError rhs = mutual_information_n(fi, inst.t);
  out.rhs = rhs.value;
  out.rhs_err = rhs.error;

  // Left side: posterior entropy of sigma given (v, y), independent sampler.
  const int q = sig.q;
  const int64_t total = ipow64(n, q);
  const double scale = std::sqrt(inst.t / std::pow(static_cast<double>(n), q - 1));
  std::vector<double> v(total);
  std::vector<int> dig(total * q);
  std::vector<double> x(q);
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    for (int p = q - 1; p >= 0; --p) {
      dig[flat * q + p] = static_cast<int>(rem % n);
      rem /= n;
    }
    for (int p = 0; p < q; ++p) x[p] = inst.u.base_atoms(dig[flat * q + p]);
    v[flat] = scale * eval_signal(sig, x.data());
  }
  double logfact = 0;
  for (int i = 2; i <= n; ++i) logfact += std::log(static_cast<double>(i));
  const int R = inst.replicates;
  std::vector<double> info(R, 0.0);
  parallel_for(R, [&](int64_t r) {
    std::vector<int> sigma(n);
    std::iota(sigma.begin(), sigma.end(), 0);
    Rng rng(mix(inst.seed, kTagSigmaLhs, static_cast<uint64_t>(r)));
    for (int i = n - 1; i > 0; --i) std::swap(sigma[i], sigma[rng.below(i + 1)]);
    std::vector<double> y(total);
    for (int64_t flat = 0; flat < total; ++flat) {
      int64_t pf = 0;
      for (int p = 0; p < q; ++p) pf = pf * n + sigma[dig[flat * q + p]];
      y[flat] = v[pf] + gauss_at(mix(inst.seed, kTagNoiseLhs,
                                     static_cast<uint64_t>(r),
                                     static_cast<uint64_t>(flat)));
    }
    std::vector<int> cand(n);
    std::iota(cand.begin(), cand.end(), 0);
    std::vector<double> scores;
    scores.reserve(static_cast<size_t>(std::tgamma(n + 1.0)));
    do {
      double s = 0;
      for (int64_t flat = 0; flat < total; ++flat) {
        int64_t pf = 0;
        for (int p = 0; p < q; ++p) pf = pf * n + cand[dig[flat * q + p]];
        s += y[flat] * v[pf] - 0.5 * v[pf] * v[pf];
      }
      scores.push_back(s);
    } while (std::next_permutation(cand.begin(), cand.end()));
    double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0;
    for (double s : scores) z += std::exp(s - mx);
    double entropy = 0;
    for (double s : scores) {
      double p = std::exp(s - mx) / z;
      if (p > 0) entropy -= p * std::log(p);
    }
    info[r] = (logfact - entropy) / n;
  });
  double mean = 0;
  for (double val : info) mean += val;
  mean /= R;
  double var = 0;
  for (double val : info) var += (val - mean) * (val - mean);
  out.lhs = mean;
  out.lhs_err = R > 1 ? std::sqrt(var / (R - 1) / R) : 0.0;
  out.gap = std::fabs(out.lhs - out.rhs);
  return out;
}

std::vector<EntropyTrendPoint> permutation_entropy_limit_check(
    const std::function<PermutationPrior(int)>& u_gen,
    const std::function<Eigen::VectorXd(double)>& phi, const PsdMatrix& s,
    const std::vector<int>& n_grid, const ChannelSpec& limit_channel,
    uint64_t seed, int replicates) {
  const double h_limit = channel_entropy(limit_channel, s).value;
  std::vector<EntropyTrendPoint> out;
  for (int n : n_grid) {
    PermutationPrior pp = u_gen(n);
    if (pp.n() != n) throw ShapeMismatchError("generator returned wrong n");
    FiniteInstance fi;
    fi.n = n;
    fi.mode = FiniteInstance::Mode::Permutation;
    fi.seed = mix(seed, static_cast<uint64_t>(n));
    fi.replicates = replicates;
    fi.type_of_index.assign(n, 0);
    fi.signal.q = 1;
    fi.signal.m = 1;
    fi.signal.k = 1;
    fi.signal.L = n;
    fi.signal.values.assign(n, 0.0);
    fi.signal.finalize();
    const int d = static_cast<int>(phi(pp.base_atoms(0)).size());
    fi.features.resize(d, n);
    for (int i = 0; i < n; ++i) fi.features.col(i) = phi(pp.base_atoms(i));
    PsdTuple ring(std::vector<PsdMatrix>{s});
    OracleResult h_n = augmented_free_energy_n(fi, ring, 0.0);
    EntropyTrendPoint pt;
    pt.n = n;
    pt.h_n = h_n.value;
    pt.se = h_n.std_error;
    pt.h_limit = h_limit;
    pt.gap = std::fabs(h_n.value - h_limit);
    out.push_back(pt);
  }
  return out;
}

}  // namespace tensorlim
