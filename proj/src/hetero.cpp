#include "tensorlim/hetero.hpp"

#include <cmath>

#include "tensorlim/errors.hpp"

namespace tensorlim {

namespace {

int64_t ipow64(int64_t b, int e) {
  int64_t v = 1;
  for (int i = 0; i < e; ++i) v *= b;
  return v;
}

bool is_pow2(int k) { return k >= 1 && (k & (k - 1)) == 0; }

}  // namespace

VarianceProfile make_profile(int q, int resolution, std::vector<double> values) {
  if (resolution < 2) throw ResolutionTooCoarseError("grid resolution must be >= 2");
  if (static_cast<int64_t>(values.size()) != ipow64(resolution, q))
    throw ShapeMismatchError("profile grid size != resolution^q");
  VarianceProfile p;
  p.q = q;
  p.resolution = resolution;
  for (double v : values) {
    if (!(v >= 0)) throw ConfigError("profile values must be nonnegative");
    p.bound = std::max(p.bound, v);
  }
  p.values = std::move(values);
  return p;
}

SteppedProfile step(const VarianceProfile& profile, int k) {
  if (!is_pow2(k)) throw ConfigError("stepping partition must be dyadic");
  if (profile.resolution < 4 * k)
    throw ResolutionTooCoarseError("grid resolution below 4k");
  if (profile.resolution % k != 0)
    throw ResolutionTooCoarseError("grid resolution not divisible by k");
  const int q = profile.q, R = profile.resolution, w = R / k;
  SteppedProfile sp;
  sp.q = q;
  sp.k = k;
  sp.values.assign(ipow64(k, q), 0.0);
  std::vector<int> dig(q);
  const int64_t total = ipow64(R, q);
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    int64_t cell = 0;
    for (int p = q - 1; p >= 0; --p) {
      dig[p] = static_cast<int>(rem % R);
      rem /= R;
    }
    for (int p = 0; p < q; ++p) cell = cell * k + dig[p] / w;
    const double v = profile.values[flat];
    sp.values[cell] += v * v;
  }
  const double cell_count = std::pow(static_cast<double>(w), q);
  for (double& v : sp.values) v /= cell_count;
  sp.beta = TypeWeights(Eigen::VectorXd::Constant(k, 1.0 / k));
  return sp;
}

SteppedProfile restep(const SteppedProfile& sp, int k_coarse) {
  if (!is_pow2(k_coarse) || k_coarse > sp.k || sp.k % k_coarse != 0)
    throw ConfigError("restep target must be a dyadic coarsening");
  const int q = sp.q, w = sp.k / k_coarse;
  SteppedProfile out;
  out.q = q;
  out.k = k_coarse;
  out.values.assign(ipow64(k_coarse, q), 0.0);
  std::vector<int> dig(q);
  const int64_t total = ipow64(sp.k, q);
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    int64_t cell = 0;
    for (int p = q - 1; p >= 0; --p) {
      dig[p] = static_cast<int>(rem % sp.k);
      rem /= sp.k;
    }
    for (int p = 0; p < q; ++p) cell = cell * k_coarse + dig[p] / w;
    out.values[cell] += sp.values[flat];
  }
  const double cell_count = std::pow(static_cast<double>(w), q);
  for (double& v : out.values) v /= cell_count;
  out.beta = TypeWeights(Eigen::VectorXd::Constant(k_coarse, 1.0 / k_coarse));
  return out;
}

double stepping_l2_error(const VarianceProfile& profile, const SteppedProfile& sp) {
  const int q = profile.q, R = profile.resolution, w = R / sp.k;
  if (profile.q != sp.q || R % sp.k != 0)
    throw ShapeMismatchError("profile/stepping mismatch");
  std::vector<int> dig(q);
  const int64_t total = ipow64(R, q);
  double acc = 0;
  for (int64_t flat = 0; flat < total; ++flat) {
    int64_t rem = flat;
    int64_t cell = 0;
    for (int p = q - 1; p >= 0; --p) {
      dig[p] = static_cast<int>(rem % R);
      rem /= R;
    }
    for (int p = 0; p < q; ++p) cell = cell * sp.k + dig[p] / w;
    const double d = profile.values[flat] * profile.values[flat] - sp.values[cell];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(total));
}

MultilinearModel reduce(const SteppedProfile& sp, const Eigen::VectorXd& b,
                        const DiscretePrior& prior, double t, uint64_t seed) {
  MultilinearModel model;
  model.q = sp.q;
  model.m = 1;
  model.d = prior.dim();
  model.k = sp.k;
  const int64_t dq = ipow64(model.d, model.q);
  if (b.size() != dq) throw DimensionMismatchError("coupling vector must be d^q");
  model.couplings.reserve(sp.values.size());
  for (double v : sp.values) {
    Eigen::MatrixXd a = std::sqrt(std::max(v, 0.0)) * b.transpose();
    model.couplings.push_back(a);
  }
  model.weights = sp.beta;
  model.channel = make_channel(prior, seed);
  model.snr_t = t;
  finalize_model(model);
  return model;
}

HeteroCurve hetero_free_energy(const VarianceProfile& profile,
                               const Eigen::VectorXd& b, const DiscretePrior& prior,
                               double t, const std::vector<int>& k_sequence,
                               const SaddleConfig& cfg, uint64_t seed) {
  for (size_t i = 1; i < k_sequence.size(); ++i)
    if (k_sequence[i] <= k_sequence[i - 1])
      throw ConfigError("k sequence must be ascending");
  HeteroCurve out;
  for (int k : k_sequence) {
    MultilinearModel model = reduce(step(profile, k), b, prior, t, seed);
    out.ks.push_back(k);
    out.results.push_back(solve(model, cfg));
  }
  if (!out.results.empty()) {
    out.limit_estimate = out.results.back().free_energy;
    if (out.results.size() >= 2)
      out.cauchy_gap = out.results.back().free_energy -
                       out.results[out.results.size() - 2].free_energy;
  }
  return out;
}

}  // namespace tensorlim
