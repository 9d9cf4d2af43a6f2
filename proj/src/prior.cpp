#include "tensorlim/prior.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tensorlim/errors.hpp"

namespace tensorlim {

namespace {
constexpr double kSimplexTol = 1e-12;

void check_simplex(const Eigen::VectorXd& w) {
  if (w.size() < 1) throw DimensionMismatchError("empty weight vector");
  if (w.minCoeff() < -kSimplexTol) throw ConfigError("negative weight");
  if (std::fabs(w.sum() - 1.0) > kSimplexTol * std::max<double>(1.0, w.size()))
    throw ConfigError("weights do not sum to 1");
}
}  // namespace

DiscretePrior::DiscretePrior(std::vector<std::string> l, Eigen::VectorXd w,
                             Eigen::MatrixXd f)
    : labels(std::move(l)), weights(std::move(w)), features(std::move(f)) {
  if (labels.size() != static_cast<size_t>(weights.size()) ||
      features.cols() != weights.size())
    throw DimensionMismatchError("prior table sizes disagree");
  check_simplex(weights);
  if (!features.allFinite()) throw ConfigError("non-finite feature value");
}

TypeWeights::TypeWeights(Eigen::VectorXd b) : beta(std::move(b)) { check_simplex(beta); }

PermutationPrior::PermutationPrior(Eigen::VectorXd u) : base_atoms(std::move(u)) {
  if (base_atoms.size() < 1) throw DimensionMismatchError("empty atom vector");
  if (base_atoms.minCoeff() < 0.0 || base_atoms.maxCoeff() > 1.0)
    throw ConfigError("permutation atoms must lie in [0,1]");
}

DiscretePrior empirical_measure(const PermutationPrior& pp,
                                const std::function<Eigen::VectorXd(double)>& phi) {
  std::map<double, int> counts;
  for (int i = 0; i < pp.n(); ++i) counts[pp.base_atoms(i)]++;
  const int L = static_cast<int>(counts.size());
  std::vector<std::string> labels(L);
  Eigen::VectorXd w(L);
  Eigen::MatrixXd f;
  int l = 0;
  for (const auto& [atom, c] : counts) {
    Eigen::VectorXd feat = phi(atom);
    if (l == 0) f.resize(feat.size(), L);
    labels[l] = std::to_string(atom);
    w(l) = static_cast<double>(c) / pp.n();
    f.col(l) = feat;
    ++l;
  }
  return DiscretePrior(std::move(labels), std::move(w), std::move(f));
}

PsdMatrix second_moment(const DiscretePrior& p) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p.dim(), p.dim());
  for (int l = 0; l < p.size(); ++l)
    m += p.weights(l) * p.features.col(l) * p.features.col(l).transpose();
  return PsdMatrix::from_symmetric(0.5 * (m + m.transpose()));
}

DiscretePrior rademacher_prior() {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  Eigen::MatrixXd f(1, 2);
  f << -1.0, 1.0;
  return DiscretePrior({"-1", "+1"}, w, f);
}

DiscretePrior quantized_gaussian_prior(int atoms, double range) {
  Eigen::VectorXd w(atoms);
  Eigen::MatrixXd f(1, atoms);
  std::vector<std::string> labels(atoms);
  for (int i = 0; i < atoms; ++i) {
    double x = -range + 2.0 * range * i / (atoms - 1);
    f(0, i) = x;
    w(i) = std::exp(-0.5 * x * x);
    labels[i] = std::to_string(x);
  }
  w /= w.sum();
  return DiscretePrior(std::move(labels), std::move(w), std::move(f));
}

DiscretePrior quantized_uniform_prior(int atoms) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(atoms, 1.0 / atoms);
  Eigen::MatrixXd f(1, atoms);
  std::vector<std::string> labels(atoms);
  for (int i = 0; i < atoms; ++i) {
    f(0, i) = (i + 0.5) / atoms;
    labels[i] = std::to_string(f(0, i));
  }
  return DiscretePrior(std::move(labels), std::move(w), std::move(f));
}

}  // namespace tensorlim
