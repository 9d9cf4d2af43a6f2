#include "tensorlim/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "tensorlim/rng.hpp"

namespace tensorlim {

namespace {

GaussHermiteRule build_gauss_hermite(int n) {
  // Physicists' Hermite Jacobi matrix: zero diagonal, off-diagonal sqrt(i/2).
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double b = std::sqrt(0.5 * i);
    j(i, i - 1) = b;
    j(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double sqrt2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    rule.nodes(i) = sqrt2 * es.eigenvalues()(i);   // abscissa for N(0,1)
    double v0 = es.eigenvectors()(0, i);
    rule.weights(i) = v0 * v0;                     // already sums to 1
  }
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
  static std::mutex m;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_hermite(n)).first;
  return it->second;
}

RSequence::RSequence(int dim, uint64_t shift_seed) : alpha_(dim), shift_(dim) {
  // Generalized golden ratio: unique positive root of x^{d+1} = x + 1.
  double g = 1.5;
  for (int it = 0; it < 64; ++it) g = std::pow(1.0 + g, 1.0 / (dim + 1));
  double a = 1.0;
  for (int j = 0; j < dim; ++j) {
    a /= g;
    alpha_[j] = a;
    shift_[j] = u01_at(mix(shift_seed, static_cast<uint64_t>(j) + 101));
  }
}

void RSequence::point(int64_t i, double* out) const {
  for (size_t j = 0; j < alpha_.size(); ++j) {
    double v = shift_[j] + static_cast<double>(i + 1) * alpha_[j];
    out[j] = v - std::floor(v);
  }
}

}  // namespace tensorlim
