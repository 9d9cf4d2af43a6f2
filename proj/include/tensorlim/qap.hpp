#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tensorlim/oracle.hpp"
#include "tensorlim/saddle.hpp"

namespace tensorlim {

// Continuous signal f on [0,1]^q, held as a dense inclusive-endpoint grid
// (grid_res points per axis) plus an optional exact evaluator for built-ins.
// The optional basis overrides the default Chebyshev fit.
struct SeparableSignal {
  int q = 2;
  int grid_res = 257;
  std::vector<double> grid;  // grid_res^q
  std::function<double(const double*)> exact;
  std::vector<std::function<double(double)>> supplied_basis;
};

SeparableSignal make_signal_from_grid(int q, int grid_res, std::vector<double> grid);
// Built-ins: "product", "exp_product", "min".
SeparableSignal builtin_signal(const std::string& name, int q, int grid_res = 257);
double eval_signal(const SeparableSignal& sig, const double* x);

struct TruncationResult {
  int d = 0;
  Eigen::VectorXd b_vec;      // d^q coefficients, slot-0 slowest
  Eigen::MatrixXd features;   // d x L basis values at the atoms
  double sup_error = 0;       // grid sup-norm of f - fhat
  bool achieved = false;
};

// Smallest d <= max_d whose tensor-product least-squares fit meets the
// sup-norm target; when the target is unreachable the best fit is returned
// with achieved = false.
TruncationResult truncate(const SeparableSignal& sig, double epsilon,
                          const Eigen::VectorXd& atoms, int max_d = 8);

// Finite-support law on [0,1].
struct ScalarLaw {
  Eigen::VectorXd atoms;
  Eigen::VectorXd weights;
};
ScalarLaw quantized_uniform_law(int atoms = 64);
ScalarLaw law_from_permutation(const PermutationPrior& pp);

struct QapPoint {
  double epsilon = 0;
  TruncationResult truncation;
  SaddleResult saddle;
};

struct QapCurve {
  std::vector<QapPoint> points;
  double limit_estimate = 0;
  double cauchy_gap = 0;
  bool epsilon_unreachable = false;  // schedule stopped at the degree cap
};

QapCurve qap_free_energy(const SeparableSignal& sig, const ScalarLaw& law, double t,
                         const std::vector<double>& epsilons, const SaddleConfig& cfg,
                         int max_d = 8, uint64_t seed = 1);

struct AssignmentInstance {
  PermutationPrior u;
  double t = 1.0;
  uint64_t seed = 1;
  int replicates = 512;
};

struct InfoIdentity {
  double lhs = 0, lhs_err = 0;  // (1/n) I(sigma; v, y) via posterior entropy
  double rhs = 0, rhs_err = 0;  // (1/n) I(theta; y | u) via the free-energy identity
  double gap = 0;
};

// Proposition-style identity check with two independent estimators; n <= 6.
InfoIdentity info_identity_check(const AssignmentInstance& inst,
                                 const SeparableSignal& sig);

// Builds the permutation-mode oracle instance for a separable signal.
FiniteInstance assignment_oracle_instance(const AssignmentInstance& inst,
                                          const SeparableSignal& sig);

struct EntropyTrendPoint {
  int n = 0;
  double h_n = 0;
  double se = 0;
  double h_limit = 0;
  double gap = 0;
};

// |H_n(S) - H(S)| along a sequence of permutation priors, against the
// single-letter entropy of the limiting law.
std::vector<EntropyTrendPoint> permutation_entropy_limit_check(
    const std::function<PermutationPrior(int)>& u_gen,
    const std::function<Eigen::VectorXd(double)>& phi, const PsdMatrix& s,
    const std::vector<int>& n_grid, const ChannelSpec& limit_channel,
    uint64_t seed = 1, int replicates = 2048);

}  // namespace tensorlim
