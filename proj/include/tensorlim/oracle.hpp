#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tensorlim/potential.hpp"
#include "tensorlim/psd.hpp"

namespace tensorlim {

// Raw signal values f(x(alpha), theta(alpha)) indexed by covariate type
// pattern (kappa, row-major in [k]^q) and atom pattern (row-major in [L]^q).
struct SignalTable {
  int q = 2, m = 1, k = 1, L = 1;
  std::vector<double> values;  // k^q * L^q * m

  const double* at(int64_t kappa_flat, int64_t atom_flat) const {
    return values.data() + (kappa_flat * lq_ + atom_flat) * m;
  }
  void finalize();  // computes strides, validates size

 private:
  int64_t lq_ = 1;
};

SignalTable signal_from_model(const MultilinearModel& model);

// Finite-n instance: the inner integral over candidate parameters is exact
// (enumeration over atoms^n or Sym(n)); the outer expectation is Monte Carlo
// with counter-based seeding (replicate r, variable id) for reproducibility.
struct FiniteInstance {
  int n = 4;
  SignalTable signal;
  std::vector<int> type_of_index;  // n entries in [0, k)
  enum class Mode { IidAtoms, Permutation } mode = Mode::IidAtoms;
  Eigen::VectorXd atom_weights;    // L entries (iid mode)
  Eigen::MatrixXd features;        // d x L feature table (augmented channel, overlaps)
  bool distinct_indices_only = false;
  uint64_t seed = 1;
  int replicates = 512;
};

void validate_instance(const FiniteInstance& inst);
int64_t included_alpha_count(const FiniteInstance& inst);

struct OracleResult {
  double value = 0;
  double std_error = 0;
  int replicates = 0;
  std::vector<double> per_replicate;         // (1/n) log-partition values
  std::vector<double> per_replicate_h_true;  // (1/n) Hamiltonian at the truth
};

// Hamiltonian t(<f', f> - |f'|^2/2) + sqrt(t) <f', z> with the 1/sqrt(n^{q-1})
// scaling folded in; z runs over included alphas in row-major order, m
// components each.
double hamiltonian(const FiniteInstance& inst, const std::vector<int>& theta_true,
                   const std::vector<double>& z, const std::vector<int>& theta_cand,
                   double t);

OracleResult free_energy_n(const FiniteInstance& inst, double t);
OracleResult augmented_free_energy_n(const FiniteInstance& inst, const PsdTuple& ring_s,
                                     double t);

// Exact (1/n^{q-1}) sum_alpha E |f_alpha|^2 over included alphas.
double mean_square_signal(const FiniteInstance& inst);

// (1/n) I(y; theta | x) = (t/2n) E|f^{(n)}|^2 - F_n(t).
ValueWithError mutual_information_n(const FiniteInstance& inst, double t);

struct OverlapResult {
  double tensor_overlap = 0;  // (1/2n) E |E[f^{(n)} | x, y]|^2
  double tensor_overlap_err = 0;
  std::vector<Eigen::MatrixXd> feature_overlaps;  // per type, (1/2n) sum E[eta eta^T]
  double feature_err = 0;
  int replicates = 0;
};

OverlapResult posterior_overlap_n(const FiniteInstance& inst, double t);
OverlapResult augmented_posterior_overlap_n(const FiniteInstance& inst,
                                            const PsdTuple& ring_s, double t);

}  // namespace tensorlim
