#pragma once

#include <vector>

#include "tensorlim/potential.hpp"

namespace tensorlim {

struct SaddleConfig {
  double damping = 0.5;
  int max_iters = 2000;
  double fp_tol = 1e-8;
  std::vector<double> start_scales = {0, 1e-3, 0.01, 0.1, 0.25, 0.5, 1, 2, 5, 10};
  bool grid_fallback_enabled = false;  // d=1, k<=2 only
  int grid_points_per_axis = 257;
  int n_starts() const { return static_cast<int>(start_scales.size()); }
};

struct InnerInfResult {
  double value = 0;
  double error = 0;
  PsdTuple s_star;
  bool unbounded = false;
};

// inf_S Psi(Q, S) via the per-type convex conjugate of the (shifted) channel
// entropy; value equals Psi(Q, S_star).
InnerInfResult inner_inf(const MultilinearModel& model, const PsdTuple& Q);

struct SaddleResult {
  double free_energy = 0;
  double uncertainty = 0;
  PsdTuple q_star, s_star;
  double stationarity_residual = 0;
  int iterations = 0;
  int start_index = 0;
  std::vector<double> start_values;
  bool converged = false;
  bool unbounded_inner = false;
  double grid_value = 0;
  bool grid_checked = false;
};

// sup_Q inf_S Psi by damped fixed-point iteration on the stationarity system
//   Q_j <- 2 grad H(S_j + ring S_j),  S_j <- t * coupling_grad_j(Q) / beta_j,
// multi-started from Q0 = scale * E[phi phi^T]; converged points are scored by
// inner_inf and the best value wins (ties toward smaller |Q|_F).
SaddleResult solve(const MultilinearModel& model, const SaddleConfig& cfg,
                   const PsdTuple* warm_start = nullptr);

// Ascending t grid with warm starts from the previous point.
std::vector<SaddleResult> free_energy_curve(const MultilinearModel& model,
                                            const std::vector<double>& t_grid,
                                            const SaddleConfig& cfg);

}  // namespace tensorlim
