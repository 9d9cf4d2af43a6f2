#pragma once

#include <Eigen/Dense>

#include "tensorlim/channel.hpp"
#include "tensorlim/oracle.hpp"

namespace tensorlim {

struct GapReport {
  double l2_gap = 0;       // per-coordinate L2 signal gap delta
  double moment_bound = 0; // measured finite-n moment C
  double t = 0;
  double fe_bound = 0;     // t (sqrt(C d + d^2) + d^2/2)
};

// t * (sqrt(C*delta + delta^2) + delta^2 / 2); zero iff delta = 0 or t = 0.
double fe_stability_bound(double c, double delta, double t);

// MC estimate of (1/n) E |f^{(n)} - fhat^{(n)}|^2 with theta drawn from the
// instance's prior (iid atoms or random permutation).
ValueWithError l2_gap(const FiniteInstance& inst, const SignalTable& fhat,
                      int samples, uint64_t seed);

// Exact enumeration of the same quantity (prior expectation in closed form).
double l2_gap_exact(const FiniteInstance& inst, const SignalTable& fhat);

// sqrt(E|u|^2 v E|v|^2) * sqrt(E|u-v|^2) + E|u-v|^2 / 2 from paired samples
// (columns are samples).
double moment_entropy_bound(const Eigen::MatrixXd& u_samples,
                            const Eigen::MatrixXd& v_samples);

// Assembled certificate for a signal/approximation pair.
GapReport gap_report(const FiniteInstance& inst, const SignalTable& fhat, double t);

}  // namespace tensorlim
