#include "tensorlim/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tensorlim/errors.hpp"
#include "tensorlim/threads.hpp"

namespace tensorlim {

namespace {

struct StartOutcome {
  PsdTuple q;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  InnerInfResult score;
};

PsdTuple s_from_q(const MultilinearModel& model, const PsdTuple& Q) {
  std::vector<Eigen::MatrixXd> cg = coupling_grad(model, Q);
  std::vector<PsdMatrix> blocks;
  blocks.reserve(model.k);
  for (int j = 0; j < model.k; ++j) {
    const double bj = model.weights.beta(j);
    if (bj == 0) {
      blocks.push_back(PsdMatrix::zero(model.d));
      continue;
    }
    blocks.push_back(psd_project(model.snr_t / bj * cg[j]));
  }
  return PsdTuple(std::move(blocks));
}

PsdTuple q_from_s(const MultilinearModel& model, const PsdTuple& S) {
  std::vector<PsdMatrix> blocks;
  blocks.reserve(model.k);
  for (int j = 0; j < model.k; ++j) {
    PsdMatrix arg = PsdMatrix::from_symmetric(S.blocks[j].mat() +
                                              model.side_info.blocks[j].mat());
    blocks.push_back(psd_project(2.0 * overlap_grad(model.channel, arg).grad.mat()));
  }
  return PsdTuple(std::move(blocks));
}

StartOutcome run_start(const MultilinearModel& model, const SaddleConfig& cfg,
                       PsdTuple q) {
  StartOutcome out;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    PsdTuple q_next = q_from_s(model, s_from_q(model, q));
    out.residual = frobenius_distance(q_next, q);
    out.iterations = it;
    std::vector<PsdMatrix> damped;
    damped.reserve(model.k);
    for (int j = 0; j < model.k; ++j)
      damped.push_back(PsdMatrix::from_symmetric(
          (1.0 - cfg.damping) * q.blocks[j].mat() +
          cfg.damping * q_next.blocks[j].mat()));
    q = PsdTuple(std::move(damped));
    if (out.residual <= cfg.fp_tol) {
      out.converged = true;
      break;
    }
  }
  out.q = q;
  out.score = inner_inf(model, q);
  return out;
}

double tuple_norm(const PsdTuple& t) {
  double s = 0;
  for (const auto& b : t.blocks) s += b.mat().squaredNorm();
  return std::sqrt(s);
}

// Independent 1-d cross check: dense Legendre transform of H on an s-grid,
// then a grid scan over the outer variable(s).
double grid_search_value(const MultilinearModel& model, const SaddleConfig& cfg) {
  const int n = cfg.grid_points_per_axis;
  const double qmax = 1.05 * second_moment(model.channel.prior).mat()(0, 0) + 1e-9;
  const int ns = 2001;
  const double smax = 400.0;
  std::vector<std::vector<double>> hvals(model.k, std::vector<double>(ns));
  for (int j = 0; j < model.k; ++j)
    for (int i = 0; i < ns; ++i) {
      double s = smax * i / (ns - 1);
      Eigen::MatrixXd arg(1, 1);
      arg(0, 0) = s + model.side_info.blocks[j].mat()(0, 0);
      hvals[j][i] = channel_entropy(model.channel, PsdMatrix(arg)).value;
    }
  auto hstar = [&](int j, double x) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < ns; ++i) {
      double s = smax * i / (ns - 1);
      best = std::max(best, x * s - hvals[j][i]);
    }
    return best;
  };
  auto value_at = [&](const std::vector<double>& qv) {
    std::vector<PsdMatrix> blocks;
    for (double v : qv) {
      Eigen::MatrixXd m(1, 1);
      m(0, 0) = v;
      blocks.push_back(PsdMatrix(m));
    }
    PsdTuple Q(std::move(blocks));
    double val = 0.5 * model.snr_t * coupling_value(model, Q);
    for (int j = 0; j < model.k; ++j)
      val -= model.weights.beta(j) * hstar(j, 0.5 * qv[j]);
    return val;
  };
  double best = -std::numeric_limits<double>::infinity();
  if (model.k == 1) {
    for (int i = 0; i < n; ++i) best = std::max(best, value_at({qmax * i / (n - 1)}));
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        best = std::max(best, value_at({qmax * i / (n - 1), qmax * j / (n - 1)}));
  }
  return best;
}

}  // namespace

InnerInfResult inner_inf(const MultilinearModel& model, const PsdTuple& Q) {
  InnerInfResult out;
  std::vector<PsdMatrix> sblocks;
  sblocks.reserve(model.k);
  for (int j = 0; j < model.k; ++j) {
    const double bj = model.weights.beta(j);
    if (bj == 0) {
      sblocks.push_back(PsdMatrix::zero(model.d));
      continue;
    }
    PsdMatrix half = PsdMatrix::from_symmetric(0.5 * Q.blocks[j].mat());
    ConjugateResult c =
        conjugate_shifted(model.channel, half, model.side_info.blocks[j]);
    if (c.unbounded) {
      out.unbounded = true;
      out.value = -std::numeric_limits<double>::infinity();
    }
    sblocks.push_back(c.s_star);
  }
  out.s_star = PsdTuple(std::move(sblocks));
  if (!out.unbounded) {
    ValueWithError v = psi(model, Q, out.s_star);
    out.value = v.value;
    out.error = v.error;
  }
  return out;
}

SaddleResult solve(const MultilinearModel& model, const SaddleConfig& cfg,
                   const PsdTuple* warm_start) {
  PsdMatrix moment = second_moment(model.channel.prior);
  std::vector<PsdTuple> starts;
  for (double scale : cfg.start_scales) {
    std::vector<PsdMatrix> blocks(
        model.k, PsdMatrix::from_symmetric(scale * moment.mat()));
    starts.emplace_back(std::move(blocks));
  }
  if (warm_start) starts.push_back(*warm_start);

  std::vector<StartOutcome> outcomes(starts.size());
  parallel_for(static_cast<int64_t>(starts.size()), [&](int64_t i) {
    outcomes[i] = run_start(model, cfg, starts[i]);
  });

  SaddleResult res;
  res.start_values.reserve(outcomes.size());
  for (const auto& o : outcomes) res.start_values.push_back(o.score.value);

  int best = -1;
  bool any_converged = false;
  for (size_t i = 0; i < outcomes.size(); ++i)
    if (outcomes[i].converged) any_converged = true;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (any_converged && !o.converged) continue;
    if (o.score.unbounded) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const auto& b = outcomes[best];
    const double tie = 10.0 * cfg.fp_tol * (1.0 + std::fabs(b.score.value));
    if (o.score.value > b.score.value + tie ||
        (std::fabs(o.score.value - b.score.value) <= tie &&
         tuple_norm(o.q) < tuple_norm(b.q))) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) {
    res.unbounded_inner = true;
    best = 0;
  }
  const auto& chosen = outcomes[best];
  res.free_energy = chosen.score.value;
  res.uncertainty = chosen.score.error;
  res.q_star = chosen.q;
  res.s_star = chosen.score.s_star;
  res.stationarity_residual = chosen.residual;
  res.iterations = chosen.iterations;
  res.start_index = best;
  res.converged = chosen.converged;
  if (cfg.grid_fallback_enabled && model.d == 1 && model.k <= 2) {
    res.grid_value = grid_search_value(model, cfg);
    res.grid_checked = true;
  }
  return res;
}

std::vector<SaddleResult> free_energy_curve(const MultilinearModel& model,
                                            const std::vector<double>& t_grid,
                                            const SaddleConfig& cfg) {
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (t_grid[i] < t_grid[i - 1] || t_grid.front() < 0)
      throw ConfigError("t grid must be nonnegative ascending");
  std::vector<SaddleResult> out;
  out.reserve(t_grid.size());
  MultilinearModel m = model;
  const PsdTuple* warm = nullptr;
  for (double t : t_grid) {
    m.snr_t = t;
    out.push_back(solve(m, cfg, warm));
    warm = &out.back().q_star;
  }
  return out;
}

}  // namespace tensorlim
