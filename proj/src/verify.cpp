#include "tensorlim/verify.hpp"

#include <cmath>
#include <sstream>

#include "tensorlim/approx.hpp"
#include "tensorlim/channel.hpp"
#include "tensorlim/hetero.hpp"
#include "tensorlim/oracle.hpp"
#include "tensorlim/potential.hpp"
#include "tensorlim/qap.hpp"
#include "tensorlim/rng.hpp"

namespace tensorlim {

namespace {

Eigen::MatrixXd random_symmetric(Rng& rng, int d, double scale = 1.0) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = scale * (2.0 * rng.uniform01() - 1.0);
  return 0.5 * (a + a.transpose());
}

PsdMatrix random_psd(Rng& rng, int d, double scale = 1.0) {
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = scale * (2.0 * rng.uniform01() - 1.0);
  Eigen::MatrixXd m = a * a.transpose();
  return PsdMatrix::from_symmetric(0.5 * (m + m.transpose()));
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

DiscretePrior random_two_atom_prior(Rng& rng, int d) {
  Eigen::VectorXd w(2);
  double p = 0.3 + 0.4 * rng.uniform01();
  w << p, 1.0 - p;
  Eigen::MatrixXd f(d, 2);
  for (int i = 0; i < d; ++i)
    for (int l = 0; l < 2; ++l) f(i, l) = 2.0 * rng.uniform01() - 1.0;
  return DiscretePrior({"a", "b"}, w, f);
}

MultilinearModel z2_model(double t, uint64_t seed) {
  MultilinearModel model;
  model.q = 2;
  model.m = 1;
  model.d = 1;
  model.k = 1;
  model.couplings = {Eigen::MatrixXd::Ones(1, 1)};
  model.weights = TypeWeights::single();
  model.channel = make_channel(rademacher_prior(), seed);
  model.snr_t = t;
  finalize_model(model);
  return model;
}

FiniteInstance z2_instance(int n, uint64_t seed, int replicates,
                           bool distinct_only) {
  MultilinearModel model = z2_model(1.0, seed);
  FiniteInstance inst;
  inst.n = n;
  inst.signal = signal_from_model(model);
  inst.type_of_index.assign(n, 0);
  inst.mode = FiniteInstance::Mode::IidAtoms;
  inst.atom_weights = model.channel.prior.weights;
  inst.features = model.channel.prior.features;
  inst.distinct_indices_only = distinct_only;
  inst.seed = seed;
  inst.replicates = replicates;
  return inst;
}

}  // namespace

std::vector<PropertyResult> run_verification(uint64_t seed) {
  std::vector<PropertyResult> out;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    out.push_back({name, pass, detail});
  };

  {  // psd_sqrt round trip
    Rng rng(mix(seed, 11));
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      int d = 1 + static_cast<int>(rng.below(8));
      PsdMatrix m = random_psd(rng, d);
      PsdMatrix r = psd_sqrt(m);
      worst = std::max(worst,
                       (r.mat() * r.mat() - m.mat()).norm() / (1.0 + m.mat().norm()));
    }
    report("psd_sqrt round trip", worst <= 1e-9, "max rel residual " + std::to_string(worst));
  }
  {  // projection idempotence and fixed points
    Rng rng(mix(seed, 12));
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      int d = 1 + static_cast<int>(rng.below(6));
      Eigen::MatrixXd m = random_symmetric(rng, d);
      PsdMatrix p1 = psd_project(m);
      PsdMatrix p2 = psd_project(p1.mat());
      worst = std::max(worst, (p1.mat() - p2.mat()).norm());
      PsdMatrix q = random_psd(rng, d);
      worst = std::max(worst, (psd_project(q.mat()).mat() - q.mat()).norm());
    }
    report("psd_project idempotent", worst <= 1e-10, "max deviation " + std::to_string(worst));
  }
  {  // kron contraction against explicit materialization
    Rng rng(mix(seed, 13));
    double worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::MatrixXd g = random_symmetric(rng, 4);
      PsdMatrix a = random_psd(rng, 2), b = random_psd(rng, 2);
      std::vector<PsdMatrix> qs = {a, b};
      double direct = kron_contract(g, qs);
      double mat = (g.cwiseProduct(kron(a.mat(), b.mat()))).sum();
      worst = std::max(worst, std::fabs(direct - mat));
    }
    report("kron contraction vs materialized", worst <= 1e-10,
           "max gap " + std::to_string(worst));
  }
  {  // channel convexity + monotonicity + capacity sandwich
    ChannelSpec spec = make_channel(rademacher_prior(), seed);
    bool ok = true;
    std::ostringstream detail;
    auto h = [&](double s) {
      Eigen::MatrixXd m(1, 1);
      m(0, 0) = s;
      return channel_entropy(spec, PsdMatrix(m)).value;
    };
    for (double s1 : {0.0, 0.5, 2.0})
      for (double s2 : {1.0, 3.0})
        for (double lam : {0.25, 0.5, 0.75}) {
          double lhs = h(lam * s1 + (1 - lam) * s2);
          double rhs = lam * h(s1) + (1 - lam) * h(s2);
          if (lhs > rhs + 1e-10) ok = false;
        }
    double prev = -1;
    for (double s : {0.0, 0.2, 0.5, 1.0, 2.0, 5.0}) {
      double v = h(s);
      if (v < prev - 1e-10 || v < -1e-12 || v > 0.5 * s + 1e-12) ok = false;
      prev = v;
    }
    report("channel convex, monotone, capacity-bounded", ok, "");
  }
  {  // lifting identity
    Rng rng(mix(seed, 14));
    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
      MultilinearModel model;
      model.q = 2;
      model.m = 2;
      model.d = 2;
      model.k = 2;
      for (int i = 0; i < 4; ++i) {
        Eigen::MatrixXd a(2, 4);
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 4; ++c) a(r, c) = 2.0 * rng.uniform01() - 1.0;
        model.couplings.push_back(a);
      }
      Eigen::VectorXd beta(2);
      double p = 0.3 + 0.4 * rng.uniform01();
      beta << p, 1.0 - p;
      model.weights = TypeWeights(beta);
      DiscretePrior prior = random_two_atom_prior(rng, 2);
      model.channel = make_channel(prior, mix(seed, 2000 + trial));
      model.channel.quadrature.kind = Quadrature::Kind::GaussHermite;
      model.channel.quadrature.gh_nodes = 96;
      model.snr_t = 0.7;
      finalize_model(model);
      LiftedModel lifted = lift(model);
      LiftedCheck chk =
          lifted_identity_check(lifted, random_psd(rng, 4), random_psd(rng, 4));
      worst = std::max(worst, std::fabs(chk.lhs - chk.rhs) /
                                  (1.0 + std::fabs(chk.lhs)));
    }
    report("lifting identity", worst <= 1e-8, "max rel gap " + std::to_string(worst));
  }
  {  // I-MMSE finite differences on the finite-n oracle
    const double t = 1.0, hstep = 0.05;
    FiniteInstance inst = z2_instance(4, mix(seed, 15), 384, false);
    OracleResult lo = free_energy_n(inst, t - hstep);
    OracleResult hi = free_energy_n(inst, t + hstep);
    OverlapResult ov = posterior_overlap_n(inst, t);
    double fd_mean = 0, fd_var = 0;
    std::vector<double> fd(inst.replicates);
    for (int r = 0; r < inst.replicates; ++r) {
      fd[r] = (hi.per_replicate[r] - lo.per_replicate[r]) / (2 * hstep);
      fd_mean += fd[r];
    }
    fd_mean /= inst.replicates;
    for (double v : fd) fd_var += (v - fd_mean) * (v - fd_mean);
    double fd_se = std::sqrt(fd_var / (inst.replicates - 1) / inst.replicates);
    double tol = 3.0 * std::sqrt(fd_se * fd_se +
                                 ov.tensor_overlap_err * ov.tensor_overlap_err) +
                 1e-3;
    bool ok = std::fabs(fd_mean - ov.tensor_overlap) <= tol;
    std::ostringstream ss;
    ss << "fd " << fd_mean << " overlap " << ov.tensor_overlap << " tol " << tol;
    report("I-MMSE finite difference", ok, ss.str());
  }
  {  // stepping idempotence and refinement
    const int R = 64;
    std::vector<double> vals(R * R);
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < R; ++j) {
        double x = (i + 0.5) / R, y = (j + 0.5) / R;
        vals[i * R + j] = std::exp(-(x - y) * (x - y));
      }
    VarianceProfile prof = make_profile(2, R, vals);
    bool ok = true;
    double prev_err = 1e9;
    for (int k : {2, 4, 8, 16}) {
      SteppedProfile sp = step(prof, k);
      SteppedProfile again = restep(sp, k);
      for (size_t i = 0; i < sp.values.size(); ++i)
        if (std::fabs(sp.values[i] - again.values[i]) > 1e-12) ok = false;
      double err = stepping_l2_error(prof, sp);
      if (err >= prev_err) ok = false;
      prev_err = err;
    }
    report("stepping idempotent, refining", ok, "");
  }
  {  // assignment information identity
    Eigen::VectorXd u(3);
    u << 0.1, 0.55, 0.9;
    AssignmentInstance ai{PermutationPrior(u), 1.5, mix(seed, 16), 1024};
    InfoIdentity id = info_identity_check(ai, builtin_signal("exp_product", 2, 129));
    double tol = 3.0 * std::sqrt(id.lhs_err * id.lhs_err + id.rhs_err * id.rhs_err);
    std::ostringstream ss;
    ss << "lhs " << id.lhs << " rhs " << id.rhs << " tol " << tol;
    report("assignment information identity", id.gap <= tol, ss.str());
  }
  return out;
}

}  // namespace tensorlim
