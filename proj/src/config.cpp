#include "tensorlim/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "tensorlim/errors.hpp"
#include "tensorlim/version.hpp"

namespace tensorlim {

namespace {

void require_keys(const Json& j, const std::set<std::string>& required,
                  const std::set<std::string>& optional, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!required.count(key) && !optional.count(key))
      throw ConfigError(where + ": unknown field '" + key + "'");
  }
  for (const auto& key : required)
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
}

double num(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<int>();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string serialize_tuple(const PsdTuple& t) {
  std::string out;
  for (int j = 0; j < t.k(); ++j) {
    if (j) out += "|";
    const auto& m = t.blocks[j].mat();
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (i) out += ";";
      out += fmt(m.data()[i]);
    }
  }
  return out;
}

Json tuple_to_json(const PsdTuple& t) {
  Json arr = Json::array();
  for (int j = 0; j < t.k(); ++j) {
    Json block = Json::array();
    const auto& m = t.blocks[j].mat();
    for (int r = 0; r < m.rows(); ++r) {
      Json row = Json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      block.push_back(row);
    }
    arr.push_back(block);
  }
  return arr;
}

std::vector<double> number_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(num(v, where));
  return out;
}

Json base_record(const Json& config) {
  Json rec;
  rec["tool"] = "tensorlim";
  rec["version"] = kVersion;
  rec["config"] = config;
  rec["config_hash"] = config_hash(config);
  rec["created_unix"] = static_cast<int64_t>(std::time(nullptr));
  rec["rows"] = Json::array();
  return rec;
}

std::string csv_header_line(const Json& config) {
  return "# config_hash=" + config_hash(config) + "\n";
}

}  // namespace

std::string config_hash(const Json& config) {
  const std::string dump = config.dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) h = (h ^ c) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

DiscretePrior parse_prior(const Json& j) {
  if (j.contains("builtin")) {
    require_keys(j, {"builtin"}, {"atoms", "range"}, "prior");
    const std::string name = j.at("builtin").get<std::string>();
    if (name == "rademacher") return rademacher_prior();
    if (name == "gaussian")
      return quantized_gaussian_prior(j.value("atoms", 129), j.value("range", 6.0));
    if (name == "uniform") return quantized_uniform_prior(j.value("atoms", 64));
    throw ConfigError("unknown builtin prior: " + name);
  }
  require_keys(j, {"records"}, {}, "prior");
  const Json& recs = j.at("records");
  if (!recs.is_array() || recs.empty()) throw ConfigError("prior.records: empty");
  const size_t L = recs.size();
  std::vector<std::string> labels(L);
  Eigen::VectorXd w(L);
  Eigen::MatrixXd f;
  for (size_t l = 0; l < L; ++l) {
    require_keys(recs[l], {"atom", "weight", "feature"}, {}, "prior record");
    labels[l] = recs[l].at("atom").is_string()
                    ? recs[l].at("atom").get<std::string>()
                    : recs[l].at("atom").dump();
    w(l) = num(recs[l].at("weight"), "prior weight");
    std::vector<double> feat = number_list(recs[l].at("feature"), "prior feature");
    if (l == 0) f.resize(feat.size(), L);
    if (static_cast<size_t>(f.rows()) != feat.size())
      throw ConfigError("prior feature dimensions disagree");
    for (size_t c = 0; c < feat.size(); ++c) f(c, l) = feat[c];
  }
  return DiscretePrior(std::move(labels), std::move(w), std::move(f));
}

Quadrature parse_quadrature(const Json& j, uint64_t seed) {
  Quadrature q;
  q.seed = seed;
  if (j.contains("gauss_hermite_nodes")) {
    require_keys(j, {"gauss_hermite_nodes"}, {}, "quadrature");
    q.kind = Quadrature::Kind::GaussHermite;
    q.gh_nodes = integer(j.at("gauss_hermite_nodes"), "gauss_hermite_nodes");
  } else {
    require_keys(j, {"mc_samples"}, {"shifts"}, "quadrature");
    q.kind = Quadrature::Kind::QuasiMonteCarlo;
    q.mc_samples = integer(j.at("mc_samples"), "mc_samples");
    q.mc_shifts = j.value("shifts", 16);
  }
  return q;
}

MultilinearModel parse_model(const Json& j, uint64_t seed) {
  require_keys(j, {"q", "d", "k", "prior", "couplings"},
               {"m", "type_weights", "side_info", "quadrature"}, "model");
  MultilinearModel model;
  model.q = integer(j.at("q"), "model.q");
  model.d = integer(j.at("d"), "model.d");
  model.k = integer(j.at("k"), "model.k");
  model.m = j.value("m", 1);
  if (model.q < 1 || model.d < 1 || model.k < 1 || model.m < 1)
    throw ConfigError("model dimensions must be positive");
  DiscretePrior prior = parse_prior(j.at("prior"));
  if (prior.dim() != model.d) throw ConfigError("prior feature dim != model.d");
  model.channel = make_channel(prior, seed);
  if (j.contains("quadrature"))
    model.channel.quadrature = parse_quadrature(j.at("quadrature"), seed);
  if (j.contains("type_weights")) {
    std::vector<double> b = number_list(j.at("type_weights"), "type_weights");
    model.weights = TypeWeights(
        Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<int64_t>(b.size())));
  } else {
    model.weights =
        TypeWeights(Eigen::VectorXd::Constant(model.k, 1.0 / model.k));
  }
  int64_t kq = 1;
  for (int p = 0; p < model.q; ++p) kq *= model.k;
  int64_t dq = 1;
  for (int p = 0; p < model.q; ++p) dq *= model.d;
  model.couplings.assign(kq, Eigen::MatrixXd::Zero(model.m, dq));
  if (!j.at("couplings").is_array()) throw ConfigError("model.couplings: array");
  for (const auto& c : j.at("couplings")) {
    require_keys(c, {"kappa", "matrix"}, {}, "coupling");
    const Json& kap = c.at("kappa");
    if (!kap.is_array() || static_cast<int>(kap.size()) != model.q)
      throw ConfigError("coupling.kappa must have q entries");
    int64_t flat = 0;
    for (const auto& kv : kap) {
      int one_based = integer(kv, "kappa entry");
      if (one_based < 1 || one_based > model.k)
        throw ConfigError("kappa entry out of range");
      flat = flat * model.k + (one_based - 1);
    }
    const Json& mat = c.at("matrix");
    if (!mat.is_array() || static_cast<int>(mat.size()) != model.m)
      throw ConfigError("coupling.matrix must have m rows");
    for (int r = 0; r < model.m; ++r) {
      std::vector<double> row = number_list(mat[r], "coupling row");
      if (static_cast<int64_t>(row.size()) != dq)
        throw ConfigError("coupling row must have d^q entries");
      for (int64_t cidx = 0; cidx < dq; ++cidx)
        model.couplings[flat](r, cidx) = row[cidx];
    }
  }
  if (j.contains("side_info")) {
    const Json& si = j.at("side_info");
    if (si.contains("scale")) {
      require_keys(si, {"scale"}, {}, "side_info");
      double s = num(si.at("scale"), "side_info.scale");
      std::vector<PsdMatrix> blocks(
          model.k, PsdMatrix::from_symmetric(
                       s * Eigen::MatrixXd::Identity(model.d, model.d)));
      model.side_info = PsdTuple(std::move(blocks));
    } else {
      require_keys(si, {"blocks"}, {}, "side_info");
      std::vector<PsdMatrix> blocks;
      for (const auto& b : si.at("blocks")) {
        Eigen::MatrixXd m(model.d, model.d);
        for (int r = 0; r < model.d; ++r) {
          std::vector<double> row = number_list(b[r], "side_info row");
          for (int c2 = 0; c2 < model.d; ++c2) m(r, c2) = row[c2];
        }
        blocks.push_back(PsdMatrix(m));
      }
      model.side_info = PsdTuple(std::move(blocks));
    }
  }
  finalize_model(model);
  return model;
}

SaddleConfig parse_saddle(const Json& j) {
  SaddleConfig cfg;
  require_keys(j, {},
               {"damping", "fp_tol", "max_iters", "start_scales", "grid_fallback",
                "grid_points_per_axis"},
               "saddle");
  cfg.damping = j.value("damping", cfg.damping);
  cfg.fp_tol = j.value("fp_tol", cfg.fp_tol);
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  if (j.contains("start_scales"))
    cfg.start_scales = number_list(j.at("start_scales"), "start_scales");
  cfg.grid_fallback_enabled = j.value("grid_fallback", false);
  cfg.grid_points_per_axis = j.value("grid_points_per_axis", cfg.grid_points_per_axis);
  if (cfg.damping <= 0 || cfg.damping > 1) throw ConfigError("damping in (0,1]");
  if (cfg.fp_tol <= 0) throw ConfigError("fp_tol must be positive");
  if (cfg.start_scales.empty()) throw ConfigError("need at least one start scale");
  return cfg;
}

VarianceProfile parse_profile(const Json& j) {
  if (j.contains("file")) {
    require_keys(j, {"file", "q", "resolution"}, {}, "profile");
    std::ifstream in(j.at("file").get<std::string>());
    if (!in) throw ConfigError("cannot open profile file");
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    return make_profile(integer(j.at("q"), "profile.q"),
                        integer(j.at("resolution"), "profile.resolution"),
                        std::move(values));
  }
  require_keys(j, {"q", "resolution", "values"}, {}, "profile");
  return make_profile(integer(j.at("q"), "profile.q"),
                      integer(j.at("resolution"), "profile.resolution"),
                      number_list(j.at("values"), "profile.values"));
}

SeparableSignal parse_signal(const Json& j) {
  if (j.contains("builtin")) {
    require_keys(j, {"builtin"}, {"q", "resolution"}, "signal");
    return builtin_signal(j.at("builtin").get<std::string>(), j.value("q", 2),
                          j.value("resolution", 257));
  }
  if (j.contains("file")) {
    require_keys(j, {"file", "q", "resolution"}, {}, "signal");
    std::ifstream in(j.at("file").get<std::string>());
    if (!in) throw ConfigError("cannot open signal file");
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    return make_signal_from_grid(integer(j.at("q"), "signal.q"),
                                 integer(j.at("resolution"), "signal.resolution"),
                                 std::move(values));
  }
  require_keys(j, {"grid"}, {}, "signal");
  const Json& g = j.at("grid");
  require_keys(g, {"q", "resolution", "values"}, {}, "signal.grid");
  return make_signal_from_grid(integer(g.at("q"), "signal.q"),
                               integer(g.at("resolution"), "signal.resolution"),
                               number_list(g.at("values"), "signal.values"));
}

namespace {

RunOutput run_channel(const Json& config) {
  require_keys(config, {"command", "prior", "s_grid"},
               {"seed", "threads", "quadrature"}, "channel config");
  const uint64_t seed = config.value("seed", 1);
  DiscretePrior prior = parse_prior(config.at("prior"));
  ChannelSpec spec = make_channel(prior, seed);
  if (config.contains("quadrature"))
    spec.quadrature = parse_quadrature(config.at("quadrature"), seed);
  std::vector<double> s_grid = number_list(config.at("s_grid"), "s_grid");
  RunOutput out;
  out.record = base_record(config);
  std::ostringstream csv;
  csv << csv_header_line(config);
  csv << "s,H,H_err";
  for (int r = 0; r < prior.dim(); ++r)
    for (int c = 0; c < prior.dim(); ++c) csv << ",grad_" << r << "_" << c;
  csv << "\n";
  for (double s : s_grid) {
    PsdMatrix sm = PsdMatrix::from_symmetric(
        s * Eigen::MatrixXd::Identity(prior.dim(), prior.dim()));
    ValueWithError h = channel_entropy(spec, sm);
    OverlapGrad g = overlap_grad(spec, sm);
    csv << fmt(s) << "," << fmt(h.value) << "," << fmt(h.error);
    for (int r = 0; r < prior.dim(); ++r)
      for (int c = 0; c < prior.dim(); ++c) csv << "," << fmt(g.grad.mat()(r, c));
    csv << "\n";
    Json row;
    row["s"] = s;
    row["H"] = h.value;
    row["H_err"] = h.error;
    row["grad"] = tuple_to_json(PsdTuple(std::vector<PsdMatrix>{g.grad}));
    out.record["rows"].push_back(row);
  }
  out.csv = csv.str();
  return out;
}

RunOutput run_free_energy(const Json& config) {
  require_keys(config, {"command", "model", "t_grid"}, {"seed", "threads", "saddle"},
               "free_energy config");
  const uint64_t seed = config.value("seed", 1);
  MultilinearModel model = parse_model(config.at("model"), seed);
  SaddleConfig cfg =
      config.contains("saddle") ? parse_saddle(config.at("saddle")) : SaddleConfig{};
  std::vector<double> t_grid = number_list(config.at("t_grid"), "t_grid");
  std::vector<SaddleResult> curve = free_energy_curve(model, t_grid, cfg);
  RunOutput out;
  out.record = base_record(config);
  std::ostringstream csv;
  csv << csv_header_line(config);
  csv << "t,F,F_err,converged,residual,iterations,start_index,Q_star,S_star\n";
  bool all_failed = !curve.empty();
  for (size_t i = 0; i < curve.size(); ++i) {
    const SaddleResult& r = curve[i];
    if (r.converged) all_failed = false;
    csv << fmt(t_grid[i]) << "," << fmt(r.free_energy) << "," << fmt(r.uncertainty)
        << "," << (r.converged ? 1 : 0) << "," << fmt(r.stationarity_residual) << ","
        << r.iterations << "," << r.start_index << "," << serialize_tuple(r.q_star)
        << "," << serialize_tuple(r.s_star) << "\n";
    Json row;
    row["t"] = t_grid[i];
    row["F"] = r.free_energy;
    row["F_err"] = r.uncertainty;
    row["converged"] = r.converged;
    row["residual"] = r.stationarity_residual;
    row["iterations"] = r.iterations;
    row["start_index"] = r.start_index;
    row["start_values"] = r.start_values;
    row["Q_star"] = tuple_to_json(r.q_star);
    row["S_star"] = tuple_to_json(r.s_star);
    if (r.grid_checked) row["grid_value"] = r.grid_value;
    out.record["rows"].push_back(row);
  }
  if (all_failed) throw Error("no saddle point converged on any t grid point");
  out.csv = csv.str();
  return out;
}

RunOutput run_oracle(const Json& config) {
  require_keys(config, {"command", "model", "n", "t_grid"},
               {"seed", "threads", "replicates", "mode", "index_types",
                "distinct_indices_only", "side_info_scale"},
               "oracle config");
  const uint64_t seed = config.value("seed", 1);
  MultilinearModel model = parse_model(config.at("model"), seed);
  FiniteInstance inst;
  inst.n = integer(config.at("n"), "n");
  inst.seed = seed;
  inst.replicates = config.value("replicates", 512);
  inst.distinct_indices_only = config.value("distinct_indices_only", false);
  inst.signal = signal_from_model(model);
  inst.atom_weights = model.channel.prior.weights;
  inst.features = model.channel.prior.features;
  const std::string mode = config.value("mode", std::string("iid"));
  if (mode != "iid") throw ConfigError("oracle command supports mode 'iid'");
  inst.mode = FiniteInstance::Mode::IidAtoms;
  if (config.contains("index_types")) {
    for (const auto& v : config.at("index_types"))
      inst.type_of_index.push_back(integer(v, "index_types") - 1);
    if (static_cast<int>(inst.type_of_index.size()) != inst.n)
      throw ConfigError("index_types must have n entries");
  } else {
    inst.type_of_index.assign(inst.n, 0);
  }
  std::vector<double> t_grid = number_list(config.at("t_grid"), "t_grid");
  const double si_scale = config.value("side_info_scale", 0.0);
  RunOutput out;
  out.record = base_record(config);
  std::ostringstream csv;
  csv << csv_header_line(config);
  csv << "t,F_n,std_error,n,replicates,seed\n";
  for (double t : t_grid) {
    OracleResult r;
    if (si_scale > 0) {
      std::vector<PsdMatrix> blocks(
          model.k, PsdMatrix::from_symmetric(
                       si_scale * Eigen::MatrixXd::Identity(model.d, model.d)));
      r = augmented_free_energy_n(inst, PsdTuple(std::move(blocks)), t);
    } else {
      r = free_energy_n(inst, t);
    }
    csv << fmt(t) << "," << fmt(r.value) << "," << fmt(r.std_error) << "," << inst.n
        << "," << r.replicates << "," << seed << "\n";
    Json row;
    row["t"] = t;
    row["F_n"] = r.value;
    row["std_error"] = r.std_error;
    row["n"] = inst.n;
    row["replicates"] = r.replicates;
    row["seed"] = seed;
    out.record["rows"].push_back(row);
  }
  out.csv = csv.str();
  return out;
}

RunOutput run_hetero(const Json& config) {
  require_keys(config, {"command", "profile", "b", "prior", "t", "k_sequence"},
               {"seed", "threads", "saddle"}, "hetero config");
  const uint64_t seed = config.value("seed", 1);
  VarianceProfile profile = parse_profile(config.at("profile"));
  std::vector<double> bv = number_list(config.at("b"), "b");
  Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(bv.data(), bv.size());
  DiscretePrior prior = parse_prior(config.at("prior"));
  const double t = num(config.at("t"), "t");
  std::vector<int> ks;
  for (const auto& v : config.at("k_sequence")) ks.push_back(integer(v, "k"));
  SaddleConfig cfg =
      config.contains("saddle") ? parse_saddle(config.at("saddle")) : SaddleConfig{};
  HeteroCurve curve = hetero_free_energy(profile, b, prior, t, ks, cfg, seed);
  RunOutput out;
  out.record = base_record(config);
  std::ostringstream csv;
  csv << csv_header_line(config);
  csv << "k,F,F_err,converged\n";
  for (size_t i = 0; i < curve.results.size(); ++i) {
    const auto& r = curve.results[i];
    csv << curve.ks[i] << "," << fmt(r.free_energy) << "," << fmt(r.uncertainty)
        << "," << (r.converged ? 1 : 0) << "\n";
    Json row;
    row["k"] = curve.ks[i];
    row["F"] = r.free_energy;
    row["F_err"] = r.uncertainty;
    row["converged"] = r.converged;
    out.record["rows"].push_back(row);
  }
  out.record["limit_estimate"] = curve.limit_estimate;
  out.record["cauchy_gap"] = curve.cauchy_gap;
  out.csv = csv.str();
  return out;
}

RunOutput run_qap(const Json& config) {
  require_keys(config, {"command", "signal", "t", "epsilons"},
               {"seed", "threads", "quantization_atoms", "max_degree", "saddle"},
               "qap config");
  const uint64_t seed = config.value("seed", 1);
  SeparableSignal sig = parse_signal(config.at("signal"));
  ScalarLaw law = quantized_uniform_law(config.value("quantization_atoms", 64));
  const double t = num(config.at("t"), "t");
  std::vector<double> eps = number_list(config.at("epsilons"), "epsilons");
  SaddleConfig cfg =
      config.contains("saddle") ? parse_saddle(config.at("saddle")) : SaddleConfig{};
  QapCurve curve =
      qap_free_energy(sig, law, t, eps, cfg, config.value("max_degree", 8), seed);
  RunOutput out;
  out.record = base_record(config);
  std::ostringstream csv;
  csv << csv_header_line(config);
  csv << "epsilon,d,sup_error,F,F_err,converged\n";
  for (const auto& p : curve.points) {
    csv << fmt(p.epsilon) << "," << p.truncation.d << ","
        << fmt(p.truncation.sup_error) << "," << fmt(p.saddle.free_energy) << ","
        << fmt(p.saddle.uncertainty) << "," << (p.saddle.converged ? 1 : 0) << "\n";
    Json row;
    row["epsilon"] = p.epsilon;
    row["d"] = p.truncation.d;
    row["sup_error"] = p.truncation.sup_error;
    row["F"] = p.saddle.free_energy;
    row["F_err"] = p.saddle.uncertainty;
    row["converged"] = p.saddle.converged;
    out.record["rows"].push_back(row);
  }
  out.record["limit_estimate"] = curve.limit_estimate;
  out.record["cauchy_gap"] = curve.cauchy_gap;
  out.record["epsilon_unreachable"] = curve.epsilon_unreachable;
  out.csv = csv.str();
  return out;
}

}  // namespace

RunOutput run_command(const Json& config) {
  if (!config.is_object() || !config.contains("command"))
    throw ConfigError("config must be an object with a 'command' field");
  const std::string cmd = config.at("command").get<std::string>();
  if (cmd == "channel") return run_channel(config);
  if (cmd == "free_energy") return run_free_energy(config);
  if (cmd == "oracle") return run_oracle(config);
  if (cmd == "hetero") return run_hetero(config);
  if (cmd == "qap") return run_qap(config);
  throw ConfigError("unknown command: " + cmd);
}

void write_outputs(const RunOutput& out, const std::string& out_path) {
  auto ends_with = [&](const std::string& suffix) {
    return out_path.size() >= suffix.size() &&
           out_path.compare(out_path.size() - suffix.size(), suffix.size(),
                            suffix) == 0;
  };
  if (ends_with(".csv")) {
    std::ofstream(out_path) << out.csv;
  } else if (ends_with(".json")) {
    std::ofstream(out_path) << out.record.dump(2) << "\n";
  } else {
    std::ofstream(out_path + ".csv") << out.csv;
    std::ofstream(out_path + ".json") << out.record.dump(2) << "\n";
  }
}

}  // namespace tensorlim
