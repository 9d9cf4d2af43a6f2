#pragma once

#include <string>

#include <json.hpp>

#include "tensorlim/hetero.hpp"
#include "tensorlim/potential.hpp"
#include "tensorlim/qap.hpp"
#include "tensorlim/saddle.hpp"

namespace tensorlim {

using Json = nlohmann::json;

// FNV-1a over the canonical (sorted-key) dump; stable under field reordering.
std::string config_hash(const Json& config);

DiscretePrior parse_prior(const Json& j);
Quadrature parse_quadrature(const Json& j, uint64_t seed);
MultilinearModel parse_model(const Json& j, uint64_t seed);
SaddleConfig parse_saddle(const Json& j);
VarianceProfile parse_profile(const Json& j);
SeparableSignal parse_signal(const Json& j);

struct RunOutput {
  std::string csv;
  Json record;
};

// Dispatches on config["command"]; throws ConfigError for schema problems and
// tensorlim::Error subclasses for computation failures.
RunOutput run_command(const Json& config);

// Writes outputs chosen by the --out extension (.csv, .json, or both).
void write_outputs(const RunOutput& out, const std::string& out_path);

}  // namespace tensorlim
