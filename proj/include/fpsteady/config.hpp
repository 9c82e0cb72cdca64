#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpsteady/grid.hpp"
#include "fpsteady/model.hpp"
#include "fpsteady/sampler.hpp"
#include "fpsteady/solver.hpp"

namespace fpsteady {

// One experiment description, as parsed from an INI-style config file.
// Sections:
//   [model]   name, scalar parameters, optional rotation/offset vectors
//   [grid]    lower, upper, r
//   [sampler] dt, horizon_T, burn_in, stride, seed, chains, initial_state
//   [solver]  method, tol, max_iter, auto_threshold
//   [output]  full_mass, postprocess
// Unknown keys and duplicate keys are hard errors; every diagnostic carries
// the 1-based line number.
struct ExperimentConfig {
  std::string model_name;
  std::map<std::string, double> model_params;
  std::map<std::string, std::vector<double>> model_vectors;
  GridSpec grid;
  SamplerConfig sampler;
  SolverOptions solver;
  bool full_mass = false;
  PostprocessMode postprocess = PostprocessMode::raw;

  SdeModel make_model() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Inverse of parse_config up to formatting: parse(serialize(c)) == c.
// Doubles are written with 17 significant digits.
std::string serialize_config(const ExperimentConfig& cfg);

std::string format_double(double v);  // shortest 17-sig-digit form

}  // namespace fpsteady
