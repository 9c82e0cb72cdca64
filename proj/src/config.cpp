#include "fpsteady/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fpsteady/error.hpp"

namespace fpsteady {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void config_fail(int line, const std::string& msg) {
  fail(ErrorClass::config, "line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& v, int line) {
  const std::string t = trim(v);
  if (t.empty()) config_fail(line, "empty numeric value");
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    config_fail(line, "malformed number '" + t + "'");
  return x;
}

std::vector<double> parse_vector(const std::string& v, int line) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, line));
  if (out.empty()) config_fail(line, "empty vector value");
  return out;
}

std::int64_t parse_int(const std::string& v, int line) {
  const std::string t = trim(v);
  char* end = nullptr;
  const long long x = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    config_fail(line, "malformed integer '" + t + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& v, int line) {
  const std::string t = trim(v);
  if (t.empty() || t[0] == '-')
    config_fail(line, "malformed unsigned integer '" + t + "'");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size())
    config_fail(line, "malformed unsigned integer '" + t + "'");
  return x;
}

bool parse_bool(const std::string& v, int line) {
  const std::string t = trim(v);
  if (t == "true") return true;
  if (t == "false") return false;
  config_fail(line, "expected true or false, got '" + t + "'");
}

SolveMethod parse_method(const std::string& v, int line) {
  const std::string t = trim(v);
  if (t == "auto") return SolveMethod::auto_select;
  if (t == "dense-qr") return SolveMethod::dense_qr;
  if (t == "iterative-cgne") return SolveMethod::iterative_cgne;
  config_fail(line, "unknown solver method '" + t +
                        "' (auto, dense-qr, iterative-cgne)");
}

PostprocessMode parse_postprocess(const std::string& v, int line) {
  const std::string t = trim(v);
  if (t == "raw") return PostprocessMode::raw;
  if (t == "clamp") return PostprocessMode::clamp_renormalize;
  config_fail(line, "unknown postprocess mode '" + t + "' (raw, clamp)");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<double> lower, upper;
  bool have_name = false, have_lower = false, have_upper = false,
       have_r = false;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;  // "section/key"
  int line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        config_fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "domain" && section != "sampler" &&
          section != "solver" && section != "output")
        config_fail(line_no, "unknown section [" + section + "]");
      if (!seen_sections.insert(section).second)
        config_fail(line_no, "duplicate section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      config_fail(line_no, "expected key = value");
    if (section.empty())
      config_fail(line_no, "key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) config_fail(line_no, "empty key");
    if (!seen_keys.insert(section + "/" + key).second)
      config_fail(line_no, "duplicate key '" + key + "' in [" + section + "]");

    if (section == "model") {
      if (key == "name") {
        cfg.model_name = value;
        have_name = true;
      } else if (key == "rotation" || key == "offset") {
        cfg.model_vectors[key] = parse_vector(value, line_no);
      } else {
        cfg.model_params[key] = parse_double(value, line_no);
      }
    } else if (section == "domain") {
      if (key == "lower") {
        lower = parse_vector(value, line_no);
        have_lower = true;
      } else if (key == "upper") {
        upper = parse_vector(value, line_no);
        have_upper = true;
      } else if (key == "r") {
        cfg.grid.r = parse_double(value, line_no);
        have_r = true;
      } else {
        config_fail(line_no, "unknown key '" + key + "' in [domain]");
      }
    } else if (section == "sampler") {
      if (key == "dt")
        cfg.sampler.dt = parse_double(value, line_no);
      else if (key == "T")
        cfg.sampler.horizon_T = parse_double(value, line_no);
      else if (key == "burn_in")
        cfg.sampler.burn_in = parse_double(value, line_no);
      else if (key == "stride")
        cfg.sampler.stride = parse_int(value, line_no);
      else if (key == "seed")
        cfg.sampler.seed = parse_uint(value, line_no);
      else if (key == "chains")
        cfg.sampler.chains = static_cast<int>(parse_int(value, line_no));
      else if (key == "initial_state")
        cfg.sampler.initial_state = parse_vector(value, line_no);
      else
        config_fail(line_no, "unknown key '" + key + "' in [sampler]");
    } else if (section == "solver") {
      if (key == "method")
        cfg.solver.method = parse_method(value, line_no);
      else if (key == "tol")
        cfg.solver.tol = parse_double(value, line_no);
      else if (key == "max_iter")
        cfg.solver.max_iter = parse_int(value, line_no);
      else if (key == "auto_threshold")
        cfg.solver.auto_threshold = parse_int(value, line_no);
      else
        config_fail(line_no, "unknown key '" + key + "' in [solver]");
    } else {  // output
      if (key == "full_mass")
        cfg.full_mass = parse_bool(value, line_no);
      else if (key == "postprocess")
        cfg.postprocess = parse_postprocess(value, line_no);
      else
        config_fail(line_no, "unknown key '" + key + "' in [output]");
    }
  }

  if (!seen_sections.count("model"))
    fail(ErrorClass::config, "missing section [model]");
  if (!seen_sections.count("domain"))
    fail(ErrorClass::config, "missing section [domain]");
  if (!have_name) fail(ErrorClass::config, "missing key 'name' in [model]");
  if (!have_lower) fail(ErrorClass::config, "missing key 'lower' in [domain]");
  if (!have_upper) fail(ErrorClass::config, "missing key 'upper' in [domain]");
  if (!have_r) fail(ErrorClass::config, "missing key 'r' in [domain]");
  if (lower.size() != upper.size())
    fail(ErrorClass::config, "lower and upper have different lengths");

  cfg.grid.dim = static_cast<int>(lower.size());
  cfg.grid.lower = lower;
  cfg.grid.upper = upper;
  cfg.grid.validate();

  // fail fast on unknown models or parameters
  try {
    (void)cfg.make_model();
  } catch (const FpError& e) {
    fail(ErrorClass::config, std::string("invalid [model]: ") + e.what());
  }
  return cfg;
}

SdeModel ExperimentConfig::make_model() const {
  return fpsteady::make_model(model_name, model_params, model_vectors);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorClass::io, "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string join_vector(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

const char* method_name(SolveMethod m) {
  switch (m) {
    case SolveMethod::auto_select:
      return "auto";
    case SolveMethod::dense_qr:
      return "dense-qr";
    case SolveMethod::iterative_cgne:
      return "iterative-cgne";
  }
  return "auto";
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[model]\n";
  os << "name = " << cfg.model_name << '\n';
  for (const auto& [k, v] : cfg.model_params)
    os << k << " = " << format_double(v) << '\n';
  for (const auto& [k, v] : cfg.model_vectors)
    os << k << " = " << join_vector(v) << '\n';
  os << "\n[domain]\n";
  os << "lower = " << join_vector(cfg.grid.lower) << '\n';
  os << "upper = " << join_vector(cfg.grid.upper) << '\n';
  os << "r = " << format_double(cfg.grid.r) << '\n';
  os << "\n[sampler]\n";
  os << "dt = " << format_double(cfg.sampler.dt) << '\n';
  os << "T = " << format_double(cfg.sampler.horizon_T) << '\n';
  os << "burn_in = " << format_double(cfg.sampler.burn_in) << '\n';
  os << "stride = " << cfg.sampler.stride << '\n';
  os << "seed = " << cfg.sampler.seed << '\n';
  os << "chains = " << cfg.sampler.chains << '\n';
  if (!cfg.sampler.initial_state.empty())
    os << "initial_state = " << join_vector(cfg.sampler.initial_state) << '\n';
  os << "\n[solver]\n";
  os << "method = " << method_name(cfg.solver.method) << '\n';
  os << "tol = " << format_double(cfg.solver.tol) << '\n';
  os << "max_iter = " << cfg.solver.max_iter << '\n';
  os << "auto_threshold = " << cfg.solver.auto_threshold << '\n';
  os << "\n[output]\n";
  os << "full_mass = " << (cfg.full_mass ? "true" : "false") << '\n';
  os << "postprocess = "
     << (cfg.postprocess == PostprocessMode::raw ? "raw" : "clamp") << '\n';
  return os.str();
}

}  // namespace fpsteady
