#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fpsteady/config.hpp"
#include "fpsteady/error.hpp"
#include "fpsteady/experiments.hpp"
#include "fpsteady/io.hpp"
#include "fpsteady/operator.hpp"

namespace {

using namespace fpsteady;

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0 success            1 unexpected failure   2 config error\n"
    "  3 parameter error    4 io error             5 spec mismatch\n"
    "  6 degenerate grid    7 rank deficient       8 non-convergence\n"
    "  9 diverged trajectory 10 empty histogram    11 empty density\n"
    " 12 overlap           13 unsupported\n";

struct CommonArgs {
  std::string config_path;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool full_mass = false;
  std::string postprocess;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool sampling) {
  cmd->add_option("--config", args.config_path, "experiment config (INI)")
      ->required();
  cmd->add_option("--output", args.output, "output path");
  if (sampling) {
    cmd->add_option("--seed", args.seed, "override the sampler seed");
    cmd->add_flag("--full-mass", args.full_mass,
                  "normalize to total mass 1 instead of the MC box mass");
  }
  cmd->add_option("--postprocess", args.postprocess,
                  "override postprocessing (raw, clamp)")
      ->check(CLI::IsMember({"raw", "clamp"}));
}

ExperimentConfig load_args(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed) cfg.sampler.seed = *args.seed;
  if (args.full_mass) cfg.full_mass = true;
  if (args.postprocess == "raw") cfg.postprocess = PostprocessMode::raw;
  if (args.postprocess == "clamp")
    cfg.postprocess = PostprocessMode::clamp_renormalize;
  return cfg;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size())
      fail(ErrorClass::config,
           std::string("malformed ") + what + " entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty())
    fail(ErrorClass::config, std::string(what) + " list is empty");
  return out;
}

// double-well runs get errors against the analytic density for free
const GridDensity* maybe_reference(const ExperimentConfig& cfg,
                                   GridDensity& storage) {
  if (cfg.model_name != "double-well" || cfg.grid.dim != 1) return nullptr;
  const double sigma = cfg.model_params.count("sigma")
                           ? cfg.model_params.at("sigma")
                           : DoubleWellParams{}.sigma;
  storage = analytic_double_well_grid(cfg.grid, sigma);
  return &storage;
}

int cmd_sample(const CommonArgs& args) {
  const ExperimentConfig cfg = load_args(args);
  const SdeModel model = cfg.make_model();
  auto [v, mass] = sample_histogram(model, cfg.sampler, cfg.grid);
  const std::string out = args.output.empty() ? "sample.fpgrid" : args.output;
  write_fpgrid_file(out, v);
  std::cout << "mass = " << format_double(mass) << '\n';
  std::cout << "sample_count = " << v.sample_count << '\n';
  std::cout << "output = " << out << '\n';
  return 0;
}

int cmd_assemble(const CommonArgs& args) {
  const ExperimentConfig cfg = load_args(args);
  const SdeModel model = cfg.make_model();
  // normalization mass does not affect matrix entries; export with mass 1
  ConstraintSystem sys = append_normalization(
      assemble_interior_operator(model, cfg.grid), cfg.grid, 1.0);
  std::ostringstream os;
  export_coordinate_text(sys.matrix, os);
  const std::string out = args.output.empty() ? "operator.txt" : args.output;
  atomic_write_file(out, os.str());
  std::cout << "rows = " << sys.matrix.rows() << '\n';
  std::cout << "cols = " << sys.matrix.cols() << '\n';
  std::cout << "nonzeros = " << sys.matrix.nonZeros() << '\n';
  std::cout << "output = " << out << '\n';
  return 0;
}

int cmd_solve(const CommonArgs& args) {
  const ExperimentConfig cfg = load_args(args);
  const SdeModel model = cfg.make_model();
  ClassicalSystem sys = assemble_classical_system(model, cfg.grid);
  SolveDiagnostics diag;
  const Eigen::VectorXd u = classical_lsq(sys, &diag);
  GridDensity density =
      postprocess_density(classical_density(sys, u), cfg.postprocess);
  const std::string out = args.output.empty() ? "classical.fpgrid" : args.output;
  write_fpgrid_file(out, density);
  std::cout << "solver_method = " << diag.method << '\n';
  std::cout << "solver_residual = " << format_double(diag.residual) << '\n';
  std::cout << "solver_seconds = " << format_double(diag.seconds) << '\n';
  std::cout << "mass = " << format_double(box_mass(density)) << '\n';
  std::cout << "output = " << out << '\n';
  return 0;
}

int cmd_hybrid(const CommonArgs& args) {
  const ExperimentConfig cfg = load_args(args);
  const SdeModel model = cfg.make_model();
  GridDensity ref_storage;
  const GridDensity* ref = maybe_reference(cfg, ref_storage);
  HybridResult res = run_hybrid(model, cfg.grid, cfg.sampler, cfg.solver, ref,
                                cfg.full_mass);
  GridDensity density = postprocess_density(res.density, cfg.postprocess);
  const std::string out = args.output.empty() ? "hybrid.fpgrid" : args.output;
  write_fpgrid_file(out, density);
  print_report(res.report, std::cout);
  std::cout << "output = " << out << '\n';
  return 0;
}

int cmd_error_table(const CommonArgs& args, int trials,
                    const std::string& t_list, const std::string& h_list) {
  const ExperimentConfig cfg = load_args(args);
  const SdeModel model = cfg.make_model();
  if (cfg.grid.dim != 1)
    fail(ErrorClass::unsupported, "error tables are one-dimensional");
  const double sigma = cfg.model_params.count("sigma")
                           ? cfg.model_params.at("sigma")
                           : DoubleWellParams{}.sigma;
  const std::vector<double> Ts = parse_list(t_list, "T");
  const std::vector<double> hs = parse_list(h_list, "h");
  std::ostringstream csv;
  error_table(model, cfg.grid.lower[0], cfg.grid.upper[0], Ts, hs, trials,
              cfg.sampler, cfg.solver, sigma, &csv);
  const std::string out =
      args.output.empty() ? "error_table.csv" : args.output;
  atomic_write_file(out, csv.str());
  std::cout << csv.str();
  std::cout << "output = " << out << '\n';
  return 0;
}

int cmd_glue(const CommonArgs& args, const std::string& splits_text) {
  const ExperimentConfig cfg = load_args(args);
  const SdeModel model = cfg.make_model();
  const std::vector<double> splits = parse_list(splits_text, "split");

  std::vector<GridSpec> parts;
  double lo = cfg.grid.lower[0];
  for (const double s : splits) {
    if (!(s > lo) || !(s < cfg.grid.upper[0]))
      fail(ErrorClass::parameter,
           "split points must be increasing and strictly inside the domain");
    GridSpec part = cfg.grid;
    part.lower[0] = lo;
    part.upper[0] = s;
    parts.push_back(part);
    lo = s;
  }
  GridSpec last = cfg.grid;
  last.lower[0] = lo;
  parts.push_back(last);

  GluedDensity glued = hybrid_glued(model, parts, cfg.sampler, cfg.solver);
  const std::string prefix = args.output.empty() ? "glued" : args.output;
  for (std::size_t k = 0; k < glued.parts.size(); ++k) {
    GridDensity part =
        postprocess_density(glued.parts[k].density, cfg.postprocess);
    const std::string out = prefix + ".part" + std::to_string(k) + ".fpgrid";
    write_fpgrid_file(out, part);
    std::cout << "part" << k << "_mass = "
              << format_double(glued.parts[k].mass) << '\n';
    std::cout << "part" << k << "_output = " << out << '\n';
  }
  std::cout << "total_mass = " << format_double(glued.total_mass()) << '\n';
  return 0;
}

int cmd_render(const std::string& input, const std::string& format,
               const std::string& output) {
  const GridDensity g = read_fpgrid_file(input);
  const std::string out =
      output.empty() ? input + "." + format : output;
  if (format == "pgm")
    write_pgm_file(out, g);
  else
    write_csv_file(out, g);
  std::cout << "output = " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpsteady: invariant densities of noisy ODEs via a hybrid "
               "Monte Carlo / constrained finite-difference solver"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  CommonArgs sample_args, assemble_args, solve_args, hybrid_args, table_args,
      glue_args;
  int trials = 5;
  std::string t_list = "500,1000,2000,4000";
  std::string h_list = "0.04,0.02,0.01,0.005";
  std::string splits;
  std::string render_input, render_format = "pgm", render_output;

  auto* sample =
      app.add_subcommand("sample", "Monte Carlo histogram -> .fpgrid");
  add_common(sample, sample_args, true);

  auto* assemble = app.add_subcommand(
      "assemble", "constraint matrix -> coordinate text");
  add_common(assemble, assemble_args, false);

  auto* solve = app.add_subcommand(
      "solve", "classical zero-boundary least-squares solve -> .fpgrid");
  add_common(solve, solve_args, false);

  auto* hybrid = app.add_subcommand(
      "hybrid", "sample + assemble + min-norm correction -> .fpgrid");
  add_common(hybrid, hybrid_args, true);

  auto* table = app.add_subcommand(
      "error-table", "mean hybrid error over seeded trials -> CSV (T rows, "
                     "h columns, no header)");
  add_common(table, table_args, true);
  table->add_option("--trials", trials, "trials per table entry")
      ->check(CLI::PositiveNumber);
  table->add_option("--T-list", t_list, "comma-separated horizons");
  table->add_option("--h-list", h_list, "comma-separated grid spacings");

  auto* glue = app.add_subcommand(
      "glue", "split-domain hybrid with one shared sample stream -> one "
              ".fpgrid per part");
  add_common(glue, glue_args, true);
  glue->add_option("--splits", splits,
                   "comma-separated split points along the first axis")
      ->required();

  auto* render = app.add_subcommand("render", ".fpgrid -> PGM or CSV");
  render->add_option("input", render_input, "input .fpgrid file")->required();
  render->add_option("--format", render_format, "pgm or csv")
      ->check(CLI::IsMember({"pgm", "csv"}));
  render->add_option("--output", render_output, "output path");

  try {
    app.parse(argc, argv);
    if (sample->parsed()) return cmd_sample(sample_args);
    if (assemble->parsed()) return cmd_assemble(assemble_args);
    if (solve->parsed()) return cmd_solve(solve_args);
    if (hybrid->parsed()) return cmd_hybrid(hybrid_args);
    if (table->parsed())
      return cmd_error_table(table_args, trials, t_list, h_list);
    if (glue->parsed()) return cmd_glue(glue_args, splits);
    if (render->parsed())
      return cmd_render(render_input, render_format, render_output);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    // CLI11's own exit codes do not overlap the documented table; fold
    // usage problems into the config class, keep --help at 0.
    return rc == 0 ? 0 : static_cast<int>(ErrorClass::config);
  } catch (const FpError& e) {
    std::cerr << "error: class=" << error_class_name(e.cls())
              << " code=" << e.exit_code() << " msg=\"" << e.what() << "\"\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: class=unexpected code=1 msg=\"" << e.what() << "\"\n";
    return 1;
  }
}
