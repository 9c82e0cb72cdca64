#include "fpsteady/experiments.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "fpsteady/config.hpp"
#include "fpsteady/error.hpp"
#include "fpsteady/operator.hpp"

namespace fpsteady {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd scaled_difference(const GridDensity& u,
                                  const GridDensity& reference) {
  if (!(u.spec == reference.spec))
    fail(ErrorClass::spec_mismatch,
         "densities live on different grids");
  return u.values - reference.values;
}

}  // namespace

double l2_error(const GridDensity& u, const GridDensity& reference) {
  const Eigen::VectorXd diff = scaled_difference(u, reference);
  return std::sqrt(std::pow(u.spec.r, u.spec.dim) * diff.squaredNorm());
}

double euclidean_error(const GridDensity& u, const GridDensity& reference) {
  return scaled_difference(u, reference).norm();
}

GridDensity scale_to_mass(const GridDensity& g, double target_mass) {
  const double mass = box_mass(g);
  if (!(mass > 0.0))
    fail(ErrorClass::empty_density,
         "cannot rescale a density with nonpositive mass");
  GridDensity out = g;
  out.values *= target_mass / mass;
  return out;
}

GridDensity analytic_double_well_grid(const GridSpec& spec, double sigma) {
  spec.validate();
  if (spec.dim != 1)
    fail(ErrorClass::unsupported,
         "the analytic stationary density is one-dimensional");
  GridDensity g;
  g.spec = spec;
  g.provenance = Provenance::analytic;
  const std::int64_t n = spec.total_nodes();
  g.values.resize(n);
  for (std::int64_t i = 0; i < n; ++i)
    g.values[i] = double_well_density(spec.lower[0] + double(i) * spec.r, sigma);
  return g;
}

HybridResult run_hybrid(const SdeModel& model, const GridSpec& spec,
                        const SamplerConfig& cfg, const SolverOptions& opts,
                        const GridDensity* reference, bool full_mass) {
  HybridResult res;
  res.report.model_name = model.name;
  res.report.spec = spec;
  res.report.sampler = cfg;

  const auto t1 = Clock::now();
  auto [v, mc_mass] = sample_histogram(model, cfg, spec);
  res.report.phase1_seconds = seconds_since(t1);
  res.report.sample_count = v.sample_count;

  const double mass = full_mass ? 1.0 : mc_mass;
  if (!(mass > 0.0))
    fail(ErrorClass::empty_histogram, "no samples landed inside the grid box");
  res.report.mass = mass;

  const auto t2 = Clock::now();
  ConstraintSystem sys =
      append_normalization(assemble_interior_operator(model, spec), spec, mass);
  res.density = min_norm_correction(sys, v, opts, &res.report.solve);
  res.report.phase2_seconds = seconds_since(t2);

  // share of absolute mass sitting in negative entries
  double neg = 0.0, abs_total = 0.0;
  for (Eigen::Index i = 0; i < res.density.values.size(); ++i) {
    const double val = res.density.values[i];
    abs_total += std::abs(val);
    if (val < 0.0) neg += -val;
  }
  res.report.negative_mass_fraction = abs_total > 0.0 ? neg / abs_total : 0.0;

  if (reference != nullptr) {
    const double ref_mass = box_mass(*reference);
    const GridDensity hu = scale_to_mass(res.density, ref_mass);
    const GridDensity hv = scale_to_mass(v, ref_mass);
    res.report.l2_error = l2_error(hu, *reference);
    res.report.mc_l2_error = l2_error(hv, *reference);
    res.report.euclidean_error = euclidean_error(hu, *reference);
    res.report.mc_euclidean_error = euclidean_error(hv, *reference);
  }
  return res;
}

Eigen::MatrixXd error_table(const SdeModel& model, double lower, double upper,
                            const std::vector<double>& T_list,
                            const std::vector<double>& h_list, int trials,
                            const SamplerConfig& base,
                            const SolverOptions& opts, double sigma,
                            std::ostream* csv) {
  if (trials < 1) fail(ErrorClass::parameter, "trials must be at least 1");
  if (T_list.empty() || h_list.empty())
    fail(ErrorClass::parameter, "error table needs nonempty T and h lists");
  if (model.name != "double-well")
    fail(ErrorClass::unsupported,
         "error tables need the analytic double-well reference");

  Eigen::MatrixXd table(T_list.size(), h_list.size());
  for (std::size_t row = 0; row < T_list.size(); ++row) {
    for (std::size_t col = 0; col < h_list.size(); ++col) {
      GridSpec spec;
      spec.dim = 1;
      spec.lower = {lower};
      spec.upper = {upper};
      spec.r = h_list[col];
      const GridDensity reference = analytic_double_well_grid(spec, sigma);
      double sum = 0.0;
      for (int t = 0; t < trials; ++t) {
        SamplerConfig cfg = base;
        cfg.horizon_T = T_list[row];
        cfg.seed = base.seed + static_cast<std::uint64_t>(t);
        const auto res = run_hybrid(model, spec, cfg, opts, &reference);
        sum += *res.report.l2_error;
      }
      table(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
          sum / trials;
    }
  }
  if (csv != nullptr) {
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
      for (Eigen::Index j = 0; j < table.cols(); ++j) {
        if (j > 0) *csv << ',';
        *csv << format_double(table(i, j));
      }
      *csv << '\n';
    }
  }
  return table;
}

double GluedDensity::value_at(const std::vector<double>& x) const {
  for (const auto& part : parts) {
    if (static_cast<int>(x.size()) != part.density.spec.dim)
      fail(ErrorClass::parameter, "lookup point has the wrong dimension");
    if (part.density.spec.contains_box(x.data())) {
      std::int64_t flat = 0;
      if (part.density.spec.bin(x.data(), flat))
        return part.density.values[flat];
    }
  }
  return 0.0;
}

double GluedDensity::total_mass() const {
  double sum = 0.0;
  for (const auto& part : parts) sum += box_mass(part.density);
  return sum;
}

GluedDensity glue_subdomains(
    const std::vector<std::pair<GridDensity, double>>& parts) {
  if (parts.empty()) fail(ErrorClass::parameter, "glue needs at least one part");
  const int d = parts.front().first.spec.dim;
  for (const auto& [g, mass] : parts) {
    g.spec.validate();
    if (g.spec.dim != d)
      fail(ErrorClass::spec_mismatch, "glue parts disagree on dimension");
    if (mass < 0.0)
      fail(ErrorClass::parameter, "subdomain mass must be nonnegative");
    const double own = box_mass(g);
    if (std::abs(own - 1.0) > 1e-6)
      fail(ErrorClass::parameter,
           "each glue part must be unit-normalized on its own box");
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      const auto& a = parts[i].first.spec;
      const auto& b = parts[j].first.spec;
      bool open_overlap = true;
      for (int ax = 0; ax < d; ++ax)
        open_overlap = open_overlap && a.lower[ax] < b.upper[ax] &&
                       b.lower[ax] < a.upper[ax];
      if (open_overlap)
        fail(ErrorClass::overlap, "subdomain boxes have overlapping interiors");
    }
  }
  GluedDensity glued;
  glued.parts.reserve(parts.size());
  for (const auto& [g, mass] : parts) {
    GluedDensity::Part part;
    part.density = g;
    part.density.values *= mass;
    part.mass = mass;
    glued.parts.push_back(std::move(part));
  }
  return glued;
}

GluedDensity hybrid_glued(const SdeModel& model,
                          const std::vector<GridSpec>& parts,
                          const SamplerConfig& cfg, const SolverOptions& opts) {
  if (parts.empty()) fail(ErrorClass::parameter, "glue needs at least one part");
  const int d = model.dim;
  GridSpec box;
  box.dim = d;
  box.r = parts.front().r;
  box.lower = parts.front().lower;
  box.upper = parts.front().upper;
  for (const auto& p : parts) {
    p.validate();
    if (p.dim != d)
      fail(ErrorClass::spec_mismatch, "part dimension does not match model");
    if (p.r != box.r)
      fail(ErrorClass::spec_mismatch, "glue parts must share the spacing");
    for (int a = 0; a < d; ++a) {
      box.lower[a] = std::min(box.lower[a], p.lower[a]);
      box.upper[a] = std::max(box.upper[a], p.upper[a]);
    }
  }
  for (const auto& p : parts)
    for (int a = 0; a < d; ++a) {
      const double off = (p.lower[a] - box.lower[a]) / box.r;
      if (std::abs(off - std::round(off)) > 1e-9)
        fail(ErrorClass::spec_mismatch,
             "glue parts do not sit on a common node lattice");
    }
  box.validate();

  auto [v, union_mass] = sample_histogram(model, cfg, box);
  (void)union_mass;
  const auto box_counts = box.counts();

  std::vector<std::pair<GridDensity, double>> glue_input;
  glue_input.reserve(parts.size());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& p = parts[k];
    const auto pn = p.counts();
    std::vector<std::int64_t> offset(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a)
      offset[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(
          std::llround((p.lower[static_cast<std::size_t>(a)] -
                        box.lower[static_cast<std::size_t>(a)]) /
                       box.r));

    GridDensity vk;
    vk.spec = p;
    vk.provenance = Provenance::monte_carlo;
    vk.sample_count = v.sample_count;
    vk.values.resize(p.total_nodes());
    double owned_sum = 0.0;
    for (std::int64_t flat = 0; flat < vk.values.size(); ++flat) {
      // part node -> union node
      std::int64_t rem = flat, uflat = 0;
      double pt[3];
      for (int a = d - 1; a >= 0; --a) {
        const std::int64_t i = rem % pn[static_cast<std::size_t>(a)];
        rem /= pn[static_cast<std::size_t>(a)];
        pt[a] = p.lower[static_cast<std::size_t>(a)] + double(i) * p.r;
        std::int64_t stride = 1;
        for (int b = d - 1; b > a; --b)
          stride *= box_counts[static_cast<std::size_t>(b)];
        uflat += (i + offset[static_cast<std::size_t>(a)]) * stride;
      }
      vk.values[flat] = v.values[uflat];
      bool owned = true;
      for (std::size_t earlier = 0; earlier < k && owned; ++earlier)
        owned = !parts[earlier].contains_box(pt);
      if (owned) owned_sum += vk.values[flat];
    }
    const double mass_k = owned_sum * std::pow(p.r, d);
    if (!(mass_k > 0.0))
      fail(ErrorClass::empty_histogram,
           "subdomain " + std::to_string(k) + " received no samples");

    ConstraintSystem sys =
        append_normalization(assemble_interior_operator(model, p), p, mass_k);
    GridDensity uk = min_norm_correction(sys, vk, opts);
    glue_input.emplace_back(scale_to_mass(uk, 1.0), mass_k);
  }
  return glue_subdomains(glue_input);
}

Local3dResult run_3d_local(const SdeModel& model, const GridSpec& spec,
                           const SamplerConfig& cfg, SolverOptions opts) {
  spec.validate();
  if (spec.dim != 3)
    fail(ErrorClass::unsupported, "local 3D pipeline needs a 3D grid");
  if (opts.method == SolveMethod::dense_qr && spec.total_nodes() > 10000000)
    fail(ErrorClass::unsupported,
         "dense QR refused above 1e7 nodes; use iterative-cgne");

  Local3dResult res;
  auto hybrid = run_hybrid(model, spec, cfg, opts);
  res.density = std::move(hybrid.density);
  res.report = hybrid.report;
  res.z_marginal = z_marginal(res.density);
  return res;
}

GridDensity z_marginal(const GridDensity& u3) {
  u3.spec.validate();
  if (u3.spec.dim != 3)
    fail(ErrorClass::unsupported, "z marginal needs a 3D density");
  const auto n = u3.spec.counts();
  GridDensity w;
  w.spec.dim = 2;
  w.spec.lower = {u3.spec.lower[0], u3.spec.lower[1]};
  w.spec.upper = {u3.spec.upper[0], u3.spec.upper[1]};
  w.spec.r = u3.spec.r;
  w.provenance = u3.provenance;
  w.sample_count = u3.sample_count;
  w.values = Eigen::VectorXd::Zero(n[0] * n[1]);
  for (std::int64_t i = 0; i < n[0]; ++i)
    for (std::int64_t j = 0; j < n[1]; ++j) {
      double col = 0.0;
      const std::int64_t base = (i * n[1] + j) * n[2];
      for (std::int64_t k = 0; k < n[2]; ++k)
        col += u3.values[base + k];
      w.values[i * n[1] + j] = u3.spec.r * col;
    }
  return w;
}

GridSpec pick_local_box(const SdeModel& model, const SamplerConfig& pilot_cfg,
                        const std::vector<double>& pilot_lower,
                        const std::vector<double>& pilot_upper,
                        double coarse_cell, const std::vector<double>& extent,
                        double r) {
  GridSpec pilot;
  pilot.dim = model.dim;
  pilot.lower = pilot_lower;
  pilot.upper = pilot_upper;
  pilot.r = coarse_cell;
  pilot.validate();
  if (static_cast<int>(extent.size()) != model.dim)
    fail(ErrorClass::parameter, "extent length must equal model dim");

  auto [hist, mass] = sample_histogram(model, pilot_cfg, pilot);
  (void)mass;
  // first maximum in flat order
  std::int64_t best = 0;
  for (std::int64_t i = 1; i < hist.values.size(); ++i)
    if (hist.values[i] > hist.values[best]) best = i;
  if (hist.values[best] <= 0.0)
    fail(ErrorClass::empty_histogram,
         "pilot run produced no in-domain samples");

  const auto center = pilot.node(best);
  GridSpec box;
  box.dim = model.dim;
  box.r = r;
  box.lower.resize(static_cast<std::size_t>(model.dim));
  box.upper.resize(static_cast<std::size_t>(model.dim));
  for (int a = 0; a < model.dim; ++a) {
    // snap the center to the fine lattice so box coordinates stay tidy
    const double c = std::round(center[static_cast<std::size_t>(a)] / r) * r;
    box.lower[static_cast<std::size_t>(a)] = c - extent[static_cast<std::size_t>(a)] / 2.0;
    box.upper[static_cast<std::size_t>(a)] = c + extent[static_cast<std::size_t>(a)] / 2.0;
  }
  box.validate();
  return box;
}

namespace {

void vdp_rhs(const VanDerPolParams& p, const double* x, double* out) {
  out[0] = (x[1] - x[0] * x[0] * x[0] / 3.0 + x[0]) / p.epsilon;
  out[1] = p.a - x[0];
}

void rk4_step(const VanDerPolParams& p, double* x, double dt) {
  double k1[2], k2[2], k3[2], k4[2], tmp[2];
  vdp_rhs(p, x, k1);
  for (int i = 0; i < 2; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  vdp_rhs(p, tmp, k2);
  for (int i = 0; i < 2; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  vdp_rhs(p, tmp, k3);
  for (int i = 0; i < 2; ++i) tmp[i] = x[i] + dt * k3[i];
  vdp_rhs(p, tmp, k4);
  for (int i = 0; i < 2; ++i)
    x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace

std::vector<std::array<double, 2>> relaxation_cycle(const VanDerPolParams& p,
                                                    double dt,
                                                    double t_transient,
                                                    double t_record) {
  if (!(dt > 0.0) || !(t_transient >= 0.0) || !(t_record > 0.0))
    fail(ErrorClass::parameter, "cycle integration times must be positive");
  double x[2] = {2.0, 0.0};
  const auto n_trans = static_cast<std::int64_t>(std::llround(t_transient / dt));
  const auto n_rec = static_cast<std::int64_t>(std::llround(t_record / dt));
  for (std::int64_t s = 0; s < n_trans; ++s) rk4_step(p, x, dt);
  std::vector<std::array<double, 2>> curve;
  curve.reserve(static_cast<std::size_t>(n_rec) + 1);
  curve.push_back({x[0], x[1]});
  for (std::int64_t s = 0; s < n_rec; ++s) {
    rk4_step(p, x, dt);
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]))
      fail(ErrorClass::diverged_trajectory, "cycle integration diverged");
    curve.push_back({x[0], x[1]});
  }
  return curve;
}

namespace {

double point_segment_dist2(double px, double py, const std::array<double, 2>& a,
                           const std::array<double, 2>& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = px - a[0], wy = py - a[1];
  const double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  const double dx = px - (a[0] + t * vx);
  const double dy = py - (a[1] + t * vy);
  return dx * dx + dy * dy;
}

}  // namespace

double mass_within_distance(const GridDensity& density2d,
                            const std::vector<std::array<double, 2>>& curve,
                            double dist) {
  if (density2d.spec.dim != 2)
    fail(ErrorClass::unsupported, "cycle-distance mass needs a 2D density");
  if (curve.size() < 2)
    fail(ErrorClass::parameter, "curve needs at least two points");
  const double d2 = dist * dist;
  const auto n = density2d.spec.counts();
  double near = 0.0, total = 0.0;
  for (std::int64_t i = 0; i < n[0]; ++i) {
    for (std::int64_t j = 0; j < n[1]; ++j) {
      const double val = density2d.values[i * n[1] + j];
      if (val <= 0.0) continue;
      total += val;
      const double px = density2d.spec.lower[0] + double(i) * density2d.spec.r;
      const double py = density2d.spec.lower[1] + double(j) * density2d.spec.r;
      bool close = false;
      for (std::size_t s = 0; s + 1 < curve.size() && !close; ++s) {
        // bounding-box reject before the exact segment distance
        const auto& a = curve[s];
        const auto& b = curve[s + 1];
        if (px < std::min(a[0], b[0]) - dist || px > std::max(a[0], b[0]) + dist ||
            py < std::min(a[1], b[1]) - dist || py > std::max(a[1], b[1]) + dist)
          continue;
        close = point_segment_dist2(px, py, a, b) <= d2;
      }
      if (close) near += val;
    }
  }
  if (total <= 0.0)
    fail(ErrorClass::empty_density, "density carries no positive mass");
  return near / total;
}

void print_report(const TrialReport& rep, std::ostream& os) {
  os << "model = " << rep.model_name << '\n';
  os << "dim = " << rep.spec.dim << '\n';
  for (int a = 0; a < rep.spec.dim; ++a) {
    os << "grid_lower_" << a << " = " << format_double(rep.spec.lower[a]) << '\n';
    os << "grid_upper_" << a << " = " << format_double(rep.spec.upper[a]) << '\n';
  }
  os << "grid_r = " << format_double(rep.spec.r) << '\n';
  os << "nodes = " << rep.spec.total_nodes() << '\n';
  os << "dt = " << format_double(rep.sampler.dt) << '\n';
  os << "horizon_T = " << format_double(rep.sampler.horizon_T) << '\n';
  os << "burn_in = " << format_double(rep.sampler.burn_in) << '\n';
  os << "stride = " << rep.sampler.stride << '\n';
  os << "seed = " << rep.sampler.seed << '\n';
  os << "chains = " << rep.sampler.chains << '\n';
  os << "sample_count = " << rep.sample_count << '\n';
  os << "mass = " << format_double(rep.mass) << '\n';
  os << "phase1_seconds = " << format_double(rep.phase1_seconds) << '\n';
  os << "phase2_seconds = " << format_double(rep.phase2_seconds) << '\n';
  os << "negative_mass_fraction = "
     << format_double(rep.negative_mass_fraction) << '\n';
  os << "solver_method = " << rep.solve.method << '\n';
  os << "solver_rows = " << rep.solve.rows << '\n';
  os << "solver_cols = " << rep.solve.cols << '\n';
  os << "solver_iterations = " << rep.solve.iterations << '\n';
  os << "solver_residual = " << format_double(rep.solve.residual) << '\n';
  os << "solver_seconds = " << format_double(rep.solve.seconds) << '\n';
  if (rep.l2_error) os << "l2_error = " << format_double(*rep.l2_error) << '\n';
  if (rep.mc_l2_error)
    os << "mc_l2_error = " << format_double(*rep.mc_l2_error) << '\n';
  if (rep.euclidean_error)
    os << "euclidean_error = " << format_double(*rep.euclidean_error) << '\n';
  if (rep.mc_euclidean_error)
    os << "mc_euclidean_error = " << format_double(*rep.mc_euclidean_error)
       << '\n';
}

}  // namespace fpsteady
