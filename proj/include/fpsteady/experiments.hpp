#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "fpsteady/sampler.hpp"
#include "fpsteady/solver.hpp"

namespace fpsteady {

struct TrialReport {
  std::string model_name;
  GridSpec spec;
  SamplerConfig sampler;
  double mass = 0.0;
  std::uint64_t sample_count = 0;
  // Errors against a reference density, when one was supplied. Both
  // densities are scaled to the reference's box mass before differencing,
  // so the Monte Carlo mass estimate's sampling noise does not swamp the
  // shape comparison; l2_* is the scaled discrete L2 norm, euclidean_* the
  // plain 2-norm of the same difference vector.
  std::optional<double> l2_error;
  std::optional<double> mc_l2_error;
  std::optional<double> euclidean_error;
  std::optional<double> mc_euclidean_error;
  double phase1_seconds = 0.0;  // sampling
  double phase2_seconds = 0.0;  // assembly + solve
  double negative_mass_fraction = 0.0;
  SolveDiagnostics solve;
};

struct HybridResult {
  GridDensity density;
  TrialReport report;
};

// discrete L2: sqrt(r^d * sum of squared differences). Specs must match.
double l2_error(const GridDensity& u, const GridDensity& reference);
double euclidean_error(const GridDensity& u, const GridDensity& reference);

// Multiplies values so the box mass becomes target_mass.
GridDensity scale_to_mass(const GridDensity& g, double target_mass);

// Analytic double-well stationary density sampled on a grid.
GridDensity analytic_double_well_grid(const GridSpec& spec, double sigma);

// Full pipeline: sample -> assemble -> normalize -> min-norm correction.
// full_mass forces the normalization constraint to mass 1 regardless of
// the histogram's in-domain mass estimate.
HybridResult run_hybrid(const SdeModel& model, const GridSpec& spec,
                        const SamplerConfig& cfg, const SolverOptions& opts,
                        const GridDensity* reference = nullptr,
                        bool full_mass = false);

// Mean hybrid errors over seeded trials (seed = base.seed + trial), one row
// per T, one column per h, compared against the analytic double-well
// density. Optionally writes CSV (T rows, h columns).
Eigen::MatrixXd error_table(const SdeModel& model, double lower, double upper,
                            const std::vector<double>& T_list,
                            const std::vector<double>& h_list, int trials,
                            const SamplerConfig& base,
                            const SolverOptions& opts, double sigma,
                            std::ostream* csv = nullptr);

// Piecewise density over disjoint boxes. Part k arrives normalized to unit
// mass on its own box and is rescaled by mass_k. Point lookup returns the
// owning part's cell value exactly; on shared faces the earliest part in
// the list owns the point.
struct GluedDensity {
  struct Part {
    GridDensity density;  // values already scaled by the part's mass
    double mass = 0.0;
  };
  std::vector<Part> parts;

  double value_at(const std::vector<double>& x) const;
  double total_mass() const;
};

GluedDensity glue_subdomains(
    const std::vector<std::pair<GridDensity, double>>& parts);

// Subdomain pipeline sharing one sample stream: samples once on the
// bounding box of the parts, gives every part its slice of that single
// histogram, estimates part masses from the same counts (nodes on a shared
// face are owned by the earliest part), solves each part, and glues.
// Independent per-part chains would put extra hop noise into the relative
// masses; the shared stream keeps the parts consistent by construction.
// All parts must share r and sit on a common lattice.
GluedDensity hybrid_glued(const SdeModel& model,
                          const std::vector<GridSpec>& parts,
                          const SamplerConfig& cfg, const SolverOptions& opts);

struct Local3dResult {
  GridDensity density;
  GridDensity z_marginal;  // w_ij = r * sum_k u_ijk
  TrialReport report;
};

// Hybrid pipeline on a 3D box with the iterative solver, plus the
// z-integrated 2D marginal. Dense QR is refused above 10^7 nodes.
Local3dResult run_3d_local(const SdeModel& model, const GridSpec& spec,
                           const SamplerConfig& cfg, SolverOptions opts);

// w_ij = r * sum_k u_ijk on the xy grid of a 3D density.
GridDensity z_marginal(const GridDensity& u3);

// Coarse pilot histogram over [pilot_lower, pilot_upper] with spacing
// coarse_cell; returns the grid of the given spacing r and extent centered
// on the highest-occupancy pilot cell (first in flat order on ties).
GridSpec pick_local_box(const SdeModel& model, const SamplerConfig& pilot_cfg,
                        const std::vector<double>& pilot_lower,
                        const std::vector<double>& pilot_upper,
                        double coarse_cell, const std::vector<double>& extent,
                        double r);

// Deterministic Van der Pol limit cycle by fixed-step RK4: integrates
// through t_transient, then records t_record time units.
std::vector<std::array<double, 2>> relaxation_cycle(const VanDerPolParams& p,
                                                    double dt,
                                                    double t_transient,
                                                    double t_record);

// Fraction of positive mass lying within Euclidean distance dist of the
// polyline through curve.
double mass_within_distance(const GridDensity& density2d,
                            const std::vector<std::array<double, 2>>& curve,
                            double dist);

void print_report(const TrialReport& rep, std::ostream& os);

}  // namespace fpsteady
