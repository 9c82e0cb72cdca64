#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fpsteady/grid.hpp"
#include "fpsteady/model.hpp"

namespace fpsteady {

struct SamplerConfig {
  double dt = 1e-3;
  double horizon_T = 1000.0;  // total simulated time across all chains
  double burn_in = 10.0;      // discarded initial time, per chain
  std::int64_t stride = 1;    // bin every stride-th post-burn-in state
  std::uint64_t seed = 1234;
  int chains = 1;
  std::vector<double> initial_state;  // empty: model default

  void validate(int dim) const;
};

// Integer bin counts of one or more chains on a shared grid, plus the
// count of binned-eligible samples that fell outside every cell.
struct RawHistogram {
  GridSpec spec;
  std::vector<std::uint64_t> counts;
  std::uint64_t out_count = 0;

  std::uint64_t in_count() const;
  std::uint64_t binned() const { return in_count() + out_count; }
};

// One Euler-Maruyama update: state + f(state) dt + sigma(state) sqrt(dt) xi.
// noise holds dim i.i.d. standard normal draws. A non-finite result is a
// diverged-trajectory error.
std::vector<double> euler_maruyama_step(const std::vector<double>& state,
                                        const SdeModel& model, double dt,
                                        const std::vector<double>& noise);

// Runs cfg.chains independent chains that split horizon_T/dt steps, each
// seeded as stream (cfg.seed, chain index). Every chain discards its first
// burn_in time units, then every stride-th state is binned. The binned
// sample count N includes states that fall outside the grid, so
// v = counts/(N r^d) estimates the unrestricted stationary density and
// mass = in_count/N estimates the box's probability.
std::pair<GridDensity, double> sample_histogram(const SdeModel& model,
                                                const SamplerConfig& cfg,
                                                const GridSpec& spec);

// Single chain worker; exposed for custom partitioning and tests.
RawHistogram sample_chain(const SdeModel& model, const SamplerConfig& cfg,
                          const GridSpec& spec, int chain_index,
                          std::int64_t steps);

// Adds counts across parts (identical specs required) and recomputes v and
// mass from the merged totals, as if one stream had produced all samples.
std::pair<GridDensity, double> merge_histograms(
    const std::vector<RawHistogram>& parts);

// Thread cap from FP_HYBRID_THREADS (0 or unset: hardware concurrency).
int hybrid_thread_cap();

}  // namespace fpsteady
