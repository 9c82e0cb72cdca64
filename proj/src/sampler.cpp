#include "fpsteady/sampler.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "fpsteady/error.hpp"
#include "fpsteady/rng.hpp"

namespace fpsteady {

void SamplerConfig::validate(int dim) const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    fail(ErrorClass::parameter, "dt must be positive");
  if (!(horizon_T > 0.0) || !std::isfinite(horizon_T))
    fail(ErrorClass::parameter, "horizon_T must be positive");
  if (burn_in < 0.0 || !std::isfinite(burn_in))
    fail(ErrorClass::parameter, "burn_in must be nonnegative");
  if (!(horizon_T > burn_in))
    fail(ErrorClass::parameter, "horizon_T must exceed burn_in");
  if (stride < 1) fail(ErrorClass::parameter, "stride must be at least 1");
  if (chains < 1) fail(ErrorClass::parameter, "chains must be at least 1");
  if (!initial_state.empty() && static_cast<int>(initial_state.size()) != dim)
    fail(ErrorClass::parameter, "initial_state length must equal model dim");
  const auto total_steps = static_cast<std::int64_t>(std::llround(horizon_T / dt));
  const auto burn_steps = static_cast<std::int64_t>(std::llround(burn_in / dt));
  if (total_steps / chains <= burn_steps)
    fail(ErrorClass::parameter,
         "burn-in consumes the entire horizon of every chain");
}

std::uint64_t RawHistogram::in_count() const {
  std::uint64_t n = 0;
  for (const auto c : counts) n += c;
  return n;
}

std::vector<double> euler_maruyama_step(const std::vector<double>& state,
                                        const SdeModel& model, double dt,
                                        const std::vector<double>& noise) {
  const int d = model.dim;
  if (static_cast<int>(state.size()) != d ||
      static_cast<int>(noise.size()) != d)
    fail(ErrorClass::parameter, "state/noise length must equal model dim");
  std::vector<double> f(d), next(d);
  model.drift(state.data(), f.data());
  const double root_dt = std::sqrt(dt);
  if (model.isotropic_sigma) {
    for (int i = 0; i < d; ++i)
      next[i] = state[i] + f[i] * dt + model.sigma_value * root_dt * noise[i];
  } else {
    std::vector<double> s(d * d);
    model.diffusion(state.data(), s.data());
    for (int i = 0; i < d; ++i) {
      double kick = 0.0;
      for (int j = 0; j < d; ++j) kick += s[i * d + j] * noise[j];
      next[i] = state[i] + f[i] * dt + root_dt * kick;
    }
  }
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(next[i]))
      fail(ErrorClass::diverged_trajectory,
           "Euler-Maruyama step produced a non-finite state");
  return next;
}

RawHistogram sample_chain(const SdeModel& model, const SamplerConfig& cfg,
                          const GridSpec& spec, int chain_index,
                          std::int64_t steps) {
  RawHistogram h;
  h.spec = spec;
  h.counts.assign(static_cast<std::size_t>(spec.total_nodes()), 0);

  const int d = model.dim;
  double state[3], f[3], noise[3], sig[9];
  const auto& init =
      cfg.initial_state.empty() ? model.default_initial_state : cfg.initial_state;
  for (int i = 0; i < d; ++i) state[i] = init[i];

  NormalStream rng(cfg.seed, static_cast<std::uint64_t>(chain_index));
  const double root_dt = std::sqrt(cfg.dt);
  const auto burn_steps =
      static_cast<std::int64_t>(std::llround(cfg.burn_in / cfg.dt));
  const bool iso = model.isotropic_sigma;
  const double sigma = model.sigma_value;

  for (std::int64_t s = 1; s <= steps; ++s) {
    model.drift(state, f);
    rng.fill(noise, d);
    if (iso) {
      for (int i = 0; i < d; ++i)
        state[i] += f[i] * cfg.dt + sigma * root_dt * noise[i];
    } else {
      model.diffusion(state, sig);
      for (int i = 0; i < d; ++i) {
        double kick = 0.0;
        for (int j = 0; j < d; ++j) kick += sig[i * d + j] * noise[j];
        state[i] += f[i] * cfg.dt + root_dt * kick;
      }
    }
    bool finite = true;
    for (int i = 0; i < d; ++i) finite = finite && std::isfinite(state[i]);
    if (!finite)
      fail(ErrorClass::diverged_trajectory,
           "chain " + std::to_string(chain_index) +
               " diverged at step " + std::to_string(s));
    if (s > burn_steps && (s - burn_steps) % cfg.stride == 0) {
      std::int64_t flat;
      if (spec.bin(state, flat))
        ++h.counts[static_cast<std::size_t>(flat)];
      else
        ++h.out_count;
    }
  }
  return h;
}

std::pair<GridDensity, double> merge_histograms(
    const std::vector<RawHistogram>& parts) {
  if (parts.empty())
    fail(ErrorClass::empty_histogram, "no histogram parts to merge");
  RawHistogram total;
  total.spec = parts.front().spec;
  total.counts.assign(parts.front().counts.size(), 0);
  for (const auto& p : parts) {
    if (!(p.spec == total.spec))
      fail(ErrorClass::spec_mismatch, "histogram parts disagree on the grid");
    for (std::size_t i = 0; i < p.counts.size(); ++i)
      total.counts[i] += p.counts[i];
    total.out_count += p.out_count;
  }
  const std::uint64_t in = total.in_count();
  const std::uint64_t n = in + total.out_count;
  if (n == 0)
    fail(ErrorClass::empty_histogram, "sampler produced no binned states");

  GridDensity v;
  v.spec = total.spec;
  v.provenance = Provenance::monte_carlo;
  v.sample_count = n;
  const double cell =
      std::pow(total.spec.r, total.spec.dim) * static_cast<double>(n);
  v.values.resize(static_cast<Eigen::Index>(total.counts.size()));
  for (std::size_t i = 0; i < total.counts.size(); ++i)
    v.values[static_cast<Eigen::Index>(i)] =
        static_cast<double>(total.counts[i]) / cell;
  const double mass = static_cast<double>(in) / static_cast<double>(n);
  return {std::move(v), mass};
}

std::pair<GridDensity, double> sample_histogram(const SdeModel& model,
                                                const SamplerConfig& cfg,
                                                const GridSpec& spec) {
  spec.validate();
  if (spec.dim != model.dim)
    fail(ErrorClass::spec_mismatch, "grid dim does not match model dim");
  cfg.validate(model.dim);

  const auto total_steps =
      static_cast<std::int64_t>(std::llround(cfg.horizon_T / cfg.dt));
  const std::int64_t base = total_steps / cfg.chains;
  const std::int64_t rem = total_steps % cfg.chains;

  std::vector<RawHistogram> parts(static_cast<std::size_t>(cfg.chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.chains));
  const int workers = std::min(cfg.chains, hybrid_thread_cap());

  auto run_range = [&](int lo, int hi) {
    for (int w = lo; w < hi; ++w) {
      try {
        const std::int64_t steps = base + (w < rem ? 1 : 0);
        parts[static_cast<std::size_t>(w)] =
            sample_chain(model, cfg, spec, w, steps);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    }
  };

  if (workers <= 1) {
    run_range(0, cfg.chains);
  } else {
    std::vector<std::thread> pool;
    const int per = (cfg.chains + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const int lo = t * per;
      const int hi = std::min(cfg.chains, lo + per);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  return merge_histograms(parts);
}

int hybrid_thread_cap() {
  const char* env = std::getenv("FP_HYBRID_THREADS");
  if (env == nullptr || *env == '\0') {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 0)
    fail(ErrorClass::parameter,
         "FP_HYBRID_THREADS must be a nonnegative integer");
  if (v == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  return static_cast<int>(v);
}

}  // namespace fpsteady
