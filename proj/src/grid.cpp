#include "fpsteady/grid.hpp"

#include <cmath>
#include <cstdio>

#include "fpsteady/error.hpp"

namespace fpsteady {

namespace {

std::int64_t axis_count(double lo, double hi, double r) {
  // Node count along one axis; the extent must be an integer multiple of r
  // (up to rounding) so both endpoints carry nodes.
  const double span = (hi - lo) / r;
  const double rounded = std::round(span);
  if (std::abs(span - rounded) > 1e-6 * (std::abs(span) + 1.0)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "grid extent [%g, %g] is not a multiple of spacing %g", lo,
                  hi, r);
    fail(ErrorClass::degenerate_grid, buf);
  }
  return static_cast<std::int64_t>(rounded) + 1;
}

}  // namespace

void GridSpec::validate() const {
  if (dim < 1 || dim > 3)
    fail(ErrorClass::degenerate_grid, "grid dim must be 1, 2, or 3");
  if (static_cast<int>(lower.size()) != dim ||
      static_cast<int>(upper.size()) != dim)
    fail(ErrorClass::degenerate_grid, "lower/upper length must equal dim");
  if (!(r > 0.0) || !std::isfinite(r))
    fail(ErrorClass::degenerate_grid, "grid spacing must be positive");
  for (int a = 0; a < dim; ++a) {
    if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]))
      fail(ErrorClass::degenerate_grid, "grid bounds must be finite");
    if (!(upper[a] >= lower[a]))
      fail(ErrorClass::degenerate_grid,
           "upper must not be below lower on any axis");
    (void)axis_count(lower[a], upper[a], r);
  }
}

std::vector<std::int64_t> GridSpec::counts() const {
  std::vector<std::int64_t> n(dim);
  for (int a = 0; a < dim; ++a) n[a] = axis_count(lower[a], upper[a], r);
  return n;
}

std::int64_t GridSpec::total_nodes() const {
  std::int64_t total = 1;
  for (const auto c : counts()) total *= c;
  return total;
}

void GridSpec::node(std::int64_t flat, double* out) const {
  const auto n = counts();
  for (int a = dim - 1; a >= 0; --a) {
    const std::int64_t i = flat % n[a];
    flat /= n[a];
    out[a] = lower[a] + static_cast<double>(i) * r;
  }
}

std::vector<double> GridSpec::node(std::int64_t flat) const {
  std::vector<double> x(dim);
  node(flat, x.data());
  return x;
}

std::int64_t GridSpec::flat_index(const std::int64_t* idx) const {
  const auto n = counts();
  std::int64_t flat = 0;
  for (int a = 0; a < dim; ++a) flat = flat * n[a] + idx[a];
  return flat;
}

bool GridSpec::bin(const double* x, std::int64_t& flat) const {
  const auto n = counts();
  std::int64_t acc = 0;
  for (int a = 0; a < dim; ++a) {
    // Nearest node along this axis; the node's cell is [node-r/2, node+r/2).
    const double t = (x[a] - lower[a]) / r;
    const std::int64_t i = static_cast<std::int64_t>(std::floor(t + 0.5));
    if (i < 0 || i >= n[a]) return false;
    acc = acc * n[a] + i;
  }
  flat = acc;
  return true;
}

bool GridSpec::contains_box(const double* x) const {
  for (int a = 0; a < dim; ++a)
    if (x[a] < lower[a] || x[a] > upper[a]) return false;
  return true;
}

bool GridSpec::operator==(const GridSpec& o) const {
  return dim == o.dim && lower == o.lower && upper == o.upper && r == o.r;
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::monte_carlo:
      return "monte-carlo";
    case Provenance::hybrid:
      return "hybrid";
    case Provenance::classical:
      return "classical";
    case Provenance::analytic:
      return "analytic";
  }
  return "unknown";
}

Provenance provenance_from_name(const std::string& name) {
  if (name == "monte-carlo") return Provenance::monte_carlo;
  if (name == "hybrid") return Provenance::hybrid;
  if (name == "classical") return Provenance::classical;
  if (name == "analytic") return Provenance::analytic;
  fail(ErrorClass::parameter, "unknown provenance '" + name + "'");
}

double box_mass(const GridDensity& g) {
  return std::pow(g.spec.r, g.spec.dim) * g.values.sum();
}

}  // namespace fpsteady
