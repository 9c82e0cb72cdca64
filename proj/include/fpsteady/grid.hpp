#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace fpsteady {

// Axis-aligned box with uniform node spacing r. Nodes sit at
// lower + i*r inclusive of both endpoints; the cell of a node is the
// r-cube centered on it, so cells extend r/2 beyond the box faces.
struct GridSpec {
  int dim = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  double r = 0.0;

  void validate() const;
  std::vector<std::int64_t> counts() const;
  std::int64_t total_nodes() const;
  std::vector<double> node(std::int64_t flat) const;
  void node(std::int64_t flat, double* out) const;
  // Flat index, row-major with the last axis fastest.
  std::int64_t flat_index(const std::int64_t* idx) const;
  // Cell lookup: true iff x lies in some node's cell; writes the flat index.
  bool bin(const double* x, std::int64_t& flat) const;
  bool contains_box(const double* x) const;

  bool operator==(const GridSpec& o) const;
};

enum class Provenance { monte_carlo, hybrid, classical, analytic };

const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

struct GridDensity {
  GridSpec spec;
  Eigen::VectorXd values;
  Provenance provenance = Provenance::monte_carlo;
  std::uint64_t sample_count = 0;
};

// r^d * sum of values: the density's integral over the box.
double box_mass(const GridDensity& g);

}  // namespace fpsteady
