#pragma once

#include <Eigen/SparseCore>
#include <iosfwd>
#include <vector>

#include "fpsteady/grid.hpp"
#include "fpsteady/model.hpp"

namespace fpsteady {

using SparseRowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// B-hat u = b: interior finite-difference rows of the stationary
// Fokker-Planck operator (no boundary rows) plus the all-ones
// normalization row with right-hand side mass * r^-d.
struct ConstraintSystem {
  SparseRowMat matrix;
  Eigen::VectorXd rhs;
  std::int64_t n_interior_rows = 0;
  GridSpec spec;
};

// One row per strictly interior node, discretizing
//   L u = -sum_i d/dx_i (f_i u) + 1/2 sum_ij d^2/dx_i dx_j (D_ij u)
// with central differences of the products: f and D are evaluated at the
// displaced stencil nodes. Diagonal D terms use the 3-point second
// difference, off-diagonal terms the 4-point corner stencil with
// coefficient 1/(4 r^2). Every axis needs at least 3 nodes.
SparseRowMat assemble_interior_operator(const SdeModel& model,
                                        const GridSpec& spec);

ConstraintSystem append_normalization(SparseRowMat interior,
                                      const GridSpec& spec, double mass);

// Classical zero-boundary closure: unknowns are the interior nodes only,
// stencil entries that touch boundary nodes are dropped (u = 0 there).
// matrix stacks the square interior operator over the all-ones row;
// rhs = [0; r^-d].
struct ClassicalSystem {
  SparseRowMat matrix;
  Eigen::VectorXd rhs;
  std::int64_t n_interior = 0;
  GridSpec spec;
  std::vector<std::int64_t> interior_to_node;
};

ClassicalSystem assemble_classical_system(const SdeModel& model,
                                          const GridSpec& spec);

// Expands an interior-only solution to the full grid with zero boundary.
GridDensity classical_density(const ClassicalSystem& sys,
                              const Eigen::VectorXd& interior_values);

// One "row col value" triple per line, 0-based, 17 significant digits.
void export_coordinate_text(const SparseRowMat& m, std::ostream& os);

}  // namespace fpsteady
