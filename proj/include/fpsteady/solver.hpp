#pragma once

#include <Eigen/Core>
#include <string>

#include "fpsteady/operator.hpp"

namespace fpsteady {

enum class SolveMethod { auto_select, dense_qr, iterative_cgne };

struct SolverOptions {
  SolveMethod method = SolveMethod::auto_select;
  double tol = 1e-10;       // iterative relative residual target
  std::int64_t max_iter = 0;  // 0: 10 * column count
  std::int64_t auto_threshold = 20000;  // node count where auto goes iterative
};

struct SolveDiagnostics {
  std::string method;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::int64_t iterations = 0;
  double residual = 0.0;  // ||B x - d|| / ||d||
  double seconds = 0.0;
};

// Minimum-2-norm solution of B x = d for a full-row-rank wide matrix.
//
// dense-qr factors B^T = Q R and returns x = Q (R^T)^{-1} d. A diagonal
// entry of R below 1e-12 of the largest is a rank-deficiency error.
// iterative-cgne runs preconditioned conjugate gradients on (B B^T) y = d
// with the Jacobi preconditioner diag(row norms squared), applying B B^T
// as two sparse products, and returns x = B^T y once the constraint
// residual ||B x - d|| / ||d|| reaches opts.tol.
Eigen::VectorXd min_norm_solve(const SparseRowMat& B, const Eigen::VectorXd& d,
                               const SolverOptions& opts,
                               SolveDiagnostics* diag = nullptr);

// u = v + min-norm correction, the unique minimizer of ||u - v|| subject
// to the constraint system. Provenance of the result is hybrid.
GridDensity min_norm_correction(const ConstraintSystem& sys,
                                const GridDensity& v,
                                const SolverOptions& opts,
                                SolveDiagnostics* diag = nullptr);

// Least-squares minimizer of ||A u - b|| by Householder QR, for dense
// instances with full column rank.
Eigen::VectorXd classical_lsq(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& b);

// Structured path for the classical system [A0; 1^T] u = [0; c]: the
// normal equations (A0^T A0 + 1 1^T) u = c 1 reduce by one rank-1 update
// to two sparse LU solves with A0, which stays tractable where a dense QR
// of the stacked matrix would not.
Eigen::VectorXd classical_lsq(const ClassicalSystem& sys,
                              SolveDiagnostics* diag = nullptr);

enum class PostprocessMode { raw, clamp_renormalize };

// clamp_renormalize zeroes negative entries and rescales so the box mass
// is unchanged; an all-nonpositive density is an empty-density error.
GridDensity postprocess_density(const GridDensity& u, PostprocessMode mode);

}  // namespace fpsteady
