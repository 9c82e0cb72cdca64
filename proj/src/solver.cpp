#include "fpsteady/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

#include "fpsteady/error.hpp"

namespace fpsteady {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double relative_residual(const SparseRowMat& B, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& d) {
  const double dn = d.norm();
  if (dn == 0.0) return (B * x).norm();
  return (B * x - d).norm() / dn;
}

Eigen::VectorXd dense_qr_min_norm(const SparseRowMat& B,
                                  const Eigen::VectorXd& d,
                                  SolveDiagnostics* diag) {
  const std::int64_t m = B.rows();
  const std::int64_t n = B.cols();
  // B^T is materialized densely (n x m); cap the footprint.
  if (static_cast<double>(m) * static_cast<double>(n) * 8.0 > 4e9)
    fail(ErrorClass::unsupported,
         "dense QR would need a " + std::to_string(n) + "x" +
             std::to_string(m) + " dense factor; use iterative-cgne");

  Eigen::MatrixXd Bt = Eigen::MatrixXd(B.transpose());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Bt);

  // B^T P = Q R, so B = P R^T Q^T and Bx = d becomes R1^T z = P^T d with
  // x = Q [z; 0], the minimum-norm representative.
  const Eigen::MatrixXd R1 =
      qr.matrixR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
  double dmin = std::abs(R1(0, 0)), dmax = dmin;
  for (std::int64_t i = 1; i < m; ++i) {
    const double v = std::abs(R1(i, i));
    dmin = std::min(dmin, v);
    dmax = std::max(dmax, v);
  }
  if (dmin <= 1e-12 * dmax)
    fail(ErrorClass::rank_deficient,
         "constraint matrix is rank deficient (|R_min| = " +
             std::to_string(dmin) + ")");

  const Eigen::VectorXd w = qr.colsPermutation().transpose() * d;
  const Eigen::VectorXd z =
      R1.transpose().triangularView<Eigen::Lower>().solve(w);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  y.head(m) = z;
  Eigen::VectorXd x = qr.householderQ() * y;

  if (diag) {
    diag->method = "dense-qr";
    diag->iterations = 0;
    diag->residual = relative_residual(B, x, d);
  }
  return x;
}

Eigen::VectorXd cgne_min_norm(const SparseRowMat& B, const Eigen::VectorXd& d,
                              const SolverOptions& opts,
                              SolveDiagnostics* diag) {
  const std::int64_t m = B.rows();
  const std::int64_t n = B.cols();
  const std::int64_t max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;

  // Row-major copy of B^T so both products in (B B^T) p stream rows.
  SparseRowMat Bt = SparseRowMat(B.transpose());

  // Jacobi preconditioner: diag(B B^T) = squared row norms.
  Eigen::VectorXd inv_diag(m);
  for (std::int64_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (SparseRowMat::InnerIterator it(B, i); it; ++it)
      s += it.value() * it.value();
    if (s == 0.0)
      fail(ErrorClass::rank_deficient,
           "constraint row " + std::to_string(i) + " is identically zero");
    inv_diag[i] = 1.0 / s;
  }

  const double dn = d.norm();
  if (dn == 0.0) {
    if (diag) {
      diag->method = "iterative-cgne";
      diag->iterations = 0;
      diag->residual = 0.0;
    }
    return Eigen::VectorXd::Zero(n);
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd r = d;
  Eigen::VectorXd z = inv_diag.asDiagonal() * r;
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  std::int64_t it = 0;
  double true_res = 1.0;

  while (it < max_iter) {
    ++it;
    const Eigen::VectorXd q = B * (Bt * p);
    const double pq = p.dot(q);
    if (!(pq > 0.0) || !std::isfinite(pq))
      fail(ErrorClass::rank_deficient,
           "normal-equation operator lost positive definiteness");
    const double alpha = rz / pq;
    y += alpha * p;
    r -= alpha * q;
    if (r.norm() / dn <= opts.tol) {
      // Recurrence residual can drift from the true one; verify and, if
      // needed, re-sync and keep iterating.
      const Eigen::VectorXd x_try = Bt * y;
      true_res = relative_residual(B, x_try, d);
      if (true_res <= opts.tol) {
        if (diag) {
          diag->method = "iterative-cgne";
          diag->iterations = it;
          diag->residual = true_res;
        }
        return x_try;
      }
      r = d - B * x_try;
    }
    z = inv_diag.asDiagonal() * r;
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  true_res = relative_residual(B, Bt * y, d);
  std::ostringstream msg;
  msg << "CGNE did not reach tol " << opts.tol << " within " << max_iter
      << " iterations (residual " << true_res << ")";
  fail(ErrorClass::non_convergence, msg.str());
}

}  // namespace

Eigen::VectorXd min_norm_solve(const SparseRowMat& B, const Eigen::VectorXd& d,
                               const SolverOptions& opts,
                               SolveDiagnostics* diag) {
  if (B.rows() == 0 || B.cols() == 0)
    fail(ErrorClass::parameter, "constraint matrix is empty");
  if (d.size() != B.rows())
    fail(ErrorClass::parameter, "rhs length does not match constraint rows");
  if (B.rows() > B.cols())
    fail(ErrorClass::parameter,
         "constraint matrix must be wide (rows <= cols)");

  SolveMethod method = opts.method;
  if (method == SolveMethod::auto_select)
    method = B.cols() <= opts.auto_threshold ? SolveMethod::dense_qr
                                             : SolveMethod::iterative_cgne;
  const auto t0 = Clock::now();
  Eigen::VectorXd x = method == SolveMethod::dense_qr
                          ? dense_qr_min_norm(B, d, diag)
                          : cgne_min_norm(B, d, opts, diag);
  if (diag) {
    diag->rows = B.rows();
    diag->cols = B.cols();
    diag->seconds = seconds_since(t0);
  }
  return x;
}

GridDensity min_norm_correction(const ConstraintSystem& sys,
                                const GridDensity& v,
                                const SolverOptions& opts,
                                SolveDiagnostics* diag) {
  if (!(v.spec == sys.spec))
    fail(ErrorClass::spec_mismatch,
         "reference density grid does not match the constraint system");
  if (v.values.size() != sys.matrix.cols())
    fail(ErrorClass::spec_mismatch,
         "reference density length does not match the constraint system");

  const Eigen::VectorXd d = sys.rhs - sys.matrix * v.values;
  GridDensity u;
  u.spec = v.spec;
  u.provenance = Provenance::hybrid;
  u.sample_count = v.sample_count;
  if (d.norm() == 0.0) {
    u.values = v.values;
    if (diag) {
      diag->method = "feasible";
      diag->rows = sys.matrix.rows();
      diag->cols = sys.matrix.cols();
      diag->iterations = 0;
      diag->residual = 0.0;
      diag->seconds = 0.0;
    }
    return u;
  }
  u.values = v.values + min_norm_solve(sys.matrix, d, opts, diag);
  return u;
}

Eigen::VectorXd classical_lsq(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& b) {
  if (A.rows() < A.cols())
    fail(ErrorClass::parameter, "least squares expects rows >= cols");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < A.cols())
    fail(ErrorClass::rank_deficient,
         "least-squares matrix is column rank deficient");
  return qr.solve(b);
}

Eigen::VectorXd classical_lsq(const ClassicalSystem& sys,
                              SolveDiagnostics* diag) {
  const auto t0 = Clock::now();
  const std::int64_t n = sys.n_interior;
  if (sys.matrix.rows() != n + 1 || sys.matrix.cols() != n)
    fail(ErrorClass::spec_mismatch, "classical system has unexpected shape");
  const double c = sys.rhs[n];

  // A = [A0; 1^T], b = [0; c]. The normal equations
  //   (A0^T A0 + 1 1^T) u = c 1
  // reduce by the rank-1 update formula to u = c z / (1 + 1^T z) with
  // z = A0^{-1} A0^{-T} 1, i.e. two sparse LU solves.
  using ColMat = Eigen::SparseMatrix<double>;
  ColMat A0 = ColMat(sys.matrix.topRows(n));
  ColMat A0t = ColMat(A0.transpose());

  Eigen::SparseLU<ColMat> lu_t;
  lu_t.compute(A0t);
  if (lu_t.info() != Eigen::Success)
    fail(ErrorClass::rank_deficient,
         "interior operator is singular (transpose factorization failed)");
  const Eigen::VectorXd w = lu_t.solve(Eigen::VectorXd::Ones(n));

  Eigen::SparseLU<ColMat> lu;
  lu.compute(A0);
  if (lu.info() != Eigen::Success)
    fail(ErrorClass::rank_deficient, "interior operator is singular");
  const Eigen::VectorXd z = lu.solve(w);

  const double denom = 1.0 + z.sum();
  if (denom == 0.0 || !std::isfinite(denom))
    fail(ErrorClass::rank_deficient,
         "normal equations are singular after the rank-1 update");
  Eigen::VectorXd u = (c / denom) * z;

  if (diag) {
    diag->method = "sparse-lu-normal";
    diag->rows = sys.matrix.rows();
    diag->cols = sys.matrix.cols();
    diag->iterations = 0;
    diag->residual = relative_residual(sys.matrix, u, sys.rhs);
    diag->seconds = seconds_since(t0);
  }
  return u;
}

GridDensity postprocess_density(const GridDensity& u, PostprocessMode mode) {
  for (Eigen::Index i = 0; i < u.values.size(); ++i)
    if (!std::isfinite(u.values[i]))
      fail(ErrorClass::parameter, "density has non-finite entries");
  if (mode == PostprocessMode::raw) return u;

  const double mass = box_mass(u);
  if (!(mass > 0.0))
    fail(ErrorClass::empty_density,
         "cannot renormalize a density with nonpositive mass");
  GridDensity out = u;
  double clamped_sum = 0.0;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    if (out.values[i] < 0.0) out.values[i] = 0.0;
    clamped_sum += out.values[i];
  }
  if (clamped_sum <= 0.0)
    fail(ErrorClass::empty_density, "density is nonpositive everywhere");
  const double target = mass * std::pow(u.spec.r, -u.spec.dim);
  out.values *= target / clamped_sum;
  return out;
}

}  // namespace fpsteady
