#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fpsteady/error.hpp"
#include "fpsteady/experiments.hpp"
#include "fpsteady/rng.hpp"
#include "fpsteady/solver.hpp"

using namespace fpsteady;

namespace {

SparseRowMat to_sparse(const Eigen::MatrixXd& A) {
  SparseRowMat s(A.rows(), A.cols());
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (A(i, j) != 0.0) t.emplace_back(i, j, A(i, j));
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

// Minimum-norm solution through the SVD pseudo-inverse, the textbook route
// the production solvers must reproduce.
Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& B, const Eigen::VectorXd& d) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.solve(d);
}

Eigen::MatrixXd random_full_rank(NormalStream& rng, int m, int n) {
  for (;;) {
    Eigen::MatrixXd B(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = rng.next();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
    if (svd.singularValues().minCoeff() > 1e-6) return B;
  }
}

GridSpec line_grid(std::int64_t nodes) {
  GridSpec s;
  s.dim = 1;
  s.lower = {0.0};
  s.upper = {static_cast<double>(nodes - 1)};
  s.r = 1.0;
  return s;
}

}  // namespace

TEST_CASE("smallest wide system splits the mass evenly") {
  Eigen::MatrixXd B(1, 2);
  B << 1.0, 1.0;
  Eigen::VectorXd d(1);
  d << 2.0;

  for (const auto method : {SolveMethod::dense_qr, SolveMethod::iterative_cgne}) {
    SolverOptions opts;
    opts.method = method;
    SolveDiagnostics diag;
    const Eigen::VectorXd x = min_norm_solve(to_sparse(B), d, opts, &diag);
    CHECK(x.size() == 2);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(diag.rows == 1);
    CHECK(diag.cols == 2);
  }
}

TEST_CASE("a feasible prior is returned untouched") {
  ConstraintSystem sys;
  sys.spec = line_grid(2);
  Eigen::MatrixXd B(1, 2);
  B << 1.0, 1.0;
  sys.matrix = to_sparse(B);
  sys.rhs = Eigen::VectorXd::Constant(1, 2.0);
  sys.n_interior_rows = 0;

  GridDensity v;
  v.spec = sys.spec;
  v.values = Eigen::VectorXd(2);
  v.values << 1.5, 0.5;

  SolveDiagnostics diag;
  const GridDensity u = min_norm_correction(sys, v, {}, &diag);
  CHECK(u.values[0] == 1.5);
  CHECK(u.values[1] == 0.5);
  CHECK(diag.iterations == 0);
  CHECK(u.provenance == Provenance::hybrid);
}

TEST_CASE("random instances match the pseudo-inverse oracle") {
  NormalStream rng(501, 0);
  NormalStream pick(502, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 1 + static_cast<int>(std::floor(std::abs(pick.next()) * 4)) % 12;
    const int n = m + 1 + static_cast<int>(std::floor(std::abs(pick.next()) * 6)) % 13;
    const Eigen::MatrixXd B = random_full_rank(rng, m, n);
    Eigen::VectorXd d(m);
    for (int i = 0; i < m; ++i) d[i] = rng.next();

    SolverOptions opts;
    opts.method = SolveMethod::dense_qr;
    const Eigen::VectorXd x = min_norm_solve(to_sparse(B), d, opts);
    const Eigen::VectorXd x_ref = pinv_solve(B, d);

    CHECK((x - x_ref).norm() <= 1e-8 * (1.0 + x_ref.norm()));
    CHECK((B * x - d).norm() <= 1e-9 * (1.0 + d.norm()));

    // minimality and orthogonality against null-space perturbations
    const Eigen::MatrixXd P =
        Eigen::MatrixXd::Identity(n, n) -
        B.transpose() * (B * B.transpose()).ldlt().solve(B).eval();
    for (int t = 0; t < 10; ++t) {
      Eigen::VectorXd w(n);
      for (int j = 0; j < n; ++j) w[j] = rng.next();
      const Eigen::VectorXd null_dir = P * w;
      CHECK(x.norm() <= (x + null_dir).norm() + 1e-12);
      CHECK(std::abs(x.dot(null_dir)) <=
            1e-9 * (1.0 + x.norm() * null_dir.norm()));
    }
  }
}

TEST_CASE("dense and iterative routes agree on a production system") {
  const SdeModel m = make_model("double-well", {});
  GridSpec spec;
  spec.dim = 1;
  spec.lower = {0.0};
  spec.upper = {2.0};
  spec.r = 0.002;  // 1001 nodes
  const ConstraintSystem sys =
      append_normalization(assemble_interior_operator(m, spec), spec, 0.5);

  GridDensity v = analytic_double_well_grid(spec, 0.6);
  // perturb the prior so the correction has real work to do
  NormalStream rng(77, 0);
  for (Eigen::Index i = 0; i < v.values.size(); ++i)
    v.values[i] = std::max(0.0, v.values[i] + 0.05 * rng.next());

  SolverOptions dense;
  dense.method = SolveMethod::dense_qr;
  SolverOptions cgne;
  cgne.method = SolveMethod::iterative_cgne;
  // 1e-10 is the double-precision floor for this operator; tighter
  // tolerances stall (checked up to 60k iterations).
  cgne.tol = 1e-10;
  cgne.max_iter = 40000;

  SolveDiagnostics diag_dense, diag_cgne;
  const GridDensity ud = min_norm_correction(sys, v, dense, &diag_dense);
  const GridDensity ui = min_norm_correction(sys, v, cgne, &diag_cgne);

  const double rel = (ud.values - ui.values).norm() / ud.values.norm();
  CHECK(rel <= 1e-6);
  CHECK(diag_dense.method == "dense-qr");
  CHECK(diag_cgne.method == "iterative-cgne");
  CHECK(diag_cgne.iterations > 0);
  CHECK(diag_cgne.residual <= 1e-10);
  CHECK(diag_dense.seconds >= 0.0);
}

TEST_CASE("auto dispatch follows the node-count threshold") {
  Eigen::MatrixXd B(1, 3);
  B << 1.0, 1.0, 1.0;
  Eigen::VectorXd d(1);
  d << 3.0;

  SolverOptions opts;  // auto
  SolveDiagnostics diag;
  min_norm_solve(to_sparse(B), d, opts, &diag);
  CHECK(diag.method == "dense-qr");

  opts.auto_threshold = 2;
  min_norm_solve(to_sparse(B), d, opts, &diag);
  CHECK(diag.method == "iterative-cgne");
}

TEST_CASE("rank deficiency is an error, not a wrong answer") {
  Eigen::MatrixXd B(2, 3);
  B << 1.0, 2.0, 3.0, 2.0, 4.0, 6.0;
  Eigen::VectorXd d(2);
  d << 1.0, 2.0;
  SolverOptions opts;
  opts.method = SolveMethod::dense_qr;
  try {
    min_norm_solve(to_sparse(B), d, opts);
    FAIL("expected a rank-deficiency error");
  } catch (const FpError& e) {
    CHECK(e.cls() == ErrorClass::rank_deficient);
  }
}

TEST_CASE("input shape validation") {
  Eigen::MatrixXd tall(3, 2);
  tall << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd d3 = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(min_norm_solve(to_sparse(tall), d3, {}), FpError);

  Eigen::MatrixXd wide(1, 2);
  wide << 1, 1;
  Eigen::VectorXd wrong = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(min_norm_solve(to_sparse(wide), wrong, {}), FpError);
}

TEST_CASE("least squares on dense classical instances") {
  SUBCASE("duplicated scalar row averages the targets") {
    Eigen::MatrixXd A(2, 1);
    A << 1.0, 1.0;
    Eigen::VectorXd b(2);
    b << 0.0, 2.0;
    const Eigen::VectorXd u = classical_lsq(A, b);
    CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("square consistent system is solved exactly") {
    Eigen::MatrixXd A(2, 2);
    A << 2.0, 1.0, 0.0, 3.0;
    Eigen::VectorXd u_true(2);
    u_true << -0.5, 1.25;
    const Eigen::VectorXd u = classical_lsq(A, A * u_true);
    CHECK((u - u_true).norm() <= 1e-12);
  }
  SUBCASE("overdetermined system matches the normal equations") {
    NormalStream rng(88, 0);
    Eigen::MatrixXd A(9, 4);
    Eigen::VectorXd b(9);
    for (int i = 0; i < 9; ++i) {
      for (int j = 0; j < 4; ++j) A(i, j) = rng.next();
      b[i] = rng.next();
    }
    const Eigen::VectorXd u = classical_lsq(A, b);
    const Eigen::VectorXd u_ref =
        (A.transpose() * A).ldlt().solve(A.transpose() * b);
    CHECK((u - u_ref).norm() <= 1e-8 * (1.0 + u_ref.norm()));
  }
  SUBCASE("column-rank deficiency is rejected") {
    Eigen::MatrixXd A(3, 2);
    A << 1.0, 2.0, 2.0, 4.0, 3.0, 6.0;
    Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(classical_lsq(A, b), FpError);
  }
}

TEST_CASE("structured classical path matches the dense factorization") {
  const SdeModel m = make_model("double-well", {});
  GridSpec spec;
  spec.dim = 1;
  spec.lower = {0.0};
  spec.upper = {2.0};
  spec.r = 0.05;
  const ClassicalSystem sys = assemble_classical_system(m, spec);

  SolveDiagnostics diag;
  const Eigen::VectorXd u_fast = classical_lsq(sys, &diag);
  const Eigen::VectorXd u_dense =
      classical_lsq(Eigen::MatrixXd(sys.matrix), sys.rhs);
  CHECK((u_fast - u_dense).norm() <= 1e-8 * (1.0 + u_dense.norm()));
  CHECK(diag.method == "sparse-lu-normal");
  CHECK(diag.residual < 1e-2);  // the dense comparison above is the oracle
}

TEST_CASE("postprocess modes") {
  GridDensity g;
  g.spec = line_grid(2);
  g.values = Eigen::VectorXd(2);
  g.values << -1.0, 3.0;

  SUBCASE("raw passes through") {
    const GridDensity out = postprocess_density(g, PostprocessMode::raw);
    CHECK(out.values[0] == -1.0);
    CHECK(out.values[1] == 3.0);
  }
  SUBCASE("clamp keeps the box mass") {
    const GridDensity out =
        postprocess_density(g, PostprocessMode::clamp_renormalize);
    CHECK(out.values[0] == 0.0);
    CHECK(out.values[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(box_mass(out) == doctest::Approx(box_mass(g)).epsilon(1e-14));
  }
  SUBCASE("nonnegative input is unchanged") {
    g.values << 0.5, 1.5;
    const GridDensity out =
        postprocess_density(g, PostprocessMode::clamp_renormalize);
    CHECK(out.values[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(out.values[1] == doctest::Approx(1.5).epsilon(1e-15));
  }
  SUBCASE("all-nonpositive densities cannot be repaired") {
    g.values << -1.0, 0.0;
    CHECK_THROWS_AS(postprocess_density(g, PostprocessMode::clamp_renormalize),
                    FpError);
  }
  SUBCASE("non-finite values are rejected") {
    g.values << 1.0, std::nan("");
    CHECK_THROWS_AS(postprocess_density(g, PostprocessMode::raw), FpError);
  }
}
