#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "fpsteady/error.hpp"
#include "fpsteady/experiments.hpp"
#include "fpsteady/operator.hpp"
#include "fpsteady/rng.hpp"

using namespace fpsteady;

namespace {

SdeModel pure_diffusion_1d(double sigma) {
  SdeModel m;
  m.dim = 1;
  m.name = "pure-diffusion";
  m.default_initial_state = {0.0};
  m.drift = [](const double*, double* out) { out[0] = 0.0; };
  m.isotropic_sigma = true;
  m.sigma_value = sigma;
  m.diffusion = [sigma](const double*, double* out) { out[0] = sigma; };
  return m;
}

GridSpec grid1d(double lo, double hi, double r) {
  GridSpec s;
  s.dim = 1;
  s.lower = {lo};
  s.upper = {hi};
  s.r = r;
  return s;
}

GridSpec grid2d(double lo, double hi, double r) {
  GridSpec s;
  s.dim = 2;
  s.lower = {lo, lo};
  s.upper = {hi, hi};
  s.r = r;
  return s;
}

}  // namespace

TEST_CASE("pure diffusion reduces to the scaled second difference") {
  const double sigma = 0.6;
  const GridSpec spec = grid1d(0.0, 1.0, 0.25);
  const SparseRowMat B = assemble_interior_operator(pure_diffusion_1d(sigma), spec);
  REQUIRE(B.rows() == 3);
  REQUIRE(B.cols() == 5);

  const double c = sigma * sigma / 2.0 / (0.25 * 0.25);
  const Eigen::MatrixXd dense(B);
  for (int i = 0; i < 3; ++i) {
    CHECK(dense(i, i) == doctest::Approx(c).epsilon(1e-15));
    CHECK(dense(i, i + 1) == doctest::Approx(-2.0 * c).epsilon(1e-15));
    CHECK(dense(i, i + 2) == doctest::Approx(c).epsilon(1e-15));
  }
  CHECK(dense.cwiseAbs().sum() ==
        doctest::Approx(3 * 4 * c).epsilon(1e-14));  // nothing else

  SUBCASE("general diffusion path matches the fast path") {
    SdeModel gen = pure_diffusion_1d(sigma);
    gen.isotropic_sigma = false;
    const SparseRowMat Bg = assemble_interior_operator(gen, spec);
    CHECK((Eigen::MatrixXd(Bg) - dense).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("grids need three nodes per axis") {
  CHECK_THROWS_AS(
      assemble_interior_operator(pure_diffusion_1d(1.0), grid1d(0.0, 0.5, 0.5)),
      FpError);
}

TEST_CASE("normalization row and right-hand side") {
  const GridSpec spec2 = grid2d(0.0, 0.4, 0.1);
  SparseRowMat B2 = assemble_interior_operator(
      make_model("double-well", {}), grid1d(0.0, 1.0, 0.1));

  SUBCASE("mass 1 on a 2d grid with r = 0.1") {
    SdeModel vdp = van_der_pol_model({});
    SparseRowMat B = assemble_interior_operator(vdp, spec2);
    const ConstraintSystem sys = append_normalization(B, spec2, 1.0);
    CHECK(sys.rhs.size() == sys.matrix.rows());
    CHECK(sys.rhs[sys.rhs.size() - 1] == doctest::Approx(100.0).epsilon(1e-15));
    CHECK(sys.rhs.head(sys.n_interior_rows).cwiseAbs().maxCoeff() == 0.0);
    // ones row
    const Eigen::RowVectorXd last =
        Eigen::MatrixXd(sys.matrix).row(sys.matrix.rows() - 1);
    CHECK(last.minCoeff() == 1.0);
    CHECK(last.maxCoeff() == 1.0);
  }
  SUBCASE("mass 0.5 on a 1d grid with r = 0.5") {
    const GridSpec spec = grid1d(0.0, 2.0, 0.5);
    SparseRowMat B = assemble_interior_operator(pure_diffusion_1d(1.0), spec);
    const ConstraintSystem sys = append_normalization(B, spec, 0.5);
    CHECK(sys.rhs[sys.rhs.size() - 1] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("mass outside (0, 1] is rejected") {
    CHECK_THROWS_AS(append_normalization(B2, grid1d(0.0, 1.0, 0.1), 0.0),
                    FpError);
    CHECK_THROWS_AS(append_normalization(B2, grid1d(0.0, 1.0, 0.1), 1.2),
                    FpError);
    CHECK_NOTHROW(append_normalization(B2, grid1d(0.0, 1.0, 0.1), 1.0));
  }
}

TEST_CASE("row sums recover the negative drift divergence") {
  // For constant D every diffusion stencil sums to zero, so applying a row
  // to the constant vector leaves -central-difference of f, which is exact
  // for affine drift.
  NormalStream rng(2024, 0);
  for (int rep = 0; rep < 5; ++rep) {
    double a1 = rng.next(), b11 = rng.next(), b12 = rng.next();
    double a2 = rng.next(), b21 = rng.next(), b22 = rng.next();
    SdeModel m;
    m.dim = 2;
    m.name = "affine";
    m.default_initial_state = {0.0, 0.0};
    m.drift = [=](const double* x, double* out) {
      out[0] = a1 + b11 * x[0] + b12 * x[1];
      out[1] = a2 + b21 * x[0] + b22 * x[1];
    };
    m.isotropic_sigma = false;
    m.diffusion = [](const double*, double* out) {
      out[0] = 0.8;
      out[1] = 0.3;
      out[2] = 0.0;
      out[3] = 0.6;
    };
    const GridSpec spec = grid2d(-1.0, 1.0, 0.25);
    const SparseRowMat B = assemble_interior_operator(m, spec);
    const Eigen::VectorXd sums =
        B * Eigen::VectorXd::Ones(spec.total_nodes());
    const double expect = -(b11 + b22);
    CHECK((sums.array() - expect).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("stencil converges to the generator, cross terms included") {
  // Affine drift, constant anisotropic sigma, smooth test function with an
  // analytic image under L: the discrete residual must shrink ~4x per
  // halving of r.
  SdeModel m;
  m.dim = 2;
  m.name = "aniso";
  m.default_initial_state = {0.0, 0.0};
  m.drift = [](const double* x, double* out) {
    out[0] = 0.3 + 0.5 * x[0] - 0.2 * x[1];
    out[1] = -0.1 + 0.4 * x[0] + 0.7 * x[1];
  };
  m.isotropic_sigma = false;
  m.diffusion = [](const double*, double* out) {
    out[0] = 0.8;
    out[1] = 0.3;
    out[2] = 0.0;
    out[3] = 0.6;
  };
  // D = sigma^T sigma
  const double D11 = 0.64, D12 = 0.24, D22 = 0.45;

  const auto u_fn = [](double x, double y) { return std::sin(x) * std::cos(2 * y); };
  const auto lu_fn = [&](double x, double y) {
    const double u = std::sin(x) * std::cos(2 * y);
    const double ux = std::cos(x) * std::cos(2 * y);
    const double uy = -2.0 * std::sin(x) * std::sin(2 * y);
    const double uxx = -u;
    const double uyy = -4.0 * u;
    const double uxy = -2.0 * std::cos(x) * std::sin(2 * y);
    const double f1 = 0.3 + 0.5 * x - 0.2 * y;
    const double f2 = -0.1 + 0.4 * x + 0.7 * y;
    return -(0.5 + 0.7) * u - f1 * ux - f2 * uy +
           0.5 * (D11 * uxx + 2.0 * D12 * uxy + D22 * uyy);
  };

  const auto residual = [&](double r) {
    const GridSpec spec = grid2d(0.0, 1.0, r);
    const SparseRowMat B = assemble_interior_operator(m, spec);
    Eigen::VectorXd u(spec.total_nodes());
    double x[2];
    for (std::int64_t p = 0; p < spec.total_nodes(); ++p) {
      spec.node(p, x);
      u[p] = u_fn(x[0], x[1]);
    }
    const Eigen::VectorXd img = B * u;
    // interior nodes in row order
    double worst = 0.0;
    std::int64_t row = 0;
    const auto n = spec.counts();
    for (std::int64_t i = 1; i + 1 < n[0]; ++i)
      for (std::int64_t j = 1; j + 1 < n[1]; ++j) {
        const std::int64_t idx[2] = {i, j};
        spec.node(spec.flat_index(idx), x);
        worst = std::max(worst, std::abs(img[row++] - lu_fn(x[0], x[1])));
      }
    REQUIRE(row == B.rows());
    return worst;
  };

  const double coarse = residual(0.1);
  const double fine = residual(0.05);
  const double ratio = coarse / fine;
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("stationary residual halving ratio on the double-well density") {
  const SdeModel m = make_model("double-well", {});
  const auto max_residual = [&](double r) {
    const GridSpec spec = grid1d(0.0, 2.0, r);
    const SparseRowMat B = assemble_interior_operator(m, spec);
    const GridDensity u = analytic_double_well_grid(spec, 0.6);
    return (B * u.values).cwiseAbs().maxCoeff();
  };
  const double ratio = max_residual(0.01) / max_residual(0.005);
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("isotropic rows keep the 2d+1 footprint") {
  const SdeModel vdp = van_der_pol_model({});
  const GridSpec spec = grid2d(-1.0, 1.0, 0.25);
  const SparseRowMat B = assemble_interior_operator(vdp, spec);
  for (std::int64_t i = 0; i < B.rows(); ++i) {
    CHECK(B.outerIndexPtr()[i + 1] - B.outerIndexPtr()[i] <= 5);
  }
}

TEST_CASE("classical closure drops boundary columns") {
  const SdeModel m = make_model("double-well", {});
  const GridSpec spec = grid1d(0.0, 2.0, 0.25);  // 9 nodes, 7 interior
  const ClassicalSystem sys = assemble_classical_system(m, spec);
  REQUIRE(sys.n_interior == 7);
  REQUIRE(sys.matrix.rows() == 8);
  REQUIRE(sys.matrix.cols() == 7);
  REQUIRE(sys.interior_to_node.size() == 7);
  CHECK(sys.interior_to_node.front() == 1);
  CHECK(sys.interior_to_node.back() == 7);

  const Eigen::MatrixXd dense(sys.matrix);
  // tridiagonal interior block: ends lose one entry to the zero boundary
  CHECK(dense.row(0).cwiseAbs().sum() ==
        doctest::Approx(std::abs(dense(0, 0)) + std::abs(dense(0, 1))));
  for (int i = 1; i < 6; ++i)
    for (int j = 0; j < 7; ++j)
      CHECK((dense(i, j) != 0.0) == (std::abs(i - j) <= 1));
  CHECK(dense.row(7).minCoeff() == 1.0);
  CHECK(dense.row(7).maxCoeff() == 1.0);
  CHECK(sys.rhs[7] == doctest::Approx(4.0).epsilon(1e-15));  // r^-1
  CHECK(sys.rhs.head(7).cwiseAbs().maxCoeff() == 0.0);

  // matching columns of the free-boundary operator agree
  const SparseRowMat B = assemble_interior_operator(m, spec);
  const Eigen::MatrixXd full(B);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      CHECK(dense(i, j) == full(i, j + 1));

  SUBCASE("expansion pads the boundary with zeros") {
    Eigen::VectorXd inner(7);
    inner << 1, 2, 3, 4, 5, 6, 7;
    const GridDensity g = classical_density(sys, inner);
    CHECK(g.values.size() == 9);
    CHECK(g.values[0] == 0.0);
    CHECK(g.values[8] == 0.0);
    CHECK(g.values[3] == 3.0);
    CHECK(g.provenance == Provenance::classical);
  }
}

TEST_CASE("coordinate export round-trips") {
  const GridSpec spec = grid1d(0.0, 1.0, 0.25);
  const SparseRowMat B = assemble_interior_operator(pure_diffusion_1d(0.7), spec);
  std::ostringstream os;
  export_coordinate_text(B, os);
  std::istringstream is(os.str());

  std::vector<Eigen::Triplet<double>> trips;
  std::int64_t row, col;
  double value;
  while (is >> row >> col >> value) trips.emplace_back(row, col, value);
  CHECK(trips.size() == static_cast<std::size_t>(B.nonZeros()));

  SparseRowMat back(B.rows(), B.cols());
  back.setFromTriplets(trips.begin(), trips.end());
  CHECK((Eigen::MatrixXd(back) - Eigen::MatrixXd(B)).cwiseAbs().maxCoeff() ==
        0.0);
}
