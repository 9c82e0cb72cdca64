#include "fpsteady/operator.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <ostream>

#include "fpsteady/error.hpp"

namespace fpsteady {

namespace {

// D = sigma^T sigma at x, for the general (anisotropic) path.
Eigen::MatrixXd diffusion_matrix(const SdeModel& model, const double* x) {
  const int d = model.dim;
  Eigen::MatrixXd s(d, d);
  std::vector<double> raw(static_cast<std::size_t>(d) * d);
  model.diffusion(x, raw.data());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s(i, j) = raw[static_cast<std::size_t>(i) * d + j];
  return s.transpose() * s;
}

struct StencilWalker {
  const SdeModel& model;
  const GridSpec& spec;
  std::vector<std::int64_t> n;       // per-axis node counts
  std::vector<std::int64_t> stride;  // flat-index stride per axis
  bool iso;
  double sigma2;

  StencilWalker(const SdeModel& m, const GridSpec& s) : model(m), spec(s) {
    n = spec.counts();
    stride.assign(static_cast<std::size_t>(spec.dim), 1);
    for (int a = spec.dim - 2; a >= 0; --a)
      stride[static_cast<std::size_t>(a)] =
          stride[static_cast<std::size_t>(a + 1)] *
          n[static_cast<std::size_t>(a + 1)];
    iso = model.isotropic_sigma;
    sigma2 = model.sigma_value * model.sigma_value;
  }

  // Emits the row of L at the interior node with multi-index idx / flat
  // index `flat` through push(col, coeff).
  template <typename Push>
  void row(const std::vector<std::int64_t>& idx, std::int64_t flat,
           Push&& push) const {
    const int d = spec.dim;
    const double r = spec.r;
    const double inv2r = 1.0 / (2.0 * r);
    const double invr2 = 1.0 / (r * r);

    double x[3], xs[3], f[3];
    for (int a = 0; a < d; ++a)
      x[a] = spec.lower[static_cast<std::size_t>(a)] +
             static_cast<double>(idx[static_cast<std::size_t>(a)]) * r;

    double center = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        for (int i = 0; i < d; ++i) xs[i] = x[i];
        xs[a] += sgn * r;
        model.drift(xs, f);
        const std::int64_t col =
            flat + sgn * stride[static_cast<std::size_t>(a)];
        // advection: -d/dx_a (f_a u), central difference of the product
        double coeff = -sgn * f[a] * inv2r;
        // diagonal diffusion: 1/2 d^2/dx_a^2 (D_aa u)
        const double daa = iso ? sigma2 : diffusion_matrix(model, xs)(a, a);
        coeff += 0.5 * daa * invr2;
        push(col, coeff);
      }
      const double daa_c = iso ? sigma2 : diffusion_matrix(model, x)(a, a);
      center -= daa_c * invr2;
    }
    push(flat, center);

    if (!iso) {
      // cross terms: d^2/dx_a dx_b (D_ab u) over unordered pairs, the
      // symmetric halves combined, on the 4-point corner stencil.
      const double inv4r2 = 1.0 / (4.0 * r * r);
      for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
          for (int sa = -1; sa <= 1; sa += 2) {
            for (int sb = -1; sb <= 1; sb += 2) {
              for (int i = 0; i < d; ++i) xs[i] = x[i];
              xs[a] += sa * r;
              xs[b] += sb * r;
              const double dab = diffusion_matrix(model, xs)(a, b);
              const std::int64_t col =
                  flat + sa * stride[static_cast<std::size_t>(a)] +
                  sb * stride[static_cast<std::size_t>(b)];
              push(col, sa * sb * dab * inv4r2);
            }
          }
        }
      }
    }
  }
};

template <typename Visit>
void for_each_interior(const GridSpec& spec, Visit&& visit) {
  const auto n = spec.counts();
  const int d = spec.dim;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 1);
  std::vector<std::int64_t> stride(static_cast<std::size_t>(d), 1);
  for (int a = d - 2; a >= 0; --a)
    stride[static_cast<std::size_t>(a)] =
        stride[static_cast<std::size_t>(a + 1)] * n[static_cast<std::size_t>(a + 1)];
  std::int64_t flat = 0;
  for (int a = 0; a < d; ++a) flat += stride[static_cast<std::size_t>(a)];
  for (;;) {
    visit(idx, flat);
    int a = d - 1;
    for (; a >= 0; --a) {
      ++idx[static_cast<std::size_t>(a)];
      flat += stride[static_cast<std::size_t>(a)];
      if (idx[static_cast<std::size_t>(a)] <= n[static_cast<std::size_t>(a)] - 2)
        break;
      flat -= (idx[static_cast<std::size_t>(a)] - 1) *
              stride[static_cast<std::size_t>(a)];
      idx[static_cast<std::size_t>(a)] = 1;
    }
    if (a < 0) return;
  }
}

}  // namespace

SparseRowMat assemble_interior_operator(const SdeModel& model,
                                        const GridSpec& spec) {
  spec.validate();
  if (spec.dim != model.dim)
    fail(ErrorClass::spec_mismatch, "grid dim does not match model dim");
  const auto n = spec.counts();
  std::int64_t n_interior = 1;
  for (const auto c : n) {
    if (c < 3)
      fail(ErrorClass::degenerate_grid,
           "every axis needs at least 3 nodes for an interior row");
    n_interior *= c - 2;
  }
  const std::int64_t total = spec.total_nodes();

  StencilWalker walker(model, spec);
  std::vector<Eigen::Triplet<double>> trips;
  const int per_row = 2 * spec.dim + 1 +
                      (model.isotropic_sigma ? 0 : 2 * spec.dim * (spec.dim - 1));
  trips.reserve(static_cast<std::size_t>(n_interior) * per_row);

  std::int64_t row_id = 0;
  for_each_interior(spec, [&](const std::vector<std::int64_t>& idx,
                              std::int64_t flat) {
    walker.row(idx, flat, [&](std::int64_t col, double coeff) {
      if (coeff != 0.0)
        trips.emplace_back(static_cast<int>(row_id), static_cast<int>(col),
                           coeff);
    });
    ++row_id;
  });

  SparseRowMat m(n_interior, total);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

ConstraintSystem append_normalization(SparseRowMat interior,
                                      const GridSpec& spec, double mass) {
  if (!(mass > 0.0) || !(mass <= 1.0))
    fail(ErrorClass::parameter, "normalization mass must lie in (0, 1]");
  const std::int64_t n_int = interior.rows();
  const std::int64_t total = interior.cols();

  ConstraintSystem sys;
  sys.spec = spec;
  sys.n_interior_rows = n_int;
  sys.matrix.resize(n_int + 1, total);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(interior.nonZeros()) +
                static_cast<std::size_t>(total));
  for (std::int64_t i = 0; i < n_int; ++i)
    for (SparseRowMat::InnerIterator it(interior, i); it; ++it)
      trips.emplace_back(static_cast<int>(i), static_cast<int>(it.col()),
                         it.value());
  for (std::int64_t j = 0; j < total; ++j)
    trips.emplace_back(static_cast<int>(n_int), static_cast<int>(j), 1.0);

  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  sys.matrix.makeCompressed();
  sys.rhs = Eigen::VectorXd::Zero(n_int + 1);
  sys.rhs[n_int] = mass * std::pow(spec.r, -spec.dim);
  return sys;
}

ClassicalSystem assemble_classical_system(const SdeModel& model,
                                          const GridSpec& spec) {
  spec.validate();
  if (spec.dim != model.dim)
    fail(ErrorClass::spec_mismatch, "grid dim does not match model dim");
  const auto n = spec.counts();
  for (const auto c : n)
    if (c < 3)
      fail(ErrorClass::degenerate_grid,
           "every axis needs at least 3 nodes for an interior row");

  const std::int64_t total = spec.total_nodes();
  // interior node <-> compact column index
  std::vector<std::int64_t> node_to_interior(static_cast<std::size_t>(total),
                                             -1);
  ClassicalSystem sys;
  sys.spec = spec;
  for_each_interior(spec, [&](const std::vector<std::int64_t>&, std::int64_t flat) {
    node_to_interior[static_cast<std::size_t>(flat)] =
        static_cast<std::int64_t>(sys.interior_to_node.size());
    sys.interior_to_node.push_back(flat);
  });
  sys.n_interior = static_cast<std::int64_t>(sys.interior_to_node.size());

  StencilWalker walker(model, spec);
  std::vector<Eigen::Triplet<double>> trips;
  std::int64_t row_id = 0;
  for_each_interior(spec, [&](const std::vector<std::int64_t>& idx,
                              std::int64_t flat) {
    walker.row(idx, flat, [&](std::int64_t col, double coeff) {
      const std::int64_t j = node_to_interior[static_cast<std::size_t>(col)];
      // boundary columns carry u = 0 and drop out
      if (j >= 0 && coeff != 0.0)
        trips.emplace_back(static_cast<int>(row_id), static_cast<int>(j),
                           coeff);
    });
    ++row_id;
  });
  for (std::int64_t j = 0; j < sys.n_interior; ++j)
    trips.emplace_back(static_cast<int>(sys.n_interior), static_cast<int>(j),
                       1.0);

  sys.matrix.resize(sys.n_interior + 1, sys.n_interior);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  sys.matrix.makeCompressed();
  sys.rhs = Eigen::VectorXd::Zero(sys.n_interior + 1);
  sys.rhs[sys.n_interior] = std::pow(spec.r, -spec.dim);
  return sys;
}

GridDensity classical_density(const ClassicalSystem& sys,
                              const Eigen::VectorXd& interior_values) {
  if (interior_values.size() != sys.n_interior)
    fail(ErrorClass::spec_mismatch,
         "interior solution length does not match the system");
  GridDensity g;
  g.spec = sys.spec;
  g.provenance = Provenance::classical;
  g.values = Eigen::VectorXd::Zero(sys.spec.total_nodes());
  for (std::int64_t i = 0; i < sys.n_interior; ++i)
    g.values[sys.interior_to_node[static_cast<std::size_t>(i)]] =
        interior_values[i];
  return g;
}

void export_coordinate_text(const SparseRowMat& m, std::ostream& os) {
  char buf[64];
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    for (SparseRowMat::InnerIterator it(m, i); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n",
                    static_cast<long long>(it.row()),
                    static_cast<long long>(it.col()), it.value());
      os << buf;
    }
  }
}

}  // namespace fpsteady
