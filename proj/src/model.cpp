#include "fpsteady/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <mutex>
#include <set>

#include "fpsteady/error.hpp"

namespace fpsteady {

namespace {

void require_finite(const std::map<std::string, double>& params) {
  for (const auto& [k, v] : params)
    if (!std::isfinite(v))
      fail(ErrorClass::parameter, "parameter '" + k + "' is not finite");
}

void isotropic_diffusion(SdeModel& m, double sigma) {
  if (!(sigma >= 0.0))
    fail(ErrorClass::parameter, "sigma must be nonnegative");
  m.isotropic_sigma = true;
  m.sigma_value = sigma;
  const int dim = m.dim;
  m.diffusion = [dim, sigma](const double*, double* out) {
    for (int i = 0; i < dim * dim; ++i) out[i] = 0.0;
    for (int i = 0; i < dim; ++i) out[i * dim + i] = sigma;
  };
}

}  // namespace

SdeModel double_well_model(const DoubleWellParams& p) {
  SdeModel m;
  m.dim = 1;
  m.name = "double-well";
  m.default_initial_state = {1.0};
  m.drift = [](const double* x, double* out) {
    out[0] = 2.0 * x[0] - 2.0 * x[0] * x[0] * x[0];
  };
  isotropic_diffusion(m, p.sigma);
  return m;
}

SdeModel van_der_pol_model(const VanDerPolParams& p) {
  if (!(p.epsilon > 0.0))
    fail(ErrorClass::parameter, "van-der-pol epsilon must be positive");
  SdeModel m;
  m.dim = 2;
  m.name = "van-der-pol";
  m.default_initial_state = {2.0, 0.0};
  const double eps = p.epsilon;
  const double a = p.a;
  m.drift = [eps, a](const double* x, double* out) {
    out[0] = (x[1] - x[0] * x[0] * x[0] / 3.0 + x[0]) / eps;
    out[1] = a - x[0];
  };
  isotropic_diffusion(m, p.sigma);
  return m;
}

SdeModel lorenz_model(const LorenzParams& p) {
  SdeModel m;
  m.dim = 3;
  m.name = "lorenz";
  m.default_initial_state = {1.0, 1.0, 1.0};
  const double a = p.a, b = p.b, c = p.c;
  m.drift = [a, b, c](const double* x, double* out) {
    out[0] = a * (x[1] - x[0]);
    out[1] = x[0] * (b - x[2]) - x[1];
    out[2] = x[0] * x[1] - c * x[2];
  };
  isotropic_diffusion(m, p.sigma);
  return m;
}

SdeModel rossler_model(const RosslerParams& p) {
  SdeModel m;
  m.dim = 3;
  m.name = "rossler";
  m.default_initial_state = {1.0, 1.0, 1.0};
  const double a = p.a, b = p.b, c = p.c;
  m.drift = [a, b, c](const double* x, double* out) {
    out[0] = -x[1] - x[2];
    out[1] = x[0] + a * x[1];
    out[2] = b + x[2] * (x[0] - c);
  };
  isotropic_diffusion(m, p.sigma);
  return m;
}

void set_transform(SdeModel& model, const Eigen::MatrixXd& rotation,
                   const Eigen::VectorXd& offset) {
  const int d = model.dim;
  if (rotation.rows() != d || rotation.cols() != d || offset.size() != d)
    fail(ErrorClass::parameter, "transform shape does not match model dim");
  const double ortho =
      (rotation.transpose() * rotation - Eigen::MatrixXd::Identity(d, d))
          .cwiseAbs()
          .maxCoeff();
  if (ortho > 1e-12)
    fail(ErrorClass::parameter, "rotation matrix is not orthogonal");

  const auto base_drift = model.drift;
  const Eigen::MatrixXd R = rotation;
  const Eigen::VectorXd o = offset;
  model.drift = [base_drift, R, o, d](const double* y, double* out) {
    Eigen::VectorXd x =
        R.transpose() * (Eigen::Map<const Eigen::VectorXd>(y, d) - o);
    Eigen::VectorXd f(d);
    base_drift(x.data(), f.data());
    Eigen::Map<Eigen::VectorXd>(out, d) = R * f;
  };
  if (!model.isotropic_sigma) {
    // dY = R dX, so the noise coefficient picks up a left factor of R.
    const auto base_diff = model.diffusion;
    model.diffusion = [base_diff, R, o, d](const double* y, double* out) {
      Eigen::VectorXd x =
          R.transpose() * (Eigen::Map<const Eigen::VectorXd>(y, d) - o);
      Eigen::MatrixXd s(d, d);
      base_diff(x.data(), s.data());
      // base_diff writes row-major into a column-major map; transpose both
      // ways so the composition stays row-major.
      Eigen::MatrixXd rs = R * s.transpose();
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[i * d + j] = rs(i, j);
    };
  }
  // Isotropic constant sigma: R*(sI) has the same diffusion matrix
  // D = sigma^2 I, and R dW is again a standard Wiener increment, so the
  // field is left untouched.
  model.has_transform = true;
  model.transform_rotation = rotation;
  model.transform_offset = offset;
}

namespace {

double double_well_potential(double x) {
  const double x2 = x * x;
  return 0.5 * x2 * x2 - x2;
}

// exp(-2 U(x)/sigma^2), the unnormalized stationary profile.
double dw_profile(double x, double sigma) {
  return std::exp(-2.0 * double_well_potential(x) / (sigma * sigma));
}

double dw_normalizer(double sigma) {
  using boost::math::quadrature::gauss_kronrod;
  // Integrate over [-R, R], growing R until the next shell is negligible.
  double R = 2.0;
  double total = gauss_kronrod<double, 61>::integrate(
      [sigma](double x) { return dw_profile(x, sigma); }, -R, R, 12, 1e-15);
  for (int round = 0; round < 60; ++round) {
    const double next = R + 1.0;
    const double shell =
        gauss_kronrod<double, 61>::integrate(
            [sigma](double x) { return dw_profile(x, sigma); }, R, next, 12,
            1e-15) +
        gauss_kronrod<double, 61>::integrate(
            [sigma](double x) { return dw_profile(x, sigma); }, -next, -R, 12,
            1e-15);
    total += shell;
    R = next;
    if (shell < 1e-14 * total) return total;
  }
  fail(ErrorClass::non_convergence, "double-well normalizer did not settle");
}

}  // namespace

double double_well_density(double x, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    fail(ErrorClass::parameter, "sigma must be positive and finite");
  static std::mutex mu;
  static std::map<double, double> cache;
  double K;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(sigma);
    if (it == cache.end()) it = cache.emplace(sigma, dw_normalizer(sigma)).first;
    K = it->second;
  }
  return dw_profile(x, sigma) / K;
}

SdeModel make_model(const std::string& name,
                    const std::map<std::string, double>& params,
                    const std::map<std::string, std::vector<double>>& vectors) {
  require_finite(params);
  auto take = [&params](const char* key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  auto reject_unknown = [&params, &name](std::set<std::string> known) {
    for (const auto& [k, v] : params) {
      (void)v;
      if (!known.count(k))
        fail(ErrorClass::parameter,
             "model '" + name + "' has no parameter '" + k + "'");
    }
  };

  SdeModel m;
  if (name == "double-well") {
    reject_unknown({"sigma"});
    m = double_well_model({take("sigma", DoubleWellParams{}.sigma)});
  } else if (name == "van-der-pol") {
    reject_unknown({"epsilon", "a", "sigma"});
    VanDerPolParams p;
    p.epsilon = take("epsilon", p.epsilon);
    p.a = take("a", p.a);
    p.sigma = take("sigma", p.sigma);
    m = van_der_pol_model(p);
  } else if (name == "lorenz") {
    reject_unknown({"a", "b", "c", "sigma"});
    LorenzParams p;
    p.a = take("a", p.a);
    p.b = take("b", p.b);
    p.c = take("c", p.c);
    p.sigma = take("sigma", p.sigma);
    m = lorenz_model(p);
  } else if (name == "rossler") {
    reject_unknown({"a", "b", "c", "sigma"});
    RosslerParams p;
    p.a = take("a", p.a);
    p.b = take("b", p.b);
    p.c = take("c", p.c);
    p.sigma = take("sigma", p.sigma);
    m = rossler_model(p);
  } else {
    fail(ErrorClass::parameter, "unknown model '" + name + "'");
  }

  const bool has_rot = vectors.count("rotation") > 0;
  const bool has_off = vectors.count("offset") > 0;
  for (const auto& [k, v] : vectors) {
    (void)v;
    if (k != "rotation" && k != "offset")
      fail(ErrorClass::parameter, "unknown model vector '" + k + "'");
  }
  if (has_rot || has_off) {
    const int d = m.dim;
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd o = Eigen::VectorXd::Zero(d);
    if (has_rot) {
      const auto& rv = vectors.at("rotation");
      if (static_cast<int>(rv.size()) != d * d)
        fail(ErrorClass::parameter, "rotation needs dim*dim entries");
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) R(i, j) = rv[i * d + j];
    }
    if (has_off) {
      const auto& ov = vectors.at("offset");
      if (static_cast<int>(ov.size()) != d)
        fail(ErrorClass::parameter, "offset needs dim entries");
      for (int i = 0; i < d; ++i) o(i) = ov[i];
    }
    set_transform(m, R, o);
  }
  return m;
}

}  // namespace fpsteady
