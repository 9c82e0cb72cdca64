#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <string>

namespace fpsteady {

// Drift/diffusion pair of an SDE dX = f(X)dt + sigma(X)dW.
//
// drift writes f(x) into out (dim entries); diffusion writes sigma(x)
// row-major (dim*dim entries). Both must be pure functions. When a
// coordinate transform y = R x + o is attached, drift and diffusion are
// already conjugated into y coordinates, so sampling and operator assembly
// share one frame.
struct SdeModel {
  int dim = 0;
  std::function<void(const double*, double*)> drift;
  std::function<void(const double*, double*)> diffusion;

  // Fast path used by the sampler and assembler when sigma = s*I constant.
  bool isotropic_sigma = false;
  double sigma_value = 0.0;

  bool has_transform = false;
  Eigen::MatrixXd transform_rotation;
  Eigen::VectorXd transform_offset;

  std::string name;
  std::vector<double> default_initial_state;
};

struct DoubleWellParams {
  double sigma = 0.6;
};

struct VanDerPolParams {
  double epsilon = 0.1;
  double a = 0.9964;
  double sigma = 0.1;
};

struct LorenzParams {
  double a = 10.0;
  double b = 28.0;
  double c = 8.0 / 3.0;
  double sigma = 0.3;
};

struct RosslerParams {
  double a = 0.2;
  double b = 0.2;
  double c = 5.7;
  double sigma = 0.1;
};

// Gradient flow of U(x) = x^4/2 - x^2: drift 2x - 2x^3, additive noise.
SdeModel double_well_model(const DoubleWellParams& p);

// Slow-fast oscillator x' = (y - x^3/3 + x)/eps, y' = a - x.
SdeModel van_der_pol_model(const VanDerPolParams& p);

SdeModel lorenz_model(const LorenzParams& p);
SdeModel rossler_model(const RosslerParams& p);

// Attach y = R x + o. R must be orthogonal to 1e-12. Drift becomes
// f~(y) = R f(R^T (y - o)); isotropic constant sigma is rotation invariant
// so the diffusion field is unchanged.
void set_transform(SdeModel& model, const Eigen::MatrixXd& rotation,
                   const Eigen::VectorXd& offset);

// Stationary density of the double-well SDE, normalized over the real line:
// u*(x) = exp(-2 U(x)/sigma^2) / K with K from adaptive quadrature over
// [-R, R], R grown until the tail beyond it contributes < 1e-14 relatively.
double double_well_density(double x, double sigma);

// Name-keyed registry: "double-well", "van-der-pol", "lorenz", "rossler".
// Unknown names and unknown parameter keys are parameter errors. Optional
// keys "rotation" (dim*dim row-major) and "offset" (dim) attach a transform
// and are passed via the vectors argument.
SdeModel make_model(const std::string& name,
                    const std::map<std::string, double>& params,
                    const std::map<std::string, std::vector<double>>& vectors = {});

}  // namespace fpsteady
