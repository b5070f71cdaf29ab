#pragma once

#include "lapb/model.hpp"

namespace lapb {

class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Objective { likelihood, posterior };

struct NewtonOptions {
  double tolerance = 1e-8;
  int max_iterations = 200;
  double divergence_norm = 1e6;
};

struct ModeSolve {
  Vec theta;
  Objective objective = Objective::likelihood;
  bool converged = false;
  double grad_norm = 0.0;  // ||grad||/n at theta
  int iterations = 0;
  std::string message;
};

struct CurvatureSummary {
  Mat J;
  Mat J_inv;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double trace_inv = 0.0;
  double logdet = 0.0;
};

struct ShiftedPair {
  Mat J_plus;
  Mat J_minus;
  double lambda_plus_min = 0.0;
  double lambda_minus_min = 0.0;
  bool minus_positive_definite = false;
  double logdet_plus = 0.0;
  double logdet_minus = 0.0;  // NaN unless J_minus is positive definite
  double trace_inv_minus = 0.0;
};

// Damped Newton ascent on L_n or L_n + log pi. Throws GeometryError when the
// iterates run off to infinity.
ModeSolve find_mode(const ModelDescriptor& model, Objective objective, const Vec& init,
                    const NewtonOptions& opt = {});
ModeSolve find_mode(const ModelDescriptor& model, Objective objective);

// J = -Hessian/n at the mode of the matching objective.
CurvatureSummary curvature(const ModelDescriptor& model, const ModeSolve& mode);
CurvatureSummary summarize_spd(const Mat& J);

ShiftedPair shifted_pair(const Mat& J, double radius, double M);

struct UniquenessCheck {
  bool agree = true;
  double distance = 0.0;
};
// Runs the solver from two starting points and reports whether they agree.
UniquenessCheck check_mode_uniqueness(const ModelDescriptor& model, Objective objective, const Vec& a,
                                      const Vec& b, double tol = 1e-6);

}  // namespace lapb
