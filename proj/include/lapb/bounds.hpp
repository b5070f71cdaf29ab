#pragma once

#include "lapb/certificates.hpp"

#include <cmath>

namespace lapb {

class BoundError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// exp(-(1/2)(r sqrt(n) - sqrt(tr))^2 lambda); NaN fields were not requested.
struct DecaySet {
  double D_map = ConstantSet::nan;
  double D_map_plus = ConstantSet::nan;
  double D_mle = ConstantSet::nan;
  double D_mle_plus = ConstantSet::nan;
};

// Throws BoundError naming the inequality r sqrt(n) > sqrt(tr) when it fails.
double decay_term(double radius, double n, double trace_inv, double lambda_min, const std::string& name);
double log_decay_term(double radius, double n, double trace_inv, double lambda_min, const std::string& name);

DecaySet decay_terms(const CurvatureSummary& J_bar, const CurvatureSummary& J_hat, const ConstantSet& c, double n,
                     Centric centric);

struct BoundComponent {
  std::string name;
  double value = 0.0;
};

struct BoundValue {
  double total = 0.0;
  std::vector<BoundComponent> components;
  std::string infinite_term;  // set when a 1/(1-D) factor is policy-rejected
  bool finite() const { return std::isfinite(total); }
  double component(const std::string& name) const;
};

BoundValue tv_bound_map(const ConstantSet& c, const CurvatureSummary& J_bar, const CurvatureSummary& J_hat,
                        const DecaySet& D, double n);
BoundValue w1_bound_map(const ConstantSet& c, const CurvatureSummary& J_bar, const CurvatureSummary& J_hat,
                        const DecaySet& D, double n);
BoundValue cov_ipm_bound_map(const ConstantSet& c, const CurvatureSummary& J_bar, const CurvatureSummary& J_hat,
                             const DecaySet& D, double n);
BoundValue tv_bound_mle(const ConstantSet& c, const CurvatureSummary& J_hat, const DecaySet& D, double n);
BoundValue w1_bound_mle(const ConstantSet& c, const CurvatureSummary& J_hat, const DecaySet& D, double n);
BoundValue cov_ipm_bound_mle(const ConstantSet& c, const CurvatureSummary& J_hat, const DecaySet& D, double n);

// One bound with its decay terms computed from the constants.
BoundValue evaluate_bound(BoundKind kind, Centric centric, const ConstantSet& c, const CurvatureSummary& J_bar,
                          const CurvatureSummary& J_hat, double n);

struct CentricReport {
  Centric centric = Centric::map;
  BoundValue tv, w1, cov;
  double mean_error = 0.0;  // w1/sqrt(n)
  double cov_error = 0.0;   // (w1^2 + cov)/n
  DecaySet decay;
};

CentricReport evaluate_bounds(Centric centric, const ConstantSet& c, const CurvatureSummary& J_bar,
                              const CurvatureSummary& J_hat, double n);

// Radius b with P(||Z|| <= b) = 1 - alpha + tv_bound, Z ~ N(0, J_bar^-1).
double credible_adjust(double alpha, double tv_bound, const CurvatureSummary& J_bar, int mc_budget,
                       std::uint64_t seed);

double fisher_cap(double trace_inv, double M2_bar, double n);

struct EffectiveDimension {
  double exact = 0.0;
  double lower = 0.0;
};
EffectiveDimension effective_dimension(const CurvatureSummary& J_bar, int d, double n, const Mat& prior_hessian);

struct SteinInputs {
  double theta_hat = 0.0;
  double sigma2 = 1.0;  // J_hat^-1
  double n = 1.0;
  double delta = 0.0;
  double M1 = 0.0, M1_tilde = 1.0, M1_hat = 1.0, M2 = 0.0, kappa = 0.0;
  // prior density on the original scale; zero outside the support
  std::function<double(double)> prior;
  // support of the prior (may be infinite)
  double support_lo = -std::numeric_limits<double>::infinity();
  double support_hi = std::numeric_limits<double>::infinity();
};

struct SteinResult {
  double total = 0.0;
  double i1 = 0.0;
  double i2 = 0.0;
  std::vector<BoundComponent> components;
};

// d = 1 bound on |E g(sqrt(n)(theta - theta_hat)) - E g(Z)|, Z ~ N(0, sigma2).
SteinResult univariate_stein_bound(const SteinInputs& in, const std::function<double(double)>& g);

}  // namespace lapb
