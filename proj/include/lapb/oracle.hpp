#pragma once

#include "lapb/model.hpp"

#include <cstdint>
#include <limits>

namespace lapb {

class OracleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class TruthMethod { conjugate, quadrature, importance };
const char* to_string(TruthMethod m);

// Ground truth for a posterior. tv and w1 compare L(sqrt(n)(theta - center))
// with N(0, J^-1) in the rescaled variable; NaN when not computed.
struct PosteriorTruth {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  Vec mean;
  Mat cov;
  double tv = nan;
  double w1 = nan;
  TruthMethod method = TruthMethod::conjugate;
  double error_estimate = 0.0;
  double ess = nan;  // importance sampling only
  int samples = 0;
};

struct ConjugateInputs {
  std::string family;  // poisson_gamma or weibull_invgamma
  double alpha = 1.0;
  double beta = 1.0;
  double k = 1.0;  // Weibull shape
};

// Exact posterior moments; empty data gives the prior moments.
PosteriorTruth conjugate_truth(const ConjugateInputs& in, const std::vector<double>& data);

// Gaussian reference N(center, (n precision)^-1) on the original scale.
struct LaplaceParams {
  double center = 0.0;
  double precision = 1.0;  // per-observation J
  int n = 1;
};

struct QuadratureOptions {
  double panel_sd_fraction = 0.25;  // panel width in units of the reference sd
  double tail_tolerance = 1e-12;
  int max_panels = 200000;
};

PosteriorTruth quadrature_truth_1d(const ModelDescriptor& model, const LaplaceParams& lp,
                                   const QuadratureOptions& opt = {});

struct DensityDistance {
  double tv = 0.0;
  double w1 = 0.0;
  double error_estimate = 0.0;
};

// TV = 1/2 int |p - q| and W1 = int |F_p - F_q| for densities supported in
// [lo, hi], integrated on panels of the given width split at sign changes.
// cdf_gap_lo is F_p(lo) - F_q(lo), nonzero when q has mass left of lo.
DensityDistance compare_densities_1d(const std::function<double(double)>& p, const std::function<double(double)>& q,
                                     double lo, double hi, double panel_width, double cdf_gap_lo = 0.0);

// E_p[(d/du log p - d/du log q)^2] with p the rescaled posterior and q the
// reference Gaussian, both truncated to |u| <= radius_u.
double fisher_divergence_1d(const ModelDescriptor& model, const LaplaceParams& lp, double radius_u);

// Self-normalized importance sampling with proposal N(mean, inflation^2 cov).
PosteriorTruth importance_truth_md(const ModelDescriptor& model, const Vec& mean, const Mat& cov, int samples,
                                   std::uint64_t seed, double inflation = 2.0);

}  // namespace lapb
