#pragma once

#include "lapb/geometry.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <random>

namespace lapb {

class CertificateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Centric { map, mle };
enum class ThirdMethod { analytic, grid };
enum class BoundKind { tv, w1, cov };

const char* to_string(Centric c);
const char* to_string(ThirdMethod m);
const char* to_string(BoundKind b);

struct GridOptions {
  int points = 1000;     // ball points per query (split across radius shells for profiles)
  int directions = 10;   // random starts for the cubic-form maximization
  int shells = 10;       // radius ladder length for profiles
  std::uint64_t seed = 0x5eedULL;
};

struct ThirdBound {
  double value = 0.0;
  bool certified = false;
  double sample_max = 0.0;  // largest norm seen on the grid (grid method only)
  ThirdMethod method = ThirdMethod::analytic;
};

// max over unit u of |T[u,u,u]|, by shifted symmetric power iteration from
// seeded random starts. Equals the operator norm of a symmetric tensor.
double tensor_norm(const Tensor3& T, int starts, std::mt19937_64& rng);

// Upper bound on sup ||f'''||/n over the ball, f = L_n or L_n + log pi.
ThirdBound third_derivative_bound(const ModelDescriptor& model, const Vec& center, double radius,
                                  ThirdMethod method, bool posterior, const GridOptions& grid = {});

// Grid estimate of r -> sup_{||t-center|| <= r} ||f'''(t)||/n for r up to rmax,
// built once from a ladder of nested balls.
class ThirdProfile {
public:
  static ThirdProfile build(const ModelDescriptor& model, const Vec& center, double rmax, bool posterior,
                            const GridOptions& grid);
  std::optional<double> at(double r) const;
  double max_radius() const { return rmax_; }
  double center_value() const { return center_; }

private:
  std::vector<double> radii_, values_;
  double rmax_ = 0.0;
  double center_ = 0.0;
};

struct GeometrySet {
  ModeSolve mle;
  ModeSolve map;
  CurvatureSummary J_hat;
  CurvatureSummary J_bar;
  double mode_distance = 0.0;  // ||theta_hat - theta_bar||
  bool mle_unique = true;
  bool map_unique = true;
};

GeometrySet compute_geometry(const ModelDescriptor& model, bool check_uniqueness = true);

struct ConstantSet {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  double delta = nan;
  double delta_bar = nan;
  double M1 = nan;
  double M1_tilde = nan;
  double M1_hat = nan;
  double M2 = nan;
  double M2_bar = nan;
  double kappa = nan;
  double kappa_bar = nan;
  // integrals of ||v - c||^p pi(v) over the excluded regions
  double tail1_map = nan;
  double tail2_map = nan;
  double tail1_mle = nan;
  double tail2_mle = nan;
  bool tails_exact = false;
  bool third_certified = true;
  ThirdMethod third_method = ThirdMethod::analytic;
};

struct CertOptions {
  ThirdMethod method = ThirdMethod::analytic;
  GridOptions grid;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(hi > lo); }
};

// Radius-dependent constant oracles for one model instance.
class Certifier {
public:
  Certifier(const ModelDescriptor& model, const GeometrySet& geometry, CertOptions opt = {});

  const ModelDescriptor& model() const { return model_; }
  const GeometrySet& geometry() const { return geom_; }
  const CertOptions& options() const { return opt_; }

  std::optional<double> M2(double delta);
  std::optional<double> M2_bar(double delta_bar);
  double kappa(double exclusion_radius);  // around the MLE; throws when unavailable
  PriorEnvelope envelope(double delta);   // throws when the prior vanishes

  // domain limit for balls around the MLE / MAP
  double cap_mle() const;
  double cap_map() const;

  // Everything computable for the given radii; MAP items need delta_bar,
  // MLE items need delta.
  ConstantSet constants(double delta, double delta_bar, bool want_map, bool want_mle);

private:
  const ModelDescriptor& model_;
  GeometrySet geom_;
  CertOptions opt_;
  std::optional<ThirdProfile> prof_lik_, prof_post_;
  std::map<double, double> kappa_cache_;
};

// kappa with sup_{||t - mle|| > r} (L(t) - L(mle))/n <= -kappa. third_bound
// supplies M(r) for the concave surrogate; may be empty.
double optimality_gap(const ModelDescriptor& model, const ModeSolve& mle, double exclusion_radius,
                      Centric centric, const std::function<std::optional<double>(double)>& third_bound = {});

PriorEnvelope prior_envelope(const ModelDescriptor& model, const Vec& center, double radius);

// Radii satisfying the strict size and curvature inequalities for the centric.
Interval feasible_radius_interval(Certifier& cert, Centric centric);
// Smallest delta with sqrt(Tr[(J_hat + delta M2/3)^-1]/n) < delta, below cap.
std::optional<double> min_delta_shifted(Certifier& cert);

// Minimizes f over log-radius in (lo, hi): coarse scan then golden section.
// Ties go to the smaller radius; a flat objective returns the midpoint.
std::optional<double> minimize_radius(const std::function<double(double)>& f, double lo, double hi, int scan = 32);

struct RadiusChoice {
  double delta = ConstantSet::nan;
  double delta_bar = ConstantSet::nan;
  double objective = std::numeric_limits<double>::infinity();
  ConstantSet constants;
};

// hint: previous optimum; the search then refines around it and keeps it
// unless strictly improved.
RadiusChoice optimize_radii(Certifier& cert, BoundKind target, Centric centric,
                            std::optional<RadiusChoice> hint = std::nullopt);

struct AssumptionCheck {
  std::string id;
  bool flag = false;
  double witness = 0.0;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool map_ok = false;
  bool mle_ok = false;
  bool uniqueness_warning = false;
  const AssumptionCheck* find(const std::string& id) const;
  bool ok(Centric c) const { return c == Centric::map ? map_ok : mle_ok; }
};

AssumptionReport verify_assumptions(const ModelDescriptor& model, const GeometrySet& geom, const ConstantSet& c);

}  // namespace lapb
