#include "lapb/bounds.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>

namespace lapb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * M_PI);
constexpr double kDecayLimit = 1.0 - 1e-12;

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw BoundError(what + " is not finite");
}

// Accumulates components; a rejected 1/(1-D) factor makes the total infinite.
struct Builder {
  BoundValue b;
  bool ok = true;
  bool check(double D, const std::string& name) {
    if (!(D < kDecayLimit)) {
      if (ok) b.infinite_term = "1/(1-" + name + ")";
      ok = false;
    }
    return ok;
  }
  void add(const std::string& name, double v) { b.components.push_back({name, v}); }
  BoundValue done() {
    if (!ok) {
      b.total = kInf;
      return b;
    }
    b.total = 0.0;
    for (auto& c : b.components) {
      if (std::isnan(c.value) || c.value < 0.0) throw BoundError("invalid bound component " + c.name);
      b.total += c.value;
    }
    return b;
  }
};

// log of n^{d/2} e^{-n kappa} M1_hat det(J_hat^p)^{1/2} / ((2 pi)^{d/2} (1 - D_hat^p))
double log_tail_factor(int d, double n, double kappa, double M1_hat, double logdet_plus_hat, double D_hat_plus) {
  return 0.5 * d * std::log(n) - n * kappa + std::log(M1_hat) + 0.5 * logdet_plus_hat - 0.5 * d * kLog2Pi -
         std::log1p(-D_hat_plus);
}

double safe_exp(double x) { return x < -745.0 ? 0.0 : std::exp(x); }

struct MapShared {
  int d = 0;
  double tr, lam, shift_lam;
  ShiftedPair bar, hat;
};

MapShared map_shared(const ConstantSet& c, const CurvatureSummary& J_bar, const CurvatureSummary& J_hat) {
  require_finite(c.delta_bar, "delta_bar");
  require_finite(c.delta, "delta");
  require_finite(c.M2_bar, "M2_bar");
  require_finite(c.M2, "M2");
  require_finite(c.M1_hat, "M1_hat");
  require_finite(c.kappa_bar, "kappa_bar");
  MapShared s;
  s.d = static_cast<int>(J_bar.J.rows());
  s.tr = J_bar.trace_inv;
  s.lam = J_bar.lambda_min;
  s.shift_lam = J_bar.lambda_min - c.delta_bar * c.M2_bar;
  if (!(s.shift_lam > 0.0)) throw BoundError("Assumption 5 violated: lambda_bar_min <= delta_bar * M2_bar");
  s.bar = shifted_pair(J_bar.J, c.delta_bar, c.M2_bar);
  s.hat = shifted_pair(J_hat.J, c.delta, c.M2);
  return s;
}

struct MleShared {
  int d = 0;
  double tr, lam, shift_lam;
  ShiftedPair hat;
};

MleShared mle_shared(const ConstantSet& c, const CurvatureSummary& J_hat) {
  for (auto [v, name] : {std::pair{c.delta, "delta"}, {c.M2, "M2"}, {c.M1, "M1"}, {c.M1_tilde, "M1_tilde"},
                         {c.M1_hat, "M1_hat"}, {c.kappa, "kappa"}})
    require_finite(v, name);
  MleShared s;
  s.d = static_cast<int>(J_hat.J.rows());
  s.tr = J_hat.trace_inv;
  s.lam = J_hat.lambda_min;
  s.shift_lam = J_hat.lambda_min - c.delta * c.M2;
  if (!(s.shift_lam > 0.0)) throw BoundError("Assumption 8 violated: lambda_hat_min <= delta * M2");
  s.hat = shifted_pair(J_hat.J, c.delta, c.M2);
  return s;
}

double map_w2(const ConstantSet& c, const MapShared& s, double D_map, double n) {
  return std::sqrt(3.0) * s.tr * c.M2_bar / (2.0 * s.shift_lam * std::sqrt(n * (1.0 - D_map)));
}

double mle_w2(const ConstantSet& c, const MleShared& s, double D_mle, double n) {
  const double env = c.M1_tilde * c.M1_hat;
  return std::sqrt(3.0) * s.tr * env * c.M2 / (2.0 * s.shift_lam * std::sqrt(n * (1.0 - D_mle))) +
         c.M1 * env / (std::sqrt(n) * s.shift_lam);
}

void require_tail(double t, int p) {
  if (!std::isfinite(t)) throw BoundError(p == 1 ? "W1 bound infinite" : "second tail moment infinite");
}

}  // namespace

double BoundValue::component(const std::string& name) const {
  for (auto& c : components)
    if (c.name == name) return c.value;
  return 0.0;
}

double log_decay_term(double radius, double n, double trace_inv, double lambda_min, const std::string& name) {
  const double gap = radius * std::sqrt(n) - std::sqrt(trace_inv);
  if (!(gap > 0.0))
    throw BoundError(name + ": radius * sqrt(n) > sqrt(Tr[J^-1]) violated");
  return -0.5 * gap * gap * lambda_min;
}

double decay_term(double radius, double n, double trace_inv, double lambda_min, const std::string& name) {
  return std::exp(log_decay_term(radius, n, trace_inv, lambda_min, name));
}

DecaySet decay_terms(const CurvatureSummary& J_bar, const CurvatureSummary& J_hat, const ConstantSet& c, double n,
                     Centric centric) {
  DecaySet D;
  ShiftedPair hat = shifted_pair(J_hat.J, c.delta, c.M2);
  D.D_mle_plus = decay_term(c.delta, n, hat.J_plus.inverse().trace(), hat.lambda_plus_min, "D_mle_plus");
  if (centric == Centric::map) {
    ShiftedPair bar = shifted_pair(J_bar.J, c.delta_bar, c.M2_bar);
    D.D_map = decay_term(c.delta_bar, n, J_bar.trace_inv, J_bar.lambda_min, "D_map");
    D.D_map_plus = decay_term(c.delta_bar, n, bar.J_plus.inverse().trace(), bar.lambda_plus_min, "D_map_plus");
  } else {
    D.D_mle = decay_term(c.delta, n, J_hat.trace_inv, J_hat.lambda_min, "D_mle");
  }
  return D;
}

BoundValue tv_bound_map(const ConstantSet& c, const CurvatureSummary& J_bar, const CurvatureSummary& J_hat,
                        const DecaySet& D, double n) {
  MapShared s = map_shared(c, J_bar, J_hat);
  Builder b;
  if (!b.check(D.D_map, "D_map") || !b.check(D.D_mle_plus, "D_mle_plus")) return b.done();
  b.add("leading", std::sqrt(3.0) * s.tr * c.M2_bar / (4.0 * std::sqrt(n * s.shift_lam * (1.0 - D.D_map))));
  b.add("gaussian_tail", 2.0 * D.D_map);
  double lt = log_tail_factor(s.d, n, c.kappa_bar, c.M1_hat, s.hat.logdet_plus, D.D_mle_plus);
  b.add("posterior_tail", 2.0 * safe_exp(lt));
  return b.done();
}

BoundValue w1_bound_map(const ConstantSet& c, const CurvatureSummary& J_bar, const CurvatureSummary& J_hat,
                        const DecaySet& D, double n) {
  MapShared s = map_shared(c, J_bar, J_hat);
  require_tail(c.tail1_map, 1);
  Builder b;
  if (!b.check(D.D_map, "D_map") || !b.check(D.D_mle_plus, "D_mle_plus") || !b.check(D.D_map_plus, "D_map_plus"))
    return b.done();
  if (!s.bar.minus_positive_definite) throw BoundError("Assumption 5 violated: J_bar^m not positive definite");
  double lt = log_tail_factor(s.d, n, c.kappa_bar, c.M1_hat, s.hat.logdet_plus, D.D_mle_plus);
  b.add("leading", map_w2(c, s, D.D_map, n));
  b.add("gaussian_tail", (c.delta_bar * std::sqrt(n) + std::sqrt(2.0 * M_PI / s.lam)) * D.D_map);
  b.add("prior_tail", c.tail1_map > 0.0 ? safe_exp(lt + 0.5 * std::log(n) + std::log(c.tail1_map)) : 0.0);
  double lr = 0.5 * s.bar.logdet_plus - 0.5 * s.bar.logdet_minus + 0.5 * std::log(s.bar.trace_inv_minus) -
              std::log1p(-D.D_map_plus);
  b.add("shifted_ratio", std::exp(lr) * (D.D_map + safe_exp(lt)));
  return b.done();
}

BoundValue cov_ipm_bound_map(const ConstantSet& c, const CurvatureSummary& J_bar, const CurvatureSummary& J_hat,
                             const DecaySet& D, double n) {
  MapShared s = map_shared(c, J_bar, J_hat);
  require_tail(c.tail2_map, 2);
  Builder b;
  if (!b.check(D.D_map, "D_map") || !b.check(D.D_mle_plus, "D_mle_plus") || !b.check(D.D_map_plus, "D_map_plus"))
    return b.done();
  if (!s.bar.minus_positive_definite) throw BoundError("Assumption 5 violated: J_bar^m not positive definite");
  double lt = log_tail_factor(s.d, n, c.kappa_bar, c.M1_hat, s.hat.logdet_plus, D.D_mle_plus);
  double w = map_w2(c, s, D.D_map, n);
  b.add("leading", w * w + 2.0 * w * std::sqrt(s.tr / (1.0 - D.D_map)));
  b.add("gaussian_tail", (c.delta_bar * c.delta_bar * n + std::sqrt(2.0 * M_PI / s.lam)) * D.D_map);
  b.add("prior_tail", c.tail2_map > 0.0 ? safe_exp(lt + std::log(n) + std::log(c.tail2_map)) : 0.0);
  double lr = 0.5 * s.bar.logdet_plus - 0.5 * s.bar.logdet_minus + std::log(s.bar.trace_inv_minus) -
              std::log1p(-D.D_map_plus);
  b.add("shifted_ratio", std::exp(lr) * (D.D_map + safe_exp(lt)));
  return b.done();
}

BoundValue tv_bound_mle(const ConstantSet& c, const CurvatureSummary& J_hat, const DecaySet& D, double n) {
  MleShared s = mle_shared(c, J_hat);
  Builder b;
  if (!b.check(D.D_mle, "D_mle") || !b.check(D.D_mle_plus, "D_mle_plus")) return b.done();
  const double env = std::sqrt(c.M1_tilde * c.M1_hat);
  b.add("leading", std::sqrt(3.0) * s.tr * env * c.M2 / (4.0 * std::sqrt(n * s.shift_lam * (1.0 - D.D_mle))));
  b.add("prior_score", c.M1 * env / (2.0 * std::sqrt(n * s.shift_lam)));
  b.add("gaussian_tail", 2.0 * D.D_mle);
  double lt = log_tail_factor(s.d, n, c.kappa, c.M1_hat, s.hat.logdet_plus, D.D_mle_plus);
  b.add("posterior_tail", 2.0 * safe_exp(lt));
  return b.done();
}

BoundValue w1_bound_mle(const ConstantSet& c, const CurvatureSummary& J_hat, const DecaySet& D, double n) {
  MleShared s = mle_shared(c, J_hat);
  require_tail(c.tail1_mle, 1);
  Builder b;
  if (!b.check(D.D_mle, "D_mle") || !b.check(D.D_mle_plus, "D_mle_plus")) return b.done();
  if (!s.hat.minus_positive_definite) throw BoundError("Assumption 8 violated: J_hat^m not positive definite");
  const double env = c.M1_tilde * c.M1_hat;
  double lt = log_tail_factor(s.d, n, c.kappa, c.M1_hat, s.hat.logdet_plus, D.D_mle_plus);
  b.add("leading", std::sqrt(3.0) * s.tr * env * c.M2 / (2.0 * s.shift_lam * std::sqrt(n * (1.0 - D.D_mle))));
  b.add("prior_score", c.M1 * env / (std::sqrt(n) * s.shift_lam));
  b.add("gaussian_tail", (c.delta * std::sqrt(n) + std::sqrt(2.0 * M_PI / s.lam)) * D.D_mle);
  b.add("prior_tail", c.tail1_mle > 0.0 ? safe_exp(lt + 0.5 * std::log(n) + std::log(c.tail1_mle)) : 0.0);
  double lr = std::log(env) + 0.5 * s.hat.logdet_plus - 0.5 * s.hat.logdet_minus +
              0.5 * std::log(s.hat.trace_inv_minus) - std::log1p(-D.D_mle_plus);
  b.add("shifted_ratio", std::exp(lr) * (D.D_mle + safe_exp(lt)));
  return b.done();
}

BoundValue cov_ipm_bound_mle(const ConstantSet& c, const CurvatureSummary& J_hat, const DecaySet& D, double n) {
  MleShared s = mle_shared(c, J_hat);
  require_tail(c.tail2_mle, 2);
  Builder b;
  if (!b.check(D.D_mle, "D_mle") || !b.check(D.D_mle_plus, "D_mle_plus")) return b.done();
  if (!s.hat.minus_positive_definite) throw BoundError("Assumption 8 violated: J_hat^m not positive definite");
  const double env = c.M1_tilde * c.M1_hat;
  double lt = log_tail_factor(s.d, n, c.kappa, c.M1_hat, s.hat.logdet_plus, D.D_mle_plus);
  double w = mle_w2(c, s, D.D_mle, n);
  b.add("leading", w * w + 2.0 * w * std::sqrt(s.tr / (1.0 - D.D_mle)));
  b.add("gaussian_tail", (c.delta * c.delta * n + std::sqrt(2.0 * M_PI / s.lam)) * D.D_mle);
  b.add("prior_tail", c.tail2_mle > 0.0 ? safe_exp(lt + std::log(n) + std::log(c.tail2_mle)) : 0.0);
  double lr = std::log(env) + 0.5 * s.hat.logdet_plus - 0.5 * s.hat.logdet_minus +
              std::log(s.hat.trace_inv_minus) - std::log1p(-D.D_mle_plus);
  b.add("shifted_ratio", std::exp(lr) * (D.D_mle + safe_exp(lt)));
  return b.done();
}

BoundValue evaluate_bound(BoundKind kind, Centric centric, const ConstantSet& c, const CurvatureSummary& J_bar,
                          const CurvatureSummary& J_hat, double n) {
  DecaySet D = decay_terms(J_bar, J_hat, c, n, centric);
  if (centric == Centric::map) {
    switch (kind) {
      case BoundKind::tv: return tv_bound_map(c, J_bar, J_hat, D, n);
      case BoundKind::w1: return w1_bound_map(c, J_bar, J_hat, D, n);
      case BoundKind::cov: return cov_ipm_bound_map(c, J_bar, J_hat, D, n);
    }
  }
  switch (kind) {
    case BoundKind::tv: return tv_bound_mle(c, J_hat, D, n);
    case BoundKind::w1: return w1_bound_mle(c, J_hat, D, n);
    case BoundKind::cov: return cov_ipm_bound_mle(c, J_hat, D, n);
  }
  throw BoundError("unknown bound kind");
}

CentricReport evaluate_bounds(Centric centric, const ConstantSet& c, const CurvatureSummary& J_bar,
                              const CurvatureSummary& J_hat, double n) {
  CentricReport r;
  r.centric = centric;
  r.decay = decay_terms(J_bar, J_hat, c, n, centric);
  if (centric == Centric::map) {
    r.tv = tv_bound_map(c, J_bar, J_hat, r.decay, n);
    r.w1 = w1_bound_map(c, J_bar, J_hat, r.decay, n);
    r.cov = cov_ipm_bound_map(c, J_bar, J_hat, r.decay, n);
  } else {
    r.tv = tv_bound_mle(c, J_hat, r.decay, n);
    r.w1 = w1_bound_mle(c, J_hat, r.decay, n);
    r.cov = cov_ipm_bound_mle(c, J_hat, r.decay, n);
  }
  r.mean_error = r.w1.total / std::sqrt(n);
  r.cov_error = (r.w1.total * r.w1.total + r.cov.total) / n;
  return r;
}

double credible_adjust(double alpha, double tv_bound, const CurvatureSummary& J_bar, int mc_budget,
                       std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw BoundError("credible level must lie in (0, 1)");
  if (!(tv_bound < alpha)) throw BoundError("certificate too weak for this level");
  const double level = 1.0 - alpha + tv_bound;
  const int d = static_cast<int>(J_bar.J.rows());
  if (d == 1) {
    boost::math::normal_distribution<double> N(0.0, 1.0);
    return std::sqrt(J_bar.J_inv(0, 0)) * boost::math::quantile(N, 0.5 * (1.0 + level));
  }
  if (mc_budget < 1) throw BoundError("Monte Carlo budget must be positive");
  Eigen::LLT<Mat> llt(J_bar.J_inv);
  Mat L = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> norms(mc_budget);
  Vec xi(d);
  for (int s = 0; s < mc_budget; ++s) {
    for (int i = 0; i < d; ++i) xi(i) = N(rng);
    norms[s] = (L * xi).norm();
  }
  size_t k = static_cast<size_t>(std::ceil(level * mc_budget));
  k = std::clamp<size_t>(k, 1, norms.size()) - 1;
  std::nth_element(norms.begin(), norms.begin() + k, norms.end());
  return norms[k];
}

double fisher_cap(double trace_inv, double M2_bar, double n) {
  double t = trace_inv * M2_bar;
  return 3.0 * t * t / (4.0 * n);
}

EffectiveDimension effective_dimension(const CurvatureSummary& J_bar, int d, double n, const Mat& prior_hessian) {
  EffectiveDimension e;
  e.exact = ((J_bar.J + prior_hessian / n) * J_bar.J_inv).trace();
  e.lower = d * (1.0 - 1.0 / (n * J_bar.lambda_min));
  return e;
}

SteinResult univariate_stein_bound(const SteinInputs& in, const std::function<double(double)>& g) {
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::gauss_kronrod;
  using boost::math::quadrature::tanh_sinh;
  const double s2 = in.sigma2, s = std::sqrt(s2), n = in.n, dl = in.delta, R = dl * std::sqrt(n);
  const double a = 1.0 / (2.0 * s2) - dl * in.M2 / 3.0;
  const double bw = 1.0 / (2.0 * s2) - dl * in.M2 / 6.0;
  const double cw = 1.0 / (2.0 * s2) + dl * in.M2 / 6.0;
  const double P = 1.0 / s2 + dl * in.M2 / 3.0;
  if (!(a > 0.0)) throw BoundError("shifted precision non-positive");
  if (!(dl > 0.0)) throw BoundError("Stein bound needs delta > 0");
  const double E = 1.0 - 2.0 * std::exp(-0.5 * P * dl * dl * n);
  const double Ec = 1.0 - 2.0 * std::exp(-dl * dl * n * cw);
  SteinResult r;
  if (!(E > 0.0) || !(Ec > 0.0)) {
    r.total = kInf;
    return r;
  }
  const double env = in.M1_tilde * in.M1_hat;
  const double A = in.M1 + 3.0 / dl;

  auto inner = [&](const std::function<double(double)>& f) {
    double e1 = 0.0;
    return gauss_kronrod<double, 61>::integrate(f, -R, 0.0, 15, 1e-12, &e1) +
           gauss_kronrod<double, 61>::integrate(f, 0.0, R, 15, 1e-12, &e1);
  };
  double int_ug = inner([&](double u) {
    return std::abs(u * g(u)) * (A * std::exp(-a * u * u) - (3.0 / dl) * std::exp(-bw * u * u));
  });
  double int_g_b = inner([&](double u) { return std::abs(g(u)) * std::exp(-bw * u * u); });

  double i11 = 2.0 * env / std::sqrt(2.0 * M_PI * s2 * n) * int_ug;
  double i12 = 2.0 * std::sqrt(cw) * env * env * A * int_g_b / (a * M_PI * s * Ec * std::sqrt(n)) *
               (A / a - 3.0 / (dl * bw));
  r.components.push_back({"stein_leading", i11});
  r.components.push_back({"stein_normalizer", std::max(0.0, i12)});

  // Gaussian tail of g beyond the ball
  auto phi = [&](double u) { return std::exp(-0.5 * u * u / s2) / std::sqrt(2.0 * M_PI * s2); };
  exp_sinh<double> es;
  double t_right = es.integrate([&](double u) { return g(R + u) * phi(R + u); }, 0.0, kInf);
  double t_left = es.integrate([&](double u) { return g(-R - u) * phi(-R - u); }, 0.0, kInf);
  double i21 = std::abs(t_right + t_left);

  // prior mass beyond delta, weighted by |g(u sqrt(n))|
  auto pg = [&](double u) {
    double v = in.prior(in.theta_hat + u);
    return v > 0.0 ? std::abs(g(u * std::sqrt(n))) * v : 0.0;
  };
  double prior_int = 0.0;
  double hi_lim = in.support_hi - in.theta_hat, lo_lim = in.support_lo - in.theta_hat;
  if (hi_lim > dl) {
    if (std::isinf(hi_lim))
      prior_int += es.integrate([&](double t) { return pg(dl + t); }, 0.0, kInf);
    else
      prior_int += tanh_sinh<double>().integrate(pg, dl, hi_lim);
  }
  if (lo_lim < -dl) {
    if (std::isinf(lo_lim))
      prior_int += es.integrate([&](double t) { return pg(-dl - t); }, 0.0, kInf);
    else
      prior_int += tanh_sinh<double>().integrate(pg, lo_lim, -dl);
  }
  const double tail = std::sqrt(n) * std::exp(-n * in.kappa) * in.M1_hat * std::sqrt(P);
  double i22 = tail * prior_int / (std::sqrt(2.0 * M_PI) * E);
  double k_int = inner([&](double t) { return std::abs(g(t)) * std::exp(-0.5 * (1.0 / s2 - in.M2 * dl / 3.0) * t * t); });
  double i23 = env * std::sqrt(P) * k_int / (std::sqrt(2.0 * M_PI) * E) *
               (2.0 * std::exp(-dl * dl * n / (2.0 * s2)) + tail / (std::sqrt(2.0 * M_PI) * E));
  r.components.push_back({"gaussian_tail", i21});
  r.components.push_back({"prior_tail", i22});
  r.components.push_back({"normalizer_tail", i23});
  r.i1 = i11 + std::max(0.0, i12);
  r.i2 = i21 + i22 + i23;
  r.total = r.i1 + r.i2;
  return r;
}

}  // namespace lapb
