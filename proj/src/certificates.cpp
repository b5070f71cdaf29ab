#include "lapb/certificates.hpp"

#include "lapb/bounds.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace lapb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                           53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113};

double halton(long index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

// count low-discrepancy points in the ball, Halton indices offset+1..offset+count
std::vector<Vec> ball_points(const Vec& center, double r, int count, long offset) {
  const int d = static_cast<int>(center.size());
  if (d + 1 > static_cast<int>(std::size(kPrimes))) throw CertificateError("grid sampling supports d <= 29");
  static const boost::math::normal_distribution<double> N(0.0, 1.0);
  std::vector<Vec> pts;
  pts.reserve(count);
  for (long i = offset + 1; i <= offset + count; ++i) {
    if (d == 1) {
      pts.push_back(center + Vec::Constant(1, r * (2.0 * halton(i, 2) - 1.0)));
      continue;
    }
    Vec z(d);
    for (int j = 0; j < d; ++j) z(j) = boost::math::quantile(N, std::clamp(halton(i, kPrimes[j]), 1e-12, 1 - 1e-12));
    double nz = z.norm();
    if (!(nz > 0.0)) continue;
    double rad = r * std::pow(halton(i, kPrimes[d]), 1.0 / d);
    pts.push_back(center + rad * z / nz);
  }
  if (d == 1) {
    pts.push_back(center - Vec::Constant(1, r));
    pts.push_back(center + Vec::Constant(1, r));
  }
  return pts;
}

bool has_tensors(const ModelDescriptor& m, bool posterior) {
  return static_cast<bool>(m.loglik_third) && (!posterior || static_cast<bool>(m.logprior_third));
}

double point_norm(const ModelDescriptor& m, const Vec& x, bool posterior, int starts, std::mt19937_64& rng) {
  Tensor3 T = m.loglik_third(x);
  if (posterior) T += m.logprior_third(x);
  return tensor_norm(T, starts, rng) / m.n;
}

std::optional<double> fourth_slack(const ModelDescriptor& m, const Vec& center, double r, bool posterior, int pts) {
  const BallOracle& o = posterior ? m.fourth_bound_post : m.fourth_bound_lik;
  if (!o) return std::nullopt;
  auto v = o(center, r);
  if (!v) return std::nullopt;
  // heuristic mesh width of pts points in a ball of radius r
  return *v * 2.0 * r * std::pow(static_cast<double>(std::max(pts, 1)), -1.0 / m.d);
}

bool passes(double witness, double scale) {
  return std::isfinite(witness) && witness > 1e-12 * std::abs(scale);
}

}  // namespace

const char* to_string(Centric c) { return c == Centric::map ? "map" : "mle"; }
const char* to_string(ThirdMethod m) { return m == ThirdMethod::analytic ? "analytic" : "grid"; }
const char* to_string(BoundKind b) {
  switch (b) {
    case BoundKind::tv: return "tv";
    case BoundKind::w1: return "w1";
    case BoundKind::cov: return "cov";
  }
  return "?";
}

double tensor_norm(const Tensor3& T, int starts, std::mt19937_64& rng) {
  const int d = T.dim();
  if (d == 1) return std::abs(T(0, 0, 0));
  double fro = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) fro += T(i, j, k) * T(i, j, k);
  fro = std::sqrt(fro);
  if (fro == 0.0) return 0.0;
  const double shift = 2.0 * fro;
  std::normal_distribution<double> N(0.0, 1.0);
  double best = 0.0;
  for (int s = 0; s < std::max(1, starts); ++s) {
    Vec u(d);
    for (int i = 0; i < d; ++i) u(i) = N(rng);
    u.normalize();
    double f = T.cubic(u);
    // f is odd, so ascend from whichever sign is larger
    if (f < 0) {
      u = -u;
      f = -f;
    }
    for (int it = 0; it < 500; ++it) {
      Vec v = T.quad(u) + shift * u;
      double nv = v.norm();
      if (!(nv > 0.0)) break;
      v /= nv;
      double fv = T.cubic(v);
      u = v;
      bool done = std::abs(fv - f) <= 1e-14 * (1.0 + std::abs(fv));
      f = fv;
      if (done) break;
    }
    best = std::max(best, std::abs(f));
  }
  return best;
}

ThirdBound third_derivative_bound(const ModelDescriptor& model, const Vec& center, double radius, ThirdMethod method,
                                  bool posterior, const GridOptions& grid) {
  if (!(radius > 0.0)) throw CertificateError("third-derivative bound needs radius > 0");
  const BallOracle& oracle = posterior ? model.third_bound_post : model.third_bound_lik;
  const bool grid_ok = has_tensors(model, posterior);
  if (method == ThirdMethod::analytic || !grid_ok) {
    if (oracle) {
      if (auto v = oracle(center, radius)) return {*v, true, 0.0, ThirdMethod::analytic};
    }
    if (!grid_ok) throw CertificateError("third-derivative bound unavailable");
  }
  std::mt19937_64 rng(grid.seed);
  auto pts = ball_points(center, radius, grid.points, 0);
  pts.push_back(center);
  ThirdBound b;
  b.method = ThirdMethod::grid;
  for (auto& p : pts) b.sample_max = std::max(b.sample_max, point_norm(model, p, posterior, grid.directions, rng));
  if (!std::isfinite(b.sample_max)) throw CertificateError("third derivative not finite on the ball");
  b.value = b.sample_max;
  if (auto s = fourth_slack(model, center, radius, posterior, grid.points)) b.value += *s;
  return b;
}

ThirdProfile ThirdProfile::build(const ModelDescriptor& model, const Vec& center, double rmax, bool posterior,
                                 const GridOptions& grid) {
  if (!has_tensors(model, posterior)) throw CertificateError("grid third-derivative method needs tensor evaluators");
  if (!(rmax > 0.0)) throw CertificateError("profile radius must be positive");
  ThirdProfile p;
  p.rmax_ = rmax;
  const int K = std::max(1, grid.shells);
  const int per = std::max(1, grid.points / K);
  std::mt19937_64 rng(grid.seed);
  p.center_ = point_norm(model, center, posterior, grid.directions, rng);
  std::vector<std::pair<double, double>> samples;  // (distance, norm)
  for (int k = 0; k < K; ++k) {
    double r = rmax * std::pow(1.6, k - K + 1);
    p.radii_.push_back(r);
    for (auto& x : ball_points(center, r, per, static_cast<long>(k) * per))
      samples.push_back({(x - center).norm(), point_norm(model, x, posterior, grid.directions, rng)});
  }
  double run = p.center_;
  for (int k = 0; k < K; ++k) {
    double m = run;
    for (auto& [dist, v] : samples)
      if (dist <= p.radii_[k] * (1.0 + 1e-12)) m = std::max(m, v);
    if (!std::isfinite(m)) throw CertificateError("third derivative not finite on the ball");
    run = m;
    double slack = fourth_slack(model, center, p.radii_[k], posterior, per).value_or(0.0);
    p.values_.push_back(m + slack);
  }
  for (int k = 1; k < K; ++k) p.values_[k] = std::max(p.values_[k], p.values_[k - 1]);
  return p;
}

std::optional<double> ThirdProfile::at(double r) const {
  if (!(r >= 0.0) || r > rmax_ * (1.0 + 1e-12)) return std::nullopt;
  for (size_t k = 0; k < radii_.size(); ++k)
    if (radii_[k] >= r * (1.0 - 1e-12)) return values_[k];
  return values_.back();
}

GeometrySet compute_geometry(const ModelDescriptor& model, bool check_uniqueness) {
  GeometrySet g;
  g.mle = find_mode(model, Objective::likelihood);
  if (!g.mle.converged) throw GeometryError("MLE search did not converge (" + g.mle.message + ")");
  g.J_hat = curvature(model, g.mle);
  g.map = find_mode(model, Objective::posterior);
  if (!g.map.converged) throw GeometryError("MAP search did not converge (" + g.map.message + ")");
  g.J_bar = curvature(model, g.map);
  g.mode_distance = (g.mle.theta - g.map.theta).norm();
  if (check_uniqueness) {
    const Vec& x0 = model.default_init;
    Vec alt = 1.5 * x0 + Vec::Constant(x0.size(), 0.5 / std::sqrt(static_cast<double>(x0.size())));
    if (model.in_domain && !model.in_domain(alt)) alt = 0.5 * x0;
    try {
      g.mle_unique = check_mode_uniqueness(model, Objective::likelihood, x0, alt).agree;
    } catch (const GeometryError&) {
      g.mle_unique = false;
    }
    try {
      g.map_unique = check_mode_uniqueness(model, Objective::posterior, x0, alt).agree;
    } catch (const GeometryError&) {
      g.map_unique = false;
    }
  }
  return g;
}

double optimality_gap(const ModelDescriptor& model, const ModeSolve& mle, double r, Centric centric,
                      const std::function<std::optional<double>(double)>& third) {
  if (!(r > 0.0))
    throw CertificateError(centric == Centric::map
                               ? "exclusion radius must be positive: need ||theta_hat - theta_bar|| < delta_bar"
                               : "exclusion radius must be positive");
  const bool surrogate = model.loglik_concave && static_cast<bool>(third);
  if (!model.gap_lik && !surrogate) throw CertificateError("kappa unavailable; supply analytic gap oracle");
  double lam = 0.0;
  if (surrogate) {
    Eigen::SelfAdjointEigenSolver<Mat> es(-model.loglik(mle.theta).hess / model.n, Eigen::EigenvaluesOnly);
    lam = es.eigenvalues()(0);
  }
  auto route = [&](double rr) {
    double best = -kInf;
    if (model.gap_lik)
      if (auto v = model.gap_lik(mle.theta, rr)) best = std::max(best, *v);
    if (surrogate)
      if (auto M = third(rr)) best = std::max(best, 0.5 * lam * rr * rr - *M * rr * rr * rr / 2.0);
    return best;
  };
  if (!model.loglik_concave) return route(r);
  // concave L_n: the drop along a ray is convex with zero slope at the mode,
  // so a gap certified at r' <= r grows at least by the factor r/r'
  double k = -kInf;
  const int steps = 48;
  for (int i = 1; i <= steps; ++i) {
    double g = route(r * i / steps);
    k = std::max(k, g > 0.0 ? g * steps / i : g);
  }
  return k;
}

PriorEnvelope prior_envelope(const ModelDescriptor& model, const Vec& center, double radius) {
  if (!model.prior_envelope) throw CertificateError("prior envelope oracle unavailable");
  auto e = model.prior_envelope(center, radius);
  if (!e || !std::isfinite(e->M1) || !std::isfinite(e->M1_tilde) || !std::isfinite(e->M1_hat) ||
      !(e->M1_tilde > 0.0) || !(e->M1_hat > 0.0))
    throw CertificateError("Assumption 2/10 violated: prior vanishes or is unbounded on the ball");
  return *e;
}

// ---------------------------------------------------------------- Certifier

Certifier::Certifier(const ModelDescriptor& model, const GeometrySet& geometry, CertOptions opt)
    : model_(model), geom_(geometry), opt_(opt) {}

double Certifier::cap_mle() const {
  double c = model_.max_radius ? model_.max_radius(geom_.mle.theta) : kInf;
  return std::isfinite(c) ? c * (1.0 - 1e-9) : c;
}

double Certifier::cap_map() const {
  double c = model_.max_radius ? model_.max_radius(geom_.map.theta) : kInf;
  return std::isfinite(c) ? c * (1.0 - 1e-9) : c;
}

std::optional<double> Certifier::M2(double delta) {
  if (!(delta > 0.0) || delta > cap_mle()) return std::nullopt;
  const bool analytic = opt_.method == ThirdMethod::analytic || !has_tensors(model_, false);
  if (analytic && model_.third_bound_lik) return model_.third_bound_lik(geom_.mle.theta, delta);
  if (!has_tensors(model_, false)) return std::nullopt;
  if (!prof_lik_) {
    std::mt19937_64 rng(opt_.grid.seed);
    double m0 = point_norm(model_, geom_.mle.theta, false, opt_.grid.directions, rng);
    double rmax = m0 > 0.0 ? geom_.J_hat.lambda_min / m0 : 1e3 * std::sqrt(geom_.J_hat.trace_inv / model_.n);
    rmax = std::min(rmax, cap_mle());
    prof_lik_ = ThirdProfile::build(model_, geom_.mle.theta, rmax, false, opt_.grid);
  }
  return prof_lik_->at(delta);
}

std::optional<double> Certifier::M2_bar(double delta_bar) {
  if (!(delta_bar > 0.0) || delta_bar > cap_map()) return std::nullopt;
  const bool analytic = opt_.method == ThirdMethod::analytic || !has_tensors(model_, true);
  if (analytic && model_.third_bound_post) return model_.third_bound_post(geom_.map.theta, delta_bar);
  if (!has_tensors(model_, true)) return std::nullopt;
  if (!prof_post_) {
    std::mt19937_64 rng(opt_.grid.seed);
    double m0 = point_norm(model_, geom_.map.theta, true, opt_.grid.directions, rng);
    double rmax = m0 > 0.0 ? geom_.J_bar.lambda_min / m0 : 1e3 * std::sqrt(geom_.J_bar.trace_inv / model_.n);
    rmax = std::min(rmax, cap_map());
    prof_post_ = ThirdProfile::build(model_, geom_.map.theta, rmax, true, opt_.grid);
  }
  return prof_post_->at(delta_bar);
}

double Certifier::kappa(double r) {
  auto it = kappa_cache_.find(r);
  if (it != kappa_cache_.end()) return it->second;
  double k = optimality_gap(model_, geom_.mle, r, Centric::mle, [this](double rr) { return M2(rr); });
  kappa_cache_[r] = k;
  return k;
}

PriorEnvelope Certifier::envelope(double delta) { return prior_envelope(model_, geom_.mle.theta, delta); }

ConstantSet Certifier::constants(double delta, double delta_bar, bool want_map, bool want_mle) {
  ConstantSet c;
  c.third_method = opt_.method;
  c.third_certified = opt_.method == ThirdMethod::analytic &&
                      static_cast<bool>(model_.third_bound_lik) && static_cast<bool>(model_.third_bound_post);
  bool exact = true;
  auto tail = [&](const Vec& mc, double r, int p) {
    if (!model_.prior_tail_moment) return kInf;
    auto t = model_.prior_tail_moment(mc, geom_.mle.theta, r, p);
    if (!t) return kInf;
    exact = exact && t->exact;
    return t->value;
  };
  if (delta > 0.0) {
    c.delta = delta;
    c.M2 = M2(delta).value_or(kInf);
    try {
      PriorEnvelope e = envelope(delta);
      c.M1 = e.M1;
      c.M1_tilde = e.M1_tilde;
      c.M1_hat = e.M1_hat;
    } catch (const CertificateError&) {
      c.M1 = c.M1_tilde = c.M1_hat = kInf;
    }
    if (want_mle) {
      try {
        c.kappa = kappa(delta);
      } catch (const CertificateError&) {
        c.kappa = kNaN;
      }
      c.tail1_mle = tail(geom_.mle.theta, delta, 1);
      c.tail2_mle = tail(geom_.mle.theta, delta, 2);
    }
  }
  if (want_map && delta_bar > 0.0) {
    c.delta_bar = delta_bar;
    c.M2_bar = M2_bar(delta_bar).value_or(kInf);
    double rex = delta_bar - geom_.mode_distance;
    if (rex > 0.0) {
      try {
        c.kappa_bar = kappa(rex);
      } catch (const CertificateError&) {
        c.kappa_bar = kNaN;
      }
      c.tail1_map = tail(geom_.map.theta, rex, 1);
      c.tail2_map = tail(geom_.map.theta, rex, 2);
    }
  }
  c.tails_exact = exact;
  return c;
}

// ---------------------------------------------------------------- radii

namespace {

// largest r in (lo, cap) with pred true, assuming pred holds on an initial segment
double sup_feasible(double lo, double cap, const std::function<bool(double)>& pred) {
  double start = lo * (1.0 + 1e-9);
  if (!(start < cap) || !pred(start)) return lo;
  double good = start, bad;
  if (std::isfinite(cap)) {
    if (pred(cap)) return cap;
    bad = cap;
  } else {
    double r = start;
    while (true) {
      r *= 2.0;
      if (r > 1e12 * start) return kInf;
      if (!pred(r)) {
        bad = r;
        break;
      }
      good = r;
    }
  }
  for (int i = 0; i < 200 && bad / good > 1.0 + 1e-13; ++i) {
    double mid = std::sqrt(good * bad);
    (pred(mid) ? good : bad) = mid;
  }
  return good;
}

double shifted_trace(const Vec& ev, double s) { return (ev.array() + s).inverse().sum(); }

}  // namespace

std::optional<double> min_delta_shifted(Certifier& cert) {
  const auto& g = cert.geometry();
  const double n = cert.model().n;
  Eigen::SelfAdjointEigenSolver<Mat> es(g.J_hat.J, Eigen::EigenvaluesOnly);
  const Vec ev = es.eigenvalues();
  auto h = [&](double dl) {
    auto M = cert.M2(dl);
    if (!M) return -kInf;
    return dl - std::sqrt(shifted_trace(ev, dl * *M / 3.0) / n);
  };
  double cap = cert.cap_mle();
  double upper = std::sqrt(g.J_hat.trace_inv / n) * (1.0 + 1e-6);
  if (upper > cap) upper = cap;
  if (!(h(upper) > 0.0)) return std::nullopt;
  double good = upper, bad = upper * 1e-6;
  if (h(bad) > 0.0) return bad;
  for (int i = 0; i < 200 && good / bad > 1.0 + 1e-12; ++i) {
    double mid = std::sqrt(good * bad);
    (h(mid) > 0.0 ? good : bad) = mid;
  }
  return good;
}

Interval feasible_radius_interval(Certifier& cert, Centric centric) {
  const auto& g = cert.geometry();
  const double n = cert.model().n;
  Interval iv;
  if (centric == Centric::mle) {
    iv.lo = std::sqrt(g.J_hat.trace_inv / n);
    iv.hi = sup_feasible(iv.lo, cert.cap_mle(), [&](double r) {
      auto M = cert.M2(r);
      return M && r * *M < g.J_hat.lambda_min;
    });
    return iv;
  }
  iv.lo = std::max(g.mode_distance, std::sqrt(g.J_bar.trace_inv / n));
  if (!min_delta_shifted(cert)) {
    iv.hi = iv.lo;
    return iv;
  }
  iv.hi = sup_feasible(iv.lo, cert.cap_map(), [&](double r) {
    auto M = cert.M2_bar(r);
    return M && r * *M < g.J_bar.lambda_min;
  });
  return iv;
}

std::optional<double> minimize_radius(const std::function<double(double)>& f, double lo, double hi, int scan) {
  if (!(hi > lo) || !(lo > 0.0)) return std::nullopt;
  if (!std::isfinite(hi)) hi = lo * 1e3;
  const double a0 = std::log(lo), b0 = std::log(hi);
  std::vector<double> xs(scan), vs(scan);
  int best = -1;
  double vmin = kInf, vmax = -kInf;
  for (int i = 0; i < scan; ++i) {
    xs[i] = a0 + (i + 0.5) / scan * (b0 - a0);
    vs[i] = f(std::exp(xs[i]));
    if (std::isnan(vs[i])) vs[i] = kInf;
    if (vs[i] < vmin) {
      vmin = vs[i];
      best = i;
    }
    vmax = std::max(vmax, vs[i]);
  }
  if (best < 0 || !std::isfinite(vmin)) return std::nullopt;
  if (std::isfinite(vmax) && vmax - vmin <= 1e-14 * std::abs(vmin)) return 0.5 * (lo + hi);
  const double eps = 1e-12 * (b0 - a0);
  double a = best > 0 ? xs[best - 1] : a0 + eps;
  double b = best < scan - 1 ? xs[best + 1] : b0 - eps;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  for (int it = 0; it < 100 && b - a > 1e-12 * std::max(1.0, std::abs(a)); ++it) {
    if (fc <= fd) {  // ties move toward the smaller radius
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(std::exp(d));
    }
  }
  double xg = fc <= fd ? c : d, vg = std::min(fc, fd);
  if (vg < vmin) return std::exp(xg);
  return std::exp(xs[best]);
}

namespace {

double safe_objective(const std::function<double()>& f) {
  try {
    double v = f();
    return std::isnan(v) ? kInf : v;
  } catch (const std::exception&) {
    return kInf;
  }
}

// refine around a previous optimum; keep it unless strictly improved
double refine(const std::function<double(double)>& f, double hint, double lo, double hi) {
  double base = f(hint);
  auto r = minimize_radius(f, std::max(lo, hint / 1.5), std::min(hi, hint * 1.5), 16);
  if (r && f(*r) < base - 1e-12 * std::abs(base)) return *r;
  return hint;
}

}  // namespace

RadiusChoice optimize_radii(Certifier& cert, BoundKind target, Centric centric, std::optional<RadiusChoice> hint) {
  const auto& g = cert.geometry();
  const double n = cert.model().n;
  RadiusChoice out;
  if (centric == Centric::mle) {
    Interval iv = feasible_radius_interval(cert, Centric::mle);
    if (iv.empty()) throw CertificateError("n too small for a certificate");
    auto F = [&](double dl) {
      return safe_objective([&] {
        ConstantSet c = cert.constants(dl, kNaN, false, true);
        if (!(c.kappa > 0.0)) return kInf;
        return evaluate_bound(target, Centric::mle, c, g.J_bar, g.J_hat, n).total;
      });
    };
    std::optional<double> dl;
    if (hint && hint->delta > iv.lo && hint->delta < iv.hi)
      dl = refine(F, hint->delta, iv.lo, iv.hi);
    else
      dl = minimize_radius(F, iv.lo, iv.hi);
    if (!dl) throw CertificateError("n too small for a certificate");
    out.delta = *dl;
    out.constants = cert.constants(out.delta, kNaN, false, true);
    out.objective = F(out.delta);
    return out;
  }

  // delta around the MLE enters only through the posterior tail factor
  auto dmin = min_delta_shifted(cert);
  if (!dmin) throw CertificateError("n too small for a certificate");
  Eigen::SelfAdjointEigenSolver<Mat> es(g.J_hat.J, Eigen::EigenvaluesOnly);
  const Vec ev = es.eigenvalues();
  auto G = [&](double dl) {
    return safe_objective([&] {
      auto M = cert.M2(dl);
      if (!M) return kInf;
      PriorEnvelope e = cert.envelope(dl);
      double s = dl * *M / 3.0;
      double ldp = (ev.array() + s).log().sum();
      double Dp = decay_term(dl, n, shifted_trace(ev, s), ev.minCoeff() + s, "D_mle_plus");
      return std::log(e.M1_hat) + 0.5 * ldp - std::log1p(-Dp);
    });
  };
  double dhi = std::isfinite(cert.cap_mle()) ? cert.cap_mle() : *dmin * 1e3;
  std::optional<double> dl;
  if (hint && hint->delta > *dmin && hint->delta < dhi)
    dl = refine(G, hint->delta, *dmin, dhi);
  else
    dl = minimize_radius(G, *dmin, dhi);
  if (!dl) throw CertificateError("n too small for a certificate");
  out.delta = *dl;

  Interval iv = feasible_radius_interval(cert, Centric::map);
  if (iv.empty()) throw CertificateError("n too small for a certificate");
  auto F = [&](double db) {
    return safe_objective([&] {
      ConstantSet c = cert.constants(out.delta, db, true, false);
      if (!(c.kappa_bar > 0.0)) return kInf;
      return evaluate_bound(target, Centric::map, c, g.J_bar, g.J_hat, n).total;
    });
  };
  std::optional<double> db;
  if (hint && hint->delta_bar > iv.lo && hint->delta_bar < iv.hi)
    db = refine(F, hint->delta_bar, iv.lo, iv.hi);
  else
    db = minimize_radius(F, iv.lo, iv.hi);
  if (!db) throw CertificateError("n too small for a certificate");
  out.delta_bar = *db;
  out.constants = cert.constants(out.delta, out.delta_bar, true, false);
  out.objective = F(out.delta_bar);
  return out;
}

// ---------------------------------------------------------------- assumptions

const AssumptionCheck* AssumptionReport::find(const std::string& id) const {
  for (auto& c : checks)
    if (c.id == id) return &c;
  return nullptr;
}

AssumptionReport verify_assumptions(const ModelDescriptor& model, const GeometrySet& g, const ConstantSet& c) {
  AssumptionReport r;
  const double n = model.n;
  auto add = [&](const std::string& id, bool flag, double w) { r.checks.push_back({id, flag, w}); };
  add("A1", g.mle.converged && std::isfinite(c.M2) && c.M2 >= 0.0, c.M2);
  add("A2", std::isfinite(c.M1_hat) && c.M1_hat > 0.0, c.M1_hat);
  add("A3", g.map.converged && std::isfinite(c.M2_bar) && c.M2_bar >= 0.0, c.M2_bar);

  const double size_bar = std::max(g.mode_distance, std::sqrt(g.J_bar.trace_inv / n));
  const double w4a = c.delta_bar - size_bar;
  double w4b = kNaN;
  if (std::isfinite(c.M2) && c.delta > 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g.J_hat.J, Eigen::EigenvaluesOnly);
    w4b = c.delta - std::sqrt(shifted_trace(es.eigenvalues(), c.delta * c.M2 / 3.0) / n);
  }
  bool f4a = passes(w4a, c.delta_bar), f4b = passes(w4b, c.delta);
  add("A4a", f4a, w4a);
  add("A4b", f4b, w4b);
  add("A4", f4a && f4b, std::min(w4a, w4b));
  const double w5 = g.J_bar.lambda_min - c.delta_bar * c.M2_bar;
  add("A5", passes(w5, g.J_bar.lambda_min), w5);
  add("A6", passes(c.kappa_bar, 0.0), c.kappa_bar);
  const double w7 = c.delta - std::sqrt(g.J_hat.trace_inv / n);
  add("A7", passes(w7, c.delta), w7);
  const double w8 = g.J_hat.lambda_min - c.delta * c.M2;
  add("A8", passes(w8, g.J_hat.lambda_min), w8);
  add("A9", passes(c.kappa, 0.0), c.kappa);
  add("A10", std::isfinite(c.M1) && c.M1 >= 0.0 && std::isfinite(c.M1_tilde) && c.M1_tilde > 0.0, c.M1);

  auto flag = [&](const char* id) { return r.find(id)->flag; };
  r.map_ok = flag("A1") && flag("A2") && flag("A3") && flag("A4") && flag("A5") && flag("A6");
  r.mle_ok = flag("A1") && flag("A2") && flag("A7") && flag("A8") && flag("A9") && flag("A10");
  r.uniqueness_warning = !g.mle_unique || !g.map_unique;
  return r;
}

}  // namespace lapb
