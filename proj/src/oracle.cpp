#include "lapb/oracle.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <random>

namespace lapb {

namespace {

using boost::math::quadrature::gauss;
using boost::math::quadrature::gauss_kronrod;

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gk(const std::function<double(double)>& f, double a, double b, double* err) {
  double e = 0.0;
  double v = gauss_kronrod<double, 31>::integrate(f, a, b, 2, 1e-13, &e);
  if (err) *err += std::abs(e);
  return v;
}

double norm_cdf(double t) { return 0.5 * boost::math::erfc(-t / std::sqrt(2.0)); }
double norm_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

// roots of f on [a, b] detected by sign changes on a uniform sample
std::vector<double> split_points(const std::function<double(double)>& f, double a, double b, int samples) {
  std::vector<double> cuts{a};
  double xa = a, fa = f(a);
  for (int i = 1; i <= samples; ++i) {
    double xb = a + (b - a) * i / samples, fb = f(xb);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      double lo = xa, hi = xb, flo = fa;
      for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi), fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    xa = xb;
    fa = fb;
  }
  cuts.push_back(b);
  return cuts;
}

}  // namespace

const char* to_string(TruthMethod m) {
  switch (m) {
    case TruthMethod::conjugate: return "conjugate";
    case TruthMethod::quadrature: return "quadrature";
    case TruthMethod::importance: return "importance";
  }
  return "?";
}

PosteriorTruth conjugate_truth(const ConjugateInputs& in, const std::vector<double>& data) {
  PosteriorTruth t;
  t.method = TruthMethod::conjugate;
  t.mean = Vec(1);
  t.cov = Mat(1, 1);
  const double n = static_cast<double>(data.size());
  if (in.family == "poisson_gamma") {
    double S = 0.0;
    for (double x : data) S += x;
    double a = in.alpha + S, b = in.beta + n;
    t.mean(0) = a / b;
    t.cov(0, 0) = a / (b * b);
  } else if (in.family == "weibull_invgamma") {
    double S = 0.0;
    for (double x : data) S += std::pow(x, in.k);
    double a = in.alpha + n, b = in.beta + S;
    if (!(a > 2.0)) throw OracleError("inverse-gamma variance needs shape > 2");
    t.mean(0) = b / (a - 1.0);
    t.cov(0, 0) = b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0));
  } else {
    throw OracleError("no conjugate form for " + in.family + "; use quadrature");
  }
  return t;
}

DensityDistance compare_densities_1d(const std::function<double(double)>& p, const std::function<double(double)>& q,
                                     double lo, double hi, double width, double cdf_gap_lo) {
  if (!(hi > lo) || !(width > 0.0)) throw OracleError("invalid integration range");
  DensityDistance out;
  auto h = [&](double u) { return p(u) - q(u); };
  auto habs = [&](double u) { return std::abs(h(u)); };
  const int panels = static_cast<int>(std::ceil((hi - lo) / width));
  double G = cdf_gap_lo;  // F_p - F_q at the left panel edge
  double l1 = 0.0;
  for (int k = 0; k < panels; ++k) {
    double a = lo + k * width, b = std::min(hi, a + width);
    auto cuts = split_points(h, a, b, 16);
    for (size_t i = 0; i + 1 < cuts.size(); ++i) l1 += gk(habs, cuts[i], cuts[i + 1], &out.error_estimate);
    const double Ga = G;
    auto Gf = [&](double u) { return u <= a ? Ga : Ga + gauss<double, 30>::integrate(h, a, u); };
    auto Gabs = [&](double u) { return std::abs(Gf(u)); };
    auto gcuts = split_points(Gf, a, b, 16);
    for (size_t i = 0; i + 1 < gcuts.size(); ++i) out.w1 += gk(Gabs, gcuts[i], gcuts[i + 1], &out.error_estimate);
    G = Gf(b);
  }
  out.tv = 0.5 * l1;
  return out;
}

PosteriorTruth quadrature_truth_1d(const ModelDescriptor& model, const LaplaceParams& lp,
                                   const QuadratureOptions& opt) {
  if (model.d != 1) throw OracleError("quadrature oracle needs d = 1");
  if (!(lp.precision > 0.0) || lp.n < 1) throw OracleError("reference Gaussian needs positive precision");
  const double s = std::sqrt(static_cast<double>(lp.n));
  const double c = lp.center;
  const double sd = 1.0 / std::sqrt(lp.precision);
  const double w = opt.panel_sd_fraction * sd;
  auto theta = [&](double u) { return Vec::Constant(1, c + u / s); };
  auto inside = [&](double u) { return !model.in_domain || model.in_domain(theta(u)); };
  if (!inside(0.0)) throw OracleError("reference center outside the parameter domain");
  const double l0 = model.logpost(theta(0.0)).value;
  auto pt = [&](double u) {
    if (!inside(u)) return 0.0;
    double v = model.logpost_value(theta(u)) - l0;
    return std::isfinite(v) ? std::exp(v) : 0.0;
  };

  double err = 0.0, Z = 0.0, m1 = 0.0, m2 = 0.0;
  // returns the panel's largest share of the running mass and moments
  auto add_panel = [&](double a, double b) {
    double z = gk(pt, a, b, &err);
    double z1 = gk([&](double u) { return u * pt(u); }, a, b, &err);
    double z2 = gk([&](double u) { return u * u * pt(u); }, a, b, &err);
    Z += z;
    m1 += z1;
    m2 += z2;
    return std::max({z / Z, std::abs(z1) / std::max(std::abs(m1), m2 / std::sqrt(Z)), z2 / m2});
  };
  auto boundary = [&](double in, double out) {
    for (int it = 0; it < 200 && std::abs(out - in) > 1e-14 * std::max(1.0, std::abs(in)); ++it) {
      double mid = 0.5 * (in + out);
      (inside(mid) ? in : out) = mid;
    }
    return in;
  };
  // march outwards from the center until panel mass is negligible
  double lo = 0.0, hi = 0.0;
  int used = 0;
  for (int dir : {+1, -1}) {
    double edge = 0.0;
    while (true) {
      if (++used > opt.max_panels) throw OracleError("tail mass not converging");
      double next = edge + dir * w;
      bool stop = false;
      if (!inside(next)) {
        next = boundary(edge, next);
        stop = true;
      }
      double share = dir > 0 ? add_panel(edge, next) : add_panel(next, edge);
      edge = next;
      double qmass = norm_cdf(-std::abs(edge) / sd);
      if (stop || (std::abs(edge) > 8.0 * sd && share <= opt.tail_tolerance && qmass < opt.tail_tolerance)) break;
    }
    (dir > 0 ? hi : lo) = edge;
  }
  if (!(Z > 0.0) || !std::isfinite(Z)) throw OracleError("tail mass not converging");

  PosteriorTruth t;
  t.method = TruthMethod::quadrature;
  const double mu = m1 / Z;
  t.mean = Vec::Constant(1, c + mu / s);
  t.cov = Mat::Constant(1, 1, (m2 / Z - mu * mu) / lp.n);
  auto p = [&](double u) { return pt(u) / Z; };
  auto q = [&](double u) { return norm_pdf(u / sd) / sd; };
  // reference mass outside [lo, hi], where the posterior has none
  double ql = lo / sd, qh = hi / sd;
  DensityDistance dd = compare_densities_1d(p, q, lo, hi, w, -norm_cdf(ql));
  t.tv = dd.tv + 0.5 * (norm_cdf(ql) + norm_cdf(-qh));
  t.w1 = dd.w1 + sd * (ql * norm_cdf(ql) + norm_pdf(ql)) + sd * (norm_pdf(qh) - qh * norm_cdf(-qh));
  t.error_estimate = err / Z + dd.error_estimate;
  return t;
}

double fisher_divergence_1d(const ModelDescriptor& model, const LaplaceParams& lp, double radius_u) {
  if (model.d != 1) throw OracleError("quadrature oracle needs d = 1");
  const double s = std::sqrt(static_cast<double>(lp.n));
  const double c = lp.center;
  auto theta = [&](double u) { return Vec::Constant(1, c + u / s); };
  auto inside = [&](double u) { return !model.in_domain || model.in_domain(theta(u)); };
  if (!inside(-radius_u) || !inside(radius_u)) throw OracleError("truncation ball leaves the parameter domain");
  const double l0 = model.logpost(theta(0.0)).value;
  auto pt = [&](double u) { return std::exp(model.logpost(theta(u)).value - l0); };
  auto wsq = [&](double u) {
    Eval e = model.logpost(theta(u));
    double diff = e.grad(0) / s + lp.precision * u;
    return std::exp(e.value - l0) * diff * diff;
  };
  const double width = 0.25 / std::sqrt(lp.precision);
  const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * radius_u / width)));
  const double step = 2.0 * radius_u / panels;
  double Z = 0.0, F = 0.0;
  for (int k = 0; k < panels; ++k) {
    double a = -radius_u + k * step, b = a + step;
    Z += gk(pt, a, b, nullptr);
    F += gk(wsq, a, b, nullptr);
  }
  return F / Z;
}

PosteriorTruth importance_truth_md(const ModelDescriptor& model, const Vec& mean, const Mat& cov, int samples,
                                   std::uint64_t seed, double inflation) {
  const int d = static_cast<int>(mean.size());
  if (d > 8) throw OracleError("importance oracle supports d <= 8");
  if (samples < 2) throw OracleError("importance oracle needs at least 2 samples");
  Eigen::LLT<Mat> llt(inflation * inflation * cov);
  if (llt.info() != Eigen::Success) throw OracleError("proposal covariance not positive definite");
  Mat L = llt.matrixL();
  const double logdetL = L.diagonal().array().log().sum();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<Vec> th(samples);
  std::vector<double> lw(samples);
  double lmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    Vec z(d);
    for (int j = 0; j < d; ++j) z(j) = N(rng);
    th[i] = mean + L * z;
    double lq = -0.5 * z.squaredNorm() - logdetL;
    double lp = (model.in_domain && !model.in_domain(th[i])) ? -std::numeric_limits<double>::infinity()
                                                             : model.logpost_value(th[i]);
    lw[i] = std::isfinite(lp) ? lp - lq : -std::numeric_limits<double>::infinity();
    lmax = std::max(lmax, lw[i]);
  }
  if (!std::isfinite(lmax)) throw OracleError("proposal mismatch; increase inflation");
  double sw = 0.0, sw2 = 0.0;
  Vec m = Vec::Zero(d);
  for (int i = 0; i < samples; ++i) {
    double wi = std::exp(lw[i] - lmax);
    lw[i] = wi;
    sw += wi;
    sw2 += wi * wi;
    m += wi * th[i];
  }
  m /= sw;
  Mat C = Mat::Zero(d, d);
  for (int i = 0; i < samples; ++i) {
    Vec r = th[i] - m;
    C += lw[i] * r * r.transpose();
  }
  C /= sw;
  PosteriorTruth t;
  t.method = TruthMethod::importance;
  t.mean = m;
  t.cov = C;
  t.samples = samples;
  t.ess = sw * sw / sw2;
  if (t.ess < 0.05 * samples) throw OracleError("proposal mismatch; increase inflation");
  t.error_estimate = std::sqrt(C.diagonal().maxCoeff() / t.ess);
  return t;
}

}  // namespace lapb
