#include "lapb/model.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>

namespace lapb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eval scalar_eval(double v, double g, double h) {
  Eval e;
  e.value = v;
  e.grad = Vec::Constant(1, g);
  e.hess = Mat::Constant(1, 1, h);
  return e;
}

Eval outside_domain(int d) {
  Eval e;
  e.value = -kInf;
  e.grad = Vec::Constant(d, kNaN);
  e.hess = Mat::Constant(d, d, kNaN);
  return e;
}

Tensor3 scalar_tensor(double v) {
  Tensor3 t(1);
  t(0, 0, 0) = v;
  return t;
}

// Integral of |v - c|^p pi(v) over the union of intervals, given
// raw(j, a, b) = integral of v^j pi(v) over (a, b).
template <class Raw>
double abs_moment(const Raw& raw, double c, int p, const std::vector<std::pair<double, double>>& parts) {
  double total = 0.0;
  for (auto [a, b] : parts) {
    if (!(b > a)) continue;
    if (p == 2) {
      total += raw(2, a, b) - 2.0 * c * raw(1, a, b) + c * c * raw(0, a, b);
      continue;
    }
    // split at c for the absolute value
    if (c > a && c < b) {
      total += c * raw(0, a, c) - raw(1, a, c);
      total += raw(1, c, b) - c * raw(0, c, b);
    } else if (c <= a) {
      total += raw(1, a, b) - c * raw(0, a, b);
    } else {
      total += c * raw(0, a, b) - raw(1, a, b);
    }
  }
  return std::max(total, 0.0);
}

std::vector<std::pair<double, double>> positive_tail(double excl_center, double r) {
  std::vector<std::pair<double, double>> parts;
  double lo = excl_center - r, hi = excl_center + r;
  if (lo > 0.0) parts.push_back({0.0, lo});
  parts.push_back({std::max(hi, 0.0), kInf});
  return parts;
}

// sup over [lo, hi] of |6B/t^4 - 2A/t^3| (A, B > 0); decreasing on (0, 4B/A)
double weibull_third_sup(double A, double B, double lo, double hi) {
  auto h = [&](double t) { return 6.0 * B / std::pow(t, 4) - 2.0 * A / std::pow(t, 3); };
  double s = std::max(std::abs(h(lo)), std::abs(h(hi)));
  double tmin = 4.0 * B / A;
  if (tmin > lo && tmin < hi) s = std::max(s, std::pow(A, 4) / (128.0 * std::pow(B, 3)));
  return s;
}

// Two-endpoint gap for a 1-D log-likelihood that is unimodal at mode.
std::optional<double> unimodal_gap(const EvalFn& L, int n, const Vec& mode, double r) {
  if (!(r > 0.0)) return std::nullopt;
  double l0 = L(mode).value;
  Vec a = mode, b = mode;
  a(0) -= r;
  b(0) += r;
  double la = L(a).value, lb = L(b).value;
  double m = std::max(la, lb);
  return (l0 - m) / n;
}

double logistic_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct LogisticData {
  Mat X;
  Vec Y;
  double sum_norm3 = 0.0;
};

Eval logistic_loglik(const LogisticData& D, const Vec& th) {
  const int n = static_cast<int>(D.X.rows());
  Vec z = D.X * th;
  Eval e;
  e.value = 0.0;
  Vec w(n), h(n);
  for (int i = 0; i < n; ++i) {
    double m = D.Y(i) * z(i);
    e.value -= softplus(-m);
    double s = logistic_sigmoid(m);
    w(i) = (1.0 - s) * D.Y(i);
    h(i) = s * (1.0 - s);
  }
  e.grad = D.X.transpose() * w;
  e.hess = -(D.X.transpose() * h.asDiagonal() * D.X);
  return e;
}

Tensor3 logistic_third(const LogisticData& D, const Vec& th) {
  const int n = static_cast<int>(D.X.rows()), d = static_cast<int>(D.X.cols());
  Tensor3 t(d);
  Vec z = D.X * th;
  std::vector<double> xr(d);
  for (int r = 0; r < n; ++r) {
    double m = D.Y(r) * z(r);
    double s = logistic_sigmoid(m);
    double c = -s * (1.0 - s) * (1.0 - 2.0 * s) * D.Y(r);
    for (int j = 0; j < d; ++j) xr[j] = D.X(r, j);
    for (int i = 0; i < d; ++i) {
      double ci = c * xr[i];
      for (int j = i; j < d; ++j) {
        double cij = ci * xr[j];
        for (int k = j; k < d; ++k) t(i, j, k) += cij * xr[k];
      }
    }
  }
  t.symmetrize_from_upper();
  return t;
}

void attach_logistic_likelihood(ModelDescriptor& m, std::shared_ptr<LogisticData> D) {
  const int n = m.n;
  m.loglik = [D](const Vec& th) { return logistic_loglik(*D, th); };
  m.loglik_third = [D](const Vec& th) { return logistic_third(*D, th); };
  m.loglik_value = [D](const Vec& th) {
    Vec z = D->X * th;
    double v = 0.0;
    for (int i = 0; i < z.size(); ++i) v -= softplus(-D->Y(i) * z(i));
    return v;
  };
  double M2 = D->sum_norm3 / (6.0 * std::sqrt(3.0) * n);
  m.third_bound_lik = [M2](const Vec&, double) -> std::optional<double> { return M2; };
  m.loglik_concave = true;
  m.max_radius = [](const Vec&) { return kInf; };
  m.in_domain = [](const Vec& th) { return th.allFinite(); };
  m.default_init = Vec::Zero(m.d);
  m.divergence_message = "MLE does not exist (separable data)";
  // concave surrogate: (1/2) lambda r^2 - M2 r^3 / 2
  // lambda_min at the last mode seen; the oracle is queried many times per mode
  struct LamCache {
    std::mutex mu;
    Vec mode;
    double lam = 0.0;
  };
  auto cache = std::make_shared<LamCache>();
  m.gap_lik = [D, M2, n, cache](const Vec& mode, double r) -> std::optional<double> {
    if (!(r > 0.0)) return std::nullopt;
    double lam;
    {
      std::lock_guard<std::mutex> lock(cache->mu);
      if (cache->mode.size() != mode.size() || cache->mode != mode) {
        Eval e = logistic_loglik(*D, mode);
        Eigen::SelfAdjointEigenSolver<Mat> es(-e.hess / n, Eigen::EigenvaluesOnly);
        cache->mode = mode;
        cache->lam = es.eigenvalues()(0);
      }
      lam = cache->lam;
    }
    return 0.5 * lam * r * r - M2 * r * r * r / 2.0;
  };
}

std::shared_ptr<LogisticData> make_logistic_data(const Mat& X, const Vec& Y) {
  if (X.rows() == 0 || X.cols() == 0) throw ModelError("empty design matrix");
  if (X.rows() != Y.size()) throw ModelError("X and Y row counts differ");
  if (!X.allFinite() || !Y.allFinite()) throw ModelError("non-finite entry in logistic data");
  for (int i = 0; i < Y.size(); ++i)
    if (Y(i) != 1.0 && Y(i) != -1.0) throw ModelError("logistic labels must be -1 or +1 (row " + std::to_string(i + 1) + ")");
  auto D = std::make_shared<LogisticData>();
  D->X = X;
  D->Y = Y;
  for (int i = 0; i < X.rows(); ++i) D->sum_norm3 += std::pow(X.row(i).norm(), 3);
  return D;
}

}  // namespace

double Tensor3::cubic(const Vec& u) const {
  double s = 0.0;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) {
      double uij = u(i) * u(j);
      for (int k = 0; k < d_; ++k) s += (*this)(i, j, k) * uij * u(k);
    }
  return s;
}

Vec Tensor3::quad(const Vec& u) const {
  Vec g = Vec::Zero(d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) {
      double uij = u(i) * u(j);
      for (int k = 0; k < d_; ++k) g(k) += (*this)(i, j, k) * uij;
    }
  return g;
}

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  if (o.d_ != d_) throw ModelError("tensor dimension mismatch");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

void Tensor3::symmetrize_from_upper() {
  for (int i = 0; i < d_; ++i)
    for (int j = i; j < d_; ++j)
      for (int k = j; k < d_; ++k) {
        double v = (*this)(i, j, k);
        (*this)(i, k, j) = v;
        (*this)(j, i, k) = v;
        (*this)(j, k, i) = v;
        (*this)(k, i, j) = v;
        (*this)(k, j, i) = v;
      }
}

Eval ModelDescriptor::logpost(const Vec& theta) const {
  Eval a = loglik(theta);
  if (!std::isfinite(a.value)) return a;
  Eval b = logprior(theta);
  a.value += b.value;
  a.grad += b.grad;
  a.hess += b.hess;
  return a;
}

double ModelDescriptor::logpost_value(const Vec& theta) const {
  double a = loglik_value ? loglik_value(theta) : loglik(theta).value;
  if (!std::isfinite(a)) return a;
  return a + logprior(theta).value;
}

std::vector<double> Dataset::column(size_t j) const {
  std::vector<double> c;
  c.reserve(rows.size());
  for (auto& r : rows) c.push_back(r.at(j));
  return c;
}

Dataset parse_dataset(const std::string& text) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto nonspace = line.find_first_not_of(" \t");
    if (nonspace == std::string::npos || line[nonspace] == '#') continue;
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    bool bad = false;
    while (ls >> tok) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        bad = true;
        break;
      }
      row.push_back(v);
    }
    if (bad) {
      if (first) {  // header
        first = false;
        continue;
      }
      throw ModelError("malformed dataset row " + std::to_string(lineno));
    }
    first = false;
    for (double v : row)
      if (!std::isfinite(v)) throw ModelError("non-finite entry in dataset row " + std::to_string(lineno));
    if (!ds.rows.empty() && row.size() != ds.cols())
      throw ModelError("inconsistent column count in dataset row " + std::to_string(lineno));
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ModelError("cannot open dataset " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_dataset(ss.str());
}

void split_logistic(const Dataset& ds, Mat& X, Vec& Y) {
  if (ds.size() == 0 || ds.cols() < 2) throw ModelError("logistic dataset needs covariates and a label column");
  const int n = static_cast<int>(ds.size()), d = static_cast<int>(ds.cols()) - 1;
  X.resize(n, d);
  Y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = ds.rows[i][j];
    Y(i) = ds.rows[i][d];
  }
}

// ---------------------------------------------------------------- Poisson

ModelDescriptor poisson_gamma_model(const std::vector<double>& data, double alpha, double beta) {
  if (!(alpha > 0.0)) throw ModelError("gamma prior shape must be positive");
  if (alpha >= 1.0) throw ModelError("analytic envelope valid only for shape < 1");
  if (!(beta > 0.0)) throw ModelError("gamma prior rate must be positive");
  if (data.empty()) throw ModelError("empty dataset");
  double S = 0.0, C = 0.0;
  for (double x : data) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ModelError("Poisson data must be finite and nonnegative");
    S += x;
    C += std::lgamma(x + 1.0);
  }
  if (!(S > 0.0)) throw ModelError("all-zero data: the likelihood has no interior maximum");
  const int n = static_cast<int>(data.size());
  const double logc = alpha * std::log(beta) - std::lgamma(alpha);

  ModelDescriptor m;
  m.family = "poisson_gamma";
  m.d = 1;
  m.n = n;
  m.loglik = [=](const Vec& t) {
    double th = t(0);
    if (!(th > 0.0)) return outside_domain(1);
    return scalar_eval(-n * th + S * std::log(th) - C, -n + S / th, -S / (th * th));
  };
  auto logpi = [=](double th) { return logc + (alpha - 1.0) * std::log(th) - beta * th; };
  m.logprior = [=](const Vec& t) {
    double th = t(0);
    if (!(th > 0.0)) return outside_domain(1);
    return scalar_eval(logpi(th), (alpha - 1.0) / th - beta, -(alpha - 1.0) / (th * th));
  };
  m.loglik_third = [=](const Vec& t) { return scalar_tensor(2.0 * S / std::pow(t(0), 3)); };
  m.logprior_third = [=](const Vec& t) { return scalar_tensor(2.0 * (alpha - 1.0) / std::pow(t(0), 3)); };
  m.third_bound_lik = [=](const Vec& c, double r) -> std::optional<double> {
    double lo = c(0) - r;
    if (!(lo > 0.0) || r < 0.0) return std::nullopt;
    return 2.0 * S / (n * lo * lo * lo);
  };
  m.third_bound_post = [=](const Vec& c, double r) -> std::optional<double> {
    double lo = c(0) - r;
    if (!(lo > 0.0) || r < 0.0) return std::nullopt;
    return 2.0 * std::abs(S + alpha - 1.0) / (n * lo * lo * lo);
  };
  m.fourth_bound_lik = [=](const Vec& c, double r) -> std::optional<double> {
    double lo = c(0) - r;
    if (!(lo > 0.0) || r < 0.0) return std::nullopt;
    return 6.0 * S / (n * std::pow(lo, 4));
  };
  m.prior_envelope = [=](const Vec& c, double r) -> std::optional<PriorEnvelope> {
    double lo = c(0) - r, hi = c(0) + r;
    if (!(lo > 0.0)) return std::nullopt;
    PriorEnvelope e;
    e.M1 = std::exp((alpha - 2.0) * std::log(lo) + (1.0 - alpha) * std::log(hi) + beta * (hi - lo)) *
           ((1.0 - alpha) + beta * lo);
    e.M1_tilde = std::exp(logpi(lo));
    e.M1_hat = std::exp(-logpi(hi));
    return e;
  };
  m.prior_tail_moment = [=](const Vec& mc, const Vec& ec, double r, int p) -> std::optional<TailMoment> {
    if (p != 1 && p != 2) return std::nullopt;
    auto raw = [&](int j, double a, double b) {
      double scale = std::exp(std::lgamma(alpha + j) - std::lgamma(alpha) - j * std::log(beta));
      double Pb = std::isinf(b) ? 1.0 : boost::math::gamma_p(alpha + j, beta * b);
      double Pa = a <= 0.0 ? 0.0 : boost::math::gamma_p(alpha + j, beta * a);
      return scale * (Pb - Pa);
    };
    return TailMoment{abs_moment(raw, mc(0), p, positive_tail(ec(0), r)), true};
  };
  EvalFn L = m.loglik;
  m.gap_lik = [L, n](const Vec& mode, double r) { return unimodal_gap(L, n, mode, r); };
  m.loglik_concave = true;
  m.max_radius = [](const Vec& c) { return std::max(c(0), 0.0); };
  m.in_domain = [](const Vec& t) { return t(0) > 0.0; };
  m.default_init = Vec::Constant(1, S / n);
  return m;
}

// ---------------------------------------------------------------- Weibull

ModelDescriptor weibull_invgamma_model(const std::vector<double>& data, double k, double alpha, double beta) {
  if (!(k > 0.0)) throw ModelError("Weibull shape must be positive");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ModelError("inverse-gamma hyperparameters must be positive");
  if (data.empty()) throw ModelError("empty dataset");
  double S = 0.0, logsum = 0.0;
  for (double x : data) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ModelError("Weibull data must be finite and nonnegative");
    S += std::pow(x, k);
    if (x > 0.0) logsum += std::log(x);
  }
  if (!(S > 0.0)) throw ModelError("sum of data^k must be positive");
  const int n = static_cast<int>(data.size());
  const double cst = n * std::log(k) + (k - 1.0) * logsum;
  const double logc = alpha * std::log(beta) - std::lgamma(alpha);

  ModelDescriptor m;
  m.family = "weibull_invgamma";
  m.d = 1;
  m.n = n;
  m.loglik = [=](const Vec& t) {
    double th = t(0);
    if (!(th > 0.0)) return outside_domain(1);
    return scalar_eval(cst - n * std::log(th) - S / th, -n / th + S / (th * th),
                       n / (th * th) - 2.0 * S / (th * th * th));
  };
  auto logpi = [=](double th) { return logc - (alpha + 1.0) * std::log(th) - beta / th; };
  m.logprior = [=](const Vec& t) {
    double th = t(0);
    if (!(th > 0.0)) return outside_domain(1);
    return scalar_eval(logpi(th), -(alpha + 1.0) / th + beta / (th * th),
                       (alpha + 1.0) / (th * th) - 2.0 * beta / (th * th * th));
  };
  m.loglik_third = [=](const Vec& t) {
    double th = t(0);
    return scalar_tensor(-2.0 * n / std::pow(th, 3) + 6.0 * S / std::pow(th, 4));
  };
  m.logprior_third = [=](const Vec& t) {
    double th = t(0);
    return scalar_tensor(-2.0 * (alpha + 1.0) / std::pow(th, 3) + 6.0 * beta / std::pow(th, 4));
  };
  m.third_bound_lik = [=](const Vec& c, double r) -> std::optional<double> {
    if (!(r < c(0)) || r < 0.0) return std::nullopt;
    return weibull_third_sup(n, S, c(0) - r, c(0) + r) / n;
  };
  m.third_bound_post = [=](const Vec& c, double r) -> std::optional<double> {
    if (!(r < c(0)) || r < 0.0) return std::nullopt;
    return weibull_third_sup(n + alpha + 1.0, S + beta, c(0) - r, c(0) + r) / n;
  };
  m.prior_envelope = [=](const Vec& c, double r) -> std::optional<PriorEnvelope> {
    double lo = c(0) - r, hi = c(0) + r;
    if (!(lo > 0.0)) return std::nullopt;
    PriorEnvelope e;
    e.M1_hat = std::max(std::exp(-logpi(lo)), std::exp(-logpi(hi)));
    double mode = beta / (alpha + 1.0);
    e.M1_tilde = (mode > lo && mode < hi) ? std::exp(logpi(mode)) : std::max(std::exp(logpi(lo)), std::exp(logpi(hi)));
    auto q = [&](double t) { return beta / (t * t) - (alpha + 1.0) / t; };
    e.M1 = std::max(std::abs(q(lo)), std::abs(q(hi)));
    double tq = 2.0 * beta / (alpha + 1.0);
    if (tq > lo && tq < hi) e.M1 = std::max(e.M1, (alpha + 1.0) * (alpha + 1.0) / (4.0 * beta));
    return e;
  };
  m.prior_tail_moment = [=](const Vec& mc, const Vec& ec, double r, int p) -> std::optional<TailMoment> {
    if (p != 1 && p != 2) return std::nullopt;
    if (!(alpha > p)) return TailMoment{kInf, true};
    auto raw = [&](int j, double a, double b) {
      double scale = std::exp(j * std::log(beta) + std::lgamma(alpha - j) - std::lgamma(alpha));
      double Qb = std::isinf(b) ? 1.0 : boost::math::gamma_q(alpha - j, beta / b);
      double Qa = a <= 0.0 ? 0.0 : boost::math::gamma_q(alpha - j, beta / a);
      return scale * (Qb - Qa);
    };
    return TailMoment{abs_moment(raw, mc(0), p, positive_tail(ec(0), r)), true};
  };
  EvalFn L = m.loglik;
  m.gap_lik = [L, n](const Vec& mode, double r) { return unimodal_gap(L, n, mode, r); };
  m.loglik_concave = false;
  m.max_radius = [](const Vec& c) { return std::max(c(0), 0.0); };
  m.in_domain = [](const Vec& t) { return t(0) > 0.0; };
  m.default_init = Vec::Constant(1, S / n);
  return m;
}

// ---------------------------------------------------------------- logistic

double student_t_logdensity(const Vec& theta, const Vec& mu, const Mat& Sigma, double nu) {
  const int d = static_cast<int>(mu.size());
  Eigen::LLT<Mat> llt(Sigma);
  Vec r = theta - mu;
  double q = r.dot(llt.solve(r));
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double logc = std::lgamma((nu + d) / 2.0) - std::lgamma(nu / 2.0) - 0.5 * d * std::log(nu * M_PI) - 0.5 * logdet;
  return logc - 0.5 * (nu + d) * std::log1p(q / nu);
}

ModelDescriptor logistic_t_model(const Mat& X, const Vec& Y, const Vec& mu, const Mat& Sigma, double nu) {
  auto D = make_logistic_data(X, Y);
  const int d = static_cast<int>(X.cols()), n = static_cast<int>(X.rows());
  if (mu.size() != d) throw ModelError("prior mean has wrong dimension");
  if (Sigma.rows() != d || Sigma.cols() != d) throw ModelError("prior scale matrix has wrong dimension");
  if (!(nu > 1.0)) throw ModelError("t prior needs nu > 1 for a finite first moment");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Sigma.cwiseAbs().maxCoeff()))
    throw ModelError("prior scale matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(Sigma);
  if (!(es.eigenvalues()(0) > 0.0)) throw ModelError("prior scale matrix must be positive definite");
  const double lam_sigma = es.eigenvalues()(0);
  const Mat A = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const double logdet = es.eigenvalues().array().log().sum();
  const double logc = std::lgamma((nu + d) / 2.0) - std::lgamma(nu / 2.0) - 0.5 * d * std::log(nu * M_PI) - 0.5 * logdet;
  const double trS = Sigma.trace();
  // gradient matrix of the quadratic form; equals Sigma^-1 + diag(Sigma^-1) for diagonal Sigma
  const double Bnorm = 2.0 / lam_sigma;

  ModelDescriptor m;
  m.family = "logistic_t";
  m.d = d;
  m.n = n;
  attach_logistic_likelihood(m, D);
  m.logprior = [=](const Vec& th) {
    Vec r = th - mu;
    Vec Ar = A * r;
    double s = nu + r.dot(Ar);
    Eval e;
    e.value = logc - 0.5 * (nu + d) * std::log(s / nu);
    e.grad = -(nu + d) * Ar / s;
    e.hess = -(nu + d) * (A / s - 2.0 * Ar * Ar.transpose() / (s * s));
    return e;
  };
  m.logprior_third = [=](const Vec& th) {
    Vec r = th - mu;
    Vec Ar = A * r;
    double s = nu + r.dot(Ar);
    Tensor3 t(d);
    double c2 = 2.0 * (nu + d) / (s * s), c3 = 8.0 * (nu + d) / (s * s * s);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          t(i, j, k) = c2 * (A(i, j) * Ar(k) + A(i, k) * Ar(j) + A(j, k) * Ar(i)) - c3 * Ar(i) * Ar(j) * Ar(k);
    return t;
  };
  const double M2 = D->sum_norm3 / (6.0 * std::sqrt(3.0) * n);
  m.third_bound_post = [=](const Vec& c, double r) -> std::optional<double> {
    if (r < 0.0) return std::nullopt;
    // the displayed bound assumes a radius of at most one
    double rho = std::max(1.0, r) + (c - mu).norm();
    return M2 + 3.0 * (nu + d) / (nu * nu * n) * Bnorm * Bnorm * rho +
           2.0 * (nu + d) / (nu * nu * nu * n) * std::pow(Bnorm, 3) * std::pow(rho, 3);
  };
  m.prior_envelope = [=](const Vec& c, double r) -> std::optional<PriorEnvelope> {
    double dc = (c - mu).norm();
    PriorEnvelope e;
    e.M1_tilde = std::exp(logc);
    e.M1_hat = std::exp(-logc + 0.5 * (nu + d) * std::log1p((2.0 * r * r + 2.0 * dc * dc) / (nu * lam_sigma)));
    e.M1 = (nu + d) * (r + dc) / (nu * lam_sigma);
    return e;
  };
  m.prior_tail_moment = [=](const Vec& mc, const Vec&, double, int p) -> std::optional<TailMoment> {
    double dc = (mc - mu).norm();
    if (p == 1) {
      if (!(nu > 1.0)) return TailMoment{kInf, false};
      double e1 = std::sqrt(trS) * std::sqrt(nu / 2.0) * std::exp(std::lgamma((nu - 1.0) / 2.0) - std::lgamma(nu / 2.0));
      return TailMoment{dc + e1, false};
    }
    if (p == 2) {
      if (!(nu > 2.0)) return TailMoment{kInf, false};
      return TailMoment{dc * dc + trS * nu / (nu - 2.0), false};
    }
    return std::nullopt;
  };
  return m;
}

ModelDescriptor logistic_gaussian_model(const Mat& X, const Vec& Y) {
  auto D = make_logistic_data(X, Y);
  const int d = static_cast<int>(X.cols()), n = static_cast<int>(X.rows());
  const double half_log2pi = 0.5 * std::log(2.0 * M_PI);
  ModelDescriptor m;
  m.family = "logistic_gaussian";
  m.d = d;
  m.n = n;
  attach_logistic_likelihood(m, D);
  m.logprior = [=](const Vec& th) {
    Eval e;
    e.value = -0.5 * th.squaredNorm() - d * half_log2pi;
    e.grad = -th;
    e.hess = -Mat::Identity(d, d);
    return e;
  };
  m.logprior_third = [=](const Vec&) { return Tensor3(d); };
  m.third_bound_post = m.third_bound_lik;
  m.prior_envelope = [=](const Vec& c, double r) -> std::optional<PriorEnvelope> {
    double cn = c.norm();
    double near = std::max(0.0, cn - r), far = cn + r;
    PriorEnvelope e;
    e.M1 = far;
    e.M1_tilde = std::exp(-0.5 * near * near - d * half_log2pi);
    e.M1_hat = std::exp(0.5 * far * far + d * half_log2pi);
    return e;
  };
  m.prior_tail_moment = [=](const Vec& mc, const Vec&, double, int p) -> std::optional<TailMoment> {
    double m2 = d + mc.squaredNorm();
    if (p == 1) return TailMoment{std::sqrt(m2), false};
    if (p == 2) return TailMoment{m2, false};
    return std::nullopt;
  };
  return m;
}

}  // namespace lapb
