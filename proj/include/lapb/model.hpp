#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lapb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class ModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// value, gradient and Hessian of a scalar function of theta
struct Eval {
  double value = 0.0;
  Vec grad;
  Mat hess;
};

// Dense symmetric third-order tensor, d*d*d entries.
class Tensor3 {
public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), a_(static_cast<size_t>(d) * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int k) { return a_[(static_cast<size_t>(i) * d_ + j) * d_ + k]; }
  double operator()(int i, int j, int k) const { return a_[(static_cast<size_t>(i) * d_ + j) * d_ + k]; }

  // T[u,u,u]
  double cubic(const Vec& u) const;
  // T[u,u,.]
  Vec quad(const Vec& u) const;
  Tensor3& operator+=(const Tensor3& o);
  // fill the lower entries from i<=j<=k
  void symmetrize_from_upper();

private:
  int d_ = 0;
  std::vector<double> a_;
};

struct PriorEnvelope {
  double M1 = 0.0;        // sup |pi'/pi|
  double M1_tilde = 0.0;  // sup pi
  double M1_hat = 0.0;    // sup 1/pi
};

struct TailMoment {
  double value = 0.0;
  bool exact = false;  // false: full-space moment used as an upper bound
};

using EvalFn = std::function<Eval(const Vec&)>;
using TensorFn = std::function<Tensor3(const Vec&)>;
using BallOracle = std::function<std::optional<double>(const Vec& center, double radius)>;

struct ModelDescriptor {
  std::string family;
  int d = 0;
  int n = 0;

  EvalFn loglik;    // L_n
  EvalFn logprior;  // log pi (normalized)
  // optional value-only L_n, used by samplers
  std::function<double(const Vec&)> loglik_value;

  // optional third-derivative tensors, used by the grid bound
  TensorFn loglik_third;
  TensorFn logprior_third;

  // sup ||L_n'''||/n over a ball, and the same for L_n + log pi
  BallOracle third_bound_lik;
  BallOracle third_bound_post;
  // optional sup of the fourth derivative norm over a ball (divided by n)
  BallOracle fourth_bound_lik;
  BallOracle fourth_bound_post;

  std::function<std::optional<PriorEnvelope>(const Vec& center, double radius)> prior_envelope;

  // upper bound on the integral of ||v - moment_center||^p pi(v) over
  // {||v - excl_center|| > excl_radius}
  std::function<std::optional<TailMoment>(const Vec& moment_center, const Vec& excl_center,
                                          double excl_radius, int p)>
      prior_tail_moment;

  // analytic kappa: returns k with sup_{||t - mode|| > r} (L(t) - L(mode))/n <= -k
  BallOracle gap_lik;

  bool loglik_concave = false;
  // largest admissible ball radius around a point (infinity when unrestricted)
  std::function<double(const Vec&)> max_radius;
  std::function<bool(const Vec&)> in_domain;
  Vec default_init;
  // reported when the likelihood mode search runs off to infinity
  std::string divergence_message = "no interior maximum found";

  // exposed for effective dimension work: Hessian of log pi
  Mat logprior_hessian(const Vec& theta) const { return logprior(theta).hess; }
  Eval logpost(const Vec& theta) const;
  double logpost_value(const Vec& theta) const;
};

// Numeric table, one observation per row.
struct Dataset {
  std::vector<std::vector<double>> rows;
  size_t size() const { return rows.size(); }
  size_t cols() const { return rows.empty() ? 0 : rows.front().size(); }
  std::vector<double> column(size_t j) const;
};

// Parses a delimiter separated table (comma, semicolon, tab or spaces). A
// non-numeric first line is taken as a header. Throws ModelError with the
// offending row number.
Dataset parse_dataset(const std::string& text);
Dataset read_dataset(const std::string& path);

ModelDescriptor poisson_gamma_model(const std::vector<double>& data, double alpha, double beta);
ModelDescriptor weibull_invgamma_model(const std::vector<double>& data, double k, double alpha,
                                       double beta);
ModelDescriptor logistic_t_model(const Mat& X, const Vec& Y, const Vec& mu, const Mat& Sigma,
                                 double nu);
ModelDescriptor logistic_gaussian_model(const Mat& X, const Vec& Y);

// Splits a logistic table: last column is the label.
void split_logistic(const Dataset& ds, Mat& X, Vec& Y);

// Log-density of the multivariate Student t prior used by logistic_t_model.
double student_t_logdensity(const Vec& theta, const Vec& mu, const Mat& Sigma, double nu);

}  // namespace lapb
