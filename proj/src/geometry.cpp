#include "lapb/geometry.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace lapb {

namespace {

Eval evaluate(const ModelDescriptor& m, Objective obj, const Vec& th) {
  if (m.in_domain && !m.in_domain(th)) {
    Eval e;
    e.value = -std::numeric_limits<double>::infinity();
    return e;
  }
  return obj == Objective::likelihood ? m.loglik(th) : m.logpost(th);
}

// -H positive definite with eigenvalues above round-off relative to |grad| + 1
bool strictly_concave_at(const Eval& e) {
  Mat negH = -0.5 * (e.hess + e.hess.transpose());
  if (!negH.allFinite()) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(negH, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, negH.cwiseAbs().maxCoeff());
}

}  // namespace

ModeSolve find_mode(const ModelDescriptor& model, Objective objective, const Vec& init, const NewtonOptions& opt) {
  ModeSolve out;
  out.objective = objective;
  out.theta = init;
  const double n = std::max(1, model.n);
  Eval e = evaluate(model, objective, init);
  if (!std::isfinite(e.value)) throw GeometryError("objective not finite at the initial point");

  std::deque<double> norms;
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it;
    Vec& th = out.theta;
    const double scale = std::max(1.0, th.norm());
    out.grad_norm = e.grad.norm() / n;

    Mat negH = -0.5 * (e.hess + e.hess.transpose());
    Eigen::LLT<Mat> llt(negH);
    const bool newton_ok = llt.info() == Eigen::Success;
    Vec p;
    if (newton_ok) p = llt.solve(e.grad);
    if (newton_ok && out.grad_norm <= opt.tolerance * scale && p.norm() <= 1e-6 * scale) {
      // one more full Newton step to reach machine precision
      Vec polished = th + p;
      Eval ep = evaluate(model, objective, polished);
      if (std::isfinite(ep.value) && ep.value >= e.value - 1e-12 * std::abs(e.value)) {
        th = polished;
        out.grad_norm = ep.grad.norm() / n;
      }
      out.converged = true;
      return out;
    }
    if (!newton_ok || !p.allFinite() || p.dot(e.grad) <= 0.0) {
      double diag = std::max(1.0, std::abs(e.hess.trace()));
      p = e.grad / diag;
    }

    // backtracking on the objective, rejecting non-finite trial points
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double t = 1.0;
      const double slope = e.grad.dot(p);
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        Vec trial = th + t * p;
        Eval et = evaluate(model, objective, trial);
        if (std::isfinite(et.value) && et.value >= e.value + 1e-4 * t * slope) {
          th = trial;
          e = et;
          accepted = true;
          break;
        }
      }
      if (!accepted) p = e.grad / std::max(1.0, std::abs(e.hess.trace()));
    }
    if (!th.allFinite() || th.norm() > opt.divergence_norm) throw GeometryError(model.divergence_message);
    if (!accepted) {
      out.grad_norm = e.grad.norm() / n;
      out.converged = out.grad_norm <= opt.tolerance * std::max(1.0, th.norm()) && strictly_concave_at(e);
      if (!out.converged && !strictly_concave_at(e)) throw GeometryError(model.divergence_message);
      out.message = out.converged ? "" : "line search failed";
      return out;
    }
    norms.push_back(th.norm());
    if (norms.size() > 20) norms.pop_front();
  }
  out.iterations = opt.max_iterations;
  out.grad_norm = e.grad.norm() / n;
  out.message = "iteration limit reached";
  // steadily growing iterates: no interior maximum
  bool growing = norms.size() == 20;
  for (size_t i = 1; growing && i < norms.size(); ++i) growing = norms[i] > norms[i - 1];
  if (growing && norms.back() > 10.0) throw GeometryError(model.divergence_message);
  // flat objective far from the start: the curvature has vanished, no interior maximum
  if (!strictly_concave_at(e)) throw GeometryError(model.divergence_message);
  return out;
}

ModeSolve find_mode(const ModelDescriptor& model, Objective objective) {
  return find_mode(model, objective, model.default_init);
}

CurvatureSummary summarize_spd(const Mat& Jin) {
  CurvatureSummary c;
  c.J = 0.5 * (Jin + Jin.transpose());
  Eigen::LLT<Mat> llt(c.J);
  if (llt.info() != Eigen::Success) throw GeometryError("Hessian not positive definite at mode");
  Mat L = llt.matrixL();
  c.logdet = 2.0 * L.diagonal().array().log().sum();
  Eigen::SelfAdjointEigenSolver<Mat> es(c.J);
  c.lambda_min = es.eigenvalues().minCoeff();
  c.lambda_max = es.eigenvalues().maxCoeff();
  if (!(c.lambda_min > 0.0) || !std::isfinite(c.logdet)) throw GeometryError("Hessian not positive definite at mode");
  c.J_inv = llt.solve(Mat::Identity(c.J.rows(), c.J.cols()));
  c.trace_inv = es.eigenvalues().cwiseInverse().sum();
  return c;
}

CurvatureSummary curvature(const ModelDescriptor& model, const ModeSolve& mode) {
  if (!mode.converged) throw GeometryError("mode search did not converge");
  Eval e = mode.objective == Objective::likelihood ? model.loglik(mode.theta) : model.logpost(mode.theta);
  return summarize_spd(-e.hess / model.n);
}

ShiftedPair shifted_pair(const Mat& J, double radius, double M) {
  if (!(radius > 0.0) || !(M >= 0.0)) throw GeometryError("shifted pair needs radius > 0 and M >= 0");
  ShiftedPair s;
  const int d = static_cast<int>(J.rows());
  const double shift = radius * M / 3.0;
  Mat Js = 0.5 * (J + J.transpose());
  s.J_plus = Js + shift * Mat::Identity(d, d);
  s.J_minus = Js - shift * Mat::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Mat> es(Js, Eigen::EigenvaluesOnly);
  Vec ev = es.eigenvalues();
  s.lambda_plus_min = ev.minCoeff() + shift;
  s.lambda_minus_min = ev.minCoeff() - shift;
  s.logdet_plus = (ev.array() + shift).log().sum();
  s.minus_positive_definite = s.lambda_minus_min > 0.0;
  if (s.minus_positive_definite) {
    s.logdet_minus = (ev.array() - shift).log().sum();
    s.trace_inv_minus = (ev.array() - shift).inverse().sum();
  } else {
    s.logdet_minus = std::numeric_limits<double>::quiet_NaN();
    s.trace_inv_minus = std::numeric_limits<double>::infinity();
  }
  return s;
}

UniquenessCheck check_mode_uniqueness(const ModelDescriptor& model, Objective objective, const Vec& a, const Vec& b,
                                      double tol) {
  ModeSolve ma = find_mode(model, objective, a);
  ModeSolve mb = find_mode(model, objective, b);
  UniquenessCheck u;
  u.distance = (ma.theta - mb.theta).norm();
  u.agree = ma.converged && mb.converged && u.distance <= tol * std::max(1.0, ma.theta.norm());
  return u;
}

}  // namespace lapb
