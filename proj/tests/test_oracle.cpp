#include "derived_fixtures.hpp"
#include "regression_fixtures.hpp"
#include "doctest.h"
#include "test_support.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>

using namespace lapb;

namespace {

double npdf(double x, double m) { return std::exp(-0.5 * (x - m) * (x - m)) / std::sqrt(2 * M_PI); }

ModelDescriptor gaussian_target(int d, int n) {
  ModelDescriptor m;
  m.d = d;
  m.n = n;
  m.loglik = [n, d](const Vec& t) {
    Eval e;
    e.value = -0.5 * n * t.squaredNorm();
    e.grad = -n * t;
    e.hess = -n * Mat::Identity(d, d);
    return e;
  };
  m.logprior = [d](const Vec& t) {
    Eval e;
    e.value = -0.5 * t.squaredNorm();
    e.grad = -t;
    e.hess = -Mat::Identity(d, d);
    return e;
  };
  return m;
}

ModelDescriptor logit2_t() {
  Mat X(30, 2);
  Vec Y(30);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = fixtures::logit2_X[2 * i];
    X(i, 1) = fixtures::logit2_X[2 * i + 1];
    Y(i) = fixtures::logit2_Y[i];
  }
  return logistic_t_model(X, Y, Vec::Zero(2), Mat::Identity(2, 2), 4.0);
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("conjugate posterior moments") {
    auto p = conjugate_truth({"poisson_gamma", 0.1, 3.0, 1.0}, {2, 3, 7});
    CHECK(p.mean(0) == doctest::Approx(fixtures::pois_post_mean).epsilon(1e-15));
    CHECK(p.cov(0, 0) == doctest::Approx(fixtures::pois_post_var).epsilon(1e-15));
    auto prior = conjugate_truth({"poisson_gamma", 0.1, 3.0, 1.0}, {});
    CHECK(prior.mean(0) == doctest::Approx(0.1 / 3.0));
    CHECK(prior.cov(0, 0) == doctest::Approx(0.1 / 9.0));
    auto w = conjugate_truth({"weibull_invgamma", 3.0, 10.0, 0.5}, {1, 4, 9});
    CHECK(w.mean(0) == doctest::Approx(fixtures::weib_post_mean).epsilon(1e-14));
    CHECK(w.cov(0, 0) == doctest::Approx(fixtures::weib_post_var).epsilon(1e-14));
    CHECK_THROWS_WITH_AS(conjugate_truth({"logistic_t", 1, 1, 1}, {1}), doctest::Contains("use quadrature"),
                         OracleError);
  }

  TEST_CASE("distances between explicit densities") {
    auto q0 = [](double u) { return npdf(u, 0.0); };
    auto q1 = [](double u) { return npdf(u, 1.0); };
    auto same = compare_densities_1d(q0, q0, -12, 12, 0.25);
    CHECK(same.tv == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(same.w1 == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    auto shift = compare_densities_1d(q0, q1, -12, 13, 0.25);
    CHECK(shift.w1 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(shift.tv == doctest::Approx(std::erf(0.5 / std::sqrt(2.0))).epsilon(1e-10));
  }

  TEST_CASE("quadrature truth matches the conjugate form and independent TV and W1 references") {
    auto pg = poisson_gamma_model({2, 3, 7}, 0.1, 3.0);
    auto t = quadrature_truth_1d(pg, {fixtures::pois_map, fixtures::pois_J_bar, 3});
    CHECK(t.mean(0) == doctest::Approx(fixtures::pois_post_mean).epsilon(1e-10));
    CHECK(t.cov(0, 0) == doctest::Approx(fixtures::pois_post_var).epsilon(1e-9));
    CHECK(t.tv == doctest::Approx(fixtures::pois_quad_tv).epsilon(1e-8));
    CHECK(t.w1 == doctest::Approx(fixtures::pois_quad_w1).epsilon(1e-8));

    auto wb = weibull_invgamma_model({1, 4, 9}, 0.5, 3.0, 10.0);
    auto tw = quadrature_truth_1d(wb, {fixtures::weib_map, fixtures::weib_J_bar, 3});
    CHECK(tw.mean(0) == doctest::Approx(fixtures::weib_post_mean).epsilon(1e-8));
    CHECK(tw.cov(0, 0) == doctest::Approx(fixtures::weib_post_var).epsilon(1e-6));
    CHECK(tw.tv == doctest::Approx(fixtures::weib_quad_tv).epsilon(1e-8));
    CHECK(tw.w1 == doctest::Approx(fixtures::weib_quad_w1).epsilon(1e-7));
  }

  TEST_CASE("quadrature agrees with the conjugate oracle on the n = 1000 Poisson fixture") {
    auto m = test::fixture_model(test::kPoissonConfig, 1000);
    GeometrySet g = compute_geometry(m);
    cli::RunConfig cfg = cli::parse_config(test::kPoissonConfig);
    cli::DataStream ds(cfg, 1);
    auto conj = conjugate_truth({"poisson_gamma", 0.1, 3.0, 1.0}, ds.prefix(1000).column(0));
    auto q = quadrature_truth_1d(m, {g.map.theta(0), g.J_bar.J(0, 0), m.n});
    CHECK(q.mean(0) == doctest::Approx(conj.mean(0)).epsilon(1e-8));
    CHECK(q.cov(0, 0) == doctest::Approx(conj.cov(0, 0)).epsilon(1e-8));
    CHECK(q.error_estimate < 1e-8);
  }

  TEST_CASE("Fisher divergence of the truncated pair") {
    auto pg = poisson_gamma_model({2, 3, 7}, 0.1, 3.0);
    double f = fisher_divergence_1d(pg, {fixtures::pois_map, fixtures::pois_J_bar, 3}, 1.5);
    CHECK(f == doctest::Approx(fixtures::pois_fisher_r15).epsilon(1e-10));
    CHECK_THROWS_AS(fisher_divergence_1d(pg, {fixtures::pois_map, fixtures::pois_J_bar, 3}, 10.0), OracleError);
  }

  TEST_CASE("importance sampling with the target as proposal has full effective sample size") {
    auto m = gaussian_target(3, 9);
    Mat cov = Mat::Identity(3, 3) / (10.0 * 4.0);
    auto t = importance_truth_md(m, Vec::Zero(3), cov, 5000, 11, 2.0);
    CHECK(t.ess == doctest::Approx(5000.0).epsilon(1e-9));
    CHECK(t.samples == 5000);
  }

  TEST_CASE("importance sampling matches quadrature on the Poisson fixture within three standard errors") {
    auto m = test::fixture_model(test::kPoissonConfig, 1000);
    GeometrySet g = compute_geometry(m);
    auto q = quadrature_truth_1d(m, {g.map.theta(0), g.J_bar.J(0, 0), m.n});
    auto is = importance_truth_md(m, g.map.theta, g.J_bar.J_inv / m.n, 20000, 3);
    CHECK(std::abs(is.mean(0) - q.mean(0)) <= 3.0 * is.error_estimate);
  }

  TEST_CASE("importance sampling matches a dense two-dimensional grid on a logistic posterior") {
    auto m = logit2_t();
    GeometrySet g = compute_geometry(m);
    auto t = importance_truth_md(m, g.map.theta, g.J_bar.J_inv / m.n, 200000, 5);
    const double se = t.error_estimate;
    CHECK(std::abs(t.mean(0) - fixtures::logit2_post_mean0) <= 4 * se);
    CHECK(std::abs(t.mean(1) - fixtures::logit2_post_mean1) <= 4 * se);
    CHECK(t.cov(0, 0) == doctest::Approx(fixtures::logit2_post_var0).epsilon(0.02));
    CHECK(t.cov(1, 1) == doctest::Approx(fixtures::logit2_post_var1).epsilon(0.02));
    CHECK(t.cov(0, 1) == doctest::Approx(fixtures::logit2_post_cov01).epsilon(0.05));
  }

  TEST_CASE("importance sampling regression value on the logistic d = 5 fixture") {
    auto m = test::fixture_model(test::logistic_config(5), 2000);
    GeometrySet g = compute_geometry(m);
    auto t = importance_truth_md(m, g.map.theta, g.J_bar.J_inv / m.n, 50000, 1);
    CHECK(t.mean.norm() == doctest::Approx(kLogisticD5MeanNorm).epsilon(1e-12));
    // inflation 2 in five dimensions gives about (sqrt(7)/4)^5 = 12.6% for a Gaussian target
    CHECK(t.ess > 0.1 * t.samples);
  }

  TEST_CASE("importance sampling failure modes") {
    auto m = gaussian_target(2, 100);
    CHECK_THROWS_WITH_AS(importance_truth_md(m, Vec::Constant(2, 3.0), Mat::Identity(2, 2) * 1e-4, 2000, 1),
                         "proposal mismatch; increase inflation", OracleError);
    auto big = gaussian_target(9, 10);
    CHECK_THROWS_AS(importance_truth_md(big, Vec::Zero(9), Mat::Identity(9, 9), 100, 1), OracleError);
  }
}
