#include "lapb/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace lapb::cli {

using ojson = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_logistic(const std::string& family) { return family == "logistic_t" || family == "logistic_gaussian"; }

Centric parse_centric(const std::string& s) {
  if (s == "map") return Centric::map;
  if (s == "mle") return Centric::mle;
  throw InputError("unknown centric '" + s + "'");
}

std::vector<Centric> parse_centrics(const std::string& s) {
  if (s == "both") return {Centric::map, Centric::mle};
  return {parse_centric(s)};
}

std::vector<BoundKind> parse_kinds(const std::string& s) {
  if (s == "all") return {BoundKind::tv, BoundKind::w1, BoundKind::cov};
  if (s == "tv") return {BoundKind::tv};
  if (s == "w1") return {BoundKind::w1};
  if (s == "cov") return {BoundKind::cov};
  throw InputError("unknown bound selection '" + s + "'");
}

ThirdMethod parse_method(const std::string& s) {
  if (s == "analytic") return ThirdMethod::analytic;
  if (s == "grid") return ThirdMethod::grid;
  throw InputError("unknown third-derivative method '" + s + "'");
}

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError("config section '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw InputError("unknown config key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
}

Vec vec_or_scalar(const nlohmann::json& j) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) throw InputError("expected a number or an array of numbers");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Vec broadcast(const Vec& v, int d, double fill, const std::string& what) {
  if (v.size() == 0) return Vec::Constant(d, fill);
  if (v.size() == 1) return Vec::Constant(d, v(0));
  if (v.size() != d) throw InputError(what + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(d));
  return v;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double spectral_norm(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

ojson vec_json(const Vec& v) {
  ojson a = ojson::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::uint64_t point_seed(std::uint64_t seed, long long n) {
  std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32)};
  std::uint64_t out[1];
  std::uint32_t w[2];
  sq.generate(w, w + 2);
  out[0] = (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
  return out[0];
}

template <class F>
void parallel_for(size_t count, int workers, F&& f) {
  int hw = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  hw = static_cast<int>(std::min<size_t>(hw, std::max<size_t>(count, 1)));
  if (hw <= 1) {
    for (size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < hw; ++t)
    pool.emplace_back([&] {
      for (size_t i = next++; i < count; i = next++) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    check_keys(j, {"family", "hyperparameters", "data", "sweep", "min_n", "centric", "bounds", "radius", "third",
                   "credible", "oracle", "seed", "debug", "workers", "format", "out"},
               "");
    if (j.contains("family")) c.family = j["family"].get<std::string>();
    if (c.family != "poisson_gamma" && c.family != "weibull_invgamma" && !is_logistic(c.family))
      throw InputError("unknown family '" + c.family + "'");
    if (j.contains("hyperparameters")) {
      const auto& h = j["hyperparameters"];
      check_keys(h, {"alpha", "beta", "k", "nu", "mu", "sigma"}, "hyperparameters");
      if (h.contains("alpha")) c.alpha = h["alpha"].get<double>();
      if (h.contains("beta")) c.beta = h["beta"].get<double>();
      if (h.contains("k")) c.k = h["k"].get<double>();
      if (h.contains("nu")) c.nu = h["nu"].get<double>();
      if (h.contains("mu")) c.mu = vec_or_scalar(h["mu"]);
      if (h.contains("sigma")) c.sigma = h["sigma"].get<double>();
    }
    if (j.contains("data")) {
      const auto& d = j["data"];
      check_keys(d, {"path", "generator", "mean", "shape", "scale", "dim", "theta_star", "n"}, "data");
      if (d.contains("path")) {
        std::filesystem::path p = d["path"].get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        c.data_path = p.string();
      }
      if (d.contains("generator")) c.generator = d["generator"].get<std::string>();
      if (d.contains("mean")) c.gen_mean = d["mean"].get<double>();
      if (d.contains("shape")) c.gen_shape = d["shape"].get<double>();
      if (d.contains("scale")) c.gen_scale = d["scale"].get<double>();
      if (d.contains("dim")) c.dim = d["dim"].get<int>();
      if (d.contains("theta_star")) c.theta_star = vec_or_scalar(d["theta_star"]);
      if (d.contains("n")) c.n = d["n"].get<int>();
    }
    if (!c.data_path.empty() && !c.generator.empty()) throw InputError("data.path and data.generator are exclusive");
    if (!c.generator.empty() && c.generator != "exp" && c.generator != "weibull" && c.generator != "logistic")
      throw InputError("unknown data.generator '" + c.generator + "'");
    if (c.dim < 1) throw InputError("data.dim must be >= 1");
    if (c.n < 0) throw InputError("data.n must be >= 0");
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      check_keys(s, {"n_grid", "n_min", "n_max", "points"}, "sweep");
      if (s.contains("n_grid")) {
        c.n_grid = s["n_grid"].get<std::vector<int>>();
      } else if (s.contains("n_min")) {
        int lo = s["n_min"].get<int>(), hi = s.value("n_max", lo), pts = s.value("points", 50);
        if (lo < 1 || hi < lo || pts < 1) throw InputError("sweep needs 1 <= n_min <= n_max and points >= 1");
        for (int i = 0; i < pts; ++i) {
          double t = pts == 1 ? 0.0 : static_cast<double>(i) / (pts - 1);
          int v = static_cast<int>(std::lround(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))));
          if (c.n_grid.empty() || v > c.n_grid.back()) c.n_grid.push_back(v);
        }
      }
      for (size_t i = 0; i < c.n_grid.size(); ++i) {
        if (c.n_grid[i] < 1) throw InputError("sweep.n_grid entries must be >= 1");
        if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) throw InputError("sweep.n_grid must be strictly increasing");
      }
    }
    if (j.contains("min_n")) {
      const auto& m = j["min_n"];
      check_keys(m, {"d_min", "d_max", "cap"}, "min_n");
      c.d_min = m.value("d_min", c.d_min);
      c.d_max = m.value("d_max", c.d_max);
      if (m.contains("cap")) c.n_cap = static_cast<long long>(m["cap"].get<double>());
      if (c.d_min < 1) throw InputError("min_n.d_min must be >= 1");
    }
    if (j.contains("centric")) c.centrics = parse_centrics(j["centric"].get<std::string>());
    if (j.contains("bounds")) c.kinds = parse_kinds(j["bounds"].get<std::string>());
    if (j.contains("radius")) {
      const auto& r = j["radius"];
      check_keys(r, {"policy", "delta", "delta_bar"}, "radius");
      std::string pol = r.value("policy", std::string("auto"));
      if (pol != "auto" && pol != "fixed") throw InputError("radius.policy must be auto or fixed");
      c.fixed_radius = pol == "fixed";
      if (r.contains("delta")) c.delta = r["delta"].get<double>();
      if (r.contains("delta_bar")) c.delta_bar = r["delta_bar"].get<double>();
    }
    if (j.contains("third")) {
      const auto& t = j["third"];
      check_keys(t, {"method", "points", "directions", "shells", "seed"}, "third");
      if (t.contains("method")) c.cert.method = parse_method(t["method"].get<std::string>());
      c.cert.grid.points = t.value("points", c.cert.grid.points);
      c.cert.grid.directions = t.value("directions", c.cert.grid.directions);
      c.cert.grid.shells = t.value("shells", c.cert.grid.shells);
      if (t.contains("seed")) c.cert.grid.seed = t["seed"].get<std::uint64_t>();
      if (c.cert.grid.points < 1 || c.cert.grid.directions < 1 || c.cert.grid.shells < 1)
        throw InputError("third.points, third.directions and third.shells must be >= 1");
    }
    if (j.contains("credible")) {
      const auto& cr = j["credible"];
      check_keys(cr, {"alpha", "mc_budget"}, "credible");
      c.credible_alpha = cr.value("alpha", c.credible_alpha);
      c.mc_budget = cr.value("mc_budget", c.mc_budget);
    }
    if (j.contains("oracle")) {
      check_keys(j["oracle"], {"samples"}, "oracle");
      c.oracle_samples = j["oracle"].value("samples", c.oracle_samples);
    }
    if (j.contains("seed")) {
      c.seed = j["seed"].get<std::uint64_t>();
      c.seed_set = true;
    }
    if (j.contains("debug")) {
      check_keys(j["debug"], {"scale_bounds"}, "debug");
      c.scale_bounds = j["debug"].value("scale_bounds", 1.0);
    }
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("format")) c.format = j["format"].get<std::string>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config value has the wrong type: ") + e.what());
  }
  if (std::isnan(c.alpha)) c.alpha = c.family == "weibull_invgamma" ? 3.0 : 0.1;
  if (std::isnan(c.beta)) c.beta = c.family == "weibull_invgamma" ? 10.0 : 3.0;
  if (c.family == "poisson_gamma" || c.family == "weibull_invgamma") {
    if (c.dim != 1) throw InputError("family " + c.family + " is one-dimensional");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------- data

DataStream::DataStream(const RunConfig& cfg, int dim) : cfg_(cfg), dim_(dim), rng_(cfg.seed) {
  if (!cfg.data_path.empty()) {
    try {
      rows_ = read_dataset(cfg.data_path);
    } catch (const ModelError& e) {
      throw InputError(e.what());
    }
    from_file_ = true;
    return;
  }
  if (is_logistic(cfg.family)) theta_star_ = broadcast(cfg.theta_star, dim, 1.0, "data.theta_star");
}

size_t DataStream::available() const { return from_file_ ? rows_.size() : SIZE_MAX; }

Dataset DataStream::prefix(size_t n) {
  if (from_file_) {
    if (n > rows_.size())
      throw InputError("dataset has " + std::to_string(rows_.size()) + " rows, " + std::to_string(n) + " requested");
  } else {
    std::string gen = cfg_.generator;
    if (gen.empty()) gen = cfg_.family == "poisson_gamma" ? "exp" : cfg_.family == "weibull_invgamma" ? "weibull" : "logistic";
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    while (rows_.size() < n) {
      if (gen == "exp") {
        rows_.rows.push_back({std::exponential_distribution<double>(1.0 / cfg_.gen_mean)(rng_)});
      } else if (gen == "weibull") {
        rows_.rows.push_back({std::weibull_distribution<double>(cfg_.gen_shape, cfg_.gen_scale)(rng_)});
      } else {
        if (theta_star_.size() != dim_) theta_star_ = broadcast(cfg_.theta_star, dim_, 1.0, "data.theta_star");
        std::vector<double> r(dim_ + 1);
        double z = 0.0;
        for (int j = 0; j < dim_; ++j) {
          r[j] = N(rng_);
          z += r[j] * theta_star_(j);
        }
        r[dim_] = U(rng_) < 1.0 / (1.0 + std::exp(-z)) ? 1.0 : -1.0;
        rows_.rows.push_back(std::move(r));
      }
    }
  }
  Dataset out;
  out.rows.assign(rows_.rows.begin(), rows_.rows.begin() + static_cast<long>(n));
  return out;
}

bool monte_carlo_reachable(const RunConfig& cfg) { return cfg.data_path.empty() || cfg.dim > 1 || is_logistic(cfg.family); }

void require_seed(const RunConfig& cfg) {
  if (!cfg.seed_set && monte_carlo_reachable(cfg))
    throw InputError("seed is required: this run generates data or uses Monte Carlo");
}

ModelDescriptor build_model(const RunConfig& cfg, const Dataset& data) {
  if (data.size() == 0) throw InputError("empty dataset");
  if (cfg.family == "poisson_gamma") return poisson_gamma_model(data.column(0), cfg.alpha, cfg.beta);
  if (cfg.family == "weibull_invgamma") return weibull_invgamma_model(data.column(0), cfg.k, cfg.alpha, cfg.beta);
  Mat X;
  Vec Y;
  split_logistic(data, X, Y);
  if (cfg.family == "logistic_gaussian") return logistic_gaussian_model(X, Y);
  const int d = static_cast<int>(X.cols());
  return logistic_t_model(X, Y, broadcast(cfg.mu, d, 0.0, "hyperparameters.mu"), cfg.sigma * Mat::Identity(d, d),
                          cfg.nu);
}

// ---------------------------------------------------------------- evaluation

const KindResult* CentricResult::find(BoundKind k) const {
  for (auto& r : kinds)
    if (r.kind == k) return &r;
  return nullptr;
}

bool CentricResult::ok() const {
  return std::all_of(kinds.begin(), kinds.end(), [](const KindResult& k) { return k.status == "ok"; });
}

std::string CentricResult::status() const {
  for (auto& k : kinds)
    if (k.status == "error") return "error";
  for (auto& k : kinds)
    if (k.status != "ok") return k.status;
  return "ok";
}

namespace {

KindResult evaluate_kind(const RunConfig& cfg, const ModelDescriptor& model, Certifier& cert, Centric centric,
                         BoundKind kind) {
  KindResult kr;
  kr.kind = kind;
  const auto& g = cert.geometry();
  try {
    if (cfg.fixed_radius) {
      const bool map = centric == Centric::map;
      if (!(cfg.delta > 0.0) || (map && !(cfg.delta_bar > 0.0)))
        throw InputError("fixed radius policy needs radius.delta, and radius.delta_bar for map");
      kr.radii.delta = cfg.delta;
      kr.radii.delta_bar = map ? cfg.delta_bar : kNaN;
      kr.radii.constants = cert.constants(cfg.delta, kr.radii.delta_bar, map, !map);
    } else {
      kr.radii = optimize_radii(cert, kind, centric);
    }
    kr.assumptions = verify_assumptions(model, g, kr.radii.constants);
    if (!kr.assumptions.ok(centric)) {
      kr.status = "infeasible";
      std::string failed;
      for (auto& c : kr.assumptions.checks)
        if (!c.flag && c.id != "A4a" && c.id != "A4b") failed += (failed.empty() ? "" : " ") + c.id;
      kr.message = "assumption flags false: " + failed;
      return kr;
    }
    kr.bound = evaluate_bound(kind, centric, kr.radii.constants, g.J_bar, g.J_hat, model.n);
    if (cfg.scale_bounds != 1.0) {
      kr.bound.total *= cfg.scale_bounds;
      for (auto& c : kr.bound.components) c.value *= cfg.scale_bounds;
    }
    kr.radii.objective = kr.bound.total;
    if (!kr.bound.finite()) {
      kr.status = "infeasible";
      kr.message = "bound infinite: " + kr.bound.infinite_term;
    }
  } catch (const CertificateError& e) {
    kr.status = "infeasible";
    kr.message = e.what();
  } catch (const BoundError& e) {
    kr.status = "error";
    kr.message = e.what();
  }
  return kr;
}

struct MomentTruth {
  bool ok = false;
  std::string method, message;
  Vec mean;
  Mat cov;
  double error_estimate = kNaN;
};

MomentTruth moment_truth(const RunConfig& cfg, const ModelDescriptor& model, const Dataset& data,
                         const GeometrySet& g) {
  MomentTruth t;
  try {
    if (model.d == 1 && (cfg.family == "poisson_gamma" || cfg.family == "weibull_invgamma")) {
      PosteriorTruth pt = conjugate_truth({cfg.family, cfg.alpha, cfg.beta, cfg.k}, data.column(0));
      t.method = "conjugate";
      t.mean = pt.mean;
      t.cov = pt.cov;
      t.error_estimate = 0.0;
    } else if (model.d == 1) {
      PosteriorTruth pt = quadrature_truth_1d(model, {g.map.theta(0), g.J_bar.J(0, 0), model.n});
      t.method = "quadrature";
      t.mean = pt.mean;
      t.cov = pt.cov;
      t.error_estimate = pt.error_estimate;
    } else {
      if (cfg.oracle_samples <= 0) throw OracleError("importance oracle disabled (oracle.samples = 0)");
      PosteriorTruth pt = importance_truth_md(model, g.map.theta, g.J_bar.J_inv / model.n, cfg.oracle_samples,
                                              point_seed(cfg.seed, model.n));
      t.method = "importance";
      t.mean = pt.mean;
      t.cov = pt.cov;
      t.error_estimate = pt.error_estimate;
    }
    t.ok = true;
  } catch (const OracleError& e) {
    t.message = e.what();
  }
  return t;
}

}  // namespace

PointResult evaluate_point(const RunConfig& cfg, const ModelDescriptor& model, const Dataset& data, bool with_truth) {
  PointResult p;
  p.n = model.n;
  p.d = model.d;
  try {
    p.geometry = compute_geometry(model);
    p.geometry_ok = true;
  } catch (const GeometryError& e) {
    p.message = e.what();
    for (Centric c : cfg.centrics) {
      CentricResult cr;
      cr.centric = c;
      for (BoundKind k : cfg.kinds) {
        KindResult kr;
        kr.kind = k;
        kr.status = "infeasible";
        kr.message = e.what();
        cr.kinds.push_back(kr);
      }
      p.centrics.push_back(cr);
    }
    return p;
  }
  const GeometrySet& g = p.geometry;
  const double n = model.n;
  p.deff = effective_dimension(g.J_bar, model.d, n, model.logprior_hessian(g.map.theta));
  Certifier cert(model, g, cfg.cert);
  MomentTruth mt;
  if (with_truth) mt = moment_truth(cfg, model, data, g);

  for (Centric centric : cfg.centrics) {
    CentricResult cr;
    cr.centric = centric;
    for (BoundKind k : cfg.kinds) {
      cr.kinds.push_back(evaluate_kind(cfg, model, cert, centric, k));
      const auto& c = cr.kinds.back().radii.constants;
      if (cr.kinds.back().status == "ok" && !c.third_certified) p.third_certified = false;
    }
    const KindResult* tv = cr.find(BoundKind::tv);
    const KindResult* w1 = cr.find(BoundKind::w1);
    const KindResult* cv = cr.find(BoundKind::cov);
    if (w1 && w1->status == "ok") cr.mean_error = w1->bound.total / std::sqrt(n);
    if (w1 && cv && w1->status == "ok" && cv->status == "ok")
      cr.cov_error = (w1->bound.total * w1->bound.total + cv->bound.total) / n;
    if (centric == Centric::map) {
      for (auto& kr : cr.kinds)
        if (kr.status == "ok") {
          cr.fisher_cap = fisher_cap(g.J_bar.trace_inv, kr.radii.constants.M2_bar, n);
          break;
        }
      if (tv && tv->status == "ok") {
        try {
          cr.credible_radius = credible_adjust(cfg.credible_alpha, tv->bound.total, g.J_bar, cfg.mc_budget, cfg.seed);
        } catch (const BoundError&) {
          cr.credible_radius = kNaN;
        }
      }
    }
    if (with_truth) {
      TruthSummary& ts = cr.truth;
      ts.method = mt.method;
      ts.message = mt.message;
      if (mt.ok) {
        const bool map = centric == Centric::map;
        const Vec& center = map ? g.map.theta : g.mle.theta;
        const CurvatureSummary& J = map ? g.J_bar : g.J_hat;
        ts.available = true;
        ts.mean_norm = mt.mean.norm();
        ts.cov_norm = spectral_norm(mt.cov);
        ts.mean_err = (mt.mean - center).norm();
        ts.cov_err = spectral_norm(mt.cov - J.J_inv / n);
        ts.error_estimate = mt.error_estimate;
        if (model.d == 1) {
          try {
            PosteriorTruth q = quadrature_truth_1d(model, {center(0), J.J(0, 0), model.n});
            ts.tv = q.tv;
            ts.w1 = q.w1;
            ts.error_estimate = std::max(ts.error_estimate, q.error_estimate);
          } catch (const OracleError& e) {
            ts.message = e.what();
          }
        }
      }
    }
    p.centrics.push_back(cr);
  }
  return p;
}

std::vector<DominanceCheck> dominance_checks(const CentricResult& c) {
  std::vector<DominanceCheck> out;
  if (!c.truth.available) return out;
  auto add = [&](const char* name, double truth, double bound) {
    if (std::isnan(truth) || std::isnan(bound)) return;
    out.push_back({name, truth, bound, truth <= bound});
  };
  const KindResult* tv = c.find(BoundKind::tv);
  const KindResult* w1 = c.find(BoundKind::w1);
  if (tv && tv->status == "ok") add("tv", c.truth.tv, tv->bound.total);
  if (w1 && w1->status == "ok") add("w1", c.truth.w1, w1->bound.total);
  add("mean", c.truth.mean_err, c.mean_error);
  add("cov", c.truth.cov_err, c.cov_error);
  return out;
}

// ---------------------------------------------------------------- min-n

bool certifiable(const RunConfig& cfg, const ModelDescriptor& model) {
  try {
    GeometrySet g = compute_geometry(model, false);
    Certifier cert(model, g, cfg.cert);
    for (Centric c : cfg.centrics) {
      RadiusChoice rc = optimize_radii(cert, BoundKind::tv, c);
      if (!verify_assumptions(model, g, rc.constants).ok(c)) return false;
      if (!evaluate_bound(BoundKind::tv, c, rc.constants, g.J_bar, g.J_hat, model.n).finite()) return false;
    }
    return true;
  } catch (const GeometryError&) {
    return false;
  } catch (const CertificateError&) {
    return false;
  } catch (const BoundError&) {
    return false;
  } catch (const ModelError&) {
    return false;
  }
}

MinNRow search_min_n(const RunConfig& cfg, int d) {
  if (!is_logistic(cfg.family) && d != 1) throw InputError("family " + cfg.family + " supports only d = 1");
  RunConfig c = cfg;
  c.dim = d;
  DataStream ds(c, d);
  MinNRow row;
  row.d = d;
  const long long cap = std::min<long long>(cfg.n_cap, static_cast<long long>(std::min<size_t>(ds.available(), LLONG_MAX)));
  auto feasible = [&](long long n) {
    ++row.evaluations;
    Dataset data = ds.prefix(static_cast<size_t>(n));
    try {
      ModelDescriptor m = build_model(c, data);
      return certifiable(c, m);
    } catch (const ModelError&) {
      return false;
    }
  };
  long long lo = 1, hi = 2;
  while (true) {
    if (hi > cap) {
      if (lo < cap && feasible(cap)) {
        hi = cap;
        break;
      }
      row.status = "exceeds cap";
      row.min_n = -1;
      return row;
    }
    if (feasible(hi)) break;
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    long long mid = lo + (hi - lo) / 2;
    (feasible(mid) ? hi : lo) = mid;
  }
  row.min_n = hi;
  row.status = "ok";
  return row;
}

// ---------------------------------------------------------------- output

namespace {

const std::vector<std::string> kSweepColumns = {
    "n",           "d",           "centric",        "status",         "delta_tv",       "delta_bar_tv",
    "delta_w1",    "delta_bar_w1", "delta_cov",     "delta_bar_cov",  "tv",             "w1",
    "cov",         "mean_error",  "cov_error",      "truth_method",   "truth_mean_norm", "truth_cov_norm",
    "truth_mean_err", "truth_cov_err", "truth_tv",  "truth_w1",       "mean_crossover", "cov_crossover",
    "third_certified", "message"};

std::string csv_cell(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number()) return fmt(v.get<double>());
  std::string s = v.get<std::string>();
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return s;
}

ojson num(double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); }

ojson sweep_row(const PointResult& p, const CentricResult& c) {
  ojson r;
  r["n"] = p.n;
  r["d"] = p.d;
  r["centric"] = to_string(c.centric);
  r["status"] = c.status();
  for (BoundKind k : {BoundKind::tv, BoundKind::w1, BoundKind::cov}) {
    const KindResult* kr = c.find(k);
    r[std::string("delta_") + to_string(k)] = num(kr ? kr->radii.delta : kNaN);
    r[std::string("delta_bar_") + to_string(k)] = num(kr ? kr->radii.delta_bar : kNaN);
  }
  for (BoundKind k : {BoundKind::tv, BoundKind::w1, BoundKind::cov}) {
    const KindResult* kr = c.find(k);
    r[to_string(k)] = num(kr && kr->status == "ok" ? kr->bound.total : kNaN);
  }
  r["mean_error"] = num(c.mean_error);
  r["cov_error"] = num(c.cov_error);
  r["truth_method"] = c.truth.available ? c.truth.method : "";
  r["truth_mean_norm"] = num(c.truth.mean_norm);
  r["truth_cov_norm"] = num(c.truth.cov_norm);
  r["truth_mean_err"] = num(c.truth.mean_err);
  r["truth_cov_err"] = num(c.truth.cov_err);
  r["truth_tv"] = num(c.truth.tv);
  r["truth_w1"] = num(c.truth.w1);
  auto cross = [](double bound, double truth) {
    return std::isnan(bound) || std::isnan(truth) ? ojson(nullptr) : ojson(bound < truth);
  };
  r["mean_crossover"] = cross(c.mean_error, c.truth.mean_norm);
  r["cov_crossover"] = cross(c.cov_error, c.truth.cov_norm);
  r["third_certified"] = p.third_certified;
  std::string msg = p.message;
  for (auto& k : c.kinds)
    if (!k.message.empty() && msg.find(k.message) == std::string::npos) msg += (msg.empty() ? "" : "; ") + k.message;
  if (!c.truth.message.empty()) msg += (msg.empty() ? "" : "; ") + c.truth.message;
  r["message"] = msg;
  return r;
}

ojson constants_json(const ConstantSet& c) {
  ojson j;
  j["delta"] = num(c.delta);
  j["delta_bar"] = num(c.delta_bar);
  j["M1"] = num(c.M1);
  j["M1_tilde"] = num(c.M1_tilde);
  j["M1_hat"] = num(c.M1_hat);
  j["M2"] = num(c.M2);
  j["M2_bar"] = num(c.M2_bar);
  j["kappa"] = num(c.kappa);
  j["kappa_bar"] = num(c.kappa_bar);
  j["tail1_map"] = num(c.tail1_map);
  j["tail2_map"] = num(c.tail2_map);
  j["tail1_mle"] = num(c.tail1_mle);
  j["tail2_mle"] = num(c.tail2_mle);
  j["tails_exact"] = c.tails_exact;
  j["third_method"] = to_string(c.third_method);
  j["third_certified"] = c.third_certified;
  return j;
}

ojson mode_json(const ModeSolve& m, bool unique) {
  ojson j;
  j["theta"] = vec_json(m.theta);
  j["converged"] = m.converged;
  j["grad_norm"] = m.grad_norm;
  j["iterations"] = m.iterations;
  j["unique"] = unique;
  return j;
}

ojson curvature_json(const CurvatureSummary& c) {
  ojson j;
  j["lambda_min"] = c.lambda_min;
  j["lambda_max"] = c.lambda_max;
  j["trace_inv"] = c.trace_inv;
  j["logdet"] = c.logdet;
  return j;
}

ojson point_json(const RunConfig& cfg, const PointResult& p, const std::string& command) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["family"] = cfg.family;
  j["n"] = p.n;
  j["d"] = p.d;
  j["seed"] = cfg.seed;
  j["geometry_ok"] = p.geometry_ok;
  if (!p.geometry_ok) {
    j["message"] = p.message;
  } else {
    const auto& g = p.geometry;
    j["modes"]["mle"] = mode_json(g.mle, g.mle_unique);
    j["modes"]["map"] = mode_json(g.map, g.map_unique);
    j["modes"]["distance"] = g.mode_distance;
    j["modes"]["uniqueness_warning"] = !g.mle_unique || !g.map_unique;
    j["curvature"]["J_hat"] = curvature_json(g.J_hat);
    j["curvature"]["J_bar"] = curvature_json(g.J_bar);
    j["effective_dimension"]["exact"] = p.deff.exact;
    j["effective_dimension"]["lower"] = p.deff.lower;
  }
  j["third_certified"] = p.third_certified;
  ojson cs = ojson::array();
  for (auto& c : p.centrics) {
    ojson cj;
    cj["centric"] = to_string(c.centric);
    cj["status"] = c.status();
    ojson bj;
    for (auto& k : c.kinds) {
      ojson kj;
      kj["status"] = k.status;
      if (!k.message.empty()) kj["message"] = k.message;
      kj["constants"] = constants_json(k.radii.constants);
      ojson aj;
      for (auto& a : k.assumptions.checks) aj[a.id] = {{"flag", a.flag}, {"witness", num(a.witness)}};
      kj["assumptions"] = aj;
      if (k.status == "ok" || !k.bound.infinite_term.empty()) {
        kj["total"] = num(k.bound.total);
        ojson comp;
        for (auto& b : k.bound.components) comp[b.name] = num(b.value);
        kj["components"] = comp;
        if (!k.bound.infinite_term.empty()) kj["infinite_term"] = k.bound.infinite_term;
      }
      bj[to_string(k.kind)] = kj;
    }
    cj["bounds"] = bj;
    cj["mean_error"] = num(c.mean_error);
    cj["cov_error"] = num(c.cov_error);
    if (c.centric == Centric::map) {
      cj["fisher_cap"] = num(c.fisher_cap);
      cj["credible"] = {{"alpha", cfg.credible_alpha}, {"radius", num(c.credible_radius)}};
    }
    if (!c.truth.method.empty() || !c.truth.message.empty()) {
      ojson tj;
      tj["available"] = c.truth.available;
      tj["method"] = c.truth.method;
      if (!c.truth.message.empty()) tj["message"] = c.truth.message;
      tj["mean_norm"] = num(c.truth.mean_norm);
      tj["cov_norm"] = num(c.truth.cov_norm);
      tj["mean_err"] = num(c.truth.mean_err);
      tj["cov_err"] = num(c.truth.cov_err);
      tj["tv"] = num(c.truth.tv);
      tj["w1"] = num(c.truth.w1);
      tj["error_estimate"] = num(c.truth.error_estimate);
      cj["truth"] = tj;
    }
    cs.push_back(cj);
  }
  j["centrics"] = cs;
  return j;
}

int resolve_n(const RunConfig& cfg, DataStream& ds) {
  if (cfg.n > 0) return cfg.n;
  if (ds.available() != SIZE_MAX) return static_cast<int>(ds.available());
  throw InputError("data.n is required with a generator");
}

std::string csv_line(const ojson& row) {
  std::string s;
  bool first = true;
  for (auto& col : kSweepColumns) {
    if (!first) s += ',';
    first = false;
    s += csv_cell(row.at(col));
  }
  return s + "\n";
}

}  // namespace

std::string sweep_csv_header() {
  std::string h = std::string("# ") + kCsvVersion + "\n";
  h += "# one row per (n, centric); bounds are totals at their own optimized radii\n";
  h += "# tv,w1,cov: certified bounds in the rescaled variable sqrt(n)(theta - center)\n";
  h += "# mean_error = w1/sqrt(n); cov_error = (w1^2 + cov)/n\n";
  h += "# truth_mean_norm = ||E theta||; truth_cov_norm = ||Cov||_2\n";
  h += "# truth_mean_err = ||E theta - center||; truth_cov_err = ||Cov - J^-1/n||_2\n";
  h += "# mean_crossover = mean_error < truth_mean_norm; cov_crossover = cov_error < truth_cov_norm\n";
  h += "# empty cell: not available\n";
  for (size_t i = 0; i < kSweepColumns.size(); ++i) h += (i ? "," : "") + kSweepColumns[i];
  return h + "\n";
}

std::string sweep_csv_rows(const PointResult& p) {
  std::string s;
  for (auto& c : p.centrics) s += csv_line(sweep_row(p, c));
  return s;
}

int cmd_audit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  DataStream ds(cfg, cfg.dim);
  Dataset data = ds.prefix(static_cast<size_t>(resolve_n(cfg, ds)));
  ModelDescriptor model;
  try {
    model = build_model(cfg, data);
  } catch (const ModelError& e) {
    throw InputError(e.what());
  }
  PointResult p = evaluate_point(cfg, model, data, false);
  bool ok = p.geometry_ok;
  for (auto& c : p.centrics) ok = ok && c.ok();
  if (cfg.format == "csv") {
    out << sweep_csv_header() << sweep_csv_rows(p);
  } else {
    ojson j = point_json(cfg, p, "audit");
    j["exit_code"] = ok ? kOk : kInfeasible;
    out << j.dump(2) << "\n";
  }
  if (!ok) {
    err << "certificate infeasible at n = " << p.n << "; run `lapb min-n` for the minimum n\n";
    return kInfeasible;
  }
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (cfg.n_grid.empty()) throw InputError("sweep needs sweep.n_grid or sweep.n_min/n_max");
  DataStream ds(cfg, cfg.dim);
  std::vector<Dataset> sets;
  for (int n : cfg.n_grid) sets.push_back(ds.prefix(static_cast<size_t>(n)));
  std::vector<PointResult> res(sets.size());
  parallel_for(sets.size(), cfg.workers, [&](size_t i) {
    try {
      ModelDescriptor m = build_model(cfg, sets[i]);
      res[i] = evaluate_point(cfg, m, sets[i], true);
    } catch (const std::exception& e) {
      PointResult p;
      p.n = cfg.n_grid[i];
      p.d = cfg.dim;
      p.message = e.what();
      for (Centric c : cfg.centrics) {
        CentricResult cr;
        cr.centric = c;
        KindResult kr;
        kr.status = "error";
        kr.message = e.what();
        cr.kinds.push_back(kr);
        p.centrics.push_back(cr);
      }
      res[i] = p;
    }
  });
  if (cfg.format == "json") {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "sweep";
    j["family"] = cfg.family;
    j["seed"] = cfg.seed;
    ojson rows = ojson::array();
    for (auto& p : res)
      for (auto& c : p.centrics) rows.push_back(sweep_row(p, c));
    j["rows"] = rows;
    out << j.dump(2) << "\n";
  } else {
    out << sweep_csv_header();
    for (auto& p : res) out << sweep_csv_rows(p);
  }
  return kOk;
}

int cmd_min_n(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  std::vector<int> ds;
  for (int d = cfg.d_min; d <= cfg.d_max; ++d) ds.push_back(d);
  std::vector<MinNRow> rows(ds.size());
  parallel_for(ds.size(), cfg.workers, [&](size_t i) { rows[i] = search_min_n(cfg, ds[i]); });
  if (cfg.format == "json") {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "min-n";
    j["family"] = cfg.family;
    j["seed"] = cfg.seed;
    ojson a = ojson::array();
    for (auto& r : rows)
      a.push_back({{"d", r.d}, {"min_n", r.min_n}, {"status", r.status}, {"evaluations", r.evaluations}});
    j["rows"] = a;
    out << j.dump(2) << "\n";
  } else {
    out << "# " << kCsvVersion << " min-n\n";
    out << "# min_n: smallest n with a nonempty radius interval and all flags true (-1 when the cap is hit)\n";
    out << "d,min_n,status,evaluations\n";
    for (auto& r : rows) out << r.d << "," << r.min_n << "," << r.status << "," << r.evaluations << "\n";
  }
  return kOk;
}

int cmd_oracle_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  DataStream ds(cfg, cfg.dim);
  Dataset data = ds.prefix(static_cast<size_t>(resolve_n(cfg, ds)));
  ModelDescriptor model;
  try {
    model = build_model(cfg, data);
  } catch (const ModelError& e) {
    throw InputError(e.what());
  }
  if (model.d > 8) {
    err << "oracle unavailable: ground truth supports d <= 8\n";
    return kOracleUnavailable;
  }
  PointResult p = evaluate_point(cfg, model, data, true);
  int code = kOk;
  bool feasible = p.geometry_ok;
  bool dominated = true;
  bool truth_ok = true;
  ojson checks = ojson::array();
  for (auto& c : p.centrics) {
    feasible = feasible && c.ok();
    if (p.geometry_ok && !c.truth.available) truth_ok = false;
    for (auto& dc : dominance_checks(c)) {
      dominated = dominated && dc.ok;
      checks.push_back({{"centric", to_string(c.centric)}, {"check", dc.name}, {"truth", dc.truth},
                        {"bound", dc.bound}, {"dominated", dc.ok}});
    }
  }
  if (!truth_ok) code = kOracleUnavailable;
  else if (!feasible) code = kInfeasible;
  else if (!dominated) code = kDominanceFailure;
  if (cfg.format == "csv") {
    out << "# " << kCsvVersion << " oracle-compare\n";
    out << "centric,check,truth,bound,dominated\n";
    for (auto& c : checks)
      out << c["centric"].get<std::string>() << "," << c["check"].get<std::string>() << ","
          << fmt(c["truth"].get<double>()) << "," << fmt(c["bound"].get<double>()) << ","
          << (c["dominated"].get<bool>() ? 1 : 0) << "\n";
  } else {
    ojson j = point_json(cfg, p, "oracle-compare");
    j["dominance"] = checks;
    j["all_dominated"] = dominated;
    j["exit_code"] = code;
    out << j.dump(2) << "\n";
  }
  if (code == kOracleUnavailable) err << "oracle unavailable for this model\n";
  if (code == kInfeasible) err << "certificate infeasible at n = " << p.n << "\n";
  if (code == kDominanceFailure) err << "dominance failure: a bound fell below the ground truth\n";
  return code;
}

int run(int argc, char** argv) {
  CLI::App app{"Finite-sample accuracy certificates for Laplace approximations"};
  app.require_subcommand(1);
  std::string config_path, out_path, centric, bounds, format;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_path, "output file (default: stdout)");
  app.add_option("--seed", seed, "random seed, overrides the config");
  app.add_option("--centric", centric, "map, mle or both")->check(CLI::IsMember({"map", "mle", "both"}));
  app.add_option("--bounds", bounds, "tv, w1, cov or all")->check(CLI::IsMember({"tv", "w1", "cov", "all"}));
  app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.fallthrough();
  auto* audit = app.add_subcommand("audit", "certify one dataset and report every bound");
  auto* sweep = app.add_subcommand("sweep", "bounds and ground truth over an n grid");
  auto* minn = app.add_subcommand("min-n", "smallest certifiable n per dimension");
  auto* oracle = app.add_subcommand("oracle-compare", "bounds against ground truth with dominance flags");
  for (auto* s : {audit, sweep, minn, oracle}) s->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInputError;
  }
  try {
    RunConfig cfg = load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.seed_set = true;
    }
    require_seed(cfg);
    if (!centric.empty()) cfg.centrics = parse_centrics(centric);
    if (!bounds.empty()) cfg.kinds = parse_kinds(bounds);
    if (!format.empty()) cfg.format = format;
    if (!out_path.empty()) cfg.out = out_path;
    if (cfg.format.empty()) cfg.format = (*audit || *oracle) ? "json" : "csv";
    if (cfg.format != "json" && cfg.format != "csv") throw InputError("format must be json or csv");
    std::ofstream file;
    if (!cfg.out.empty()) {
      file.open(cfg.out);
      if (!file) throw InputError("cannot write '" + cfg.out + "'");
    }
    std::ostream& out = cfg.out.empty() ? std::cout : file;
    if (*audit) return cmd_audit(cfg, out, std::cerr);
    if (*sweep) return cmd_sweep(cfg, out, std::cerr);
    if (*minn) return cmd_min_n(cfg, out, std::cerr);
    return cmd_oracle_compare(cfg, out, std::cerr);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const OracleError& e) {
    std::cerr << "oracle unavailable: " << e.what() << "\n";
    return kOracleUnavailable;
  }
}

}  // namespace lapb::cli
