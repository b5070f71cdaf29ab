#pragma once

#include "lapb/bounds.hpp"
#include "lapb/oracle.hpp"

#include <iosfwd>
#include <random>

namespace lapb::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kInfeasible = 2,
  kOracleUnavailable = 3,
  kDominanceFailure = 4,
};

constexpr int kSchemaVersion = 1;
constexpr const char* kCsvVersion = "lapb-csv/1";

class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string family = "poisson_gamma";
  // hyperparameters; NaN means the family default
  double alpha = ConstantSet::nan;
  double beta = ConstantSet::nan;
  double k = 0.5;      // Weibull shape
  double nu = 4.0;     // t prior degrees of freedom
  Vec mu;              // t prior location (empty: zero)
  double sigma = 1.0;  // t prior scale matrix is sigma * I

  std::string data_path;
  std::string generator;  // exp, weibull or logistic; empty with a path
  double gen_mean = 10.0;
  double gen_shape = 0.5;
  double gen_scale = 1.0;
  int dim = 1;
  Vec theta_star;  // logistic generator truth (empty: all ones)
  int n = 0;       // 0: whole dataset

  std::vector<int> n_grid;
  int d_min = 1, d_max = 5;
  long long n_cap = 10000000;

  std::vector<Centric> centrics{Centric::map, Centric::mle};
  std::vector<BoundKind> kinds{BoundKind::tv, BoundKind::w1, BoundKind::cov};
  bool fixed_radius = false;
  double delta = ConstantSet::nan;
  double delta_bar = ConstantSet::nan;
  CertOptions cert;

  double credible_alpha = 0.05;
  int mc_budget = 100000;
  int oracle_samples = 20000;
  std::uint64_t seed = 1;
  bool seed_set = false;      // seed given in the config or on the command line
  double scale_bounds = 1.0;  // debug: multiplies every bound total
  int workers = 0;            // 0: hardware concurrency

  std::string format;  // json or csv; empty picks the command default
  std::string out;
};

// Parses the JSON config document. Relative data paths resolve against base_dir.
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);

// Observations drawn from one seeded stream so that smaller datasets are
// prefixes of larger ones.
class DataStream {
public:
  DataStream(const RunConfig& cfg, int dim);
  Dataset prefix(size_t n);
  size_t available() const;  // rows in a file source, or SIZE_MAX

private:
  const RunConfig& cfg_;
  int dim_;
  bool from_file_ = false;
  Dataset rows_;
  std::mt19937_64 rng_;
  Vec theta_star_;
};

// Generated data, multivariate credible sets and importance sampling all draw
// random numbers; a run reaching any of them must name its seed.
bool monte_carlo_reachable(const RunConfig& cfg);
void require_seed(const RunConfig& cfg);

ModelDescriptor build_model(const RunConfig& cfg, const Dataset& data);

struct KindResult {
  BoundKind kind = BoundKind::tv;
  std::string status = "ok";  // ok, infeasible, error
  std::string message;
  RadiusChoice radii;
  AssumptionReport assumptions;
  BoundValue bound;
};

struct TruthSummary {
  bool available = false;
  std::string method;
  std::string message;
  double mean_norm = ConstantSet::nan;   // ||E theta||
  double cov_norm = ConstantSet::nan;    // ||Cov||_2
  double mean_err = ConstantSet::nan;    // ||E theta - center||
  double cov_err = ConstantSet::nan;     // ||Cov - J^-1/n||_2
  double tv = ConstantSet::nan;
  double w1 = ConstantSet::nan;
  double error_estimate = ConstantSet::nan;
};

struct CentricResult {
  Centric centric = Centric::map;
  std::vector<KindResult> kinds;
  double mean_error = ConstantSet::nan;
  double cov_error = ConstantSet::nan;
  double credible_radius = ConstantSet::nan;
  double fisher_cap = ConstantSet::nan;
  TruthSummary truth;
  const KindResult* find(BoundKind k) const;
  bool ok() const;
  std::string status() const;
};

struct PointResult {
  int n = 0;
  int d = 0;
  bool geometry_ok = false;
  std::string message;
  GeometrySet geometry;
  EffectiveDimension deff;
  std::vector<CentricResult> centrics;
  bool third_certified = true;
};

PointResult evaluate_point(const RunConfig& cfg, const ModelDescriptor& model, const Dataset& data, bool with_truth);

// Dominance of truth by bound for each available pair.
struct DominanceCheck {
  std::string name;
  double truth = 0.0;
  double bound = 0.0;
  bool ok = false;
};
std::vector<DominanceCheck> dominance_checks(const CentricResult& c);

struct MinNRow {
  int d = 0;
  long long min_n = 0;
  std::string status;  // ok or "exceeds cap"
  int evaluations = 0;
};
bool certifiable(const RunConfig& cfg, const ModelDescriptor& model);
MinNRow search_min_n(const RunConfig& cfg, int d);

int cmd_audit(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_min_n(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_oracle_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err);

std::string sweep_csv_header();
std::string sweep_csv_rows(const PointResult& p);

int run(int argc, char** argv);

}  // namespace lapb::cli
