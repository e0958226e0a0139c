#pragma once

// JSON-facing layer: config schemas, report serialization, and the
// deterministic suite runners behind the command-line tool.  Parse errors
// carry a JSON-pointer-style path to the offending field and map to usage
// errors (exit 2) at the CLI; runtime failures inside a suite map to exit 1.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dti/bounds.hpp"

namespace dti {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// --------------------------------------------------------------------------
// Spec parsers.  `path` is the JSON-pointer prefix used in error messages.

ScalarFunction parse_function(const nlohmann::json& j, const std::string& path);
Kernel parse_kernel(const nlohmann::json& j, const std::string& path);
NormSpec parse_norm(const nlohmann::json& j, const std::string& path);
nlohmann::json norm_to_json(const NormSpec& spec);
EnsembleSpec parse_ensemble(const nlohmann::json& j, const TensorShape& shape,
                            const std::string& path);
// {"kind": "identity"} | {"kind": "file", "path": ...} |
// {"kind": "random_hermitian", "seed": n, "scale": s}
EinsteinTensor build_fixed_tensor(const nlohmann::json& j, const TensorShape& shape,
                                  const std::string& path);
// {"kind": "polynomial", "coeffs": [...], "window": [a, b]} |
// {"kind": "polygamma", "order": k, "window": [a, b]} |
// {"kind": "constant", "value": v} |
// {"kind": "grid", "function": {...}, "window": [a, b], "points": n}
double resolve_omega(const nlohmann::json& j, const std::string& path);

TailExperimentConfig parse_tail_config(const nlohmann::json& j,
                                       const std::vector<StatisticKind>& allowed);

// Stable hash of the canonical config dump (FNV-1a), stamped into reports.
std::uint64_t config_hash(const nlohmann::json& config);

// --------------------------------------------------------------------------
// Identity verification suites.

struct VerifyConfig {
  std::vector<TensorShape> shapes;
  int instances = 50;
  SeedSpec seed;
  // Suite name -> tolerance; key "all" overrides every suite.
  std::map<std::string, double> tolerances;
  std::optional<std::string> x_file;
};

VerifyConfig parse_verify_config(const nlohmann::json& j);

struct VerifyCheck {
  std::string name;
  double residual = 0.0;   // max over instances; margin-style for inequalities
  double tolerance = 0.0;
  int instances = 0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass() const;
};

VerifyReport run_verify(const VerifyConfig& config);

// --------------------------------------------------------------------------
// Mean-kernel corollary comparison.

struct MeansConfig {
  TensorShape shape{{2}};
  EnsembleSpec ensemble_a{TensorShape{{2}}, WishartSpec{}};
  EnsembleSpec ensemble_b{TensorShape{{2}}, WishartSpec{}};
  std::vector<std::pair<MeanKind, double>> kinds;  // (kind, alpha; alpha unused if not general)
  double theta = 1.0;
  NormSpec norm = NormSpec::schatten(2.0);
  EinsteinTensor x = EinsteinTensor::identity(TensorShape{{2}});
  int n_samples = 4000;
  SeedSpec seed;
  int ratio_truncation = 4;
};

MeansConfig parse_means_config(const nlohmann::json& j);

struct MeansRow {
  std::string kind;
  double alpha = 0.0;
  double corollary_bound = 0.0;
  double direct_bound = 0.0;       // theorem1_bound of the direct estimate
  double direct_std_error = 0.0;   // of the expectation sum
  int series_pairs = 0;
  int fallback_pairs = 0;
  bool consistent = false;  // corollary >= direct within Monte Carlo slack
};

struct MeansReport {
  double theta = 0.0;
  double norm_x = 0.0;
  std::vector<MeansRow> rows;
  bool all_consistent() const;
};

MeansReport run_means(const MeansConfig& config);

// --------------------------------------------------------------------------
// Ratio-of-expectations series.

struct RatioConfig {
  std::vector<double> x;
  std::vector<double> y;
  int truncation = 4;
};

RatioConfig parse_ratio_config(const nlohmann::json& j);

struct RatioReport {
  RatioSeriesResult series;
  int n_samples = 0;
};

RatioReport run_ratio(const RatioConfig& config);

// --------------------------------------------------------------------------
// Report serialization.  JSON is the full record; CSV carries the per-theta
// table with columns theta, p_hat, ci_lo, ci_hi, bound, verdict.  Identical
// configs and seeds produce byte-identical CSV regardless of thread count;
// runtime_seconds lives only in the JSON and is excluded from that contract.

nlohmann::json tail_report_json(const TailExperimentReport& report);
std::string tail_report_csv(const TailExperimentReport& report);
nlohmann::json verify_report_json(const VerifyReport& report);
nlohmann::json means_report_json(const MeansReport& report);
nlohmann::json ratio_report_json(const RatioReport& report);

}  // namespace dti
