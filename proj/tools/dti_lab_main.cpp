// Command-line front end.  Subcommands drive the suite runners in
// dti/experiments.hpp; every run reads one JSON config, applies flag
// overrides, and (with --out) writes report.json plus, for tail tables,
// report.csv.  Exit codes: 0 all checks pass, 1 a bound or residual check
// failed or a run aborted, 2 usage or config errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "dti/experiments.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<int> threads;
  std::vector<double> theta;
};

void add_common_options(CLI::App* cmd, CommonOptions* opt) {
  cmd->add_option("--config", opt->config_path, "JSON config file")->required();
  cmd->add_option("--out", opt->out_dir, "output directory for report files");
  cmd->add_option("--seed", opt->seed, "override the config seed");
  cmd->add_option("--samples", opt->samples, "override the config sample count");
  cmd->add_option("--threads", opt->threads,
                  "worker threads (also via DTI_LAB_THREADS)");
  cmd->add_option("--theta", opt->theta, "override the config theta grid")
      ->expected(-1);
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw dti::ConfigError("/", fmt::format("cannot open config file '{}'", path));
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw dti::ConfigError(
        "/", fmt::format("config file '{}' is not valid JSON: {}", path, e.what()));
  }
  if (!j.is_object()) {
    throw dti::ConfigError("/", fmt::format("config file '{}' must hold an object", path));
  }
  return j;
}

// Flags win over config fields; DTI_LAB_THREADS fills in only when neither
// the flag nor the config names a thread count.
void apply_overrides(nlohmann::json& j, const CommonOptions& opt,
                     const char* samples_key) {
  if (opt.seed) j["seed"] = *opt.seed;
  if (opt.samples) j[samples_key] = *opt.samples;
  if (opt.threads) j["threads"] = *opt.threads;
  if (!opt.theta.empty()) j["theta"] = opt.theta;
  if (!j.contains("threads")) {
    if (const char* env = std::getenv("DTI_LAB_THREADS")) {
      char* end = nullptr;
      const long n = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || n < 1) {
        throw dti::ConfigError(
            "/threads", fmt::format("DTI_LAB_THREADS='{}' is not a positive integer", env));
      }
      j["threads"] = static_cast<int>(n);
    }
  }
}

void write_outputs(const std::string& out_dir, const nlohmann::json& report,
                   const std::string* csv) {
  if (out_dir.empty()) {
    std::cout << report.dump(2) << "\n";
    return;
  }
  std::filesystem::create_directories(out_dir);
  const auto json_path = std::filesystem::path(out_dir) / "report.json";
  std::ofstream jf(json_path);
  if (!jf) throw std::runtime_error(fmt::format("cannot write '{}'", json_path.string()));
  jf << report.dump(2) << "\n";
  if (csv) {
    const auto csv_path = std::filesystem::path(out_dir) / "report.csv";
    std::ofstream cf(csv_path, std::ios::binary);
    if (!cf) throw std::runtime_error(fmt::format("cannot write '{}'", csv_path.string()));
    cf << *csv;
  }
}

int run_tail_command(const CommonOptions& opt,
                     const std::vector<dti::StatisticKind>& allowed) {
  nlohmann::json j = load_config(opt.config_path);
  apply_overrides(j, opt, "samples");
  dti::TailExperimentConfig cfg = dti::parse_tail_config(j, allowed);
  dti::TailExperimentReport report = dti::empirical_tail(cfg);
  report.config_hash = dti::config_hash(j);
  const std::string csv = dti::tail_report_csv(report);
  write_outputs(opt.out_dir, dti::tail_report_json(report), &csv);
  int pass = 0, fail = 0, invalid = 0;
  for (const dti::TailRow& r : report.rows) {
    if (r.verdict == dti::Verdict::pass) ++pass;
    else if (r.verdict == dti::Verdict::fail) ++fail;
    else ++invalid;
  }
  std::cout << fmt::format("{}: {} theta rows ({} pass, {} fail, {} invalid)\n",
                           report.statistic_name, report.rows.size(), pass, fail,
                           invalid);
  return report.all_pass() ? 0 : 1;
}

int run_verify_command(const CommonOptions& opt) {
  nlohmann::json j = load_config(opt.config_path);
  apply_overrides(j, opt, "instances");
  dti::VerifyConfig cfg = dti::parse_verify_config(j);
  dti::VerifyReport report = dti::run_verify(cfg);
  nlohmann::json out = dti::verify_report_json(report);
  out["config_hash"] = fmt::format("{:016x}", dti::config_hash(j));
  write_outputs(opt.out_dir, out, nullptr);
  int failed = 0;
  for (const dti::VerifyCheck& c : report.checks) {
    if (!c.pass) {
      ++failed;
      std::cout << fmt::format("FAIL {}: residual {:.3e} > tolerance {:.3e}\n", c.name,
                               c.residual, c.tolerance);
    }
  }
  std::cout << fmt::format("verify: {} checks, {} failed\n", report.checks.size(),
                           failed);
  return report.all_pass() ? 0 : 1;
}

int run_means_command(const CommonOptions& opt) {
  nlohmann::json j = load_config(opt.config_path);
  apply_overrides(j, opt, "samples");
  if (!opt.theta.empty()) j["theta"] = opt.theta.front();
  dti::MeansConfig cfg = dti::parse_means_config(j);
  dti::MeansReport report = dti::run_means(cfg);
  nlohmann::json out = dti::means_report_json(report);
  out["config_hash"] = fmt::format("{:016x}", dti::config_hash(j));
  write_outputs(opt.out_dir, out, nullptr);
  for (const dti::MeansRow& r : report.rows) {
    std::cout << fmt::format(
        "{}{}: corollary {:.6g}, direct {:.6g} ({})\n", r.kind,
        r.kind == "general" ? fmt::format("(alpha={})", r.alpha) : "",
        r.corollary_bound, r.direct_bound, r.consistent ? "consistent" : "INCONSISTENT");
  }
  return report.all_consistent() ? 0 : 1;
}

int run_ratio_command(const CommonOptions& opt) {
  nlohmann::json j = load_config(opt.config_path);
  apply_overrides(j, opt, "samples");
  dti::RatioConfig cfg = dti::parse_ratio_config(j);
  dti::RatioReport report = dti::run_ratio(cfg);
  nlohmann::json out = dti::ratio_report_json(report);
  out["config_hash"] = fmt::format("{:016x}", dti::config_hash(j));
  write_outputs(opt.out_dir, out, nullptr);
  std::cout << fmt::format("ratio: S_{} = {:.12g}, brute force {:.12g} ({} samples)\n",
                           report.series.truncation, report.series.partial_sums.back(),
                           report.series.brute_force_reference, report.n_samples);
  return 0;
}

int run_info_command() {
  std::cout << "dti-lab " << DTI_LAB_VERSION << "\n"
            << "spectral integral laboratory for random square tensors\n\n"
            << "commands:\n"
            << "  verify      deterministic operator-identity and norm suites\n"
            << "  tail        Monte Carlo tail bounds (dti_norm, lipschitz, quasi_lipschitz)\n"
            << "  derivative  tail bounds for derivative statistics (derivative, quasi_derivative)\n"
            << "  means       mean-kernel corollary bounds vs direct estimates\n"
            << "  ratio       ratio-of-expectations series diagnostics\n"
            << "  info        this summary\n\n"
            << "defaults: confidence 0.99, samples 10000, threads 1 (DTI_LAB_THREADS)\n"
            << "exit codes: 0 pass, 1 failed check, 2 usage or config error\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral integral laboratory for random square tensors"};
  app.require_subcommand(1);

  CommonOptions verify_opt, tail_opt, deriv_opt, means_opt, ratio_opt;
  CLI::App* verify = app.add_subcommand("verify", "run deterministic identity suites");
  add_common_options(verify, &verify_opt);
  CLI::App* tail = app.add_subcommand("tail", "run Monte Carlo tail-bound experiments");
  add_common_options(tail, &tail_opt);
  CLI::App* deriv =
      app.add_subcommand("derivative", "run derivative-statistic tail experiments");
  add_common_options(deriv, &deriv_opt);
  CLI::App* means =
      app.add_subcommand("means", "compare mean-kernel corollary and direct bounds");
  add_common_options(means, &means_opt);
  CLI::App* ratio = app.add_subcommand("ratio", "ratio-of-expectations series");
  add_common_options(ratio, &ratio_opt);
  CLI::App* info = app.add_subcommand("info", "print version and command summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (info->parsed()) return run_info_command();
    if (verify->parsed()) return run_verify_command(verify_opt);
    if (tail->parsed()) {
      return run_tail_command(tail_opt, {dti::StatisticKind::dti_norm,
                                         dti::StatisticKind::lipschitz,
                                         dti::StatisticKind::quasi_lipschitz});
    }
    if (deriv->parsed()) {
      return run_tail_command(deriv_opt, {dti::StatisticKind::derivative,
                                          dti::StatisticKind::quasi_derivative});
    }
    if (means->parsed()) return run_means_command(means_opt);
    if (ratio->parsed()) return run_ratio_command(ratio_opt);
  } catch (const dti::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
