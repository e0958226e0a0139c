// End-to-end checks of the command-line binary: exit codes, report files,
// and the byte-identical CSV contract across thread counts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <doctest.h>
#include <json.hpp>

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

const char* kBin = DTI_LAB_BIN;

struct RunResult {
  int code = -1;
  std::string output;  // stdout + stderr
};

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "dti_lab_cli_tests";
  fs::create_directories(dir);
  return dir;
}

RunResult run(const std::string& args) {
  const fs::path out = work_dir() / "last_run.txt";
  const std::string cmd =
      std::string(kBin) + " " + args + " > " + out.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult res;
  if (WIFEXITED(raw)) res.code = WEXITSTATUS(raw);
  std::ifstream in(out);
  std::ostringstream buf;
  buf << in.rdbuf();
  res.output = buf.str();
  return res;
}

std::string write_config(const std::string& name, const json& j) {
  const fs::path path = work_dir() / name;
  std::ofstream out(path);
  out << j.dump(2);
  return path.string();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json tail_config() {
  return json{
      {"shape", {2}},
      {"ensemble_a", {{"kind", "gaussian_hermitian"}, {"scale", 1.0}}},
      {"ensemble_b", {{"kind", "wishart"}, {"inner_samples", 4}, {"ridge", 0.1}}},
      {"statistic",
       {{"kind", "dti_norm"},
        {"kernel", {{"kind", "arithmetic"}}},
        {"x", {{"kind", "identity"}}}}},
      {"norm", {{"norm", "schatten"}, {"p", 2.0}}},
      {"theta_percentiles", {0.25, 0.5, 0.9}},
      {"samples", 400},
      {"seed", 29}};
}

}  // namespace

TEST_CASE("info prints a summary and exits cleanly") {
  const RunResult res = run("info");
  CHECK(res.code == 0);
  CHECK(res.output.find("dti-lab") != std::string::npos);
  CHECK(res.output.find("exit codes") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("").code == 2);                      // missing subcommand
  CHECK(run("conjure").code == 2);               // unknown subcommand
  CHECK(run("tail").code == 2);                  // missing --config
  CHECK(run("tail --config /does/not/exist.json").code == 2);
  const std::string garbled = write_config("garbled.json", json());
  {
    std::ofstream out(garbled);
    out << "{ not json";
  }
  CHECK(run("tail --config " + garbled).code == 2);
  // Valid JSON, wrong schema.
  const std::string bad = write_config("bad_statistic.json", [] {
    json j = tail_config();
    j["statistic"]["kind"] = "sorcery";
    return j;
  }());
  const RunResult res = run("tail --config " + bad);
  CHECK(res.code == 2);
  CHECK(res.output.find("/statistic/kind") != std::string::npos);
}

TEST_CASE("statistics are routed to the right command") {
  json j = tail_config();
  j["statistic"] = {{"kind", "derivative"},
                    {"f", {{"kind", "polynomial"}, {"coeffs", {0.0, 0.0, 1.0}}}},
                    {"x", {{"kind", "identity"}}}};
  j.erase("ensemble_b");
  const std::string cfg = write_config("derivative_stat.json", j);
  // The derivative statistic belongs to `derivative`, not `tail`.
  CHECK(run("tail --config " + cfg).code == 2);
  const RunResult res = run("derivative --config " + cfg);
  CHECK(res.code == 0);
  CHECK(res.output.find("derivative:") != std::string::npos);
}

TEST_CASE("tail writes reports and the summary line") {
  const std::string cfg = write_config("tail_ok.json", tail_config());
  const fs::path out = work_dir() / "tail_ok_out";
  fs::remove_all(out);
  const RunResult res = run("tail --config " + cfg + " --out " + out.string());
  CHECK(res.code == 0);
  CHECK(res.output.find("dti_norm: 3 theta rows") != std::string::npos);
  REQUIRE(fs::exists(out / "report.json"));
  REQUIRE(fs::exists(out / "report.csv"));
  const json report = json::parse(read_file(out / "report.json"));
  CHECK(report.at("all_pass") == true);
  CHECK(report.at("n_samples") == 400);
  CHECK(report.at("rows").size() == 3);
  const std::string csv = read_file(out / "report.csv");
  CHECK(csv.rfind("theta,p_hat,ci_lo,ci_hi,bound,verdict\n", 0) == 0);
}

TEST_CASE("csv bytes are identical across thread counts") {
  const std::string cfg = write_config("tail_threads.json", tail_config());
  const fs::path out1 = work_dir() / "threads1";
  const fs::path out4 = work_dir() / "threads4";
  const fs::path out_env = work_dir() / "threads_env";
  fs::remove_all(out1);
  fs::remove_all(out4);
  fs::remove_all(out_env);
  REQUIRE(run("tail --config " + cfg + " --threads 1 --out " + out1.string()).code == 0);
  REQUIRE(run("tail --config " + cfg + " --threads 4 --out " + out4.string()).code == 0);
  const std::string csv1 = read_file(out1 / "report.csv");
  CHECK(csv1 == read_file(out4 / "report.csv"));
  // The environment fallback routes through the same machinery.
  const std::string env_cmd = "env DTI_LAB_THREADS=3 " + std::string(kBin) +
                              " tail --config " + cfg + " --out " + out_env.string() +
                              " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  CHECK(csv1 == read_file(out_env / "report.csv"));
  // A malformed thread count from the environment is a usage error.
  const std::string bad_cmd = "env DTI_LAB_THREADS=abc " + std::string(kBin) +
                              " tail --config " + cfg + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(bad_cmd.c_str())) == 2);
}

TEST_CASE("flag overrides reach the experiment and the config hash") {
  const std::string cfg = write_config("tail_override.json", tail_config());
  const fs::path base = work_dir() / "override_base";
  const fs::path seeded = work_dir() / "override_seeded";
  const fs::path sampled = work_dir() / "override_sampled";
  fs::remove_all(base);
  fs::remove_all(seeded);
  fs::remove_all(sampled);
  REQUIRE(run("tail --config " + cfg + " --out " + base.string()).code == 0);
  REQUIRE(run("tail --config " + cfg + " --seed 99 --out " + seeded.string()).code == 0);
  REQUIRE(
      run("tail --config " + cfg + " --samples 200 --out " + sampled.string()).code == 0);
  const json jb = json::parse(read_file(base / "report.json"));
  const json js = json::parse(read_file(seeded / "report.json"));
  const json jn = json::parse(read_file(sampled / "report.json"));
  CHECK(js.at("seed") == 99);
  CHECK(jb.at("config_hash") != js.at("config_hash"));
  CHECK(jn.at("n_samples") == 200);
  CHECK(read_file(base / "report.csv") != read_file(seeded / "report.csv"));
}

TEST_CASE("an understated smoothness constant fails with exit 1") {
  json j = tail_config();
  j["statistic"] = {{"kind", "lipschitz"},
                    {"f", {{"kind", "polynomial"}, {"coeffs", {0.0, 0.0, 1.0}}}},
                    {"omega", {{"kind", "constant"}, {"value", 1e-6}}}};
  j["theta"] = {0.05};
  j.erase("theta_percentiles");
  const std::string cfg = write_config("tail_bad_omega.json", j);
  const RunResult res = run("tail --config " + cfg);
  CHECK(res.code == 1);
  CHECK(res.output.find("1 fail") != std::string::npos);
}

TEST_CASE("verify command runs the identity suites") {
  const std::string cfg = write_config(
      "verify_small.json", json{{"shapes", {{2}}}, {"instances", 3}, {"seed", 5}});
  const fs::path out = work_dir() / "verify_out";
  fs::remove_all(out);
  const RunResult res = run("verify --config " + cfg + " --out " + out.string());
  CHECK(res.code == 0);
  CHECK(res.output.find("0 failed") != std::string::npos);
  const json report = json::parse(read_file(out / "report.json"));
  CHECK(report.at("all_pass") == true);
  // Impossible tolerances must surface as exit 1, never silently pass.
  json strict = json{{"shapes", {{2}}}, {"instances", 3}, {"tolerances", {{"all", 1e-30}}}};
  const std::string strict_cfg = write_config("verify_strict.json", strict);
  const RunResult sres = run("verify --config " + strict_cfg);
  CHECK(sres.code == 1);
  CHECK(sres.output.find("FAIL") != std::string::npos);
}

TEST_CASE("means command reports corollary vs direct bounds") {
  const json j{
      {"shape", {2}},
      {"ensemble_a", {{"kind", "wishart"}, {"inner_samples", 4}, {"ridge", 0.2}}},
      {"ensemble_b", {{"kind", "wishart"}, {"inner_samples", 6}, {"ridge", 0.3}}},
      {"kinds", {"arithmetic", "geometric", "harmonic"}},
      {"theta", 10.0},
      {"samples", 200},
      {"seed", 41}};
  const std::string cfg = write_config("means_small.json", j);
  const fs::path out = work_dir() / "means_out";
  fs::remove_all(out);
  const RunResult res = run("means --config " + cfg + " --out " + out.string());
  CHECK(res.code == 0);
  CHECK(res.output.find("consistent") != std::string::npos);
  const json report = json::parse(read_file(out / "report.json"));
  CHECK(report.at("all_consistent") == true);
  CHECK(report.at("rows").size() == 3);
}

TEST_CASE("ratio command prints the series and the reference") {
  const std::string cfg = write_config(
      "ratio_small.json",
      json{{"generator", {{"kind", "two_point_exhaustive"}, {"values", {1.0, 2.0}}}},
           {"truncation", 4}});
  const RunResult res = run("ratio --config " + cfg);
  CHECK(res.code == 0);
  CHECK(res.output.find("ratio: S_4") != std::string::npos);
  CHECK(res.output.find("brute force 1") != std::string::npos);
  // Without --out the full JSON report lands on stdout.
  CHECK(res.output.find("partial_sums") != std::string::npos);
}
