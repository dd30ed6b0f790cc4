#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "collapse/config.hpp"
#include "collapse/reporter.hpp"

using namespace collapse;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    config::parse_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("collapse_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(COLLAPSE_CLI) + " --out " + dir.string() + " " + args + " > " +
                          (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kBuildJob = R"({"schema_version": 1, "jobs": [
  {"name": "lp", "kind": "build", "family": {"family": "LambdaP", "n": 1, "R": 64}, "write_terms": true}]})";

}  // namespace

TEST(Config, DefaultsAndJobs) {
  const auto cfg = config::parse_text(R"({
    "schema_version": 1,
    "defaults": {"C": 3, "output_dir": "x", "quadrature": {"panels": 6}},
    "jobs": [
      {"name": "b", "kind": "build", "family": {"family": "GammaP", "n": 2, "R": 16, "seed": 5}},
      {"name": "s", "kind": "scan", "required": true, "expect": "bounded-consistent",
       "family": {"family": "LambdaQ", "m": 2}, "R_list": [32, 64, 128], "p": "inf", "q": 2}
    ]})");
  ASSERT_EQ(cfg.jobs.size(), 2u);
  EXPECT_EQ(cfg.defaults.output_dir, "x");
  const config::Job& b = cfg.job("b");
  EXPECT_EQ(b.family.family, FamilyKind::GammaP);
  EXPECT_EQ(b.family.seed, 5u);
  EXPECT_EQ(*b.family.C, 3.0);
  const config::Job& s = cfg.job("s");
  EXPECT_TRUE(s.required);
  EXPECT_EQ(*s.expect, Verdict::Bounded);
  EXPECT_TRUE(std::isinf(s.scan.p));
  EXPECT_EQ(s.scan.policy, RegionPolicy::QRegion);
  EXPECT_EQ(s.scan.quad.panels, 6);
  EXPECT_EQ(s.scan.family.m, 2);
  EXPECT_EQ(cfg.checks.fixtures, config::all_fixtures());
  EXPECT_THROW(cfg.job("missing"), ConfigError);
}

TEST(Config, FieldPathDiagnostics) {
  const std::string e = error_of(R"({"schema_version": 1, "jobs": [
    {"name": "ok", "kind": "build", "family": {"family": "LambdaP", "R": 8}},
    {"name": "bad", "kind": "build", "family": {"family": "LambdaP", "R": 2}}]})");
  EXPECT_NE(e.find("jobs[1].family.R"), std::string::npos) << e;
  EXPECT_NE(e.find("[4,"), std::string::npos) << e;
}

TEST(Config, RejectsUnknownDuplicateAndVersion) {
  EXPECT_NE(error_of(R"({"schema_version": 1, "defaults": {"cul_tol": 1e-12}})").find("defaults.cul_tol"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 2})").find("schema_version"), std::string::npos);
  EXPECT_NE(error_of(R"({"jobs": []})").find("schema_version"), std::string::npos);
  const std::string dup = error_of(R"({"schema_version": 1, "jobs": [
    {"name": "a", "kind": "build", "family": {"family": "LambdaP", "R": 8}},
    {"name": "a", "kind": "build", "family": {"family": "LambdaP", "R": 8}}]})");
  EXPECT_NE(dup.find("duplicate"), std::string::npos) << dup;
  EXPECT_NE(error_of(R"({"schema_version": 1, "checks": {"fixtures": ["oracle-x"]}})").find("oracle-x"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"schema_version": 1, "jobs": [{"name": "s", "kind": "scan",
    "family": {"family": "LambdaP"}, "R_list": [64, 32, 128]}]})")
                .find("R_list"),
            std::string::npos);
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
  const std::string e = error_of("{\"schema_version\": 1,\n \"jobs\": [\n  {\"name\": \"a\" \"kind\": 1}]}");
  EXPECT_NE(e.find("line 3"), std::string::npos) << e;
  EXPECT_NE(e.find("column"), std::string::npos) << e;
}

TEST(Config, CustomRegion) {
  const auto cfg = config::parse_text(R"({"schema_version": 1, "jobs": [{"name": "c", "kind": "scan",
    "family": {"family": "LambdaP"}, "R_list": [64, 128, 256],
    "region": {"t0": 0, "t1": 1, "box": [[-1, 1]], "t_rule": "gauss-legendre"}}]})");
  const ScanSpec& s = cfg.jobs[0].scan;
  EXPECT_EQ(s.policy, RegionPolicy::Custom);
  EXPECT_EQ(s.custom_region->t_rule, RuleKind::GaussLegendre);
  EXPECT_NE(error_of(R"({"schema_version": 1, "jobs": [{"name": "c", "kind": "scan",
    "family": {"family": "LambdaP"}, "R_list": [64, 128, 256],
    "region": {"t0": 1, "t1": 0, "box": [[-1, 1]]}}]})")
                .find("jobs[0].region"),
            std::string::npos);
}

TEST(Reporter, BuildRecordEnvelopeAndSchema) {
  FamilySpec spec;
  spec.R = 64.0;
  const WavepacketSum sum = build_family(spec);
  const auto rec = report::build_record(spec, sum, {0.0, 1.0}, {});
  const auto count = rec["term_count"].get<std::size_t>();
  EXPECT_GE(count, 1u);
  EXPECT_LE(count, 8u);
  EXPECT_GE(rec["min_spacing"].get<double>(), 8.0);
  EXPECT_NO_THROW(report::validate_report(nlohmann::json::parse(rec.dump())));
  EXPECT_NEAR(rec["hs_norms"][0]["value"].get<double>(), rec["l2_norm"].get<double>(),
              1e-6 * rec["l2_norm"].get<double>());
  EXPECT_EQ(report::dump(rec), report::dump(report::build_record(spec, build_family(spec), {0.0, 1.0}, {})));
}

TEST(Reporter, ScanRoundTripAndCsv) {
  ScanSpec spec;
  spec.family.family = FamilyKind::LambdaP;
  spec.R_list = {256, 512, 1024};
  spec.p = 1.0;
  const ScalingReport rep = run_scan(spec);
  const auto doc = report::scan_report("lp1", rep);
  const nlohmann::json parsed = nlohmann::json::parse(report::dump(doc));
  EXPECT_NO_THROW(report::validate_report(parsed));
  const ScalingReport back = report::scan_from_json(parsed);
  EXPECT_EQ(back.verdict, rep.verdict);
  EXPECT_EQ(back.records.size(), rep.records.size());
  EXPECT_EQ(back.records[1].lhs, rep.records[1].lhs);
  EXPECT_EQ(parsed["fitted_slope"].get<double>(), std::round(rep.fitted_slope * 1e4) / 1e4);
  EXPECT_EQ(parsed["verdict"], "blow-up-consistent");

  std::istringstream csv(report::scan_csv(rep));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "R,lhs,rhs,ratio,lhs_converged,rhs_converged");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 3);

  std::istringstream plot(report::plot_data(rep));
  std::getline(plot, line);
  EXPECT_EQ(line[0], '#');
  double lr, lratio;
  plot >> lr >> lratio;
  EXPECT_DOUBLE_EQ(lr, std::log10(256.0));
  EXPECT_DOUBLE_EQ(lratio, std::log10(rep.records[0].ratio));
}

TEST(Reporter, ValidatorNamesBadField) {
  nlohmann::json doc = {{"schema_version", 1}, {"kind", "check"}, {"fault_injection", "none"}, {"total", 0},
                        {"passed", 0},         {"failed", 0},     {"warnings", nlohmann::json::array()},
                        {"checks", nlohmann::json::array()}};
  EXPECT_NO_THROW(report::validate_report(doc));
  doc["kind"] = "other";
  EXPECT_THROW(report::validate_report(doc), ValidationError);
  doc["kind"] = "check";
  doc.erase("failed");
  try {
    report::validate_report(doc);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("failed"), std::string::npos);
  }
}

TEST(Reporter, AtomicWriteLeavesNoTemporaries) {
  const fs::path dir = scratch("atomic");
  report::atomic_write(dir / "sub" / "a.txt", "one\n");
  report::atomic_write(dir / "sub" / "a.txt", "two\n");
  EXPECT_EQ(slurp(dir / "sub" / "a.txt"), "two\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "sub")) ++files;
  EXPECT_EQ(files, 1);
}

TEST(Cli, BuildIsByteIdenticalOnRepeat) {
  const fs::path dir = scratch("build");
  write(dir / "cfg.json", kBuildJob);
  ASSERT_EQ(run_cli("--config " + (dir / "cfg.json").string() + " build", dir), 0);
  const std::string first = slurp(dir / "lp.build.json");
  ASSERT_EQ(run_cli("--config " + (dir / "cfg.json").string() + " build --job lp", dir), 0);
  EXPECT_EQ(slurp(dir / "lp.build.json"), first);
  EXPECT_TRUE(fs::exists(dir / "lp.terms.csv"));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("exit");
  write(dir / "empty.json", R"({"schema_version": 1, "checks": {"fixtures": []}})");
  EXPECT_EQ(run_cli("--config " + (dir / "empty.json").string() + " check", dir), 0);
  EXPECT_NE(slurp(dir / "stderr.txt").find("0 checks"), std::string::npos);
  EXPECT_NO_THROW(report::validate_report(nlohmann::json::parse(slurp(dir / "check.json"))));

  write(dir / "bad.json", R"({"schema_version": 1, "jobs": [
    {"name": "b", "kind": "build", "family": {"family": "LambdaP", "R": 2}}]})");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " build", dir), 2);
  EXPECT_NE(slurp(dir / "stderr.txt").find("jobs[0].family.R"), std::string::npos);
  EXPECT_EQ(run_cli("nonsense", dir), 2);

  write(dir / "cap.json", R"({"schema_version": 1, "defaults": {"q_cap": 10}, "jobs": [
    {"name": "big", "kind": "build", "family": {"family": "LambdaQ", "R": 64}}]})");
  EXPECT_EQ(run_cli("--config " + (dir / "cap.json").string() + " build", dir), 3);
  EXPECT_NE(slurp(dir / "stderr.txt").find("17"), std::string::npos);

  // t in [0, R_0] misses the focusing window at the larger scales
  write(dir / "inc.json", R"({"schema_version": 1, "jobs": [{"name": "coarse", "kind": "scan", "required": true,
    "family": {"family": "LambdaP"}, "R_list": [64, 128, 256], "p": 1, "q": 2,
    "region": {"t0": 0, "t1": 64, "box": [[-0.01, 0.01]], "t_samples": 2, "x_samples": 2}}]})");
  EXPECT_EQ(run_cli("--config " + (dir / "inc.json").string() + " scan", dir), 4);
  EXPECT_NO_THROW(report::validate_report(nlohmann::json::parse(slurp(dir / "coarse.scan.json"))));
}

TEST(Cli, FaultInjectionFailsOracleChecks) {
  const fs::path dir = scratch("fault");
  write(dir / "cfg.json", R"({"schema_version": 1, "checks": {"fixtures": ["oracle-lambda"],
    "fault_injection": "branch_sign"}})");
  EXPECT_EQ(run_cli("--config " + (dir / "cfg.json").string() + " check", dir), 1);
  const auto rep = nlohmann::json::parse(slurp(dir / "check.json"));
  EXPECT_GT(rep["failed"].get<int>(), 0);
  double worst = 0.0;
  for (const auto& c : rep["checks"]) worst = std::max(worst, c["residual"].get<double>());
  EXPECT_GT(worst, 1e-2);
  EXPECT_EQ(run_cli("check --fault-injection none", dir), 0);
}

TEST(Cli, ScanAndMerge) {
  const fs::path dir = scratch("scan");
  write(dir / "cfg.json", R"({"schema_version": 1, "jobs": [
    {"name": "p1", "kind": "scan", "required": true, "expect": "blow-up-consistent",
     "family": {"family": "LambdaP"}, "R_list": [256, 512, 1024], "p": 1, "q": 2},
    {"name": "p2", "kind": "scan", "required": true,
     "family": {"family": "LambdaP"}, "R_list": [256, 512, 1024], "p": 2, "q": 2}]})");
  ASSERT_EQ(run_cli("--config " + (dir / "cfg.json").string() + " scan", dir), 0);
  for (const char* f : {"p1.scan.json", "p1.scan.csv", "p1.plot.dat", "p2.scan.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto p2 = nlohmann::json::parse(slurp(dir / "p2.scan.json"));
  EXPECT_TRUE(p2["verdict"] == "bounded-consistent" || std::abs(p2["fitted_slope"].get<double>()) <= 0.08);
  EXPECT_EQ(run_cli("report-merge " + (dir / "p1.scan.json").string() + " " + (dir / "p2.scan.json").string(), dir),
            0);
  const auto sum = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_NO_THROW(report::validate_report(sum));
  EXPECT_EQ(sum["status"], "pass");
}
