// collapse: build families, run checks and scans from a config file.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "collapse/checks.hpp"
#include "collapse/config.hpp"
#include "collapse/reporter.hpp"

namespace fs = std::filesystem;
using namespace collapse;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kResource = 3, kInconclusive = 4 };

struct Options {
  std::string config_path;
  std::string job;
  std::string out_dir;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  std::string fault_injection;
  std::vector<std::string> merge_inputs;
};

// Folds per-job outcomes into one exit status: resource errors dominate, then
// failures, then inconclusive required jobs.
struct Outcome {
  bool resource = false, failure = false, inconclusive = false;
  int code() const {
    if (resource) return kResource;
    if (failure) return kFailure;
    if (inconclusive) return kInconclusive;
    return kOk;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

config::RunConfig load_config(const Options& o, bool optional) {
  if (o.config_path.empty()) {
    if (optional) return config::RunConfig{};
    throw ConfigError("--config is required for this command");
  }
  return config::load(o.config_path);
}

fs::path out_dir(const Options& o, const config::RunConfig& cfg) {
  return o.out_dir.empty() ? fs::path(cfg.defaults.output_dir) : fs::path(o.out_dir);
}

std::vector<const config::Job*> select_jobs(const config::RunConfig& cfg, const Options& o, config::JobKind kind,
                                            const char* what) {
  std::vector<const config::Job*> out;
  if (!o.job.empty()) {
    const config::Job& j = cfg.job(o.job);
    if (j.kind != kind) throw ConfigError("job '" + o.job + "' is not a " + what + " job");
    out.push_back(&j);
    return out;
  }
  for (const config::Job& j : cfg.jobs)
    if (j.kind == kind) out.push_back(&j);
  return out;
}

int cmd_build(const Options& o) {
  const config::RunConfig cfg = load_config(o, false);
  const fs::path dir = out_dir(o, cfg);
  const auto jobs = select_jobs(cfg, o, config::JobKind::Build, "build");
  if (jobs.empty()) std::cerr << "warning: no build jobs selected\n";
  Outcome res;
  for (const config::Job* job : jobs) {
    FamilySpec spec = job->family;
    if (o.seed) spec.seed = *o.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const WavepacketSum sum = build_family(spec);
      const auto rec = report::build_record(spec, sum, cfg.defaults.hs_orders, cfg.defaults.quadrature);
      report::validate_report(nlohmann::json::parse(rec.dump()));
      report::atomic_write(dir / (job->name + ".build.json"), report::dump(rec));
      if (job->write_terms) report::atomic_write(dir / (job->name + ".terms.csv"), report::terms_csv(sum));
      std::printf("build %s: %s n=%d R=%g terms=%zu l2=%.6g (%.2fs)\n", job->name.c_str(),
                  to_string(spec.family).c_str(), spec.n, spec.R, sum.size(), rec["l2_norm"].get<double>(),
                  seconds_since(t0));
    } catch (const ResourceError& e) {
      std::cerr << "build " << job->name << ": resource error: " << e.what() << "\n";
      res.resource = true;
    } catch (const ConstructionError& e) {
      std::cerr << "build " << job->name << ": construction error: " << e.what() << "\n";
      res.resource = true;
    }
  }
  return res.code();
}

int cmd_check(const Options& o) {
  const config::RunConfig cfg = load_config(o, true);
  const fs::path dir = out_dir(o, cfg);
  std::string fault = o.fault_injection.empty() ? cfg.checks.fault_injection : o.fault_injection;
  if (fault != "none" && fault != "branch_sign")
    throw ConfigError("--fault-injection: must be \"none\" or \"branch_sign\"");
  checks::CheckOptions opt;
  if (fault == "branch_sign") opt.branch = collapse::detail::Branch::FlippedSign;

  std::vector<std::string> warnings;
  if (fault != "none") warnings.push_back("fault injection active: " + fault);
  if (cfg.checks.fixtures.empty()) warnings.push_back("0 checks: the fixture list is empty");
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

  std::vector<checks::CheckResult> all;
  for (const std::string& fx : cfg.checks.fixtures) {
    const auto t0 = std::chrono::steady_clock::now();
    auto results = checks::run_fixture(fx, opt);
    std::size_t failed = 0;
    for (const auto& r : results) {
      if (!r.passed) {
        ++failed;
        std::printf("FAIL %s / %s: residual %.3g > %.3g (expected %s, got %s)\n", r.fixture.c_str(), r.name.c_str(),
                    r.residual, r.tolerance, r.expected.c_str(), r.actual.c_str());
      }
    }
    std::printf("%s: %zu/%zu passed (%.2fs)\n", fx.c_str(), results.size() - failed, results.size(),
                seconds_since(t0));
    all.insert(all.end(), results.begin(), results.end());
  }
  const auto rep = report::check_report(all, fault, warnings);
  report::atomic_write(dir / "check.json", report::dump(rep));
  std::printf("%zu checks, %zu failed\n", all.size(), rep["failed"].get<std::size_t>());
  return rep["failed"].get<std::size_t>() == 0 ? kOk : kFailure;
}

int cmd_scan(const Options& o) {
  const config::RunConfig cfg = load_config(o, false);
  const fs::path dir = out_dir(o, cfg);
  const auto jobs = select_jobs(cfg, o, config::JobKind::Scan, "scan");
  if (jobs.empty()) std::cerr << "warning: no scan jobs selected\n";
  Outcome res;
  for (const config::Job* job : jobs) {
    ScanSpec spec = job->scan;
    if (o.seed) spec.family.seed = *o.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const ScalingReport rep = run_scan(spec);
      const auto doc = report::scan_report(job->name, rep);
      report::validate_report(nlohmann::json::parse(doc.dump()));
      report::atomic_write(dir / (job->name + ".scan.json"), report::dump(doc));
      report::atomic_write(dir / (job->name + ".scan.csv"), report::scan_csv(rep));
      report::atomic_write(dir / (job->name + ".plot.dat"), report::plot_data(rep));
      std::printf("scan %s: %s slope %.4f +- %.4f (predicted %.4f) verdict %s (%.1fs)\n", job->name.c_str(),
                  to_string(rep.family).c_str(), rep.fitted_slope, rep.slope_stderr, rep.predicted_slope,
                  to_string(rep.verdict).c_str(), seconds_since(t0));
      if (job->expect && *job->expect != rep.verdict && rep.verdict != Verdict::Inconclusive) {
        std::printf("FAIL %s: expected %s, got %s\n", job->name.c_str(), to_string(*job->expect).c_str(),
                    to_string(rep.verdict).c_str());
        res.failure = true;
      }
      if (rep.verdict == Verdict::Inconclusive) {
        if (job->required) {
          std::printf("INCONCLUSIVE %s (required)\n", job->name.c_str());
          res.inconclusive = true;
        } else {
          std::cerr << "warning: " << job->name << " is inconclusive\n";
        }
      }
    } catch (const ResourceError& e) {
      std::cerr << "scan " << job->name << ": resource error: " << e.what() << "\n";
      res.resource = true;
    } catch (const ConstructionError& e) {
      std::cerr << "scan " << job->name << ": construction error: " << e.what() << "\n";
      res.resource = true;
    }
  }
  return res.code();
}

int cmd_merge(const Options& o) {
  if (o.merge_inputs.empty()) throw ConfigError("report-merge: no scan reports given");
  std::vector<ScalingReport> reps;
  std::vector<std::string> names;
  for (const std::string& path : o.merge_inputs) {
    const nlohmann::json doc = report::read_json_file(path);
    reps.push_back(report::scan_from_json(doc));
    names.push_back(doc.at("job").get<std::string>());
  }
  const VerdictSummary sum = verdict_summary(reps);
  const auto doc = report::summary_report(names, sum);
  const fs::path dir = o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir);
  report::atomic_write(dir / "summary.json", report::dump(doc));
  std::printf("%-24s %-8s %6s %6s %9s %9s  %s\n", "job", "family", "p", "q", "slope", "predicted", "verdict");
  for (std::size_t i = 0; i < sum.rows.size(); ++i) {
    const SummaryRow& r = sum.rows[i];
    std::printf("%-24s %-8s %6g %6g %9.4f %9.4f  %s\n", names[i].c_str(), to_string(r.family).c_str(), r.p, r.q,
                r.fitted_slope, r.predicted_slope, to_string(r.verdict).c_str());
  }
  std::printf("%s\n", sum.conclusion.c_str());
  switch (sum.status) {
    case SuiteStatus::Pass: return kOk;
    case SuiteStatus::Partial: return kInconclusive;
    case SuiteStatus::Fail: return kFailure;
  }
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavepacket family builder and scaling scans"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "Run configuration (JSON)");
  app.add_option("--out", o.out_dir, "Output directory (overrides defaults.output_dir)");
  app.add_option("--threads", o.threads, "Worker thread cap (0 = all cores)");
  app.add_option("--seed", o.seed, "Override the placement seed of every selected job");

  auto* build = app.add_subcommand("build", "Build families and write summary records");
  build->add_option("--job", o.job, "Only this job");
  auto* check = app.add_subcommand("check", "Run oracle-equivalence and invariant suites");
  check->add_option("--fault-injection", o.fault_injection, "none | branch_sign");
  auto* scan = app.add_subcommand("scan", "Run scaling scans");
  scan->add_option("--job", o.job, "Only this job");
  auto* merge = app.add_subcommand("report-merge", "Merge scan reports into a verdict summary");
  merge->add_option("reports", o.merge_inputs, "Scan report JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  parallel::set_max_threads(o.threads);
  try {
    if (*build) return cmd_build(o);
    if (*check) return cmd_check(o);
    if (*scan) return cmd_scan(o);
    return cmd_merge(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kResource;
  } catch (const ConstructionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kResource;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kFailure;
  }
}
