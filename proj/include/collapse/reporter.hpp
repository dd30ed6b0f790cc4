#pragma once

// Report writers for the command-line front end. JSON documents carry
// "schema_version" and "kind"; validate_report() is the schema. CSV columns
// and the plot-data layout are fixed and documented in README.md.
//
// Requires nlohmann/json (vendor/json.hpp).

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "collapse/checks.hpp"
#include "collapse/errors.hpp"
#include "collapse/family_builder.hpp"
#include "collapse/gaussian_core.hpp"
#include "collapse/scaling_analyzer.hpp"

namespace collapse::report {

using nlohmann::json;
using nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline const char* const kScanCsvHeader = "R,lhs,rhs,ratio,lhs_converged,rhs_converged";
inline const char* const kTermsCsvHeader = "index,amplitude_re,amplitude_im,width,center,modulation";

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double round4(double x) { return std::round(x * 1e4) / 1e4 + 0.0; }

/// NaN (an unfittable scan) is written as null.
inline ordered_json slope(double x) { return std::isfinite(x) ? ordered_json(round4(x)) : ordered_json(nullptr); }

inline double slope_from(const json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); }

/// Exponents p, q may be infinite; JSON has no infinity, so they travel as "inf".
inline ordered_json exponent(double x) { return std::isinf(x) ? ordered_json("inf") : ordered_json(x); }

inline double exponent_from(const json& v) {
  if (v.is_string() && v.get<std::string>() == "inf") return kInfinity;
  return v.get<double>();
}

inline ordered_json log10_or_null(double x) { return x > 0.0 ? ordered_json(std::log10(x)) : ordered_json(nullptr); }

/// Writes via a temporary file in the same directory and renames it over the
/// target, so readers never see a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<unsigned long> counter{0};
  const auto dir = path.parent_path();
  std::error_code ec;
  if (!dir.empty()) std::filesystem::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create directory '" + dir.string() + "': " + ec.message(), 0);
  const std::filesystem::path tmp =
      path.string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write '" + tmp.string() + "'", 0);
    out << content;
    out.flush();
    if (!out) throw ResourceError("short write to '" + tmp.string() + "'", 0);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ResourceError("cannot rename into '" + path.string() + "': " + ec.message(), 0);
  }
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- build

inline ordered_json build_record(const FamilySpec& spec, const WavepacketSum& sum, const std::vector<double>& hs_orders,
                                 const QuadratureSpec& quad) {
  const PointCloud cloud = family_points(spec);
  double spacing;
  if (cloud.size() < 2)
    spacing = kInfinity;
  else if (cloud.constraint == AmbientConstraint::Ball)
    spacing = cloud.min_spacing;  // lattice spacing, exact by construction
  else
    spacing = min_pairwise_distance(cloud);

  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "build";
  j["family"] = to_string(spec.family);
  j["n"] = spec.n;
  j["R"] = spec.R;
  j["C"] = sum.meta().C;
  j["m"] = is_q_family(spec.family) ? ordered_json(spec.m) : ordered_json(nullptr);
  j["seed"] = spec.seed;
  j["term_count"] = sum.size();
  j["min_spacing"] = std::isinf(spacing) ? ordered_json(nullptr) : ordered_json(spacing);
  const double l2 = gram_l2_norm(sum);
  j["l2_norm"] = l2;
  j["log10_l2_norm"] = log10_or_null(l2);
  ordered_json hs = ordered_json::array();
  for (double s : hs_orders) {
    const double v = hs_norm(sum, s, quad);
    hs.push_back({{"s", s}, {"value", v}, {"log10_value", log10_or_null(v)}});
  }
  j["hs_norms"] = hs;
  return j;
}

/// One line per term: index, amplitude, width, then center and modulation as
/// ';'-joined coordinate lists.
inline std::string terms_csv(const WavepacketSum& sum) {
  std::ostringstream os;
  os << kTermsCsvHeader << "\n";
  auto join = [](const RealVec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
    return s;
  };
  for (std::size_t k = 0; k < sum.size(); ++k) {
    const GaussianTerm& t = sum.terms()[k];
    os << k << "," << num(t.amplitude.real()) << "," << num(t.amplitude.imag()) << "," << num(t.width) << ","
       << join(t.center) << "," << join(t.modulation) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- scan

inline ordered_json scan_report(const std::string& job, const ScalingReport& rep) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "scan";
  j["job"] = job;
  j["family"] = to_string(rep.family);
  j["n"] = rep.n;
  j["m"] = rep.m ? ordered_json(*rep.m) : ordered_json(nullptr);
  j["C"] = rep.C;
  j["p"] = exponent(rep.p);
  j["q"] = exponent(rep.q);
  j["alpha"] = rep.alpha;
  j["s"] = rep.s;
  j["region"] = rep.region_description;
  ordered_json recs = ordered_json::array();
  for (const ScanRecord& r : rep.records) {
    ordered_json o;
    o["R"] = r.R;
    o["term_count"] = r.term_count;
    o["lhs"] = r.lhs;
    o["rhs"] = r.rhs;
    o["ratio"] = r.ratio;
    o["log10_lhs"] = log10_or_null(r.lhs);
    o["log10_rhs"] = log10_or_null(r.rhs);
    o["log10_ratio"] = log10_or_null(r.ratio);
    o["lhs_converged"] = r.lhs_converged;
    o["rhs_converged"] = r.rhs_converged;
    o["lhs_rel_change"] = r.lhs_rel_change;
    o["rhs_rel_change"] = r.rhs_rel_change;
    recs.push_back(o);
  }
  j["records"] = recs;
  j["fitted_slope"] = slope(rep.fitted_slope);
  j["slope_stderr"] = slope(rep.slope_stderr);
  j["predicted_slope"] = round4(rep.predicted_slope);
  j["verdict"] = to_string(rep.verdict);
  j["all_converged"] = rep.all_converged;
  return j;
}

inline std::string scan_csv(const ScalingReport& rep) {
  std::ostringstream os;
  os << kScanCsvHeader << "\n";
  for (const ScanRecord& r : rep.records)
    os << num(r.R) << "," << num(r.lhs) << "," << num(r.rhs) << "," << num(r.ratio) << ","
       << (r.lhs_converged ? "true" : "false") << "," << (r.rhs_converged ? "true" : "false") << "\n";
  return os.str();
}

/// Two whitespace-separated columns: log10 R and log10 ratio.
inline std::string plot_data(const ScalingReport& rep) {
  std::ostringstream os;
  os << "# log10_R log10_ratio\n";
  for (const ScanRecord& r : rep.records)
    if (r.ratio > 0.0) os << num(std::log10(r.R)) << " " << num(std::log10(r.ratio)) << "\n";
  return os.str();
}

// ---------------------------------------------------------------- check

inline ordered_json check_report(const std::vector<checks::CheckResult>& results, const std::string& fault_injection,
                                 const std::vector<std::string>& warnings) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "check";
  j["fault_injection"] = fault_injection;
  std::size_t passed = 0;
  ordered_json arr = ordered_json::array();
  for (const checks::CheckResult& r : results) {
    passed += r.passed;
    arr.push_back({{"fixture", r.fixture},
                   {"name", r.name},
                   {"passed", r.passed},
                   {"residual", std::isfinite(r.residual) ? ordered_json(r.residual) : ordered_json(nullptr)},
                   {"tolerance", r.tolerance},
                   {"expected", r.expected},
                   {"actual", r.actual}});
  }
  j["total"] = results.size();
  j["passed"] = passed;
  j["failed"] = results.size() - passed;
  j["warnings"] = warnings;
  j["checks"] = arr;
  return j;
}

// ---------------------------------------------------------------- merge

inline ordered_json summary_report(const std::vector<std::string>& jobs, const VerdictSummary& sum) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "summary";
  j["status"] = to_string(sum.status);
  j["conclusion"] = sum.conclusion;
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < sum.rows.size(); ++i) {
    const SummaryRow& r = sum.rows[i];
    rows.push_back({{"job", jobs[i]},
                    {"family", to_string(r.family)},
                    {"p", exponent(r.p)},
                    {"q", exponent(r.q)},
                    {"verdict", to_string(r.verdict)},
                    {"fitted_slope", slope(r.fitted_slope)},
                    {"predicted_slope", round4(r.predicted_slope)},
                    {"expects_blow_up", r.expects_blow_up}});
  }
  j["rows"] = rows;
  return j;
}

// ---------------------------------------------------------------- schema

namespace detail {

class Validator {
 public:
  explicit Validator(const json& doc) : doc_(doc) {}

  const json& field(const json& obj, const std::string& path, const std::string& key) const {
    if (!obj.is_object()) bad(path, "must be an object");
    if (!obj.contains(key)) bad(path.empty() ? key : path + "." + key, "missing");
    return obj.at(key);
  }
  void number(const json& obj, const std::string& path, const std::string& key, bool nullable = false) const {
    const json& v = field(obj, path, key);
    if (v.is_number() || (nullable && v.is_null())) return;
    bad(join(path, key), nullable ? "must be a number or null" : "must be a number");
  }
  void exponent(const json& obj, const std::string& path, const std::string& key) const {
    const json& v = field(obj, path, key);
    if (v.is_number() || (v.is_string() && v.get<std::string>() == "inf")) return;
    bad(join(path, key), "must be a number or \"inf\"");
  }
  void integer(const json& obj, const std::string& path, const std::string& key, bool nullable = false) const {
    const json& v = field(obj, path, key);
    if (v.is_number_integer() || (nullable && v.is_null())) return;
    bad(join(path, key), "must be an integer");
  }
  void boolean(const json& obj, const std::string& path, const std::string& key) const {
    if (!field(obj, path, key).is_boolean()) bad(join(path, key), "must be a boolean");
  }
  void string(const json& obj, const std::string& path, const std::string& key) const {
    if (!field(obj, path, key).is_string()) bad(join(path, key), "must be a string");
  }
  void one_of(const json& obj, const std::string& path, const std::string& key,
              const std::vector<std::string>& allowed) const {
    string(obj, path, key);
    const std::string v = obj.at(key).get<std::string>();
    for (const std::string& a : allowed)
      if (a == v) return;
    bad(join(path, key), "unexpected value '" + v + "'");
  }
  const json& array(const json& obj, const std::string& path, const std::string& key) const {
    const json& v = field(obj, path, key);
    if (!v.is_array()) bad(join(path, key), "must be an array");
    return v;
  }

  [[noreturn]] void bad(const std::string& path, const std::string& msg) const {
    throw ValidationError("report field '" + path + "': " + msg);
  }
  static std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

 private:
  const json& doc_;
};

inline std::vector<std::string> verdict_names() {
  return {to_string(Verdict::BlowUp), to_string(Verdict::Bounded), to_string(Verdict::Inconclusive)};
}

inline std::vector<std::string> family_names() {
  return {"LambdaP", "LambdaQ", "GammaP", "GammaQ", "GP", "GQ"};
}

}  // namespace detail

/// Throws ValidationError naming the first offending field.
inline void validate_report(const json& doc) {
  const detail::Validator v(doc);
  v.integer(doc, "", "schema_version");
  if (doc.at("schema_version").get<int>() != kSchemaVersion) v.bad("schema_version", "unsupported version");
  v.one_of(doc, "", "kind", {"build", "scan", "check", "summary"});
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "build") {
    v.one_of(doc, "", "family", detail::family_names());
    v.integer(doc, "", "n");
    v.number(doc, "", "R");
    v.number(doc, "", "C");
    v.integer(doc, "", "m", true);
    v.integer(doc, "", "seed");
    v.integer(doc, "", "term_count");
    v.number(doc, "", "min_spacing", true);
    v.number(doc, "", "l2_norm");
    v.number(doc, "", "log10_l2_norm", true);
    const json& hs = v.array(doc, "", "hs_norms");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const std::string p = "hs_norms[" + std::to_string(i) + "]";
      v.number(hs[i], p, "s");
      v.number(hs[i], p, "value");
      v.number(hs[i], p, "log10_value", true);
    }
  } else if (kind == "scan") {
    v.string(doc, "", "job");
    v.one_of(doc, "", "family", detail::family_names());
    v.integer(doc, "", "n");
    v.integer(doc, "", "m", true);
    v.number(doc, "", "C");
    v.exponent(doc, "", "p");
    v.exponent(doc, "", "q");
    v.number(doc, "", "alpha");
    v.number(doc, "", "s");
    v.string(doc, "", "region");
    const json& recs = v.array(doc, "", "records");
    if (recs.size() < 3) v.bad("records", "needs at least 3 scales");
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const std::string p = "records[" + std::to_string(i) + "]";
      v.number(recs[i], p, "R");
      v.integer(recs[i], p, "term_count");
      for (const char* k : {"lhs", "rhs", "ratio", "lhs_rel_change", "rhs_rel_change"}) v.number(recs[i], p, k);
      for (const char* k : {"log10_lhs", "log10_rhs", "log10_ratio"}) v.number(recs[i], p, k, true);
      v.boolean(recs[i], p, "lhs_converged");
      v.boolean(recs[i], p, "rhs_converged");
    }
    v.number(doc, "", "fitted_slope", true);
    v.number(doc, "", "slope_stderr", true);
    v.number(doc, "", "predicted_slope");
    v.one_of(doc, "", "verdict", detail::verdict_names());
    v.boolean(doc, "", "all_converged");
  } else if (kind == "check") {
    v.one_of(doc, "", "fault_injection", {"none", "branch_sign"});
    v.integer(doc, "", "total");
    v.integer(doc, "", "passed");
    v.integer(doc, "", "failed");
    v.array(doc, "", "warnings");
    const json& cs = v.array(doc, "", "checks");
    if (cs.size() != doc.at("total").get<std::size_t>()) v.bad("total", "does not match the number of checks");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string p = "checks[" + std::to_string(i) + "]";
      v.string(cs[i], p, "fixture");
      v.string(cs[i], p, "name");
      v.boolean(cs[i], p, "passed");
      v.number(cs[i], p, "residual", true);
      v.number(cs[i], p, "tolerance");
      v.string(cs[i], p, "expected");
      v.string(cs[i], p, "actual");
    }
  } else {
    v.one_of(doc, "", "status", {"pass", "partial", "fail"});
    v.string(doc, "", "conclusion");
    const json& rows = v.array(doc, "", "rows");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string p = "rows[" + std::to_string(i) + "]";
      v.string(rows[i], p, "job");
      v.one_of(rows[i], p, "family", detail::family_names());
      v.exponent(rows[i], p, "p");
      v.exponent(rows[i], p, "q");
      v.one_of(rows[i], p, "verdict", detail::verdict_names());
      v.number(rows[i], p, "fitted_slope", true);
      v.number(rows[i], p, "predicted_slope");
      v.boolean(rows[i], p, "expects_blow_up");
    }
  }
}

/// Rebuilds the summary-relevant part of a ScalingReport from a scan report.
inline ScalingReport scan_from_json(const json& doc) {
  validate_report(doc);
  if (doc.at("kind") != "scan") throw ValidationError("report field 'kind': expected a scan report");
  ScalingReport r;
  r.family = family_from_string(doc.at("family").get<std::string>());
  r.n = doc.at("n").get<int>();
  if (!doc.at("m").is_null()) r.m = doc.at("m").get<int>();
  r.C = doc.at("C").get<double>();
  r.p = exponent_from(doc.at("p"));
  r.q = exponent_from(doc.at("q"));
  r.alpha = doc.at("alpha").get<double>();
  r.s = doc.at("s").get<double>();
  r.region_description = doc.at("region").get<std::string>();
  for (const json& o : doc.at("records")) {
    ScanRecord rec;
    rec.R = o.at("R").get<double>();
    rec.term_count = o.at("term_count").get<std::size_t>();
    rec.lhs = o.at("lhs").get<double>();
    rec.rhs = o.at("rhs").get<double>();
    rec.ratio = o.at("ratio").get<double>();
    rec.lhs_converged = o.at("lhs_converged").get<bool>();
    rec.rhs_converged = o.at("rhs_converged").get<bool>();
    rec.lhs_rel_change = o.at("lhs_rel_change").get<double>();
    rec.rhs_rel_change = o.at("rhs_rel_change").get<double>();
    r.records.push_back(rec);
  }
  r.fitted_slope = slope_from(doc.at("fitted_slope"));
  r.slope_stderr = slope_from(doc.at("slope_stderr"));
  r.predicted_slope = doc.at("predicted_slope").get<double>();
  r.verdict = verdict_from_string(doc.at("verdict").get<std::string>());
  r.all_converged = doc.at("all_converged").get<bool>();
  return r;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace collapse::report
