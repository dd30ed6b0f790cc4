#pragma once

// Run configuration: a versioned JSON document with defaults, named jobs and
// the fixture list used by `check`. See README.md for the schema.
//
// Requires nlohmann/json (vendor/json.hpp).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "collapse/errors.hpp"
#include "collapse/family_builder.hpp"
#include "collapse/scaling_analyzer.hpp"

namespace collapse::config {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class JobKind { Build, Scan };

struct Job {
  std::string name;
  JobKind kind = JobKind::Scan;
  bool required = false;
  std::optional<Verdict> expect;  // scan jobs: verdict the job must reach
  FamilySpec family;              // build jobs use family.R
  ScanSpec scan;                  // scan jobs
  bool write_terms = false;       // build jobs: also emit the term list
};

struct Defaults {
  std::optional<double> C;
  double cull_tol = 1e-12;
  QuadratureSpec quadrature;
  RegionResolution region;
  FracDerivSpec frac_deriv;
  std::size_t q_cap = std::size_t{1} << 20;
  std::string output_dir = "out";
  std::vector<double> hs_orders{0.0, 1.0, 2.0};
};

inline const std::vector<std::string>& all_fixtures() {
  static const std::vector<std::string> names{"oracle-lambda", "oracle-gamma", "oracle-g", "inner-product",
                                              "invariants"};
  return names;
}

struct CheckSettings {
  std::vector<std::string> fixtures = all_fixtures();
  std::string fault_injection = "none";  // none | branch_sign
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  Defaults defaults;
  std::vector<Job> jobs;
  CheckSettings checks;

  const Job& job(const std::string& name) const {
    for (const Job& j : jobs)
      if (j.name == name) return j;
    throw ConfigError("job '" + name + "' not found in config");
  }
};

namespace detail {

// Field-path aware readers: every error names the JSON path of the field.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "must be an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("config field '" + join(key) + "': " + msg);
  }

  std::string join(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }
  const json& raw(const std::string& key) const {
    used_.insert(key);
    return node_.at(key);
  }

  double number(const std::string& key, double def, double lo = -kInfinity, double hi = kInfinity) const {
    used_.insert(key);
    if (!has(key)) return def;
    return number_value(node_.at(key), key, lo, hi);
  }

  double number_value(const json& v, const std::string& key, double lo, double hi) const {
    double x;
    if (v.is_number()) {
      x = v.get<double>();
    } else if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
      x = kInfinity;
    } else {
      fail(key, "must be a number");
    }
    if (!(x >= lo && x <= hi))
      fail(key, "value " + format(x) + " outside the documented range [" + format(lo) + ", " + format(hi) + "]");
    return x;
  }

  std::optional<double> optional_number(const std::string& key, double lo, double hi) const {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return number_value(node_.at(key), key, lo, hi);
  }

  int integer(const std::string& key, int def, int lo, int hi) const {
    used_.insert(key);
    if (!has(key)) return def;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi)
      fail(key, "value " + std::to_string(x) + " outside the documented range [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
    return static_cast<int>(x);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) const {
    used_.insert(key);
    if (!has(key)) return def;
    const json& v = node_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(key, "must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) const {
    used_.insert(key);
    if (!has(key)) return def;
    if (!node_.at(key).is_boolean()) fail(key, "must be true or false");
    return node_.at(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) const {
    used_.insert(key);
    if (!has(key)) return def;
    if (!node_.at(key).is_string()) fail(key, "must be a string");
    return node_.at(key).get<std::string>();
  }

  RealVec numbers(const std::string& key, const RealVec& def, double lo = -kInfinity, double hi = kInfinity) const {
    used_.insert(key);
    if (!has(key)) return def;
    const json& v = node_.at(key);
    if (!v.is_array()) fail(key, "must be an array of numbers");
    RealVec out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(number_value(v[i], key + "[" + std::to_string(i) + "]", lo, hi));
    return out;
  }

  Reader child(const std::string& key) const {
    used_.insert(key);
    return Reader(node_.at(key), join(key));
  }

  /// Rejects keys that were never read (typos would otherwise be silent).
  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!used_.count(it.key())) fail(it.key(), "unknown field");
  }

  const std::string& path() const { return path_; }

  static std::string format(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << x;
    return os.str();
  }

 private:
  const json& node_;
  std::string path_;
  mutable std::set<std::string> used_;
};

inline QuadratureSpec read_quadrature(const Reader& r, const QuadratureSpec& base) {
  QuadratureSpec q = base;
  q.order = r.integer("order", q.order, 2, 64);
  q.panels = r.integer("panels", q.panels, 1, 256);
  q.padding = r.number("padding", q.padding, kMinFrequencyPadding, 64.0);
  q.pair_cull_exponent = r.number("pair_cull_exponent", q.pair_cull_exponent, 40.0, 700.0);
  r.finish();
  return q;
}

inline RegionResolution read_resolution(const Reader& r, const RegionResolution& base) {
  RegionResolution res = base;
  res.p_t_samples = r.integer("p_t_samples", res.p_t_samples, 2, 1 << 16);
  res.p_x_samples = r.integer("p_x_samples", res.p_x_samples, 2, 1 << 16);
  res.p_box_half_width = r.number("p_box_half_width", res.p_box_half_width, 1e-9, 1e6);
  res.q_t_samples = r.integer("q_t_samples", res.q_t_samples, 2, 1 << 16);
  res.q_x_density = r.number("q_x_density", res.q_x_density, 0.1, 64.0);
  r.finish();
  return res;
}

inline FracDerivSpec read_frac_deriv(const Reader& r, const FracDerivSpec& base) {
  FracDerivSpec d = base;
  d.freq_box_padding = r.number("freq_box_padding", d.freq_box_padding, 1.0, 64.0);
  d.freq_samples = r.integer("freq_samples", d.freq_samples, 16, 4096);
  r.finish();
  return d;
}

inline FamilySpec read_family(const Reader& r, const Defaults& d, bool need_R) {
  FamilySpec f;
  if (!r.has("family")) r.fail("family", "is required");
  try {
    f.family = family_from_string(r.string("family", ""));
  } catch (const ConfigError& e) {
    r.fail("family", e.what());
  }
  if (f.family == FamilyKind::Custom) r.fail("family", "custom families cannot be built from config");
  f.n = r.integer("n", 1, 1, 8);
  if (need_R) {
    if (!r.has("R")) r.fail("R", "is required for build jobs");
    f.R = r.number("R", 64.0, 4.0, 1e9);
  } else if (r.has("R")) {
    r.fail("R", "scan jobs take scales from R_list");
  }
  f.C = r.optional_number("C", 1.0, 1e6);
  if (!f.C) f.C = d.C;
  f.m = r.integer("m", 1, 1, 16);
  f.direction = r.numbers("direction", {});
  if (!f.direction.empty()) {
    if (static_cast<int>(f.direction.size()) != f.n) r.fail("direction", "must have n entries");
    if (std::abs(std::sqrt(norm2(f.direction)) - 1.0) > 1e-12) r.fail("direction", "must be a unit vector");
  }
  f.coordinate_floor = r.boolean("coordinate_floor", true);
  f.seed = r.unsigned_integer("seed", 0);
  f.q_cap = static_cast<std::size_t>(r.unsigned_integer("q_cap", d.q_cap));
  r.finish();
  return f;
}

inline RegionSpec read_custom_region(const Reader& r) {
  RegionSpec reg;
  reg.t0 = r.number("t0", 0.0);
  reg.t1 = r.number("t1", 1.0);
  const json& box = r.raw("box");
  if (!box.is_array() || box.empty()) r.fail("box", "must be a nonempty array of [lo, hi] pairs");
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (!box[i].is_array() || box[i].size() != 2 || !box[i][0].is_number() || !box[i][1].is_number())
      r.fail("box[" + std::to_string(i) + "]", "must be a [lo, hi] pair");
    reg.box.emplace_back(box[i][0].get<double>(), box[i][1].get<double>());
  }
  reg.t_samples = r.integer("t_samples", 32, 2, 1 << 16);
  reg.x_samples = r.integer("x_samples", 8, 2, 1 << 20);
  try {
    reg.t_rule = rule_kind_from_string(r.string("t_rule", "midpoint"));
  } catch (const ConfigError& e) {
    r.fail("t_rule", e.what());
  }
  try {
    reg.x_rule = rule_kind_from_string(r.string("x_rule", "gauss-legendre"));
  } catch (const ConfigError& e) {
    r.fail("x_rule", e.what());
  }
  r.finish();
  try {
    reg.validate();
  } catch (const ConfigError& e) {
    r.fail("", e.what());
  }
  return reg;
}

inline Job read_job(const Reader& r, const Defaults& d) {
  Job job;
  job.name = r.string("name", "");
  if (job.name.empty()) r.fail("name", "is required and must be nonempty");
  for (char c : job.name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
      r.fail("name", "may only contain letters, digits, '-', '_' and '.'");
  const std::string kind = r.string("kind", "");
  if (kind == "build")
    job.kind = JobKind::Build;
  else if (kind == "scan")
    job.kind = JobKind::Scan;
  else
    r.fail("kind", "must be \"build\" or \"scan\"");
  job.required = r.boolean("required", false);
  if (!r.has("family")) r.fail("family", "is required");
  job.family = read_family(r.child("family"), d, job.kind == JobKind::Build);
  if (job.kind == JobKind::Build) {
    job.write_terms = r.boolean("write_terms", false);
    try {
      job.family.validate();
    } catch (const ConfigError& e) {
      r.fail("family", e.what());
    }
  } else {
    ScanSpec& s = job.scan;
    s.family = job.family;
    s.R_list = r.numbers("R_list", {}, 4.0, 1e9);
    s.p = r.number("p", 2.0, 1.0, kInfinity);
    s.q = r.number("q", 2.0, 1.0, kInfinity);
    s.alpha = r.number("alpha", 0.0, 0.0, 64.0);
    s.s = r.number("s", 0.0, 0.0, 64.0);
    s.cull_tol = d.cull_tol;
    s.quad = d.quadrature;
    s.resolution = d.region;
    s.deriv = d.frac_deriv;
    if (r.has("region")) {
      const json& reg = r.raw("region");
      if (reg.is_string()) {
        try {
          s.policy = region_policy_from_string(reg.get<std::string>());
        } catch (const ConfigError& e) {
          r.fail("region", e.what());
        }
        if (s.policy == RegionPolicy::Custom) r.fail("region", "a custom region must be given as an object");
      } else {
        s.policy = RegionPolicy::Custom;
        s.custom_region = read_custom_region(r.child("region"));
      }
    } else {
      s.policy = is_q_family(s.family.family) ? RegionPolicy::QRegion : RegionPolicy::PRegion;
    }
    if (r.has("expect")) {
      try {
        job.expect = verdict_from_string(r.string("expect", ""));
      } catch (const ConfigError& e) {
        r.fail("expect", e.what());
      }
    }
    try {
      s.validate();
    } catch (const ConfigError& e) {
      r.fail("", e.what());
    }
  }
  r.finish();
  return job;
}

}  // namespace detail

/// Parses and validates a configuration document.
inline RunConfig parse(const json& doc) {
  detail::Reader root(doc, "");
  RunConfig cfg;
  cfg.schema_version = root.integer("schema_version", -1, -1, 1 << 20);
  if (cfg.schema_version != kSchemaVersion)
    root.fail("schema_version", "must be " + std::to_string(kSchemaVersion) + " (got " +
                                    std::to_string(cfg.schema_version) + ")");
  if (root.has("defaults")) {
    const detail::Reader d = root.child("defaults");
    Defaults& def = cfg.defaults;
    def.C = d.optional_number("C", 1.0, 1e6);
    def.cull_tol = d.number("cull_tol", def.cull_tol, 1e-300, 1e-6);
    if (d.has("quadrature")) def.quadrature = detail::read_quadrature(d.child("quadrature"), def.quadrature);
    if (d.has("region")) def.region = detail::read_resolution(d.child("region"), def.region);
    if (d.has("frac_deriv")) def.frac_deriv = detail::read_frac_deriv(d.child("frac_deriv"), def.frac_deriv);
    def.frac_deriv.cull_tol = def.cull_tol;
    def.q_cap = static_cast<std::size_t>(d.unsigned_integer("q_cap", def.q_cap));
    if (def.q_cap < 1) d.fail("q_cap", "must be >= 1");
    def.output_dir = d.string("output_dir", def.output_dir);
    def.hs_orders = d.numbers("hs_orders", def.hs_orders, 0.0, 64.0);
    d.finish();
  }
  if (root.has("jobs")) {
    const json& jobs = root.raw("jobs");
    if (!jobs.is_array()) root.fail("jobs", "must be an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      Job job = detail::read_job(detail::Reader(jobs[i], "jobs[" + std::to_string(i) + "]"), cfg.defaults);
      if (!names.insert(job.name).second)
        throw ConfigError("config field 'jobs[" + std::to_string(i) + "].name': duplicate job name '" + job.name +
                          "'");
      cfg.jobs.push_back(std::move(job));
    }
  }
  if (root.has("checks")) {
    const detail::Reader c = root.child("checks");
    if (c.has("fixtures")) {
      const json& fx = c.raw("fixtures");
      if (!fx.is_array()) c.fail("fixtures", "must be an array of fixture names");
      cfg.checks.fixtures.clear();
      std::set<std::string> seen;
      for (std::size_t i = 0; i < fx.size(); ++i) {
        const std::string key = "fixtures[" + std::to_string(i) + "]";
        if (!fx[i].is_string()) c.fail(key, "must be a string");
        const std::string name = fx[i].get<std::string>();
        const auto& known = all_fixtures();
        if (std::find(known.begin(), known.end(), name) == known.end())
          c.fail(key, "unknown fixture '" + name + "'");
        if (!seen.insert(name).second) c.fail(key, "duplicate fixture '" + name + "'");
        cfg.checks.fixtures.push_back(name);
      }
    }
    cfg.checks.fault_injection = c.string("fault_injection", "none");
    if (cfg.checks.fault_injection != "none" && cfg.checks.fault_injection != "branch_sign")
      c.fail("fault_injection", "must be \"none\" or \"branch_sign\"");
    c.finish();
  }
  root.finish();
  return cfg;
}

/// Parses text; JSON syntax errors carry the line and column.
inline RunConfig parse_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  return parse(doc);
}

inline RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace collapse::config
