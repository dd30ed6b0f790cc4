#pragma once

// R-scans of the ratio ||diagonal trace||_{L^p L^q} / ||initial datum||_{H^s},
// log-log slope fits and the verdicts derived from them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "collapse/errors.hpp"
#include "collapse/family_builder.hpp"
#include "collapse/gaussian_core.hpp"
#include "collapse/norm_engine.hpp"
#include "collapse/types.hpp"

namespace collapse {

/// Ratio exponent implied by the lower bound on the trace and the upper bound
/// on the datum for each family.
inline double predicted_slope(FamilyKind family, double p, double q, int n, int m) {
  const double dn = n, dm = m;
  switch (family) {
    case FamilyKind::LambdaP:
    case FamilyKind::GammaP:
    case FamilyKind::GP: return 1.0 / (2.0 * p) - 0.25;
    case FamilyKind::LambdaQ:
    case FamilyKind::GammaQ: return dm * dn / q - dm * dn / 2.0 - dn / 4.0;
    case FamilyKind::GQ: return dm * dn / q - dm * dn / 2.0 - dn / 2.0;
    case FamilyKind::Custom: break;
  }
  throw ContractViolation("predicted_slope: custom family has no prediction");
}

enum class RegionPolicy { PRegion, QRegion, Custom };

inline std::string to_string(RegionPolicy r) {
  switch (r) {
    case RegionPolicy::PRegion: return "p-region";
    case RegionPolicy::QRegion: return "q-region";
    case RegionPolicy::Custom: return "custom";
  }
  return "custom";
}

inline RegionPolicy region_policy_from_string(const std::string& s) {
  for (RegionPolicy r : {RegionPolicy::PRegion, RegionPolicy::QRegion, RegionPolicy::Custom})
    if (to_string(r) == s) return r;
  throw ConfigError("unknown region policy '" + s + "' (expected p-region|q-region|custom)");
}

enum class Verdict { BlowUp, Bounded, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::BlowUp: return "blow-up-consistent";
    case Verdict::Bounded: return "bounded-consistent";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

inline Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::BlowUp, Verdict::Bounded, Verdict::Inconclusive})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown verdict '" + s + "'");
}

/// Sample counts used by the default p and q regions.
struct RegionResolution {
  int p_t_samples = 32;
  int p_x_samples = 8;
  double p_box_half_width = 0.01;
  int q_t_samples = 4;
  double q_x_density = 2.0;  // nodes per lattice spacing R^{1/2}
};

struct ScanSpec {
  FamilySpec family;
  std::vector<double> R_list;
  double p = 2.0;
  double q = 2.0;
  double alpha = 0.0;
  double s = 0.0;
  RegionPolicy policy = RegionPolicy::PRegion;
  std::optional<RegionSpec> custom_region;
  RegionResolution resolution;
  QuadratureSpec quad;
  FracDerivSpec deriv;  // alpha is taken from the field above
  double cull_tol = 1e-12;

  void validate() const {
    if (R_list.size() < 3) throw ConfigError("R_list: needs at least 3 scales");
    for (std::size_t i = 1; i < R_list.size(); ++i)
      if (!(R_list[i] > R_list[i - 1])) throw ConfigError("R_list: must be strictly increasing");
    if (!(p >= 1.0)) throw ConfigError("p: must be >= 1 or inf");
    if (!(q >= 1.0)) throw ConfigError("q: must be >= 1 or inf");
    if (!(alpha >= 0.0)) throw ConfigError("alpha: must be >= 0");
    if (!(s >= 0.0)) throw ConfigError("s: must be >= 0");
    if (policy == RegionPolicy::Custom && !custom_region)
      throw ConfigError("region: custom policy needs an explicit region");
    if (!(cull_tol > 0.0 && cull_tol <= 1e-6)) throw ConfigError("cull_tol: must lie in (0, 1e-6]");
    validate_quadrature(quad);
    FamilySpec f = family;
    f.R = R_list.front();
    f.validate();
  }

 private:
  static void validate_quadrature(const QuadratureSpec& q) { collapse::validate(q); }
};

/// The region a scan integrates over at scale R.
inline RegionSpec region_for(const ScanSpec& spec, double R) {
  const int n = spec.family.n;
  RegionSpec r;
  switch (spec.policy) {
    case RegionPolicy::PRegion: {
      const double h = spec.resolution.p_box_half_width;
      r.t0 = R - std::sqrt(R);
      r.t1 = R;
      r.box.assign(n, {-h, h});
      r.t_samples = spec.resolution.p_t_samples;
      r.x_samples = spec.resolution.p_x_samples;
      break;
    }
    case RegionPolicy::QRegion: {
      const double half = std::pow(R, spec.family.m) / std::sqrt(static_cast<double>(n));
      r.t0 = 0.0;
      r.t1 = 1.0;
      r.box.assign(n, {-half, half});
      r.t_samples = spec.resolution.q_t_samples;
      r.x_samples = std::max(
          8, static_cast<int>(std::ceil(spec.resolution.q_x_density * 2.0 * half / std::sqrt(R))));
      break;
    }
    case RegionPolicy::Custom: r = *spec.custom_region; break;
  }
  return r;
}

struct ScanRecord {
  double R = 0.0;
  std::size_t term_count = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool lhs_converged = true;
  bool rhs_converged = true;
  double lhs_rel_change = 0.0;
  double rhs_rel_change = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_ = 0.0;
};

/// Ordinary least squares of y on x with the standard error of the slope.
inline SlopeFit fit_slope(const RealVec& x, const RealVec& y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "fit_slope: need two or more matching points");
  const double n = static_cast<double>(x.size());
  const double mx = pairwise_sum(x) / n, my = pairwise_sum(y) / n;
  RealVec sxx(x.size()), sxy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx[i] = (x[i] - mx) * (x[i] - mx);
    sxy[i] = (x[i] - mx) * (y[i] - my);
  }
  const double Sxx = pairwise_sum(sxx);
  detail::require(Sxx > 0.0, "fit_slope: x values must not all coincide");
  SlopeFit f;
  f.slope = pairwise_sum(sxy) / Sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    RealVec res(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      res[i] = r * r;
    }
    f.stderr_ = std::sqrt(pairwise_sum(res) / (n - 2.0) / Sxx);
  }
  return f;
}

/// Slope of log(values) against log(R).
inline SlopeFit fit_log_log(const RealVec& R, const RealVec& values) {
  RealVec lx(R.size()), ly(values.size());
  for (std::size_t i = 0; i < R.size(); ++i) lx[i] = std::log(R[i]);
  for (std::size_t i = 0; i < values.size(); ++i) {
    detail::require(values[i] > 0.0, "fit_log_log: values must be positive");
    ly[i] = std::log(values[i]);
  }
  return fit_slope(lx, ly);
}

inline constexpr double kBoundedSlopeMargin = 0.05;

inline Verdict classify(double slope, double stderr_, bool converged) {
  if (!converged) return Verdict::Inconclusive;
  if (slope - 2.0 * stderr_ > 0.0) return Verdict::BlowUp;
  if (slope + 2.0 * stderr_ < kBoundedSlopeMargin) return Verdict::Bounded;
  return Verdict::Inconclusive;
}

struct ScalingReport {
  FamilyKind family = FamilyKind::LambdaP;
  int n = 1;
  std::optional<int> m;
  double C = 0.0;
  double p = 2.0, q = 2.0, alpha = 0.0, s = 0.0;
  std::string region_description;
  std::vector<ScanRecord> records;
  double fitted_slope = 0.0;
  double slope_stderr = 0.0;
  double predicted_slope = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  bool all_converged = true;
};

/// Region description stored in every report.
inline std::string region_description(const ScanSpec& spec) {
  switch (spec.policy) {
    case RegionPolicy::PRegion:
      return "p-region: t in [R - R^(1/2), R], |x_i| <= " + std::to_string(spec.resolution.p_box_half_width) +
             "; subregion norm minorizes the full space-time norm";
    case RegionPolicy::QRegion:
      return "q-region: t in [0, 1], |x_i| <= R^m / sqrt(n); subregion norm minorizes the full norm";
    case RegionPolicy::Custom: return "custom region";
  }
  return "custom region";
}

/// One scale of a scan: build, measure both sides, record convergence.
inline ScanRecord run_scale(const ScanSpec& spec, double R) {
  FamilySpec fs = spec.family;
  fs.R = R;
  const WavepacketSum sum = build_family(fs);
  MixedNormSpec ms;
  ms.p = spec.p;
  ms.q = spec.q;
  ms.region = region_for(spec, R);
  std::optional<FracDerivSpec> deriv;
  if (spec.alpha != 0.0) {
    deriv = spec.deriv;
    deriv->alpha = spec.alpha;
  }
  const MixedNormResult lhs = mixed_norm(sum, ms, deriv, spec.cull_tol);
  const double rhs = hs_norm(sum, spec.s, spec.quad);
  const double rhs_fine = hs_norm(sum, spec.s, spec.quad.refined());

  ScanRecord rec;
  rec.R = R;
  rec.term_count = sum.size();
  rec.lhs = lhs.value;
  rec.rhs = rhs;
  rec.ratio = lhs.value / rhs;
  rec.lhs_converged = lhs.converged;
  rec.lhs_rel_change = lhs.rel_change;
  rec.rhs_rel_change = std::abs(rhs_fine - rhs) / std::max(std::abs(rhs_fine), 1e-300);
  rec.rhs_converged = rec.rhs_rel_change <= kConvergenceTolerance;
  return rec;
}

/// Full scan: per-R records, OLS slope of log ratio on log R, verdict.
inline ScalingReport run_scan(const ScanSpec& spec) {
  spec.validate();
  ScalingReport rep;
  rep.family = spec.family.family;
  rep.n = spec.family.n;
  if (is_q_family(spec.family.family)) rep.m = spec.family.m;
  rep.C = spec.family.C ? *spec.family.C : calibrated_tube_constant(signature_for(spec.family.family, spec.family.n));
  rep.p = spec.p;
  rep.q = spec.q;
  rep.alpha = spec.alpha;
  rep.s = spec.s;
  rep.region_description = region_description(spec);
  rep.predicted_slope = predicted_slope(spec.family.family, spec.p, spec.q, spec.family.n, spec.family.m);
  RealVec Rs, ratios;
  for (double R : spec.R_list) {
    rep.records.push_back(run_scale(spec, R));
    const ScanRecord& r = rep.records.back();
    rep.all_converged = rep.all_converged && r.lhs_converged && r.rhs_converged;
    Rs.push_back(R);
    ratios.push_back(r.ratio);
  }
  // A ratio that underflowed (region far from where the family lives) has
  // no logarithm; such a scan cannot be classified.
  const bool fittable =
      std::all_of(ratios.begin(), ratios.end(), [](double r) { return r > 0.0 && std::isfinite(r); });
  if (!fittable) {
    rep.fitted_slope = rep.slope_stderr = std::numeric_limits<double>::quiet_NaN();
    rep.verdict = Verdict::Inconclusive;
    return rep;
  }
  const SlopeFit fit = fit_log_log(Rs, ratios);
  rep.fitted_slope = fit.slope;
  rep.slope_stderr = fit.stderr_;
  rep.verdict = classify(fit.slope, fit.stderr_, rep.all_converged);
  return rep;
}

enum class SuiteStatus { Pass, Partial, Fail };

inline std::string to_string(SuiteStatus s) {
  switch (s) {
    case SuiteStatus::Pass: return "pass";
    case SuiteStatus::Partial: return "partial";
    case SuiteStatus::Fail: return "fail";
  }
  return "fail";
}

struct SummaryRow {
  FamilyKind family;
  double p, q;
  Verdict verdict;
  double fitted_slope, predicted_slope;
  bool expects_blow_up;  // p < 2 or q < 2
};

struct VerdictSummary {
  std::vector<SummaryRow> rows;
  SuiteStatus status = SuiteStatus::Pass;
  std::string conclusion;
};

/// Matrix of verdicts and the suite-level conclusion. Rows with p < 2 or
/// q < 2 must be blow-up-consistent; rows with p, q >= 2 must not be. Any
/// inconclusive row makes the suite partial.
inline VerdictSummary verdict_summary(const std::vector<ScalingReport>& reports) {
  detail::require(!reports.empty(), "verdict_summary: no reports");
  VerdictSummary out;
  bool any_wrong = false, any_inconclusive = false;
  for (const ScalingReport& r : reports) {
    const bool expects = r.p < 2.0 || r.q < 2.0;
    out.rows.push_back({r.family, r.p, r.q, r.verdict, r.fitted_slope, r.predicted_slope, expects});
    if (r.verdict == Verdict::Inconclusive)
      any_inconclusive = true;
    else if (expects != (r.verdict == Verdict::BlowUp))
      any_wrong = true;
  }
  out.status = any_wrong ? SuiteStatus::Fail : any_inconclusive ? SuiteStatus::Partial : SuiteStatus::Pass;
  switch (out.status) {
    case SuiteStatus::Pass:
      out.conclusion = "pass: every p < 2 or q < 2 row is blow-up-consistent and no p, q >= 2 row is";
      break;
    case SuiteStatus::Partial: out.conclusion = "partial: some rows are inconclusive"; break;
    case SuiteStatus::Fail: out.conclusion = "fail: at least one row contradicts the expected verdict"; break;
  }
  return out;
}

}  // namespace collapse
