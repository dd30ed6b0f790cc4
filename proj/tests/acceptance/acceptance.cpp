// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "collapse/checks.hpp"
#include "collapse/family_builder.hpp"
#include "collapse/gaussian_core.hpp"
#include "collapse/norm_engine.hpp"
#include "collapse/scaling_analyzer.hpp"
#include "collapse/spectral_oracle.hpp"

using namespace collapse;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;  // <= 0: no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void note(Outcome& o, bool ok, const std::string& what) {
  if (!ok) o.ok = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += (ok ? "" : "!") + what;
}

// -- 1: closed form vs the spectral propagator ------------------------------

Outcome oracle_equivalence() {
  Outcome o;
  double worst = 0.0;
  for (auto fx : {checks::oracle_lambda, checks::oracle_gamma, checks::oracle_g})
    for (const auto& r : fx({})) {
      worst = std::max(worst, r.residual);
      if (!r.passed) note(o, false, r.fixture + " " + r.name + fmt(" %.2e", r.residual));
    }
  // the first term of each p-family at R = 8, C = 4
  for (FamilyKind k : {FamilyKind::LambdaP, FamilyKind::GammaP, FamilyKind::GP}) {
    FamilySpec spec;
    spec.family = k;
    spec.R = 8.0;
    spec.C = 4.0;
    const WavepacketSum fam = build_family(spec);
    const WavepacketSum one(fam.signature(), {fam.terms().front()}, fam.meta());
    const oracle::GridSpec grid{56.0, 128, one.dim()};
    const oracle::Samples initial = oracle::sample(one, grid);
    for (double t : {1.0, 4.0, 8.0}) {
      const double e = oracle::max_relative_error_vs_closed_form(
          one, t, grid, oracle::spectral_evolve(initial, one.signature(), t, grid));
      worst = std::max(worst, e);
      if (e > 1e-6) note(o, false, to_string(k) + fmt(" t=%g", t) + fmt(" %.2e", e));
    }
  }
  note(o, worst <= 1e-6, fmt("max rel error %.2e <= 1e-6", worst));
  return o;
}

// -- 2: inner products ------------------------------------------------------

Outcome orthogonality() {
  Outcome o;
  double worst = 0.0, tube = 0.0;
  for (const auto& r : checks::inner_product_fixture(7, 20)) {
    if (r.name.rfind("identical", 0) == 0)
      tube = r.residual;
    else
      worst = std::max(worst, r.residual);
  }
  note(o, worst <= 1e-8, fmt("20 pairs max rel error %.2e <= 1e-8", worst));
  note(o, tube <= 4 * std::numeric_limits<double>::epsilon(), fmt("identical tube vs pi C R rel %.1e", tube));
  return o;
}

// -- 3: tube reality ----------------------------------------------------------

// Per-coordinate free propagator of exp(-x^2/(2w)): (1 + s i t/w)^{-1/2}
// exp(-x^2 / (2 (w + s i t))), principal square root.
cplx tube_by_coordinates(const BlockSignature& sig, double w, double t, const RealVec& x) {
  cplx v = 1.0;
  std::size_t off = 0;
  for (const Block& b : sig.blocks()) {
    for (int i = 0; i < b.dim; ++i, ++off) {
      const cplx z(w, b.sign * t);
      v *= std::exp(-x[off] * x[off] / (2.0 * z)) / std::sqrt(z / w);
    }
  }
  return v;
}

Outcome tube_reality() {
  Outcome o;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif;
  std::size_t violations = 0, samples = 0;
  double min_re = kInfinity, max_disagree = 0.0;
  for (int n : {1, 2, 3})
    for (double R : {16.0, 64.0})
      for (const BlockSignature& sig : {BlockSignature::lambda(n), BlockSignature::gamma(n), BlockSignature::g(n)}) {
        const double C = calibrated_tube_constant(sig);
        GaussianTerm tube;
        tube.width = C * R;
        tube.center.assign(sig.total_dim(), 0.0);
        tube.modulation.assign(sig.total_dim(), 0.0);
        for (int k = 0; k < 1000; ++k) {
          const double t = R * unif(rng);
          RealVec x(sig.total_dim());
          for (std::size_t b = 0; b < sig.blocks().size(); ++b) {
            // uniform in the block ball of radius R^{1/2}, every third sample on its boundary
            RealVec u(n);
            for (double& c : u) c = gauss(rng);
            const double norm = std::sqrt(norm2(u));
            const double rad = std::sqrt(R) * (k % 3 == 0 ? 1.0 : std::pow(unif(rng), 1.0 / n));
            for (int i = 0; i < n; ++i) x[b * n + i] = rad * u[i] / norm;
          }
          const cplx lib = evolve_eval(tube, sig, t, x);
          const cplx ref = tube_by_coordinates(sig, tube.width, t, x);
          max_disagree = std::max(max_disagree, std::abs(lib - ref));
          min_re = std::min(min_re, lib.real());
          if (lib.real() < 0.5 || ref.real() < 0.5) ++violations;
          ++samples;
        }
      }
  note(o, violations == 0, std::to_string(violations) + " violations in " + std::to_string(samples) + " samples");
  note(o, true, fmt("min Re %.4f", min_re));
  note(o, max_disagree <= 1e-12, fmt("library vs per-coordinate propagator %.1e", max_disagree));
  return o;
}

// -- 4: H^s slopes --------------------------------------------------------------

Outcome hs_slopes() {
  Outcome o;
  RealVec Rs;
  std::vector<RealVec> norms(3);
  double plancherel = 0.0;
  for (int k = 6; k <= 12; ++k) {
    FamilySpec spec;
    spec.R = std::ldexp(1.0, k);
    const WavepacketSum sum = build_family(spec);
    Rs.push_back(spec.R);
    for (int s = 0; s <= 2; ++s) norms[s].push_back(hs_norm(sum, s));
    const double l2 = gram_l2_norm(sum);
    plancherel = std::max(plancherel, std::abs(norms[0].back() - l2) / l2);
  }
  double lo = kInfinity, hi = -kInfinity;
  for (int s = 0; s <= 2; ++s) {
    const double slope = fit_log_log(Rs, norms[s]).slope;
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
    note(o, slope <= 0.85, "s=" + std::to_string(s) + fmt(" slope %.4f <= 0.85", slope));
  }
  note(o, hi - lo <= 0.05, fmt("spread %.4f <= 0.05", hi - lo));
  note(o, plancherel <= 1e-6, fmt("s=0 vs Gram norm %.1e", plancherel));
  return o;
}

// -- 5: diagonal lower bound ----------------------------------------------------

Outcome diagonal_lower_bound() {
  Outcome o;
  std::mt19937_64 rng(53);
  for (auto [k, R] : {std::pair{FamilyKind::LambdaP, 1024.0}, {FamilyKind::GammaP, 256.0}, {FamilyKind::GP, 256.0}}) {
    FamilySpec spec;
    spec.family = k;
    spec.R = R;
    const WavepacketSum sum = build_family(spec);
    const int blocks = static_cast<int>(sum.signature().blocks().size());
    std::uniform_real_distribution<double> ut(R - std::sqrt(R), R), ux(-0.01, 0.01);
    double worst = kInfinity;
    for (int i = 0; i < 200; ++i) {
      const double t = ut(rng), x = ux(rng);
      const RealVec point(blocks, x);  // n = 1: every block variable equal to x
      worst = std::min(worst, std::abs(evolve_eval(sum, t, point)));
    }
    const double ratio = worst / sum.size();
    note(o, ratio >= 0.25, to_string(k) + fmt(" R=%g", R) + fmt(" min|.|/N %.3f >= 0.25", ratio));
  }
  return o;
}

// -- 6, 7: necessity trends -------------------------------------------------------

ScalingReport scan(FamilyKind k, RealVec R_list, double p, double q, int m = 1) {
  ScanSpec spec;
  spec.family.family = k;
  spec.family.m = m;
  spec.R_list = std::move(R_list);
  spec.p = p;
  spec.q = q;
  spec.policy = is_q_family(k) ? RegionPolicy::QRegion : RegionPolicy::PRegion;
  return run_scan(spec);
}

Outcome p_necessity() {
  Outcome o;
  for (double p : {1.0, 1.5, 2.0, 4.0}) {
    const ScalingReport r = scan(FamilyKind::LambdaP, {256, 512, 1024, 2048, 4096}, p, 2.0);
    const double expected = 1.0 / (2.0 * p) - 0.25;
    const bool slope_ok = std::abs(r.fitted_slope - expected) <= 0.08;
    const bool verdict_ok = p < 2.0 ? r.verdict == Verdict::BlowUp : r.verdict != Verdict::BlowUp;
    note(o, slope_ok && verdict_ok,
         fmt("p=%g ", p) + fmt("slope %.4f ", r.fitted_slope) + fmt("(exp %.4f) ", expected) + to_string(r.verdict));
  }
  return o;
}

Outcome q_necessity() {
  Outcome o;
  const int n = 1, m = 2;
  for (FamilyKind k : {FamilyKind::LambdaQ, FamilyKind::GammaQ, FamilyKind::GQ})
    for (double q : {1.0, 2.0}) {
      const ScalingReport r = scan(k, {32, 64, 128, 256}, 2.0, q, m);
      const double offset = k == FamilyKind::GQ ? n / 2.0 : n / 4.0;
      const double expected = m * n / q - m * n / 2.0 - offset;
      const bool ok = (r.fitted_slope > 0.0) == (expected > 0.0) && r.all_converged;
      note(o, ok, to_string(k) + fmt(" q=%g ", q) + fmt("slope %.4f ", r.fitted_slope) + fmt("(exp %.4f)", expected));
    }
  return o;
}

// -- 8: Littlewood-Paley tail ------------------------------------------------------

Outcome lp_tail() {
  Outcome o;
  const double cutoff = 10.0;
  for (double R : {64.0, 256.0}) {
    FamilySpec spec;
    spec.R = R;
    const WavepacketSum sum = build_family(spec);
    const FrequencySplit split = lp_split(sum, cutoff);
    // Independent bound: |what_k|^2 is a Gaussian of variance 1/(2w) per axis
    // around mu_k, so ||P_> g_k||^2 <= ||g_k||^2 exp(-w (c - |mu_k|)^2) in
    // d = 2, and ||P_> g|| <= sum_k ||P_> g_k||.
    const double w = sum.width();
    RealVec logs;
    for (const GaussianTerm& t : sum.terms()) {
      const double gap = cutoff - std::sqrt(norm2(t.modulation));
      logs.push_back(std::log(std::abs(t.amplitude) * std::sqrt(kPi * w)) - 0.5 * w * gap * gap);
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - top);
    const double log_bound = 2.0 * (top + std::log(acc)) - 2.0 * std::log(gram_l2_norm(sum));
    const double log10_target = -std::sqrt(R) / std::log(10.0);
    const double log10_bound = log_bound / std::log(10.0);
    note(o, split.high_fraction() <= std::exp(-std::sqrt(R)) && log10_bound <= log10_target,
         fmt("R=%g ", R) + fmt("fraction %.2e ", split.high_fraction()) + fmt("bound 1e%.0f ", log10_bound) +
             fmt("<= 1e%.2f", log10_target));
  }
  return o;
}

// -- 9: invariant suites -------------------------------------------------------------

Outcome invariant_suites() {
  Outcome o;
  const auto results = checks::invariants_fixture();
  std::size_t passed = 0;
  for (const auto& r : results) {
    passed += r.passed;
    if (!r.passed) note(o, false, r.name + fmt(" residual %.2e", r.residual));
  }
  note(o, passed == results.size(), std::to_string(passed) + "/" + std::to_string(results.size()) + " invariants");
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", 30.0, oracle_equivalence},
      {2, "orthogonality formula", 10.0, orthogonality},
      {3, "tube reality", 0.0, tube_reality},
      {4, "H^s slope", 120.0, hs_slopes},
      {5, "diagonal lower bound", 60.0, diagonal_lower_bound},
      {6, "p-necessity trend", 600.0, p_necessity},
      {7, "q-necessity trend", 600.0, q_necessity},
      {8, "Littlewood-Paley tail", 0.0, lp_tail},
      {9, "invariant suites", 300.0, invariant_suites},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_seconds <= 0.0 || secs <= c.budget_seconds;
    const bool ok = o.ok && in_time;
    failures += !ok;
    std::string timing = fmt("%.1fs", secs);
    if (c.budget_seconds > 0.0) timing += fmt(" / %.0fs", c.budget_seconds);
    std::printf("%s %d %s [%s] %s\n", ok ? "PASS" : "FAIL", c.id, c.title.c_str(), timing.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
