#pragma once

// Oracle-equivalence and invariant suites run by `collapse check`.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "collapse/family_builder.hpp"
#include "collapse/gaussian_core.hpp"
#include "collapse/norm_engine.hpp"
#include "collapse/scaling_analyzer.hpp"
#include "collapse/spectral_oracle.hpp"

namespace collapse::checks {

struct CheckResult {
  std::string fixture;
  std::string name;
  bool passed = false;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string expected;  // the two values that were compared
  std::string actual;
  double seconds = 0.0;
};

struct CheckOptions {
  detail::Branch branch = detail::Branch::Principal;  // FlippedSign: fault injection
};

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt(cplx z) {
  char buf[90];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
  return buf;
}

namespace detail {

inline CheckResult make(const std::string& fixture, const std::string& name, double residual, double tol,
                        std::string expected, std::string actual) {
  CheckResult r;
  r.fixture = fixture;
  r.name = name;
  r.residual = residual;
  r.tolerance = tol;
  r.passed = std::isfinite(residual) && residual <= tol;
  r.expected = std::move(expected);
  r.actual = std::move(actual);
  return r;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Single terms of width C R with R = 8, C = 4: the vertical tube and one
// shifted, modulated packet.
inline std::vector<GaussianTerm> oracle_terms(int d) {
  GaussianTerm tube;
  tube.width = 32.0;
  tube.center.assign(d, 0.0);
  tube.modulation.assign(d, 0.0);
  GaussianTerm moving = tube;
  for (int i = 0; i < d; ++i) {
    moving.center[i] = (i % 2 == 0) ? 1.0 : -2.0;
    moving.modulation[i] = (i % 2 == 0) ? 0.3 : -0.2;
  }
  moving.amplitude = cplx(0.8, 0.3);
  return {tube, moving};
}

inline std::vector<CheckResult> oracle_fixture(const std::string& fixture, const BlockSignature& sig,
                                               const oracle::GridSpec& grid, const CheckOptions& opt) {
  std::vector<CheckResult> out;
  const std::vector<GaussianTerm> terms = oracle_terms(sig.total_dim());
  const char* labels[] = {"tube", "moving"};
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const WavepacketSum sum(sig, {terms[k]});
    const oracle::Samples initial = oracle::sample(sum, grid);
    for (double t : {1.0, 4.0, 8.0}) {
      const auto start = std::chrono::steady_clock::now();
      const oracle::Samples ev = oracle::spectral_evolve(initial, sig, t, grid);
      const oracle::NodeDiscrepancy d = oracle::worst_node_vs_closed_form(sum, t, grid, ev, opt.branch);
      char name[64];
      std::snprintf(name, sizeof name, "%s t=%g", labels[k], t);
      CheckResult r = make(fixture, name, d.rel_error, 1e-6, fmt(d.spectral), fmt(d.closed_form));
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<CheckResult> oracle_lambda(const CheckOptions& opt = {}) {
  return detail::oracle_fixture("oracle-lambda", BlockSignature::lambda(1), {48.0, 128, 2}, opt);
}

inline std::vector<CheckResult> oracle_gamma(const CheckOptions& opt = {}) {
  return detail::oracle_fixture("oracle-gamma", BlockSignature::gamma(1), {48.0, 128, 2}, opt);
}

inline std::vector<CheckResult> oracle_g(const CheckOptions& opt = {}) {
  return detail::oracle_fixture("oracle-g", BlockSignature::g(1), {48.0, 64, 3}, opt);
}

/// Closed-form inner products against grid quadrature on random pairs, and the
/// identical-tube value pi C R in d = 2.
inline std::vector<CheckResult> inner_product_fixture(std::uint64_t seed = 2024, int pairs = 20) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uc(-1.5, 1.5), um(-0.8, 0.8), uw(1.0, 4.0), ua(-1.0, 1.0);
  for (int k = 0; k < pairs; ++k) {
    const int d = 1 + k % 3;
    GaussianTerm a, b;
    a.width = b.width = uw(rng);
    a.amplitude = {ua(rng), ua(rng)};
    b.amplitude = {ua(rng), ua(rng)};
    for (int i = 0; i < d; ++i) {
      a.center.push_back(uc(rng));
      b.center.push_back(uc(rng));
      a.modulation.push_back(um(rng));
      b.modulation.push_back(um(rng));
    }
    const oracle::GridSpec grid{20.0, d == 3 ? 64 : 256, d};
    const cplx exact = inner_product(a, b);
    const cplx quad = oracle::quad_inner_product(a, b, grid);
    out.push_back(detail::make("inner-product", "pair " + std::to_string(k) + " d=" + std::to_string(d),
                               std::abs(quad - exact) / std::abs(exact), 1e-8, fmt(quad), fmt(exact)));
  }
  GaussianTerm tube;
  tube.width = 32.0;
  tube.center = {0.0, 0.0};
  tube.modulation = {0.0, 0.0};
  const cplx v = inner_product(tube, tube);
  const double expected = kPi * 32.0;
  out.push_back(detail::make("inner-product", "identical tube d=2 equals pi C R", std::abs(v - expected) / expected,
                             4 * std::numeric_limits<double>::epsilon(), fmt(expected), fmt(v)));
  return out;
}

/// Invariant suite: t = 0 identity, unitarity, Hermitian real diagonal,
/// Plancherel, culling soundness, slope-fit exactness, determinism.
inline std::vector<CheckResult> invariants_fixture() {
  const std::string fx = "invariants";
  std::vector<CheckResult> out;
  std::mt19937_64 rng(99);

  {
    FamilySpec spec;
    spec.family = FamilyKind::GP;
    spec.R = 16.0;
    const WavepacketSum sum = build_family(spec);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    double worst = 0.0;
    cplx a_w, b_w;
    for (int i = 0; i < 200; ++i) {
      const RealVec x{u(rng), u(rng), u(rng)};
      const cplx a = evolve_eval(sum, 0.0, x), b = sum.initial_value(x);
      const double e = std::abs(a - b) / std::max(std::abs(b), 1e-300);
      if (e >= worst) worst = e, a_w = a, b_w = b;
    }
    out.push_back(detail::make(fx, "t=0 identity", worst, 1e-13, fmt(b_w), fmt(a_w)));
  }

  {
    GaussianTerm term{cplx(1.0, 0.0), {0.5, -0.5}, {0.4, 0.3}, 4.0};
    const oracle::GridSpec grid{60.0, 256, 2};
    auto l2_at = [&](double t) {
      RealVec x(2), sq(grid.total());
      for (std::size_t f = 0; f < grid.total(); ++f) {
        grid.node(f, x);
        sq[f] = std::norm(evolve_eval(term, BlockSignature::gamma(1), t, x));
      }
      return std::sqrt(pairwise_sum(sq) * grid.spacing() * grid.spacing());
    };
    const double base = gram_l2_norm(WavepacketSum(BlockSignature::gamma(1), {term}));
    for (double t : {0.0, 5.0, 12.0}) {
      const double v = l2_at(t);
      out.push_back(detail::make(fx, "unitarity t=" + fmt(t), detail::rel(v, base), 1e-6, fmt(base), fmt(v)));
    }
  }

  {
    FamilySpec spec;
    spec.family = FamilyKind::GammaP;
    spec.R = 16.0;
    const WavepacketSum raw = build_family(spec);
    std::vector<GaussianTerm> terms = raw.terms();
    std::uniform_real_distribution<double> ua(-1.0, 1.0);
    for (GaussianTerm& t : terms) t.amplitude = {ua(rng), ua(rng)};
    const WavepacketSum sym = hermitian_symmetrize(WavepacketSum(raw.signature(), terms, raw.meta()));
    std::uniform_real_distribution<double> ux(-8.0, 8.0), ut(-16.0, 16.0);
    double worst = 0.0;
    cplx at;
    for (int i = 0; i < 100; ++i) {
      const double x = ux(rng);
      const cplx v = evolve_eval(sym, ut(rng), RealVec{x, x});
      const double scale = std::max(1.0, std::abs(v));
      if (std::abs(v.imag()) / scale >= worst) worst = std::abs(v.imag()) / scale, at = v;
    }
    out.push_back(detail::make(fx, "hermitian gamma diagonal is real", worst, 1e-10, "imag = 0", fmt(at)));
  }

  {
    FamilySpec spec;
    spec.family = FamilyKind::LambdaP;
    spec.R = 256.0;
    const WavepacketSum sum = build_family(spec);
    const double l2 = gram_l2_norm(sum), h0 = hs_norm(sum, 0.0);
    out.push_back(detail::make(fx, "plancherel s=0", detail::rel(h0, l2), 1e-6, fmt(l2), fmt(h0)));
  }

  {
    FamilySpec spec;
    spec.family = FamilyKind::LambdaP;
    spec.R = 256.0;
    const WavepacketSum sum = build_family(spec);
    std::uniform_real_distribution<double> ux(-0.01, 0.01), ut(240.0, 256.0), uwide(-40.0, 40.0), uany(0.0, 256.0);
    double worst = 0.0;
    cplx c_w, f_w;
    for (int i = 0; i < 200; ++i) {
      const bool focused = i % 2 == 0;
      const DiagonalTrace tr(sum, focused ? ut(rng) : uany(rng));
      const RealVec x{focused ? ux(rng) : uwide(rng)};
      const cplx full = tr.eval_full(x), culled = tr.eval(x, 1e-12);
      // absolute floor: the culling bound is relative to the largest term
      const double e = std::abs(culled - full) / std::max(std::abs(full), tr.max_term_magnitude());
      if (e >= worst) worst = e, c_w = culled, f_w = full;
    }
    out.push_back(detail::make(fx, "culling soundness", worst, 1e-8, fmt(f_w), fmt(c_w)));
  }

  {
    double worst = 0.0;
    for (double a : {-0.75, -0.125, 0.0, 0.25, 1.5}) {
      RealVec R, v;
      for (int k = 4; k <= 12; ++k) {
        R.push_back(std::ldexp(1.0, k));
        v.push_back(3.7 * std::pow(R.back(), a));
      }
      const SlopeFit f = fit_log_log(R, v);
      worst = std::max({worst, std::abs(f.slope - a), f.stderr_});
    }
    out.push_back(detail::make(fx, "slope fit exact on power laws", worst, 1e-10, "0", fmt(worst)));
  }

  {
    const unsigned saved = parallel::detail::max_threads_slot().load();
    bool same = true;
    std::string first, second;
    for (FamilyKind k : {FamilyKind::LambdaP, FamilyKind::GP, FamilyKind::GammaQ}) {
      FamilySpec spec;
      spec.family = k;
      spec.R = 16.0;
      spec.n = k == FamilyKind::LambdaP ? 2 : 1;
      parallel::set_max_threads(1);
      const WavepacketSum a = build_family(spec);
      const double ha = a.dim() <= 3 ? hs_norm(a, 1.0) : 0.0;
      parallel::set_max_threads(4);
      const WavepacketSum b = build_family(spec);
      const double hb = b.dim() <= 3 ? hs_norm(b, 1.0) : 0.0;
      bool eq = a.size() == b.size() && std::memcmp(&ha, &hb, sizeof ha) == 0;
      for (std::size_t i = 0; eq && i < a.size(); ++i) {
        const GaussianTerm &x = a.terms()[i], &y = b.terms()[i];
        eq = x.center == y.center && x.modulation == y.modulation && x.width == y.width && x.amplitude == y.amplitude;
      }
      if (!eq && same) first = fmt(ha), second = fmt(hb);
      same = same && eq;
    }
    parallel::set_max_threads(saved);
    out.push_back(detail::make(fx, "deterministic rebuilds", same ? 0.0 : 1.0, 0.0, same ? "identical" : first,
                               same ? "identical" : second));
  }
  return out;
}

inline std::vector<CheckResult> run_fixture(const std::string& name, const CheckOptions& opt = {}) {
  if (name == "oracle-lambda") return oracle_lambda(opt);
  if (name == "oracle-gamma") return oracle_gamma(opt);
  if (name == "oracle-g") return oracle_g(opt);
  if (name == "inner-product") return inner_product_fixture();
  if (name == "invariants") return invariants_fixture();
  throw ConfigError("unknown fixture '" + name + "'");
}

}  // namespace collapse::checks
