#pragma once

// Diagonal traces of evolved wavepacket sums, mixed L^p(dt) L^q(dx) norms by
// tensor quadrature, fractional derivatives through the closed-form Fourier
// transform, and sharp Littlewood-Paley mass splits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collapse/detail/numeric.hpp"
#include "collapse/errors.hpp"
#include "collapse/gaussian_core.hpp"
#include "collapse/quadrature.hpp"
#include "collapse/types.hpp"

namespace collapse {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Diagonal trace x -> sum_k term_k(t, x, ..., x) at one fixed time, with each
/// term kept as a complex Gaussian anchored at the peak of its magnitude.
///
/// All terms share alpha = sum_j 1/(w + s_j i t), and with the anchor at the
/// mean drifted center Re(beta) vanishes, so |term_k(x)| is exactly
/// exp(Re log_gamma_k - Re(alpha) |x - anchor_k|^2 / 2).
class DiagonalTrace {
 public:
  DiagonalTrace(const WavepacketSum& sum, double t) : t_(t) {
    detail::require(!sum.empty(), "DiagonalTrace: empty sum");
    const BlockSignature& sig = sum.signature();
    detail::require(sig.uniform_block_dim(), "DiagonalTrace: blocks have unequal dimensions");
    n_ = sig.block_dim();
    const std::size_t N = sum.size();
    anchors_.resize(N);
    terms_.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
      anchors_[k] = diagonal_anchor(sum.terms()[k], sig, t);
      terms_[k] = detail::diagonal_restrict(sum.terms()[k], sig, t, anchors_[k]);
    }
    order_.resize(N);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return anchors_[a][0] < anchors_[b][0]; });
    sorted_first_.resize(N);
    for (std::size_t i = 0; i < N; ++i) sorted_first_[i] = anchors_[order_[i]][0];
    max_log_mag_ = -kInfinity;
    for (const ComplexGaussian& g : terms_) max_log_mag_ = std::max(max_log_mag_, g.log_gamma.real());
    re_alpha_ = terms_.front().alpha.real();
  }

  int dim() const { return n_; }
  double time() const { return t_; }
  std::size_t size() const { return terms_.size(); }
  const std::vector<ComplexGaussian>& gaussians() const { return terms_; }
  const std::vector<RealVec>& anchors() const { return anchors_; }
  double max_term_magnitude() const { return std::exp(max_log_mag_); }

  /// Sum over terms whose magnitude bound at x is at least
  /// cull_tol * max_term_magnitude / N. The skipped remainder is at most
  /// cull_tol * max_term_magnitude.
  cplx eval(std::span<const double> x, double cull_tol) const {
    check_x(x);
    detail::require(cull_tol > 0.0 && cull_tol <= 1e-6, "eval_diagonal: cull_tol must lie in (0, 1e-6]");
    const double log_thr = max_log_mag_ + std::log(cull_tol / static_cast<double>(size()));
    const double r_cut = cull_radius(cull_tol);
    auto [lo, hi] = window(x[0], r_cut);
    ComplexVec vals;
    vals.reserve(hi - lo);
    RealVec y(n_);
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t k = order_[i];
      const double r2 = distance2(x, anchors_[k]);
      if (terms_[k].log_gamma.real() - 0.5 * re_alpha_ * r2 < log_thr) continue;
      vals.push_back(value(k, x, y));
    }
    return pairwise_sum(vals);
  }

  /// Uncooled sum over every term.
  cplx eval_full(std::span<const double> x) const {
    check_x(x);
    ComplexVec vals(size());
    RealVec y(n_);
    for (std::size_t i = 0; i < size(); ++i) vals[i] = value(order_[i], x, y);
    return pairwise_sum(vals);
  }

  /// Radius beyond which every term is below the culling threshold.
  double cull_radius(double cull_tol) const {
    return std::sqrt(2.0 * std::log(static_cast<double>(size()) / cull_tol) / re_alpha_);
  }

  /// Positions [lo, hi) in anchor order whose first anchor coordinate lies
  /// within r of x0.
  std::pair<std::size_t, std::size_t> window(double x0, double r) const {
    const auto lo = std::lower_bound(sorted_first_.begin(), sorted_first_.end(), x0 - r) - sorted_first_.begin();
    const auto hi = std::upper_bound(sorted_first_.begin(), sorted_first_.end(), x0 + r) - sorted_first_.begin();
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  }

  std::size_t term_at(std::size_t pos) const { return order_[pos]; }

 private:
  void check_x(std::span<const double> x) const {
    detail::require(static_cast<int>(x.size()) == n_, "eval_diagonal: point dimension mismatch");
  }

  cplx value(std::size_t k, std::span<const double> x, RealVec& y) const {
    for (int i = 0; i < n_; ++i) y[i] = x[i] - anchors_[k][i];
    return terms_[k](y);
  }

  double t_;
  int n_ = 1;
  std::vector<ComplexGaussian> terms_;
  std::vector<RealVec> anchors_;
  std::vector<std::size_t> order_;
  RealVec sorted_first_;
  double max_log_mag_ = 0.0;
  double re_alpha_ = 1.0;
};

/// Diagonal trace of the evolved sum at (t, x) with far-term culling.
inline cplx eval_diagonal(const WavepacketSum& sum, double t, std::span<const double> x, double cull_tol) {
  return DiagonalTrace(sum, t).eval(x, cull_tol);
}

/// Diagonal trace without culling.
inline cplx eval_diagonal_full(const WavepacketSum& sum, double t, std::span<const double> x) {
  return DiagonalTrace(sum, t).eval_full(x);
}

/// Space-time region with its tensor quadrature.
struct RegionSpec {
  double t0 = 0.0;
  double t1 = 1.0;
  std::vector<std::pair<double, double>> box;  // one interval per axis of R^n
  int t_samples = 32;
  int x_samples = 8;
  RuleKind t_rule = RuleKind::Midpoint;
  RuleKind x_rule = RuleKind::GaussLegendre;

  void validate() const {
    if (!(t0 < t1)) throw ConfigError("region: need t0 < t1");
    if (box.empty()) throw ConfigError("region: empty space box");
    for (const auto& [lo, hi] : box)
      if (!(lo < hi)) throw ConfigError("region: every box interval needs lo < hi");
    if (t_samples < 2 || x_samples < 2) throw ConfigError("region: t_samples and x_samples must be >= 2");
  }

  RegionSpec doubled() const {
    RegionSpec r = *this;
    r.t_samples *= 2;
    r.x_samples *= 2;
    return r;
  }

  double volume() const {
    double v = t1 - t0;
    for (const auto& [lo, hi] : box) v *= hi - lo;
    return v;
  }
};

struct MixedNormSpec {
  double p = 2.0;  // kInfinity allowed
  double q = 2.0;  // kInfinity allowed
  RegionSpec region;

  void validate() const {
    if (!(p >= 1.0)) throw ConfigError("p: must be >= 1 or inf");
    if (!(q >= 1.0)) throw ConfigError("q: must be >= 1 or inf");
    region.validate();
  }
};

/// |nabla|^alpha through the closed-form transform of each diagonal term,
/// integrated over a frequency box around that term's spectral peak.
struct FracDerivSpec {
  double alpha = 0.0;
  double freq_box_padding = 12.0;  // half-width in spectral standard deviations
  int freq_samples = 64;           // base Gauss-Legendre nodes per axis
  double cull_tol = 1e-12;

  /// Fraction of a term's spectral magnitude left outside the box.
  double tail_fraction(int n) const { return n * std::erfc(freq_box_padding / std::sqrt(2.0)); }

  void validate(int n) const {
    if (!(alpha >= 0.0)) throw ConfigError("alpha: must be >= 0");
    if (freq_samples < 16) throw ConfigError("freq_samples: must be >= 16");
    if (!(tail_fraction(n) <= 1e-10))
      throw ConfigError("freq_box_padding " + std::to_string(freq_box_padding) + " leaves tail mass " +
                        std::to_string(tail_fraction(n)) + " > 1e-10 outside the frequency box");
    if (!(cull_tol > 0.0 && cull_tol <= 1e-6)) throw ConfigError("cull_tol: must lie in (0, 1e-6]");
  }
};

namespace detail {

inline constexpr int kFreqPanelOrder = 16;

// (2 pi)^{-n} int |w|^alpha ghat(w) exp(i y.w) dw over the padded box of ghat.
inline cplx frac_deriv_term(const ComplexGaussian& g, std::span<const double> y, const FracDerivSpec& spec) {
  const int n = g.n;
  const ComplexGaussian gh = fourier_transform(g);
  const RealVec c = gh.magnitude_center();
  const double sigma = gh.magnitude_stddev();
  const double half = spec.freq_box_padding * sigma;
  const int base_panels = std::max(1, spec.freq_samples / kFreqPanelOrder);
  std::vector<Rule1D> rules(n);
  for (int i = 0; i < n; ++i) {
    const double slope = std::abs(gh.alpha.imag()) * (std::abs(c[i]) + half) + std::abs(gh.beta[i].imag() + y[i]);
    const int osc_panels = static_cast<int>(std::ceil(slope * 2.0 * half / (2.0 * kPi)));
    rules[i] = split_gauss_legendre(c[i] - half, c[i] + half, 0.0, base_panels + osc_panels, kFreqPanelOrder);
  }
  std::size_t total = 1;
  for (const Rule1D& r : rules) total *= r.size();
  ComplexVec vals(total);
  RealVec om(n);
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rem = f;
    double wgt = 1.0;
    for (int i = n - 1; i >= 0; --i) {
      const std::size_t j = rem % rules[i].size();
      rem /= rules[i].size();
      om[i] = rules[i].nodes[j];
      wgt *= rules[i].weights[j];
    }
    const double r2 = norm2(om);
    const double mult = spec.alpha == 0.0 ? 1.0 : std::pow(r2, 0.5 * spec.alpha);
    vals[f] = gh(om) * std::exp(cplx(0.0, dot(y, om))) * (wgt * mult);
  }
  return pairwise_sum(vals) * std::pow(2.0 * kPi, -static_cast<double>(n));
}

}  // namespace detail

/// (|nabla|^alpha f)(x) for the diagonal trace f at one time.
inline cplx frac_deriv_diagonal(const DiagonalTrace& trace, std::span<const double> x, const FracDerivSpec& spec) {
  spec.validate(trace.dim());
  detail::require(static_cast<int>(x.size()) == trace.dim(), "frac_deriv_diagonal: point dimension mismatch");
  const double r = 1.5 * trace.cull_radius(spec.cull_tol);
  auto [lo, hi] = trace.window(x[0], r);
  ComplexVec vals;
  RealVec y(trace.dim());
  for (std::size_t pos = lo; pos < hi; ++pos) {
    const std::size_t k = trace.term_at(pos);
    const RealVec& a = trace.anchors()[k];
    if (distance2(x, a) > r * r) continue;
    for (int i = 0; i < trace.dim(); ++i) y[i] = x[i] - a[i];
    vals.push_back(detail::frac_deriv_term(trace.gaussians()[k], y, spec));
  }
  return pairwise_sum(vals);
}

inline cplx frac_deriv_diagonal(const WavepacketSum& sum, double t, std::span<const double> x,
                                const FracDerivSpec& spec) {
  return frac_deriv_diagonal(DiagonalTrace(sum, t), x, spec);
}

struct MixedNormResult {
  double value = 0.0;          // at the configured resolution
  double refined_value = 0.0;  // with t_samples and x_samples doubled
  double rel_change = 0.0;
  bool converged = true;       // rel_change <= kConvergenceTolerance
};

inline constexpr double kConvergenceTolerance = 0.01;

/// Magnitude of the integrand at one time slice, as a function of x.
using SliceFunction = std::function<double(std::span<const double>)>;
using SliceFactory = std::function<SliceFunction(double t)>;

namespace detail {

inline double lp_combine(const RealVec& vals, const RealVec& weights, double p) {
  if (std::isinf(p)) return vals.empty() ? 0.0 : *std::max_element(vals.begin(), vals.end());
  RealVec terms(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) terms[i] = weights[i] * std::pow(vals[i], p);
  return std::pow(pairwise_sum(terms), 1.0 / p);
}

inline double mixed_norm_at(const SliceFactory& slices, double p, double q, const RegionSpec& region) {
  const Rule1D trule = make_rule(region.t_rule, region.t0, region.t1, region.t_samples);
  const std::size_t n = region.box.size();
  std::vector<Rule1D> xrules;
  for (const auto& [lo, hi] : region.box) xrules.push_back(make_rule(region.x_rule, lo, hi, region.x_samples));
  std::size_t nx = 1;
  for (const Rule1D& r : xrules) nx *= r.size();
  RealVec xw(nx);
  std::vector<RealVec> xs(nx, RealVec(n));
  for (std::size_t f = 0; f < nx; ++f) {
    std::size_t rem = f;
    double wgt = 1.0;
    for (std::size_t i = n; i-- > 0;) {
      const std::size_t j = rem % xrules[i].size();
      rem /= xrules[i].size();
      xs[f][i] = xrules[i].nodes[j];
      wgt *= xrules[i].weights[j];
    }
    xw[f] = wgt;
  }
  RealVec inner(trule.size());
  for (std::size_t it = 0; it < trule.size(); ++it) {
    const SliceFunction f = slices(trule.nodes[it]);
    RealVec mags(nx);
    parallel::parallel_for(nx, [&](std::size_t j) { mags[j] = f(xs[j]); }, 64);
    inner[it] = lp_combine(mags, xw, q);
  }
  return lp_combine(inner, trule.weights, p);
}

}  // namespace detail

/// (int (int |f(t, x)|^q dx)^{p/q} dt)^{1/p} over the region for an arbitrary
/// integrand, plus the doubled-resolution convergence check.
inline MixedNormResult mixed_norm(const SliceFactory& slices, const MixedNormSpec& spec) {
  spec.validate();
  MixedNormResult r;
  r.value = detail::mixed_norm_at(slices, spec.p, spec.q, spec.region);
  r.refined_value = detail::mixed_norm_at(slices, spec.p, spec.q, spec.region.doubled());
  const double scale = std::max(std::abs(r.refined_value), std::numeric_limits<double>::min());
  r.rel_change = std::abs(r.refined_value - r.value) / scale;
  r.converged = r.rel_change <= kConvergenceTolerance;
  return r;
}

/// Mixed norm of the diagonal trace (or of |nabla|^alpha of it).
inline MixedNormResult mixed_norm(const WavepacketSum& sum, const MixedNormSpec& spec,
                                  const std::optional<FracDerivSpec>& deriv = std::nullopt,
                                  double cull_tol = 1e-12) {
  detail::require(sum.signature().uniform_block_dim(), "mixed_norm: blocks have unequal dimensions");
  if (static_cast<int>(spec.region.box.size()) != sum.signature().block_dim())
    throw ConfigError("region: box dimension must equal the block dimension n");
  if (deriv) deriv->validate(sum.signature().block_dim());
  SliceFactory slices = [&](double t) -> SliceFunction {
    auto trace = std::make_shared<DiagonalTrace>(sum, t);
    if (deriv && deriv->alpha != 0.0) {
      const FracDerivSpec d = *deriv;
      return [trace, d](std::span<const double> x) { return std::abs(frac_deriv_diagonal(*trace, x, d)); };
    }
    return [trace, cull_tol](std::span<const double> x) { return std::abs(trace->eval(x, cull_tol)); };
  };
  return mixed_norm(slices, spec);
}

struct FrequencySplit {
  double low = 0.0;   // L2 mass with |zeta| <= cutoff
  double high = 0.0;  // L2 mass with |zeta| > cutoff
  double total() const { return low + high; }
  double high_fraction() const { return total() > 0.0 ? high / total() : 0.0; }
};

/// Squared L2 mass of the initial sum below / above a sharp frequency cutoff.
inline FrequencySplit lp_split(const WavepacketSum& sum, double cutoff, const QuadratureSpec& quad = {}) {
  detail::require(cutoff > 0.0, "lp_split: cutoff must be positive");
  const double c2 = cutoff * cutoff;
  const std::vector<RadialWeight> weights{[c2](double z2) { return z2 <= c2 ? 1.0 : 0.0; },
                                          [c2](double z2) { return z2 > c2 ? 1.0 : 0.0; }};
  const RealVec m = frequency_masses(sum, weights, quad);
  return {std::max(0.0, m[0]), std::max(0.0, m[1])};
}

}  // namespace collapse
