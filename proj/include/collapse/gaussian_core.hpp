#pragma once

// Exact algebra of modulated Gaussians under the mixed-signature free flow
// exp(i t (sum_j s_j Laplacian_j) / 2): pointwise evolution, L2 inner
// products, restriction to the diagonal, Fourier transforms and Sobolev norms.
//
// Fourier convention: ghat(w) = int g(x) exp(-i x.w) dx, with the inverse
// carrying (2 pi)^{-n}.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "collapse/detail/numeric.hpp"
#include "collapse/errors.hpp"
#include "collapse/quadrature.hpp"
#include "collapse/types.hpp"

namespace collapse {

namespace detail {

/// Branch used for the complex power (1 + s i t / w)^{-n/2}. `FlippedSign`
/// exists only for fault-injection checks of the oracle harness.
enum class Branch { Principal, FlippedSign };

inline void check_point(const BlockSignature& sig, std::span<const double> point) {
  require(static_cast<int>(point.size()) == sig.total_dim(),
          "evolve_eval: point dimension " + std::to_string(point.size()) + " does not match signature dimension " +
              std::to_string(sig.total_dim()));
}

inline cplx evolve_eval(const GaussianTerm& term, const BlockSignature& sig, double t,
                        std::span<const double> point, Branch branch) {
  term.validate();
  check_point(sig, point);
  require(static_cast<int>(term.dim()) == sig.total_dim(), "evolve_eval: term dimension mismatch");
  require(std::isfinite(t), "evolve_eval: t must be finite");
  const double w = term.width;
  cplx expo(0.0, dot(point, term.modulation) - 0.5 * t * sig.dispersion(term.modulation));
  std::size_t off = 0;
  for (const Block& b : sig.blocks()) {
    const double s = b.sign;
    const double bs = branch == Branch::Principal ? s : -s;
    expo -= 0.5 * b.dim * std::log(cplx(1.0, bs * t / w));
    double r2 = 0.0;
    for (int i = 0; i < b.dim; ++i) {
      const double d = point[off + i] - term.center[off + i] - s * t * term.modulation[off + i];
      r2 += d * d;
    }
    expo -= r2 / (2.0 * cplx(w, s * t));
    off += b.dim;
  }
  return term.amplitude * std::exp(expo);
}

/// Diagonal restriction written in the shifted variable y = x - anchor.
inline ComplexGaussian diagonal_restrict(const GaussianTerm& term, const BlockSignature& sig, double t,
                                         std::span<const double> anchor, Branch branch = Branch::Principal) {
  term.validate();
  require(sig.uniform_block_dim(), "diagonal_restrict: blocks have unequal dimensions");
  require(static_cast<int>(term.dim()) == sig.total_dim(), "diagonal_restrict: term dimension mismatch");
  const int n = sig.block_dim();
  require(static_cast<int>(anchor.size()) == n, "diagonal_restrict: anchor dimension mismatch");
  const double w = term.width;

  ComplexGaussian g;
  g.n = n;
  g.alpha = 0.0;
  g.beta.assign(n, cplx(0.0, 0.0));
  cplx log_gamma = (term.amplitude == cplx(0.0, 0.0)) ? cplx(-HUGE_VAL, 0.0) : std::log(term.amplitude);
  log_gamma += cplx(0.0, -0.5 * t * sig.dispersion(term.modulation));

  RealVec mod_sum(n, 0.0);
  std::size_t off = 0;
  for (const Block& b : sig.blocks()) {
    const double s = b.sign;
    const double bs = branch == Branch::Principal ? s : -s;
    const cplx z(w, s * t);
    const cplx inv_z = 1.0 / z;
    g.alpha += inv_z;
    log_gamma -= 0.5 * n * std::log(cplx(1.0, bs * t / w));
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double drift_center = term.center[off + i] + s * t * term.modulation[off + i];
      const double rel = drift_center - anchor[i];
      g.beta[i] += rel * inv_z;
      r2 += rel * rel;
      mod_sum[i] += term.modulation[off + i];
    }
    log_gamma -= r2 * 0.5 * inv_z;
    off += n;
  }
  for (int i = 0; i < n; ++i) g.beta[i] += cplx(0.0, mod_sum[i]);
  log_gamma += cplx(0.0, dot(anchor, mod_sum));
  g.log_gamma = log_gamma;
  return g;
}

}  // namespace detail

/// Value of exp(i t (sum_j s_j Laplacian_j)/2) applied to `term`, at (t, point).
inline cplx evolve_eval(const GaussianTerm& term, const BlockSignature& sig, double t,
                        std::span<const double> point) {
  return detail::evolve_eval(term, sig, t, point, detail::Branch::Principal);
}

/// Evolved sum at (t, point), pairwise-summed over terms.
inline cplx evolve_eval(const WavepacketSum& sum, double t, std::span<const double> point) {
  ComplexVec vals(sum.size());
  for (std::size_t k = 0; k < sum.size(); ++k) vals[k] = evolve_eval(sum.terms()[k], sum.signature(), t, point);
  return pairwise_sum(vals);
}

/// Exact L2(R^d) inner product, first argument conjugated.
inline cplx inner_product(const GaussianTerm& a, const GaussianTerm& b) {
  a.validate();
  b.validate();
  detail::require(a.dim() == b.dim(), "inner_product: dimension mismatch");
  detail::require(a.width == b.width, "inner_product: terms must share a width");
  const double w = a.width;
  const auto d = static_cast<double>(a.dim());
  double dc2 = 0.0, dm2 = 0.0, phase = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double dc = a.center[i] - b.center[i];
    const double dm = b.modulation[i] - a.modulation[i];
    dc2 += dc * dc;
    dm2 += dm * dm;
    phase += 0.5 * (a.center[i] + b.center[i]) * dm;
  }
  const double mag = std::pow(kPi * w, 0.5 * d) * std::exp(-dc2 / (4.0 * w) - w * dm2 / 4.0);
  return std::conj(a.amplitude) * b.amplitude * mag * std::exp(cplx(0.0, phase));
}

namespace detail {

/// Term indices sorted by the first center coordinate (stable), used for
/// windowed pair searches.
inline std::vector<std::size_t> order_by_first_center(const WavepacketSum& sum) {
  std::vector<std::size_t> idx(sum.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return sum.terms()[a].center[0] < sum.terms()[b].center[0];
  });
  return idx;
}

inline double overlap_exponent(const GaussianTerm& a, const GaussianTerm& b) {
  const double w = a.width;
  return distance2(a.center, b.center) / (4.0 * w) + w * distance2(a.modulation, b.modulation) / 4.0;
}

}  // namespace detail

/// sqrt(sum_{k,l} <term_k, term_l>) with the exact pairwise closed form. Pairs
/// whose closed-form entry underflows in double precision are skipped.
inline double gram_l2_norm(const WavepacketSum& sum) {
  detail::require(!sum.empty(), "gram_l2_norm: empty sum");
  const auto order = detail::order_by_first_center(sum);
  const double w = sum.width();
  constexpr double kUnderflow = 746.0;
  const double window = std::sqrt(4.0 * w * kUnderflow);
  const auto& terms = sum.terms();
  RealVec rows(order.size(), 0.0);
  parallel::parallel_for(order.size(), [&](std::size_t pos) {
    const GaussianTerm& a = terms[order[pos]];
    RealVec acc{std::norm(a.amplitude) * std::pow(kPi * w, 0.5 * sum.dim())};
    for (std::size_t q = pos + 1; q < order.size(); ++q) {
      const GaussianTerm& b = terms[order[q]];
      if (b.center[0] - a.center[0] > window) break;
      if (detail::overlap_exponent(a, b) > kUnderflow) continue;
      acc.push_back(2.0 * inner_product(a, b).real());
    }
    rows[pos] = pairwise_sum(acc);
  }, 8);
  return std::sqrt(std::max(0.0, pairwise_sum(rows)));
}

/// Full Gram matrix (row-major), for small sums.
inline ComplexVec gram_matrix(const WavepacketSum& sum) {
  const std::size_t n = sum.size();
  ComplexVec g(n * n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) g[k * n + l] = inner_product(sum.terms()[k], sum.terms()[l]);
  return g;
}

/// Restriction of the evolved term to the diagonal x = y = ... as a complex
/// Gaussian in x in R^n: alpha = sum_j 1/(w + s_j i t).
inline ComplexGaussian diagonal_restrict(const GaussianTerm& term, const BlockSignature& sig, double t) {
  detail::require(sig.uniform_block_dim(), "diagonal_restrict: blocks have unequal dimensions");
  const RealVec zero(sig.block_dim(), 0.0);
  return detail::diagonal_restrict(term, sig, t, zero);
}

/// Mean of the drifted block centers c_j + s_j t mu_j: the peak of |term| on
/// the diagonal.
inline RealVec diagonal_anchor(const GaussianTerm& term, const BlockSignature& sig, double t) {
  const int n = sig.block_dim();
  RealVec a(n, 0.0);
  std::size_t off = 0;
  for (const Block& b : sig.blocks()) {
    for (int i = 0; i < n; ++i) a[i] += term.center[off + i] + b.sign * t * term.modulation[off + i];
    off += n;
  }
  for (double& v : a) v /= static_cast<double>(sig.block_count());
  return a;
}

/// ghat(w) = int g(x) exp(-i x.w) dx, again a complex Gaussian.
inline ComplexGaussian fourier_transform(const ComplexGaussian& g) {
  g.validate();
  ComplexGaussian f;
  f.n = g.n;
  const cplx inv_a = 1.0 / g.alpha;
  f.alpha = inv_a;
  f.beta.resize(g.n);
  cplx bb = 0.0;
  for (int i = 0; i < g.n; ++i) {
    f.beta[i] = cplx(0.0, -1.0) * g.beta[i] * inv_a;
    bb += g.beta[i] * g.beta[i];
  }
  f.log_gamma = g.log_gamma + 0.5 * g.n * std::log(2.0 * kPi * inv_a) + 0.5 * bb * inv_a;
  return f;
}

/// g(x) = (2 pi)^{-n} int ghat(w) exp(i x.w) dw.
inline ComplexGaussian inverse_fourier_transform(const ComplexGaussian& gh) {
  gh.validate();
  ComplexGaussian f;
  f.n = gh.n;
  const cplx inv_a = 1.0 / gh.alpha;
  f.alpha = inv_a;
  f.beta.resize(gh.n);
  cplx bb = 0.0;
  for (int i = 0; i < gh.n; ++i) {
    f.beta[i] = cplx(0.0, 1.0) * gh.beta[i] * inv_a;
    bb += gh.beta[i] * gh.beta[i];
  }
  f.log_gamma = gh.log_gamma + 0.5 * gh.n * std::log(2.0 * kPi * inv_a) + 0.5 * bb * inv_a -
                static_cast<double>(gh.n) * std::log(2.0 * kPi);
  return f;
}

/// Frequency quadrature controls for Sobolev-type norms.
///
/// Each pair of terms contributes an integral over a cube around the mean of
/// the two modulations, of half-width `padding * w^{-1/2}` per coordinate,
/// rotated so that its first axis follows the pair's center offset. That
/// axis gets extra panels in proportion to the oscillation it carries. For
/// d >= 4 all but two of the remaining axes are integrated radially.
struct QuadratureSpec {
  int order = 16;                     // Gauss-Legendre nodes per panel
  int panels = 4;                     // base panels per axis
  double padding = 12.0;              // box half-width in units of w^{-1/2}
  double pair_cull_exponent = 50.0;   // skip pairs whose overlap is below e^{-this}

  QuadratureSpec refined() const {
    QuadratureSpec q = *this;
    q.panels *= 2;
    return q;
  }
};

/// Smallest padding whose Gaussian tail exp(-padding^2) is below 1e-30.
inline const double kMinFrequencyPadding = std::sqrt(30.0 * std::log(10.0));

inline void validate(const QuadratureSpec& q) {
  if (q.order < 2) throw ConfigError("QuadratureSpec.order must be >= 2");
  if (q.panels < 1) throw ConfigError("QuadratureSpec.panels must be >= 1");
  if (!(q.padding >= kMinFrequencyPadding))
    throw ConfigError("QuadratureSpec.padding " + std::to_string(q.padding) +
                      " fails the padding rule (needs >= " + std::to_string(kMinFrequencyPadding) +
                      " so that the Gaussian tail is below 1e-30)");
  if (!(q.pair_cull_exponent >= 40.0)) throw ConfigError("QuadratureSpec.pair_cull_exponent must be >= 40");
}

/// A radial frequency weight, given |zeta|^2.
using RadialWeight = std::function<double(double)>;

namespace detail {

struct PairKey {
  std::vector<std::int64_t> bits;
  bool operator<(const PairKey& o) const { return bits < o.bits; }
};

inline constexpr double kKappaGrid = 4294967296.0;  // 2^32

// Quadrature nodes with |v|^2 above this carry Gaussian weight below 1e-20
// and are skipped.
inline constexpr double kNodeCutExponent = 46.0;

// Same integral for d >= 4. With mt = H mubar, |mubar + H v / sqrt(w)|^2 =
// (mt_0 + v_0/sqrt(w))^2 + (|mt_perp| + v_1/sqrt(w))^2 + r^2 / w after rotating
// the axes orthogonal to e_0 so that mt_perp lies along e_1; the remaining
// d - 2 coordinates enter only through their radius r.
inline ComplexVec pair_frequency_integral_radial(const RealVec& kappa, const RealVec& mubar, double w,
                                                 const std::vector<RadialWeight>& weights, const QuadratureSpec& q) {
  const std::size_t d = kappa.size();
  const double kn = std::sqrt(norm2(kappa));
  RealVec mt = mubar;
  if (kn > 0.0) {
    RealVec hv(d);
    for (std::size_t i = 0; i < d; ++i) hv[i] = (i == 0 ? 1.0 : 0.0) - kappa[i] / kn;
    const double hv2 = norm2(hv);
    if (hv2 > 1e-28) {
      const double proj = 2.0 * dot(hv, mubar) / hv2;
      for (std::size_t i = 0; i < d; ++i) mt[i] = mubar[i] - proj * hv[i];
    }
  }
  double perp2 = 0.0;
  for (std::size_t i = 1; i < d; ++i) perp2 += mt[i] * mt[i];
  const double a0 = mt[0], b = std::sqrt(perp2);
  const double m = static_cast<double>(d - 2);
  const double sphere = 2.0 * std::pow(kPi, 0.5 * m) / std::tgamma(0.5 * m);
  const double P = q.padding;
  const Rule1D axis0 = composite_gauss_legendre(-P, P, q.panels + static_cast<int>(std::ceil(kn)), q.order);
  const Rule1D axis1 = composite_gauss_legendre(-P, P, q.panels, q.order);
  const Rule1D radius = composite_gauss_legendre(0.0, P, q.panels, q.order);
  const double inv_sqrt_w = 1.0 / std::sqrt(w);

  std::vector<ComplexVec> acc_lines(weights.size());
  for (std::size_t ir = 0; ir < radius.size(); ++ir) {
    const double r = radius.nodes[ir];
    const double r_w = sphere * radius.weights[ir] * std::pow(r, m - 1.0);
    for (std::size_t i1 = 0; i1 < axis1.size(); ++i1) {
      const double v1 = axis1.nodes[i1];
      const double outer_g = r * r + v1 * v1;
      if (outer_g > kNodeCutExponent) continue;
      const double z_rest = (b + v1 * inv_sqrt_w) * (b + v1 * inv_sqrt_w) + r * r / w;
      std::vector<cplx> line(weights.size(), cplx(0.0, 0.0));
      for (std::size_t i0 = 0; i0 < axis0.size(); ++i0) {
        const double v0 = axis0.nodes[i0];
        if (outer_g + v0 * v0 > kNodeCutExponent) continue;
        const double gauss = std::exp(-(outer_g + v0 * v0));
        const double z0 = a0 + v0 * inv_sqrt_w;
        const double z2 = z0 * z0 + z_rest;
        const cplx osc = std::exp(cplx(0.0, kn * v0)) * (axis0.weights[i0] * gauss);
        for (std::size_t k = 0; k < weights.size(); ++k) line[k] += weights[k](z2) * osc;
      }
      for (std::size_t k = 0; k < weights.size(); ++k) acc_lines[k].push_back(line[k] * (r_w * axis1.weights[i1]));
    }
  }
  ComplexVec out(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) out[k] = pairwise_sum(acc_lines[k]);
  return out;
}

// J_m(kappa, mubar) = int weight_m(|mubar + H v / sqrt(w)|^2) exp(-|v|^2) exp(i |kappa| v_0) dv
// over the cube [-P, P]^d, where H is the Householder reflection sending e_0 to
// kappa / |kappa|.
inline ComplexVec pair_frequency_integral(const RealVec& kappa, const RealVec& mubar, double w,
                                          const std::vector<RadialWeight>& weights, const QuadratureSpec& q) {
  const std::size_t d = kappa.size();
  if (d >= 4) return pair_frequency_integral_radial(kappa, mubar, w, weights, q);
  const double kn = std::sqrt(norm2(kappa));
  RealVec hv(d, 0.0);
  bool reflect = false;
  if (kn > 0.0) {
    for (std::size_t i = 0; i < d; ++i) hv[i] = (i == 0 ? 1.0 : 0.0) - kappa[i] / kn;
    reflect = norm2(hv) > 1e-28;
  }
  const double hv2 = norm2(hv);
  const double P = q.padding;
  const int osc_panels = q.panels + static_cast<int>(std::ceil(kn));
  const Rule1D axis0 = composite_gauss_legendre(-P, P, osc_panels, q.order);
  const Rule1D axis = composite_gauss_legendre(-P, P, q.panels, q.order);
  std::vector<const Rule1D*> rules(d, &axis);
  rules[0] = &axis0;

  std::vector<ComplexVec> acc_lines(weights.size());
  std::vector<std::size_t> idx(d, 0);
  RealVec v(d), zeta(d);
  const double inv_sqrt_w = 1.0 / std::sqrt(w);
  // iterate all nodes; axis 0 is the innermost loop
  std::size_t outer_count = 1;
  for (std::size_t i = 1; i < d; ++i) outer_count *= rules[i]->size();
  for (auto& line : acc_lines) line.reserve(outer_count);
  for (std::size_t outer = 0; outer < outer_count; ++outer) {
    std::size_t rem = outer;
    double outer_w = 1.0, outer_g = 0.0;
    for (std::size_t i = 1; i < d; ++i) {
      idx[i] = rem % rules[i]->size();
      rem /= rules[i]->size();
      v[i] = rules[i]->nodes[idx[i]];
      outer_w *= rules[i]->weights[idx[i]];
      outer_g += v[i] * v[i];
    }
    if (outer_g > kNodeCutExponent) continue;
    std::vector<cplx> line(weights.size(), cplx(0.0, 0.0));
    for (std::size_t i0 = 0; i0 < axis0.size(); ++i0) {
      v[0] = axis0.nodes[i0];
      if (outer_g + v[0] * v[0] > kNodeCutExponent) continue;
      const double gauss = std::exp(-(outer_g + v[0] * v[0]));
      double proj = 0.0;
      if (reflect) proj = 2.0 * dot(hv, v) / hv2;
      double z2 = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double u = reflect ? v[i] - proj * hv[i] : v[i];
        zeta[i] = mubar[i] + u * inv_sqrt_w;
        z2 += zeta[i] * zeta[i];
      }
      const cplx osc = std::exp(cplx(0.0, kn * v[0])) * (axis0.weights[i0] * gauss);
      for (std::size_t m = 0; m < weights.size(); ++m) line[m] += weights[m](z2) * osc;
    }
    for (std::size_t m = 0; m < weights.size(); ++m) acc_lines[m].push_back(line[m] * outer_w);
  }
  ComplexVec out(weights.size());
  for (std::size_t m = 0; m < weights.size(); ++m) out[m] = pairwise_sum(acc_lines[m]);
  return out;
}

}  // namespace detail

/// (2 pi)^{-d} int weight_m(|zeta|^2) |what_0(zeta)|^2 dzeta for each weight,
/// by pairwise frequency quadrature of the exact closed-form transforms.
inline RealVec frequency_masses(const WavepacketSum& sum, const std::vector<RadialWeight>& weights,
                                const QuadratureSpec& q = {}) {
  validate(q);
  detail::require(!sum.empty(), "frequency_masses: empty sum");
  const auto order = detail::order_by_first_center(sum);
  const auto& terms = sum.terms();
  const double w = sum.width();
  const std::size_t d = static_cast<std::size_t>(sum.dim());
  const double window = std::sqrt(4.0 * w * q.pair_cull_exponent);
  const double sqrt_w = std::sqrt(w);

  struct PairRef {
    std::size_t a, b;  // term indices
    std::size_t key;   // index into key table
  };

  auto make_key = [&](const GaussianTerm& a, const GaussianTerm& b, RealVec& kappa, RealVec& mubar) {
    detail::PairKey key;
    key.bits.resize(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
      const double kq = std::round((a.center[i] - b.center[i]) / sqrt_w * detail::kKappaGrid);
      kappa[i] = kq / detail::kKappaGrid;
      key.bits[i] = static_cast<std::int64_t>(kq);
      mubar[i] = 0.5 * (a.modulation[i] + b.modulation[i]);
      key.bits[d + i] = std::bit_cast<std::int64_t>(mubar[i] + 0.0);
    }
    return key;
  };

  // Pass 1: collect pairs and distinct integral keys (sequential, deterministic).
  std::map<detail::PairKey, std::size_t> key_index;
  std::vector<RealVec> key_kappa, key_mubar;
  std::vector<std::vector<PairRef>> rows(order.size());
  RealVec kappa(d), mubar(d);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const GaussianTerm& a = terms[order[pos]];
    for (std::size_t qpos = pos; qpos < order.size(); ++qpos) {
      const GaussianTerm& b = terms[order[qpos]];
      if (b.center[0] - a.center[0] > window) break;
      if (qpos != pos && detail::overlap_exponent(a, b) > q.pair_cull_exponent) continue;
      auto key = make_key(a, b, kappa, mubar);
      auto [it, inserted] = key_index.emplace(std::move(key), key_kappa.size());
      if (inserted) {
        key_kappa.push_back(kappa);
        key_mubar.push_back(mubar);
      }
      rows[pos].push_back({order[pos], order[qpos], it->second});
    }
  }

  // Pass 2: one frequency integral per distinct key.
  std::vector<ComplexVec> integrals(key_kappa.size());
  parallel::parallel_for(
      key_kappa.size(),
      [&](std::size_t k) {
        integrals[k] = detail::pair_frequency_integral(key_kappa[k], key_mubar[k], w, weights, q);
      },
      1);

  // Pass 3: assemble per-row contributions, then a pairwise reduction over rows.
  const std::size_t nw = weights.size();
  std::vector<RealVec> row_sums(order.size(), RealVec(nw, 0.0));
  const double pref = std::pow(w, 0.5 * static_cast<double>(d));
  parallel::parallel_for(
      order.size(),
      [&](std::size_t pos) {
        std::vector<RealVec> contrib(nw);
        for (const PairRef& pr : rows[pos]) {
          const GaussianTerm& a = terms[pr.a];
          const GaussianTerm& b = terms[pr.b];
          double dm2 = 0.0, phase = 0.0;
          for (std::size_t i = 0; i < d; ++i) {
            const double dm = b.modulation[i] - a.modulation[i];
            dm2 += dm * dm;
            phase += 0.5 * (a.center[i] + b.center[i]) * dm;
          }
          const cplx factor = std::conj(a.amplitude) * b.amplitude * pref *
                              std::exp(cplx(-w * dm2 / 4.0, phase));
          const double mult = (pr.a == pr.b) ? 1.0 : 2.0;
          for (std::size_t m = 0; m < nw; ++m)
            contrib[m].push_back(mult * (factor * integrals[pr.key][m]).real());
        }
        for (std::size_t m = 0; m < nw; ++m) row_sums[pos][m] = pairwise_sum(contrib[m]);
      },
      8);

  RealVec out(nw);
  for (std::size_t m = 0; m < nw; ++m) {
    RealVec col(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) col[pos] = row_sums[pos][m];
    out[m] = pairwise_sum(col);
  }
  return out;
}

/// H^s norm (int <zeta>^{2s} |what_0|^2 dzeta / (2 pi)^d)^{1/2} by frequency
/// quadrature. For s = 0 this equals gram_l2_norm up to quadrature error.
inline double hs_norm(const WavepacketSum& sum, double s, const QuadratureSpec& q = {}) {
  detail::require(s >= 0.0, "hs_norm: s must be nonnegative");
  std::vector<RadialWeight> weights;
  if (s == 0.0)
    weights.push_back([](double) { return 1.0; });
  else
    weights.push_back([s](double z2) { return std::pow(1.0 + z2, s); });
  return std::sqrt(std::max(0.0, frequency_masses(sum, weights, q)[0]));
}

/// (Gamma_0 + Gamma_0^*)/2 where Gamma_0^*(x, y) = conj(Gamma_0(y, x)), for
/// two-block sums. The result is a Hermitian kernel.
inline WavepacketSum hermitian_symmetrize(const WavepacketSum& sum) {
  const auto& blocks = sum.signature().blocks();
  detail::require(blocks.size() == 2 && blocks[0].dim == blocks[1].dim,
                  "hermitian_symmetrize: needs two blocks of equal dimension");
  const int n = blocks[0].dim;
  std::vector<GaussianTerm> out;
  out.reserve(2 * sum.size());
  for (const GaussianTerm& t : sum.terms()) {
    GaussianTerm half = t;
    half.amplitude *= 0.5;
    out.push_back(half);
    GaussianTerm adj;
    adj.amplitude = 0.5 * std::conj(t.amplitude);
    adj.width = t.width;
    adj.center.resize(2 * n);
    adj.modulation.resize(2 * n);
    for (int i = 0; i < n; ++i) {
      adj.center[i] = t.center[n + i];
      adj.center[n + i] = t.center[i];
      adj.modulation[i] = -t.modulation[n + i];
      adj.modulation[n + i] = -t.modulation[i];
    }
    out.push_back(std::move(adj));
  }
  return WavepacketSum(sum.signature(), std::move(out), sum.meta());
}

}  // namespace collapse
