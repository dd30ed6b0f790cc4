#pragma once

// Brute-force validators for the closed forms: a periodic spectral propagator
// on a uniform grid and trapezoidal (periodic) quadrature of inner products.
// Requires FFTW3 (link collapse_oracle).

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <string>
#include <vector>

#include "collapse/detail/numeric.hpp"
#include "collapse/errors.hpp"
#include "collapse/gaussian_core.hpp"
#include "collapse/types.hpp"

namespace collapse::oracle {

/// Uniform periodic grid on [-L, L)^d with N points per axis.
struct GridSpec {
  double half_width = 40.0;
  int points = 256;
  int dim = 2;

  void validate() const {
    if (dim < 1 || dim > 3) throw ContractViolation("GridSpec: dim must be in [1, 3]");
    if (points < 64 || (points & (points - 1)) != 0)
      throw ContractViolation("GridSpec: points per axis must be a power of two >= 64");
    if (!(half_width > 0.0)) throw ContractViolation("GridSpec: half_width must be positive");
  }
  double spacing() const { return 2.0 * half_width / points; }
  std::size_t total() const {
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(points);
    return n;
  }
  /// Coordinates of the flat (row-major) index.
  void node(std::size_t flat, std::span<double> x) const {
    const double h = spacing();
    for (int i = dim - 1; i >= 0; --i) {
      x[i] = -half_width + static_cast<double>(flat % points) * h;
      flat /= points;
    }
  }
  /// Angular frequency of the FFT bin index along one axis.
  double frequency(int k) const {
    const int kk = k < points / 2 ? k : k - points;
    return kPi * kk / half_width;
  }
};

using Samples = std::vector<cplx>;

/// Samples of the initial sum on the grid. Throws ValidationError when the
/// largest boundary sample exceeds 1e-12 of the peak.
inline Samples sample(const WavepacketSum& sum, const GridSpec& grid) {
  grid.validate();
  if (sum.dim() != grid.dim) throw ContractViolation("oracle::sample: dimension mismatch");
  Samples out(grid.total());
  RealVec x(grid.dim);
  double peak = 0.0, boundary = 0.0;
  const double edge = -grid.half_width;
  for (std::size_t f = 0; f < out.size(); ++f) {
    grid.node(f, x);
    out[f] = sum.initial_value(x);
    const double a = std::abs(out[f]);
    peak = std::max(peak, a);
    for (int i = 0; i < grid.dim; ++i)
      if (x[i] == edge) boundary = std::max(boundary, a);
  }
  if (boundary > 1e-12 * peak)
    throw ValidationError("oracle grid too small: boundary sample ratio " + std::to_string(boundary / peak) +
                          " exceeds 1e-12");
  return out;
}

namespace detail {
inline std::mutex& fftw_plan_mutex() {
  static std::mutex mu;
  return mu;
}

inline void fft_inplace(Samples& data, const GridSpec& grid, int direction) {
  std::vector<int> dims(grid.dim, grid.points);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_plan_mutex());
    plan = fftw_plan_dft(grid.dim, dims.data(), ptr, ptr, direction, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
}
}  // namespace detail

/// Applies exp(-i t Q(w)/2), Q(w) = sum_j s_j |w_j|^2, on the discrete
/// frequency lattice. The multiplier is unimodular, so the discrete L2 norm is
/// preserved up to rounding.
inline Samples spectral_evolve(Samples samples, const BlockSignature& sig, double t, const GridSpec& grid) {
  grid.validate();
  if (sig.total_dim() != grid.dim) throw ContractViolation("spectral_evolve: signature/grid dimension mismatch");
  if (samples.size() != grid.total()) throw ContractViolation("spectral_evolve: sample count mismatch");
  if (t == 0.0) return samples;
  std::vector<int> axis_sign;
  for (const Block& b : sig.blocks())
    for (int i = 0; i < b.dim; ++i) axis_sign.push_back(b.sign);

  detail::fft_inplace(samples, grid, FFTW_FORWARD);
  const double scale = 1.0 / static_cast<double>(grid.total());
  for (std::size_t f = 0; f < samples.size(); ++f) {
    std::size_t rem = f;
    double q = 0.0;
    for (int i = grid.dim - 1; i >= 0; --i) {
      const double om = grid.frequency(static_cast<int>(rem % grid.points));
      rem /= grid.points;
      q += axis_sign[i] * om * om;
    }
    samples[f] *= std::exp(cplx(0.0, -0.5 * t * q)) * scale;
  }
  detail::fft_inplace(samples, grid, FFTW_BACKWARD);
  return samples;
}

/// Evolves a sum on the grid after checking that every drifted center stays
/// at least 6 sqrt(w) away from the boundary at time t.
inline Samples spectral_evolve(const WavepacketSum& sum, double t, const GridSpec& grid) {
  const double margin = 6.0 * std::sqrt(sum.width());
  const auto& sig = sum.signature();
  for (const GaussianTerm& term : sum.terms()) {
    std::size_t off = 0;
    for (const Block& b : sig.blocks()) {
      for (int i = 0; i < b.dim; ++i) {
        const double c = term.center[off + i] + b.sign * t * term.modulation[off + i];
        if (std::abs(c) > grid.half_width - margin)
          throw ValidationError("oracle grid too small for drifted center " + std::to_string(c) + " at t=" +
                                std::to_string(t));
      }
      off += b.dim;
    }
  }
  return spectral_evolve(sample(sum, grid), sig, t, grid);
}

inline double discrete_l2(const Samples& s, const GridSpec& grid) {
  RealVec sq(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) sq[i] = std::norm(s[i]);
  return std::sqrt(pairwise_sum(sq) * std::pow(grid.spacing(), grid.dim));
}

/// Largest closed-form/spectral disagreement over the grid and the two values
/// at that node.
struct NodeDiscrepancy {
  double rel_error = 0.0;  // max |closed - spectral| / max |closed|
  cplx closed_form{0.0, 0.0};
  cplx spectral{0.0, 0.0};
};

/// `branch` selects a deliberately wrong closed form for fault-injection runs.
inline NodeDiscrepancy worst_node_vs_closed_form(const WavepacketSum& sum, double t, const GridSpec& grid,
                                                 const Samples& evolved,
                                                 collapse::detail::Branch branch = collapse::detail::Branch::Principal) {
  RealVec x(grid.dim);
  double err = 0.0, peak = 0.0;
  NodeDiscrepancy out;
  ComplexVec vals(sum.size());
  for (std::size_t f = 0; f < evolved.size(); ++f) {
    grid.node(f, x);
    for (std::size_t k = 0; k < sum.size(); ++k)
      vals[k] = collapse::detail::evolve_eval(sum.terms()[k], sum.signature(), t, x, branch);
    const cplx exact = pairwise_sum(vals);
    const double e = std::abs(exact - evolved[f]);
    if (e > err) {
      err = e;
      out.closed_form = exact;
      out.spectral = evolved[f];
    }
    peak = std::max(peak, std::abs(exact));
  }
  out.rel_error = err / peak;
  return out;
}

inline double max_relative_error_vs_closed_form(const WavepacketSum& sum, double t, const GridSpec& grid,
                                                const Samples& evolved,
                                                collapse::detail::Branch branch = collapse::detail::Branch::Principal) {
  return worst_node_vs_closed_form(sum, t, grid, evolved, branch).rel_error;
}

/// Trapezoidal (periodic) quadrature of conj(a) b over the grid.
inline cplx quad_inner_product(const GaussianTerm& a, const GaussianTerm& b, const GridSpec& grid) {
  grid.validate();
  if (static_cast<int>(a.dim()) != grid.dim || static_cast<int>(b.dim()) != grid.dim)
    throw ContractViolation("quad_inner_product: dimension mismatch");
  ComplexVec vals(grid.total());
  RealVec x(grid.dim);
  double peak = 0.0, boundary = 0.0;
  for (std::size_t f = 0; f < vals.size(); ++f) {
    grid.node(f, x);
    const cplx va = a(x), vb = b(x);
    vals[f] = std::conj(va) * vb;
    const double m = std::max(std::abs(va), std::abs(vb));
    peak = std::max(peak, m);
    for (int i = 0; i < grid.dim; ++i)
      if (x[i] == -grid.half_width) boundary = std::max(boundary, m);
  }
  if (boundary > 1e-12 * peak) throw ValidationError("quad_inner_product: grid too small for the terms");
  return pairwise_sum(vals) * std::pow(grid.spacing(), grid.dim);
}

}  // namespace collapse::oracle
