#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "collapse/detail/numeric.hpp"
#include "collapse/errors.hpp"

namespace collapse {

/// One-dimensional quadrature rule: nodes and weights on some interval.
struct Rule1D {
  RealVec nodes;
  RealVec weights;
  std::size_t size() const { return nodes.size(); }
};

enum class RuleKind { Midpoint, GaussLegendre };

inline std::string to_string(RuleKind k) {
  return k == RuleKind::Midpoint ? "midpoint" : "gauss-legendre";
}

inline RuleKind rule_kind_from_string(const std::string& s) {
  if (s == "midpoint") return RuleKind::Midpoint;
  if (s == "gauss-legendre") return RuleKind::GaussLegendre;
  throw ConfigError("unknown quadrature rule '" + s + "' (expected midpoint | gauss-legendre)");
}

namespace detail {

// Newton iteration on the three-term Legendre recurrence; nodes on [-1, 1].
inline Rule1D compute_gauss_legendre(int order) {
  Rule1D r;
  r.nodes.resize(order);
  r.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = order * (x * p1 - p0) / (x * x - 1.0);
    const double wgt = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[order - 1 - i] = x;
    r.weights[i] = wgt;
    r.weights[order - 1 - i] = wgt;
  }
  if (order % 2 == 1) r.nodes[order / 2] = 0.0;
  return r;
}

}  // namespace detail

/// Gauss-Legendre nodes/weights on [-1, 1], cached per order.
inline const Rule1D& gauss_legendre(int order) {
  if (order < 1) throw ContractViolation("gauss_legendre: order must be >= 1");
  static std::mutex mu;
  static std::map<int, Rule1D> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) {
    if (order == 1) {
      it = cache.emplace(order, Rule1D{{0.0}, {2.0}}).first;
    } else {
      it = cache.emplace(order, detail::compute_gauss_legendre(order)).first;
    }
  }
  return it->second;
}

/// Composite Gauss-Legendre on [a, b]: `panels` equal panels of `order` nodes.
inline Rule1D composite_gauss_legendre(double a, double b, int panels, int order) {
  const Rule1D& ref = gauss_legendre(order);
  Rule1D r;
  r.nodes.reserve(static_cast<std::size_t>(panels) * order);
  r.weights.reserve(r.nodes.capacity());
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (int i = 0; i < order; ++i) {
      r.nodes.push_back(lo + 0.5 * h * (ref.nodes[i] + 1.0));
      r.weights.push_back(0.5 * h * ref.weights[i]);
    }
  }
  return r;
}

inline Rule1D midpoint_rule(double a, double b, int cells) {
  Rule1D r;
  const double h = (b - a) / cells;
  for (int i = 0; i < cells; ++i) {
    r.nodes.push_back(a + (i + 0.5) * h);
    r.weights.push_back(h);
  }
  return r;
}

/// Panel order used when a Gauss-Legendre rule is requested by sample count.
inline constexpr int kPanelOrder = 8;

/// Rule with approximately `samples` nodes on [a, b]. Gauss-Legendre rules with
/// more than kPanelOrder samples become composite with panels of kPanelOrder
/// nodes (sample count rounded up to a multiple of kPanelOrder).
inline Rule1D make_rule(RuleKind kind, double a, double b, int samples) {
  if (samples < 1) throw ContractViolation("make_rule: samples must be >= 1");
  if (kind == RuleKind::Midpoint) return midpoint_rule(a, b, samples);
  if (samples <= kPanelOrder) return composite_gauss_legendre(a, b, 1, samples);
  const int panels = (samples + kPanelOrder - 1) / kPanelOrder;
  return composite_gauss_legendre(a, b, panels, kPanelOrder);
}

/// Composite Gauss-Legendre on [a, b] that places a panel break at `split`
/// when it lies strictly inside. Used for integrands with a kink there.
inline Rule1D split_gauss_legendre(double a, double b, double split, int panels, int order) {
  if (split <= a || split >= b) return composite_gauss_legendre(a, b, panels, order);
  const double frac = (split - a) / (b - a);
  const int left = std::max(1, static_cast<int>(std::lround(frac * panels)));
  const int right = std::max(1, panels - left);
  Rule1D r = composite_gauss_legendre(a, split, left, order);
  Rule1D rr = composite_gauss_legendre(split, b, right, order);
  r.nodes.insert(r.nodes.end(), rr.nodes.begin(), rr.nodes.end());
  r.weights.insert(r.weights.end(), rr.weights.begin(), rr.weights.end());
  return r;
}

}  // namespace collapse
