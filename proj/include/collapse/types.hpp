#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collapse/detail/numeric.hpp"
#include "collapse/errors.hpp"

namespace collapse {

/// One variable block of the evolution: dimension and the sign carried by its
/// Laplacian.
struct Block {
  int dim = 1;
  int sign = +1;
  bool operator==(const Block&) const = default;
};

/// Which Laplacians carry minus signs in exp(i t (sum_j s_j Laplacian_j) / 2).
class BlockSignature {
 public:
  explicit BlockSignature(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    detail::require(!blocks_.empty(), "BlockSignature: at least one block required");
    for (const Block& b : blocks_) {
      detail::require(b.dim >= 1, "BlockSignature: block dimension must be positive");
      detail::require(b.sign == 1 || b.sign == -1, "BlockSignature: sign must be +1 or -1");
      total_dim_ += b.dim;
    }
  }

  static BlockSignature lambda(int n) { return BlockSignature({{n, +1}, {n, +1}}); }
  static BlockSignature gamma(int n) { return BlockSignature({{n, +1}, {n, -1}}); }
  static BlockSignature g(int n) { return BlockSignature({{n, +1}, {n, +1}, {n, -1}}); }

  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t block_count() const { return blocks_.size(); }
  int total_dim() const { return total_dim_; }

  bool uniform_block_dim() const {
    for (const Block& b : blocks_)
      if (b.dim != blocks_.front().dim) return false;
    return true;
  }

  /// Common block dimension; throws when blocks differ in size.
  int block_dim() const {
    detail::require(uniform_block_dim(), "BlockSignature: blocks have unequal dimensions");
    return blocks_.front().dim;
  }

  /// Q(mu) = sum_j s_j |mu_j|^2.
  double dispersion(std::span<const double> mu) const {
    detail::require(static_cast<int>(mu.size()) == total_dim_, "dispersion: vector length mismatch");
    double q = 0.0;
    std::size_t off = 0;
    for (const Block& b : blocks_) {
      double acc = 0.0;
      for (int i = 0; i < b.dim; ++i) acc += mu[off + i] * mu[off + i];
      q += b.sign * acc;
      off += b.dim;
    }
    return q;
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      if (j) s += ",";
      s += "(" + std::to_string(blocks_[j].dim) + (blocks_[j].sign > 0 ? ",+)" : ",-)");
    }
    return s + "]";
  }

  bool operator==(const BlockSignature& o) const { return blocks_ == o.blocks_; }

 private:
  std::vector<Block> blocks_;
  int total_dim_ = 0;
};

/// amplitude * exp(i x.modulation) * exp(-|x - center|^2 / (2 width)).
struct GaussianTerm {
  cplx amplitude{1.0, 0.0};
  RealVec center;
  RealVec modulation;
  double width = 1.0;

  std::size_t dim() const { return center.size(); }

  void validate() const {
    detail::require(width > 0.0 && std::isfinite(width), "GaussianTerm: width must be positive");
    detail::require(center.size() == modulation.size(),
                    "GaussianTerm: center and modulation lengths differ");
    detail::require(!center.empty(), "GaussianTerm: empty vectors");
  }

  cplx operator()(std::span<const double> x) const {
    detail::require(x.size() == center.size(), "GaussianTerm: point dimension mismatch");
    return amplitude * std::exp(cplx(-distance2(x, center) / (2.0 * width), dot(x, modulation)));
  }
};

enum class FamilyKind { LambdaP, LambdaQ, GammaP, GammaQ, GP, GQ, Custom };

inline std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::LambdaP: return "LambdaP";
    case FamilyKind::LambdaQ: return "LambdaQ";
    case FamilyKind::GammaP: return "GammaP";
    case FamilyKind::GammaQ: return "GammaQ";
    case FamilyKind::GP: return "GP";
    case FamilyKind::GQ: return "GQ";
    case FamilyKind::Custom: return "Custom";
  }
  return "Custom";
}

inline FamilyKind family_from_string(const std::string& s) {
  for (FamilyKind k : {FamilyKind::LambdaP, FamilyKind::LambdaQ, FamilyKind::GammaP, FamilyKind::GammaQ,
                       FamilyKind::GP, FamilyKind::GQ, FamilyKind::Custom})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown family '" + s + "' (expected LambdaP|LambdaQ|GammaP|GammaQ|GP|GQ)");
}

inline bool is_q_family(FamilyKind k) {
  return k == FamilyKind::LambdaQ || k == FamilyKind::GammaQ || k == FamilyKind::GQ;
}

inline BlockSignature signature_for(FamilyKind k, int n) {
  switch (k) {
    case FamilyKind::LambdaP:
    case FamilyKind::LambdaQ: return BlockSignature::lambda(n);
    case FamilyKind::GammaP:
    case FamilyKind::GammaQ: return BlockSignature::gamma(n);
    case FamilyKind::GP:
    case FamilyKind::GQ: return BlockSignature::g(n);
    case FamilyKind::Custom: break;
  }
  throw ContractViolation("signature_for: custom family has no fixed signature");
}

struct FamilyMeta {
  FamilyKind family = FamilyKind::Custom;
  double R = 0.0;
  double C = 0.0;
  std::optional<int> m;
  int n = 1;
};

/// A finite sum of Gaussian terms sharing one width, plus the signature it is
/// evolved under.
class WavepacketSum {
 public:
  WavepacketSum(BlockSignature sig, std::vector<GaussianTerm> terms, FamilyMeta meta = {})
      : sig_(std::move(sig)), terms_(std::move(terms)), meta_(meta) {
    const auto d = static_cast<std::size_t>(sig_.total_dim());
    for (const GaussianTerm& t : terms_) {
      t.validate();
      detail::require(t.dim() == d, "WavepacketSum: term dimension does not match signature");
      detail::require(t.width == terms_.front().width,
                      "WavepacketSum: heterogeneous widths are not supported");
    }
  }

  const BlockSignature& signature() const { return sig_; }
  const std::vector<GaussianTerm>& terms() const { return terms_; }
  const FamilyMeta& meta() const { return meta_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  int dim() const { return sig_.total_dim(); }
  double width() const {
    detail::require(!terms_.empty(), "WavepacketSum: empty sum has no width");
    return terms_.front().width;
  }

  /// Same sum with every amplitude multiplied by c.
  WavepacketSum scaled(cplx c) const {
    auto t = terms_;
    for (auto& term : t) term.amplitude *= c;
    return WavepacketSum(sig_, std::move(t), meta_);
  }

  cplx initial_value(std::span<const double> x) const {
    ComplexVec vals;
    vals.reserve(terms_.size());
    for (const auto& t : terms_) vals.push_back(t(x));
    return pairwise_sum(vals);
  }

 private:
  BlockSignature sig_;
  std::vector<GaussianTerm> terms_;
  FamilyMeta meta_;
};

/// exp(log_gamma) * exp(-(alpha/2)|x|^2 + beta.x) on R^n, Re(alpha) > 0.
/// The prefactor is kept in log form so that very small or very large
/// prefactors survive intermediate steps.
struct ComplexGaussian {
  int n = 1;
  cplx log_gamma{0.0, 0.0};
  cplx alpha{1.0, 0.0};
  ComplexVec beta;

  cplx gamma() const { return std::exp(log_gamma); }

  void validate() const {
    detail::require(alpha.real() > 0.0, "ComplexGaussian: Re(alpha) must be positive");
    detail::require(static_cast<int>(beta.size()) == n, "ComplexGaussian: beta length mismatch");
  }

  cplx operator()(std::span<const double> x) const {
    detail::require(static_cast<int>(x.size()) == n, "ComplexGaussian: point dimension mismatch");
    cplx bx = 0.0;
    for (int i = 0; i < n; ++i) bx += beta[i] * x[i];
    return std::exp(log_gamma - 0.5 * alpha * norm2(x) + bx);
  }

  /// Center and standard deviation of |g|, which is a real Gaussian.
  RealVec magnitude_center() const {
    RealVec c(n);
    for (int i = 0; i < n; ++i) c[i] = beta[i].real() / alpha.real();
    return c;
  }
  double magnitude_stddev() const { return 1.0 / std::sqrt(alpha.real()); }
};

}  // namespace collapse
