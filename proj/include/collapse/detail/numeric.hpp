#pragma once

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace collapse {

using cplx = std::complex<double>;
using RealVec = std::vector<double>;
using ComplexVec = std::vector<cplx>;

inline constexpr double kPi = 3.14159265358979323846;

namespace parallel {

namespace detail {
inline std::atomic<unsigned>& max_threads_slot() {
  static std::atomic<unsigned> slot{0};
  return slot;
}
}  // namespace detail

/// Upper bound on worker threads used by the library. 0 means
/// hardware_concurrency. Results never depend on this value.
inline void set_max_threads(unsigned n) { detail::max_threads_slot() = n; }

inline unsigned max_threads() {
  unsigned n = detail::max_threads_slot().load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs fn(i) for i in [0, count). Work is split in contiguous chunks; fn must
/// only write to slots owned by index i.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t min_chunk = 16) {
  const std::size_t threads =
      std::min<std::size_t>(max_threads(), (count + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace parallel

/// Pairwise (tree) summation with a fixed split rule, so the result depends
/// only on the order of the input and never on scheduling.
template <typename T>
T pairwise_sum(std::span<const T> xs) {
  constexpr std::size_t kLeaf = 8;
  if (xs.size() <= kLeaf) {
    T acc{};
    for (const T& x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

template <typename T>
T pairwise_sum(const std::vector<T>& xs) {
  return pairwise_sum(std::span<const T>(xs));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }

inline double distance2(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace collapse
