#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include "common.hpp"

namespace mixsmpc {

/**
 * @brief Seedable, splittable counter-based random stream.
 *
 * Output k of a stream with key s is splitmix64(s + (k+1)·γ). Substreams are
 * derived purely from (key, index), so episode i of a campaign draws the same
 * numbers no matter which worker runs it or in what order.
 *
 * Instances are single-owner and must not be shared between threads.
 */
class RandomStream
{
public:
  explicit RandomStream(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  /// Independent stream for index `i`; does not advance this stream.
  RandomStream substream(std::uint64_t i) const
  {
    RandomStream s;
    s.key_ = mix(key_ ^ mix(i + 0x9e3779b97f4a7c15ULL));
    return s;
  }

  std::uint64_t next_u64()
  {
    ++counter_;
    return mix(key_ + counter_ * kGamma);
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal (Box-Muller; the second variate is cached).
  double normal()
  {
    if (cached_) {
      const double z = *cached_;
      cached_.reset();
      return z;
    }
    double u1 = uniform();
    while (u1 <= 0.0) { u1 = uniform(); }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(t);
    return r * std::cos(t);
  }

  Vector normal_vector(Eigen::Index n)
  {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) { z[i] = normal(); }
    return z;
  }

  /// Index drawn from a discrete distribution given by `weights` (assumed to sum to one).
  std::size_t categorical(const Vector & weights)
  {
    const double u = uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) { return static_cast<std::size_t>(i); }
    }
    // rounding in the cumulative sum: fall back to the last index with positive mass
    for (Eigen::Index i = weights.size() - 1; i >= 0; --i) {
      if (weights[i] > 0.0) { return static_cast<std::size_t>(i); }
    }
    return 0;
  }

  std::uint64_t counter() const { return counter_; }

private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z)
  {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_{0};
  std::uint64_t counter_{0};
  std::optional<double> cached_;
};

}  // namespace mixsmpc
