#pragma once

#include <cstdint>

namespace snl {

/// Counter-based 64-bit generator.
///
/// The n-th output of a stream with key k is splitmix64_mix(k + n * 0x9E3779B97F4A7C15),
/// i.e. SplitMix64 evaluated at an explicit counter. Output depends only on
/// (key, counter), so results are identical on every platform with IEEE doubles.
///
/// Streams: `split(id)` derives an independent child key as
/// splitmix64_mix(key ^ splitmix64_mix(id + 0xD1B54A32D192ED03)). The parent
/// counter is untouched, so splitting never perturbs the parent sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1); never returns zero.
  double uniform_open();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  double normal(double mean, double stddev);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  [[nodiscard]] Rng split(std::uint64_t stream_id) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, bool /*raw*/) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace snl
