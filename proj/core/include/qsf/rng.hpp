#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace qsf {

/// A reproducible stream of random numbers identified by (seed, stream-id).
///
/// Two streams constructed with the same seed and stream-id produce the same
/// sequence bit for bit. Distinct stream-ids, and distinct child streams
/// obtained via split(), are seeded through std::seed_seq over the full key so
/// they behave as independent generators.
///
/// A stream is single-owner mutable state. Concurrent sampling needs one
/// stream per thread, typically obtained with split().
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return key_.front(); }
  std::uint64_t stream_id() const noexcept { return key_[1]; }

  /// Key words identifying this stream (seed, stream-id, split path...).
  const std::vector<std::uint64_t>& key() const noexcept { return key_; }

  /// Independent child stream; does not advance this stream.
  RngStream split(std::uint64_t child) const;
  RngStream split(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Exponential variate with the given rate (mean 1/rate).
  double exponential(double rate);

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.key_ == b.key_ && a.engine_ == b.engine_;
  }

 private:
  explicit RngStream(std::vector<std::uint64_t> key);

  std::vector<std::uint64_t> key_;
  std::mt19937_64 engine_;
};

}  // namespace qsf
