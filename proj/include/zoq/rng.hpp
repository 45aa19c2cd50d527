#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace zoq {

/// Reproducible random stream identified by (seed, stream_id).
///
/// The generator is std::mt19937_64 initialised through std::seed_seq with the
/// four 32-bit halves of seed and stream_id. Uniforms take the top 53 bits of a
/// draw and are shifted by half an ulp so they lie strictly inside (0, 1).
/// Normals come from the Box–Muller transform; each pair of uniforms yields
/// two variates and the second one is cached for the next call. All of this
/// is specified by the standard library, so a given (seed, stream_id) produces
/// the same sequence on every conforming platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double gaussian();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  void fill_gaussian(std::span<double> out);

  /// Independent stream sharing this seed; does not advance *this.
  SeededRng derive(std::uint64_t sub_stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// n i.i.d. standard normal variates drawn from rng.
std::vector<double> gaussian_standard(SeededRng& rng, int n);

/// SplitMix64 finaliser, used to mix stream identifiers.
std::uint64_t mix64(std::uint64_t x);

}  // namespace zoq
