// SPDX-License-Identifier: Apache-2.0
//
// Counter-based splittable random streams built on the SplitMix64 engine
// (Steele, Lea & Flood 2014; Vigna's fixed-increment variant).  The state is
// a counter advanced by a fixed odd gamma; each output is a bijective hash
// of the counter, so a stream keyed by (master seed, setting, run, label)
// produces the same values no matter which thread runs it or in what order.
#pragma once

#include <cstdint>

namespace qjsim {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

/// SplitMix64 finalizer: bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Logical stream identifiers.  Two streams with the same (seed, setting,
/// run) but different labels are independent.
enum class StreamLabel : std::uint64_t {
  generic = 0,
  qe_campaign = 1,
  readout_noise_campaign = 2,
  dark_current_campaign = 3,
  characterize_f1 = 4,
  characterize_f2 = 5,
  estimator_calibration = 6,
  sampler_test = 7,
  replication = 8,
};

inline std::uint64_t derive_stream_seed(std::uint64_t master_seed,
                                        std::uint64_t setting_index,
                                        std::uint64_t run_index,
                                        StreamLabel label) {
  std::uint64_t h = mix64(master_seed + kGoldenGamma);
  h = mix64(h ^ (setting_index + kGoldenGamma));
  h = mix64(h ^ (run_index + kGoldenGamma));
  h = mix64(h ^ (static_cast<std::uint64_t>(label) + kGoldenGamma));
  return h;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  RandomStream(std::uint64_t master_seed, std::uint64_t setting_index,
               std::uint64_t run_index, StreamLabel label)
      : state_(derive_stream_seed(master_seed, setting_index, run_index, label)) {}

  std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_open_double() { return 1.0 - next_double(); }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace qjsim
