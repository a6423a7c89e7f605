#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace home {

/// Seeded generator with platform-independent derived distributions.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniform reals take the top 53 bits; Gaussians use the Marsaglia
/// polar method and hand out both variates of each accepted pair in order;
/// bounded integers use rejection sampling. None of the implementation-defined
/// <random> distributions are involved, so a seed reproduces the same stream
/// on every conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal.
  double normal();
  /// Uniform on {0, ..., n - 1}; n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Seed of an independent stream derived from `seed` (SplitMix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace home
