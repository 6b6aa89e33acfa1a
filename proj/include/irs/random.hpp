#pragma once

#include <cstdint>
#include <random>

#include "irs/tensor.hpp"

namespace irs {

/// What a substream is used for. Part of the substream key, so adding a new
/// consumer never shifts the draws of an existing one.
enum class Purpose : std::uint64_t {
  Geometry = 1,
  FadingInit = 2,
  BsIrsInnovation = 3,
  IrsUeInnovation = 4,
  Stage1Noise = 5,
  Stage2Noise = 6,
  Data = 7,
  AlsInit = 8,
};

/// One independent random stream.
class Substream {
 public:
  explicit Substream(std::uint64_t key) : engine_(key) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  bool bit() { return (engine_() >> 63) != 0; }
  /// Circularly-symmetric complex Gaussian with the given total variance.
  cplx complex_normal(double variance = 1.0);
  Matrix complex_normal(Index rows, Index cols, double variance = 1.0);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Derives substreams keyed by (run, frame, block, purpose) from one master
/// seed, so a realization does not depend on the order in which runs are
/// executed.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed) {}

  Substream stream(std::uint64_t run, std::uint64_t frame, std::uint64_t block, Purpose purpose) const;
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace irs
