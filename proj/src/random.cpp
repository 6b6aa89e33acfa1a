#include "irs/random.hpp"

#include <cmath>

namespace irs {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

cplx Substream::complex_normal(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {s * re, s * im};
}

Matrix Substream::complex_normal(Index rows, Index cols, double variance) {
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = complex_normal(variance);
  return out;
}

Substream RandomSource::stream(std::uint64_t run, std::uint64_t frame, std::uint64_t block,
                               Purpose purpose) const {
  std::uint64_t key = splitmix64(seed_);
  key = splitmix64(key ^ run);
  key = splitmix64(key ^ frame);
  key = splitmix64(key ^ block);
  key = splitmix64(key ^ static_cast<std::uint64_t>(purpose));
  return Substream(key);
}

}  // namespace irs
