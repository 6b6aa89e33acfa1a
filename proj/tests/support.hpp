#pragma once

#include <cstdint>
#include <vector>

#include "irs/random.hpp"
#include "irs/tensor.hpp"

namespace irs::test {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t key) {
  Substream s(key);
  return s.complex_normal(rows, cols);
}

inline Vector random_vector(Index size, std::uint64_t key) { return random_matrix(size, 1, key); }

inline ComplexTensor random_tensor(std::vector<Index> shape, std::uint64_t key) {
  ComplexTensor t(std::move(shape));
  Substream s(key);
  for (auto& v : t.data()) v = s.complex_normal();
  return t;
}

inline double rel_error(const Matrix& reference, const Matrix& value) {
  return (reference - value).norm() / reference.norm();
}

inline double rel_error(const ComplexTensor& reference, const ComplexTensor& value) {
  const Eigen::Map<const Vector> r(reference.data().data(), reference.size());
  const Eigen::Map<const Vector> v(value.data().data(), value.size());
  return (r - v).norm() / r.norm();
}

/// Uniformly spaced-phase steering columns with first row one.
inline Matrix vandermonde(Index rows, Index cols, std::uint64_t key) {
  Substream s(key);
  Matrix v(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    const double mu = s.uniform(-3.14159, 3.14159);
    for (Index r = 0; r < rows; ++r) v(r, c) = std::polar(1.0, -static_cast<double>(r) * mu);
  }
  return v;
}

}  // namespace irs::test
