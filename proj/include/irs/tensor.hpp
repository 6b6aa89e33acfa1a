#pragma once

// Dense complex multilinear algebra.
//
// Tensors are stored column-major over modes (mode 0 varies fastest), so the
// order-2 tensor of a matrix shares its memory layout with vec() of that
// matrix. Modes are 0-based throughout the C++ API.
//
// Unfoldings follow the CP-compatible convention: for a rank-R CP tensor
// with factors U_0..U_{N-1},
//
//   unfold(T, n) = U_n * (U_{N-1} (x) ... (x) U_{n+1} (x) U_{n-1} (x) ... (x) U_0)^T
//
// i.e. the remaining modes index the columns with the lowest mode fastest.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace irs {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Relative singular-value cutoff used by pinv().
inline constexpr double kPinvRtol = 1e-12;

class ComplexTensor {
 public:
  ComplexTensor() = default;
  /// Zero-filled tensor. Every extent must be positive.
  explicit ComplexTensor(std::vector<Index> shape);
  ComplexTensor(std::vector<Index> shape, std::vector<cplx> data);

  const std::vector<Index>& shape() const noexcept { return shape_; }
  Index order() const noexcept { return static_cast<Index>(shape_.size()); }
  Index extent(Index mode) const;
  Index size() const noexcept { return static_cast<Index>(data_.size()); }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  template <typename... Idx>
  cplx& operator()(Idx... idx) {
    return data_[linear_index({static_cast<Index>(idx)...})];
  }
  template <typename... Idx>
  const cplx& operator()(Idx... idx) const {
    return data_[linear_index({static_cast<Index>(idx)...})];
  }

  Index linear_index(std::initializer_list<Index> idx) const;

  double norm() const;

  friend bool operator==(const ComplexTensor&, const ComplexTensor&) = default;

 private:
  std::vector<Index> shape_;
  std::vector<cplx> data_;
};

/// Order-2 tensor sharing the column-major layout of `m`.
ComplexTensor as_tensor(const Matrix& m);

Matrix kron(const Matrix& a, const Matrix& b);
Matrix khatri_rao(const Matrix& a, const Matrix& b);

Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index rows, Index cols);

Matrix diag(const Vector& v);
/// Diagonal matrix built from row `row` of `m`.
Matrix diag_row(const Matrix& m, Index row);

Matrix unfold(const ComplexTensor& t, Index mode);
ComplexTensor fold(const Matrix& m, Index mode, std::vector<Index> shape);

/// T x_mode A: contracts mode `mode` of `t` with the columns of `a`.
ComplexTensor mode_n_product(const ComplexTensor& t, const Matrix& a, Index mode);

struct Pseudoinverse {
  Matrix matrix;
  Index rank = 0;
};

/// Moore-Penrose pseudoinverse via SVD; singular values below
/// rtol * sigma_max are treated as zero and reported through `rank`.
Pseudoinverse pseudoinverse(const Matrix& a, double rtol = kPinvRtol);
Matrix pinv(const Matrix& a, double rtol = kPinvRtol);

struct SingularTriplet {
  Vector left;
  double value = 0.0;
  Vector right;
};

/// Largest singular value with unit singular vectors, A v = sigma u.
/// The first non-negligible entry of `right` is made real-positive.
/// Throws NumericalError for a zero matrix.
SingularTriplet dominant_singular_triplet(const Matrix& a);

/// Serial index-loop versions of the kernels above. They are kept as test
/// oracles and as the baseline for bench/.
namespace reference {

Matrix kron(const Matrix& a, const Matrix& b);
Matrix khatri_rao(const Matrix& a, const Matrix& b);
Matrix unfold(const ComplexTensor& t, Index mode);
ComplexTensor mode_n_product(const ComplexTensor& t, const Matrix& a, Index mode);

}  // namespace reference

}  // namespace irs
