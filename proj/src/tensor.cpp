#include "irs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "irs/errors.hpp"

namespace irs {

namespace {

// Below this many output entries the OpenMP fork costs more than the loop.
constexpr Index kParallelMinWork = Index{1} << 14;

Index product(const std::vector<Index>& shape, std::size_t begin, std::size_t end) {
  Index p = 1;
  for (std::size_t i = begin; i < end; ++i) p *= shape[i];
  return p;
}

void check_shape(const std::vector<Index>& shape) {
  if (shape.empty()) throw DimensionError("tensor order must be at least 1");
  for (Index e : shape) {
    if (e <= 0) throw DimensionError("tensor extents must be positive");
  }
}

void check_mode(const ComplexTensor& t, Index mode) {
  if (mode < 0 || mode >= t.order()) {
    throw DimensionError("mode " + std::to_string(mode) + " out of range for order-" +
                         std::to_string(t.order()) + " tensor");
  }
}

}  // namespace

ComplexTensor::ComplexTensor(std::vector<Index> shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(static_cast<std::size_t>(product(shape_, 0, shape_.size())), cplx{});
}

ComplexTensor::ComplexTensor(std::vector<Index> shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (static_cast<Index>(data_.size()) != product(shape_, 0, shape_.size())) {
    throw DimensionError("tensor data length does not match its shape");
  }
}

Index ComplexTensor::extent(Index mode) const {
  check_mode(*this, mode);
  return shape_[static_cast<std::size_t>(mode)];
}

Index ComplexTensor::linear_index(std::initializer_list<Index> idx) const {
  if (static_cast<Index>(idx.size()) != order()) {
    throw DimensionError("index arity does not match tensor order");
  }
  Index linear = 0;
  Index stride = 1;
  std::size_t m = 0;
  for (Index i : idx) {
    const Index e = shape_[m++];
    if (i < 0 || i >= e) throw DimensionError("tensor index out of range");
    linear += i * stride;
    stride *= e;
  }
  return linear;
}

double ComplexTensor::norm() const {
  double s = 0.0;
  for (const cplx& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

ComplexTensor as_tensor(const Matrix& m) {
  return ComplexTensor({m.rows(), m.cols()}, std::vector<cplx>(m.data(), m.data() + m.size()));
}

Matrix kron(const Matrix& a, const Matrix& b) {
  const Index br = b.rows();
  const Index bc = b.cols();
  Matrix out(a.rows() * br, a.cols() * bc);
  const Index cols = a.cols();
#pragma omp parallel for if (out.size() > kParallelMinWork)
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * br, j * bc, br, bc) = a(i, j) * b;
    }
  }
  return out;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.cols()) + ")");
  }
  const Index br = b.rows();
  Matrix out(a.rows() * br, a.cols());
  const Index cols = a.cols();
#pragma omp parallel for if (out.size() > kParallelMinWork)
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.col(j).segment(i * br, br) = a(i, j) * b.col(j);
    }
  }
  return out;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0 || v.size() != rows * cols) {
    throw DimensionError("unvec: length " + std::to_string(v.size()) + " cannot be reshaped to " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix diag(const Vector& v) { return v.asDiagonal(); }

Matrix diag_row(const Matrix& m, Index row) {
  if (row < 0 || row >= m.rows()) throw DimensionError("diag_row: row index out of range");
  return m.row(row).transpose().asDiagonal();
}

// For mode n the linear index splits as  a + left * (i_n + I_n * b)  with
// `a` running over modes < n and `b` over modes > n, and the unfolding column
// is a + left * b.
Matrix unfold(const ComplexTensor& t, Index mode) {
  check_mode(t, mode);
  const auto& shape = t.shape();
  const auto n = static_cast<std::size_t>(mode);
  const Index left = product(shape, 0, n);
  const Index rows = shape[n];
  const Index right = product(shape, n + 1, shape.size());
  Matrix out(rows, left * right);
  const cplx* src = t.data().data();
#pragma omp parallel for if (t.size() > kParallelMinWork)
  for (Index b = 0; b < right; ++b) {
    Eigen::Map<const Matrix> slab(src + left * rows * b, left, rows);
    out.middleCols(left * b, left) = slab.transpose();
  }
  return out;
}

ComplexTensor fold(const Matrix& m, Index mode, std::vector<Index> shape) {
  ComplexTensor out(std::move(shape));
  check_mode(out, mode);
  const auto& s = out.shape();
  const auto n = static_cast<std::size_t>(mode);
  const Index left = product(s, 0, n);
  const Index rows = s[n];
  const Index right = product(s, n + 1, s.size());
  if (m.rows() != rows || m.cols() != left * right) {
    throw DimensionError("fold: matrix is not an unfolding of the requested shape");
  }
  cplx* dst = out.data().data();
#pragma omp parallel for if (out.size() > kParallelMinWork)
  for (Index b = 0; b < right; ++b) {
    Eigen::Map<Matrix> slab(dst + left * rows * b, left, rows);
    slab = m.middleCols(left * b, left).transpose();
  }
  return out;
}

ComplexTensor mode_n_product(const ComplexTensor& t, const Matrix& a, Index mode) {
  check_mode(t, mode);
  const auto n = static_cast<std::size_t>(mode);
  if (a.cols() != t.shape()[n]) {
    throw DimensionError("mode_n_product: matrix has " + std::to_string(a.cols()) +
                         " columns, tensor mode " + std::to_string(mode) + " has extent " +
                         std::to_string(t.shape()[n]));
  }
  std::vector<Index> shape = t.shape();
  shape[n] = a.rows();
  ComplexTensor out(shape);
  const Index left = product(shape, 0, n);
  const Index in_rows = t.shape()[n];
  const Index right = product(shape, n + 1, shape.size());
  const cplx* src = t.data().data();
  cplx* dst = out.data().data();
  const Matrix at = a.transpose();
#pragma omp parallel for if (out.size() > kParallelMinWork)
  for (Index b = 0; b < right; ++b) {
    Eigen::Map<const Matrix> in(src + left * in_rows * b, left, in_rows);
    Eigen::Map<Matrix> res(dst + left * a.rows() * b, left, a.rows());
    res.noalias() = in * at;
  }
  return out;
}

Pseudoinverse pseudoinverse(const Matrix& a, double rtol) {
  Pseudoinverse out;
  out.matrix = Matrix::Zero(a.cols(), a.rows());
  if (a.size() == 0) return out;
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return out;
  const double cutoff = rtol * s(0);
  Index r = 0;
  while (r < s.size() && s(r) > cutoff) ++r;
  out.rank = r;
  out.matrix = svd.matrixV().leftCols(r) * s.head(r).cwiseInverse().asDiagonal() *
               svd.matrixU().leftCols(r).adjoint();
  return out;
}

Matrix pinv(const Matrix& a, double rtol) { return pseudoinverse(a, rtol).matrix; }

SingularTriplet dominant_singular_triplet(const Matrix& a) {
  if (a.size() == 0 || a.norm() == 0.0) {
    throw NumericalError("dominant_singular_triplet: zero matrix");
  }
  if (!a.allFinite()) throw NumericalError("dominant_singular_triplet: non-finite entries");

  // Top eigenvector of the smaller Gram matrix, then two alternating
  // refinement sweeps on `a` itself to recover the precision squared away by
  // forming the Gram product.
  Vector u;
  Vector v;
  if (a.cols() <= a.rows()) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a.adjoint() * a);
    v = eig.eigenvectors().col(a.cols() - 1);
    u = (a * v).normalized();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a * a.adjoint());
    u = eig.eigenvectors().col(a.rows() - 1);
    v = (a.adjoint() * u).normalized();
    u = (a * v).normalized();
  }
  for (int sweep = 0; sweep < 2; ++sweep) {
    v = (a.adjoint() * u).normalized();
    u = (a * v).normalized();
  }
  const double sigma = (a * v).norm();

  const double vmax = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12 * vmax) {
      const cplx phase = std::conj(v(i)) / std::abs(v(i));
      v *= phase;
      u *= phase;
      break;
    }
  }
  return {std::move(u), sigma, std::move(v)};
}

namespace reference {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index k = 0; k < b.rows(); ++k)
        for (Index l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("khatri_rao: column counts differ");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      for (Index k = 0; k < b.rows(); ++k) out(i * b.rows() + k, j) = a(i, j) * b(k, j);
  return out;
}

// Walks every multi-index explicitly; no stride arithmetic shared with the
// optimized path.
Matrix unfold(const ComplexTensor& t, Index mode) {
  check_mode(t, mode);
  const auto& shape = t.shape();
  const auto order = shape.size();
  const auto n = static_cast<std::size_t>(mode);
  Matrix out(shape[n], t.size() / shape[n]);
  std::vector<Index> idx(order, 0);
  for (Index linear = 0; linear < t.size(); ++linear) {
    Index col = 0;
    Index stride = 1;
    for (std::size_t m = 0; m < order; ++m) {
      if (m == n) continue;
      col += idx[m] * stride;
      stride *= shape[m];
    }
    out(idx[n], col) = t.data()[static_cast<std::size_t>(linear)];
    for (std::size_t m = 0; m < order; ++m) {
      if (++idx[m] < shape[m]) break;
      idx[m] = 0;
    }
  }
  return out;
}

ComplexTensor mode_n_product(const ComplexTensor& t, const Matrix& a, Index mode) {
  check_mode(t, mode);
  const auto n = static_cast<std::size_t>(mode);
  if (a.cols() != t.shape()[n]) throw DimensionError("mode_n_product: dimension mismatch");
  std::vector<Index> shape = t.shape();
  shape[n] = a.rows();
  ComplexTensor out(shape);
  const Matrix unf = reference::unfold(t, mode);
  const Matrix prod = a * unf;
  // Scatter back with the same explicit multi-index walk.
  std::vector<Index> idx(shape.size(), 0);
  for (Index linear = 0; linear < out.size(); ++linear) {
    Index col = 0;
    Index stride = 1;
    for (std::size_t m = 0; m < shape.size(); ++m) {
      if (m == n) continue;
      col += idx[m] * stride;
      stride *= shape[m];
    }
    out.data()[static_cast<std::size_t>(linear)] = prod(idx[n], col);
    for (std::size_t m = 0; m < shape.size(); ++m) {
      if (++idx[m] < shape[m]) break;
      idx[m] = 0;
    }
  }
  return out;
}

}  // namespace reference

}  // namespace irs
