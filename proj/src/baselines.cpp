#include "irs/baselines.hpp"

#include "irs/errors.hpp"

namespace irs {

Matrix ls_baseline(const Vector& received, const CombinedChannelLs& ls) { return ls.estimate(received).R; }

KrfStaticEstimate krf_static_baseline(const Matrix& combined, Index M, Index Q) {
  if (combined.rows() != M * Q) throw DimensionError("krf_static_baseline: rows must equal M*Q");
  const Index N = combined.cols();
  KrfStaticEstimate est;
  est.bs_irs.resize(M, N);
  est.irs_ue.resize(N, Q);
  for (Index n = 0; n < N; ++n) {
    const Matrix block = unvec(combined.col(n), M, Q);
    if (block.norm() == 0.0) throw NumericalError("krf_static_baseline: zero column");
    const auto t = dominant_singular_triplet(block);
    Vector h = t.right.conjugate();
    const cplx h0 = h(0);
    if (std::abs(h0) == 0.0) throw NumericalError("krf_static_baseline: zero reference entry");
    est.bs_irs.col(n) = t.value * h0 * t.left;
    est.irs_ue.row(n) = (h / h0).transpose();
  }
  est.combined = khatri_rao(est.irs_ue.transpose(), est.bs_irs);
  return est;
}

Matrix krf_static_channel(const KrfStaticEstimate& estimate, const Vector& irs_phases) {
  return estimate.bs_irs * irs_phases.asDiagonal() * estimate.irs_ue;
}

}  // namespace irs
