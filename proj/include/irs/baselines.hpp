#pragma once

// Reference estimators: plain LS on the combined channel, and a per-frame
// Khatri-Rao split of it that ignores the geometric structure and the
// aging (the estimate is frozen for the whole frame).

#include "irs/parkron.hpp"
#include "irs/tensor.hpp"

namespace irs {

/// Same path as CombinedChannelLs::estimate; returns R, (M*Q) x N.
Matrix ls_baseline(const Vector& received, const CombinedChannelLs& ls);

struct KrfStaticEstimate {
  Matrix bs_irs;    // G estimate, M x N
  Matrix irs_ue;    // H estimate, N x Q, first column all ones
  Matrix combined;  // irs_ue^T kr bs_irs
};

/// Splits each column of R into g h^T (M x Q) by a rank-1 fit, with h(0) = 1.
KrfStaticEstimate krf_static_baseline(const Matrix& combined, Index M, Index Q);

/// G * D(s) * H, used unchanged for every block of the frame.
Matrix krf_static_channel(const KrfStaticEstimate& estimate, const Vector& irs_phases);

}  // namespace irs
