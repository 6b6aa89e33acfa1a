#pragma once

// Stage 2: fading tracking and symbol detection with the IRS held at s_opt.
//
// With J = B_tx^H D(s) B_rx, the K tracking blocks of one frame stack into
// an M x T x K tensor
//
//   Y = J_t x_0 A_rx x_1 (A_tx^H X)^T x_2 F^T,
//
// where J_t is the L1 x L2 x (L1*L2) core holding vec(J) on its (l1, l2, p)
// diagonal and column k of F (L1*L2 x K) is the fading of block k.

#include <cstdint>
#include <vector>

#include "irs/parkron.hpp"
#include "irs/tensor.hpp"

namespace irs {

struct CoreTensor {
  Matrix J;              // L1 x L2
  ComplexTensor tensor;  // L1 x L2 x (L1*L2)
};

CoreTensor build_core_tensor(const Matrix& irs_tx, const Matrix& irs_rx, const Vector& irs_phases);

/// Stacks K equally shaped M x T blocks into an M x T x K tensor.
ComplexTensor stack_blocks(const std::vector<Matrix>& blocks);

/// Mode-1 factor (A_tx^H X)^T, T x L2.
Matrix symbol_factor(const Matrix& ue_tx, const Matrix& symbols);

/// Pilot-only LS fading estimate, L1*L2 x K. Throws DimensionError when
/// M*Tp < L1*L2 and EstimationError when the pilot system loses row rank.
Matrix init_fading(const ComplexTensor& pilots, const CoreTensor& core, const Matrix& bs_rx,
                   const Matrix& pilot_factor);

struct BalsOptions {
  double tol = 1e-6;  // relative residual change per full iteration
  int max_iter = 50;
};

struct TrackingState {
  Matrix fading;   // L1*L2 x K
  Matrix symbols;  // Q x Td, continuous LS estimate
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // relative, one entry per half-step
};

/// Bilinear ALS over the data tensor, alternating the symbol and fading LS
/// updates from `fading_init`.
TrackingState bals_detect(const ComplexTensor& data, const CoreTensor& core, const Matrix& bs_rx,
                          const Matrix& ue_tx, const Matrix& fading_init, const BalsOptions& options = {});

/// Hard BPSK decisions, column-major: bit 0 when Re >= 0, else 1.
std::vector<std::uint8_t> demap_bpsk(const Matrix& symbols);

/// Number of positions where the two bit vectors differ.
std::size_t count_bit_errors(const std::vector<std::uint8_t>& detected, const std::vector<std::uint8_t>& reference);

/// A_rx * (J .* unvec(f)) * A_tx^H for one fading column.
Matrix tracked_channel(const CoreTensor& core, const Matrix& bs_rx, const Matrix& ue_tx, const Vector& fading);

/// A_rx * D(alpha) * J * D(beta) * A_tx^H from a Kronecker-factored column.
Matrix tracked_channel_factored(const CoreTensor& core, const Matrix& bs_rx, const Matrix& ue_tx,
                                const KronFactors& gains);

}  // namespace irs
