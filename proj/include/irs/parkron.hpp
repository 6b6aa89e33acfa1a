#pragma once

// Stage 1: LS estimate of the combined channel, constrained 4-way CP fit by
// ALS, Khatri-Rao/Kronecker factorizations, and the IRS phase choice.
//
// Path pairs are indexed p = l2 * L1 + l1 (0-based), the ordering induced by
// f_i = beta_i (x) alpha_i. The combined channel of frame i is
//
//   R_i = (conj(A_tx) (x) A_rx) * D(f_i) * P_B,   P_B = B_rx^T kr B_tx^H,
//
// with P_B stored as an (L1*L2) x N matrix.

#include <optional>
#include <vector>

#include "irs/channel.hpp"
#include "irs/config.hpp"
#include "irs/random.hpp"
#include "irs/tensor.hpp"

namespace irs {

struct CombinedChannelEstimate {
  Vector u_hat;  // M*Q*N
  Matrix R;      // (M*Q) x N, unvec of u_hat
};

/// LS inversion of the stage-1 measurement, applied structurally as
/// y -> vec(Y * P^T) with P = pinv((S kr Z)^T), never forming the
/// (M*T0) x (M*Q*N) system matrix. The projector is computed once per design.
class CombinedChannelLs {
 public:
  /// Throws EstimationError when S kr Z is rank deficient.
  CombinedChannelLs(const TrainingDesign& design, const SystemConfig& config);

  CombinedChannelEstimate estimate(const Vector& received) const;
  const Matrix& projector() const noexcept { return projector_; }

 private:
  Matrix projector_;  // (Q*N) x T0
  Index M_;
  Index MQ_;
  Index N_;
};

CombinedChannelEstimate estimate_combined(const Vector& received, const TrainingDesign& design,
                                          const SystemConfig& config);

/// M x Q x N x I tensor with entry (m, q, n, i) = R_i(q*M + m, n).
ComplexTensor assemble_combined_tensor(const std::vector<Matrix>& combined, Index M, Index Q);

/// Phi_1 = 1^T_{L2} (x) I_{L1}: replicates the L1 BS columns over p.
Matrix bs_replication(Index L1, Index L2);
/// Phi_2 = I_{L2} (x) 1^T_{L1}: replicates the L2 UE columns over p.
Matrix ue_replication(Index L1, Index L2);

/// Throws ConfigError unless Q*N*I, Q*M*I and Q*M*N all reach L1*L2.
void check_uniqueness(Index M, Index Q, Index N, Index I, Index L1, Index L2);

struct AlsOptions {
  double tol = 1e-6;             // relative residual change
  int max_iter = 100;
  int random_restarts = 3;
  bool pencil_init = true;       // add a matrix-pencil candidate to the restarts
  double residual_floor = 1e-13; // relative residual treated as exact fit
};

/// Unknown factors of the constrained CP model. `ue_factor` is conj(A_tx),
/// the factor that actually appears in mode 1.
struct AlsResult {
  Matrix ue_factor;    // Q x L2
  Matrix irs_product;  // (L1*L2) x N
  Matrix fading;       // I x (L1*L2), row i = f_i^T
  Matrix bs_factor;    // M x (L1*L2), A_rx * Phi_1, never updated
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;                // relative, ||T - model|| / ||T||
  std::vector<double> residual_history; // entry 0 is the initial point
  int candidate = 0;                    // 0 = pencil (when used), else restart index
};

/// Constrained CP-ALS on the M x Q x N x I combined-channel tensor with the
/// mode-0 factor fixed to A_rx * Phi_1. `rng` seeds the random restarts.
AlsResult constrained_cp_als(const ComplexTensor& tensor, const Matrix& bs_rx, Index L1, Index L2,
                             const AlsOptions& options, Substream& rng);

/// Closed-form initial point from the generalized eigenvectors of the first
/// two frontal slices, taken both on the full slices and per BS path after
/// removing the known A_rx. The UE factor candidate whose closed-form
/// completion fits best wins. Empty when I < 2 or no pencil separates the
/// paths.
std::optional<AlsResult> pencil_initialization(const ComplexTensor& tensor, const Matrix& bs_rx, Index L1,
                                               Index L2);

struct KrfResult {
  Matrix irs_rx;        // N x L2, first row all ones
  Matrix irs_tx;        // N x L1, first row all ones
  Vector column_scale;  // L1*L2: input = D(column_scale) * (irs_rx^T kr irs_tx^H)
};

/// Splits each column of an (L1*L2) x N matrix into conj(B_tx row) and
/// B_rx row by a rank-1 fit. Each row pair carries a common phase that the
/// product cannot reveal; it is fixed by making the B_rx entry real-positive
/// as returned by dominant_singular_triplet.
KrfResult krf_factorize(const Matrix& irs_product, Index L1, Index L2);

struct KronFactors {
  Vector bs_irs;  // alpha, L1, first entry real-positive
  Vector irs_ue;  // beta, L2
};

/// Best rank-1 split f ~ beta (x) alpha.
KronFactors kron_factorize(const Vector& f, Index L1, Index L2);

/// s_n = exp(j * arg(v_n)) with v the dominant right singular vector.
Vector configure_irs(const Matrix& combined);

/// (conj(A_tx) (x) A_rx) * D(f) * P_B.
Matrix rebuild_combined(const Matrix& ue_tx, const Matrix& bs_rx, const Vector& fading_row,
                        const Matrix& irs_product);

struct Stage1Estimate {
  Matrix ue_tx;        // A_tx estimate, Q x L2, first row ones
  Matrix irs_product;  // ALS P_B after normalization, (L1*L2) x N
  Matrix fading;       // I x (L1*L2), compensated for both normalizations
  Matrix irs_rx;       // N x L2
  Matrix irs_tx;       // N x L1
  std::vector<Vector> bs_irs_gains;  // alpha per frame
  std::vector<Vector> irs_ue_gains;  // beta per frame
  std::vector<Matrix> ls;            // LS combined channel per frame
  std::vector<Matrix> combined;      // rebuilt combined channel per frame
  Vector irs_phases;                 // s_opt
  AlsResult als;
};

/// Full stage 1 over all frames from their received stage-1 blocks.
Stage1Estimate run_stage1(const std::vector<Vector>& received, const CombinedChannelLs& ls,
                          const SystemConfig& config, const Matrix& bs_rx, const AlsOptions& options,
                          Substream& rng);

}  // namespace irs
