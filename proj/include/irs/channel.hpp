#pragma once

// Geometric BS-IRS-UE channel with double-timescale AR(1) aging, the
// training designs, and the received-signal synthesis for both stages.
//
// Time is organized in frames i = 0..I-1, each holding K+1 blocks. Block 0
// carries the stage-1 training (length T0); blocks 1..K carry stage-2
// pilots (Tp) followed by data (Td). The BS-IRS channel is constant within a
// frame, the IRS-UE channel changes every block.

#include <cstdint>
#include <vector>

#include "irs/config.hpp"
#include "irs/random.hpp"
#include "irs/tensor.hpp"

namespace irs {

/// Spatial frequency pi * cos(angle) of a half-wavelength array.
double spatial_frequency(double angle);

/// ULA response, entry m = exp(-j * m * mu) for m = 0..size-1.
Vector ula_steering(double mu, Index size);

/// URA response ula(mu, rows) (x) ula(psi, cols).
Vector ura_steering(double mu, double psi, Index rows, Index cols);

/// Path angles in radians together with the spatial frequencies they induce.
struct GeometryParams {
  std::vector<double> bs_arrival;          // L1 angles at the BS
  std::vector<double> ue_departure;        // L2 angles at the UE
  std::vector<double> irs_arrival_azimuth;     // L2
  std::vector<double> irs_arrival_elevation;   // L2
  std::vector<double> irs_departure_azimuth;   // L1
  std::vector<double> irs_departure_elevation; // L1
};

/// BS/UE angles uniform on [-pi, pi], IRS angles uniform on [-pi/2, pi/2].
GeometryParams draw_geometry(const SystemConfig& config, Substream& rng);

struct SteeringMatrices {
  Matrix bs_rx;   // M x L1, BS receive steering
  Matrix ue_tx;   // Q x L2, UE transmit steering
  Matrix irs_rx;  // N x L2, IRS receive (from the UE)
  Matrix irs_tx;  // N x L1, IRS transmit (toward the BS)
};

SteeringMatrices steering_matrices(const GeometryParams& geometry, const SystemConfig& config);

/// AR(1) path gains. `bs_irs[i]` holds the L1 BS-IRS gains of frame i,
/// `irs_ue[i][k]` the L2 IRS-UE gains of block k of frame i. The IRS-UE
/// recursion chains across frames from the last block of the previous frame.
struct FadingTrajectory {
  Vector bs_irs_init;
  Vector irs_ue_init;
  std::vector<Vector> bs_irs;
  std::vector<Vector> bs_irs_innovation;
  std::vector<std::vector<Vector>> irs_ue;
  std::vector<std::vector<Vector>> irs_ue_innovation;
};

FadingTrajectory evolve_fading(const SystemConfig& config, const RandomSource& source, std::uint64_t run);

struct ChannelRealization {
  SteeringMatrices steering;
  std::vector<Matrix> bs_irs;               // G_i, M x N, one per frame
  std::vector<std::vector<Matrix>> irs_ue;  // H_{i,k}, N x Q, K+1 per frame
};

ChannelRealization realize_channels(const SteeringMatrices& steering, const FadingTrajectory& fading,
                                    const SystemConfig& config);

/// Stage-1 combined channel of frame i: H_{i,0}^T kr G_i, (M*Q) x N.
Matrix combined_channel(const ChannelRealization& channel, int frame);

/// Effective MIMO channel G_i * diag(s) * H_{i,k}, M x Q.
Matrix effective_channel(const ChannelRealization& channel, const Vector& irs_phases, int frame, int block);

struct TrainingDesign {
  Matrix irs_phases;      // S, N x T0: first N rows of the T0-point DFT
  Matrix stage1_pilots;   // Z, Q x T0
  std::vector<Index> stage1_pilot_rows;  // rows of the Hadamard/DFT source used for Z
  bool stage1_pilots_hadamard = true;
  Matrix stage2_pilots;   // Xp, Q x Tp with orthogonal rows
};

/// Sylvester Hadamard matrix; n must be a power of two.
Eigen::MatrixXd hadamard(Index n);
/// Unit-modulus DFT matrix, entry (r, c) = exp(-2 pi j r c / n).
Matrix dft_matrix(Index rows, Index n);

/// Deterministic training design. Throws ConfigError when S kr Z cannot be
/// made full rank.
TrainingDesign design_training(const SystemConfig& config);

/// Per-frame BPSK payload. Bits are column-major Q x Td; bit 0 -> +1, 1 -> -1.
struct FrameData {
  std::vector<std::uint8_t> bits;
  Matrix symbols;
};

FrameData draw_frame_data(const SystemConfig& config, Substream& rng);

struct Stage1Signal {
  Vector received;  // M*T0, column t of the M x T0 received block stacked
  double noise_variance = 0.0;
};

/// Received stage-1 block of frame `frame`. Noise is added when `noise` is
/// non-null and the configuration is not noiseless; its variance is set
/// from the mean power of the noiseless samples and snr_db.
Stage1Signal synthesize_stage1(const ChannelRealization& channel, const TrainingDesign& design,
                               const SystemConfig& config, int frame, Substream* noise);

struct Stage2Signal {
  std::vector<Matrix> pilot_blocks;  // K blocks, M x Tp
  std::vector<Matrix> data_blocks;   // K blocks, M x Td
  double noise_variance = 0.0;
};

/// Tracking blocks 1..K of frame `frame` with the IRS fixed at `irs_phases`.
/// The noise variance is set from the power pooled over all K blocks.
Stage2Signal synthesize_stage2(const ChannelRealization& channel, const TrainingDesign& design,
                               const FrameData& data, const Vector& irs_phases,
                               const SystemConfig& config, int frame, Substream* noise);

}  // namespace irs
