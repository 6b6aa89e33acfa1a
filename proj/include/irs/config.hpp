#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>

namespace irs {

/// Scenario constants. Defaults are the reference uplink setup: a 2-antenna
/// BS, a 2-antenna UE, a 32-element IRS (8x4 panel), two paths per link,
/// 2 frames of 1 + 5 blocks and AR(1) aging with coefficient 0.75 on both
/// links at 30 dB training SNR.
struct SystemConfig {
  int M = 2;    // BS antennas
  int Q = 2;    // UE antennas
  int N = 32;   // IRS elements, N == N1 * N2
  int N1 = 8;   // IRS panel rows
  int N2 = 4;   // IRS panel columns
  int L1 = 2;   // BS-IRS paths
  int L2 = 2;   // IRS-UE paths
  int T0 = 64;  // stage-1 training length
  int Tp = 16;  // stage-2 pilot symbols per block
  int Td = 48;  // stage-2 data symbols per block
  int I = 2;    // frames
  int K = 5;    // tracking blocks per frame (block 0 is the stage-1 block)
  double delta = 0.75;   // BS-IRS AR coefficient
  double lambda = 0.75;  // IRS-UE AR coefficient
  double snr_db = 30.0;  // +inf means noiseless
  std::uint64_t seed = 1;

  bool noiseless() const { return snr_db == std::numeric_limits<double>::infinity(); }

  /// Throws ConfigError naming the first violated condition.
  void validate() const;

  /// Resets N1/N2 to the default panel split for the current N.
  void use_default_panel();
};

/// Near-square panel split: N1 = 2^ceil(log2 sqrt(N)) when that divides N,
/// otherwise the divisor of N closest to sqrt(N).
int default_panel_rows(int n);

/// Parses flat `key = value` text ('#' starts a comment). Keys mirror the
/// SystemConfig field names; unspecified keys keep their defaults. When N is
/// given without N1/N2 the default panel split is applied.
SystemConfig parse_config(std::string_view text);
SystemConfig load_config(const std::filesystem::path& path);
std::string to_config_text(const SystemConfig& config);

}  // namespace irs
