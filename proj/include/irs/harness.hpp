#pragma once

// Monte Carlo runner: one run draws a geometry and fading trajectory, runs
// both stages and the baselines on it, and scores them. Runs are
// independent and keyed by their index, so any execution order (serial or
// OpenMP) yields the same per-run records.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irs/channel.hpp"
#include "irs/config.hpp"
#include "irs/parkron.hpp"
#include "irs/tbt.hpp"

namespace irs {

enum class Method { Parkron, Krf, Ls };

std::string_view method_name(Method method);
/// Comma-separated list such as "parkron,krf,ls". Throws ConfigError on
/// unknown names or an empty list.
std::vector<Method> parse_methods(std::string_view text);

/// ||truth - estimate||_F^2 / ||truth||_F^2. Throws NumericalError for a
/// zero reference and DimensionError on a shape mismatch.
double nmse(const Matrix& truth, const Matrix& estimate);
double to_db(double linear);

enum class NmseFrames { All, First };
enum class ChannelRoute { Direct, Factored };

struct RunOptions {
  AlsOptions als;
  BalsOptions bals;
  NmseFrames nmse_frames = NmseFrames::All;
  ChannelRoute route = ChannelRoute::Direct;
};

/// Scores of one Monte Carlo run. NMSE values are linear.
struct RunRecord {
  std::uint64_t run = 0;
  bool ok = false;
  std::string error;
  double nmse_r_ls = 0.0;
  double nmse_r_krf = 0.0;
  double nmse_r_parkron = 0.0;
  double nmse_w_parkron = 0.0;
  double nmse_w_krf = 0.0;
  std::vector<double> nmse_w_parkron_block;  // K entries, averaged over frames
  std::vector<double> nmse_w_krf_block;
  std::size_t bit_errors = 0;
  std::size_t bits = 0;
  double als_iterations = 0.0;
  double bals_iterations = 0.0;  // mean over frames
};

/// Training design and the LS projector derived from it, shared by all runs
/// of a scenario.
struct ScenarioSetup {
  explicit ScenarioSetup(const SystemConfig& config);
  TrainingDesign design;
  CombinedChannelLs ls;
};

RunRecord simulate_run(const SystemConfig& config, const ScenarioSetup& setup, const RandomSource& source,
                       std::uint64_t run, const RunOptions& options);

enum class Execution { Serial, Parallel };

struct ScenarioResult {
  std::vector<RunRecord> runs;  // in run order
  int attempted = 0;
  int succeeded = 0;
  int failed = 0;
};

/// Runs 0..runs-1. With Execution::Parallel the runs are spread over an
/// OpenMP team of `threads` (0 = runtime default). A run that throws is
/// recorded as failed and excluded from the aggregates.
ScenarioResult run_scenario(const SystemConfig& config, int runs, const RunOptions& options,
                            Execution execution = Execution::Parallel, int threads = 0);

/// Order-independent pairwise summation.
double pairwise_sum(std::span<const double> values);

struct SummaryRow {
  std::string method;
  std::string sweep_name;
  double sweep_value = 0.0;
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t runs = 0;
};

/// Aggregates successful runs into one row per (method, metric). NMSE is
/// averaged linearly and then converted for the *_db rows.
std::vector<SummaryRow> summarize(const ScenarioResult& result, std::span<const Method> methods,
                                  std::string_view sweep_name, double sweep_value, bool per_block = false);

enum class SweepAxis { None, Snr, Pilots, Irs };

std::string_view sweep_name(SweepAxis axis);

/// Configuration of one sweep point. Pilots keeps Tp + Td fixed; Irs keeps
/// T0/N (at least Q) and re-derives the panel split. Throws ConfigError for
/// an invalid point.
SystemConfig sweep_point(const SystemConfig& base, SweepAxis axis, double value);

struct SweepSpec {
  SystemConfig base;
  SweepAxis axis = SweepAxis::None;
  std::vector<double> values;
  int runs = 200;
  std::vector<Method> methods{Method::Parkron, Method::Krf, Method::Ls};
  RunOptions options;
  Execution execution = Execution::Parallel;
  int threads = 0;
  bool per_block = false;
};

/// One aggregated block of rows per sweep value. Invalid points produce a
/// single `invalid_point` row and a warning on `log`.
std::vector<SummaryRow> run_sweep(const SweepSpec& spec, std::ostream* log = nullptr);

inline constexpr std::string_view kCsvHeader = "method,sweep_name,sweep_value,metric,mean,stderr,runs";

std::string to_csv(std::span<const SummaryRow> rows);

/// Writes `<stem>.csv` plus one `<stem>_<method>_<metric>.dat` file per
/// series (columns: x mean stderr). Returns the files written.
std::vector<std::filesystem::path> emit_outputs(std::span<const SummaryRow> rows,
                                                const std::filesystem::path& directory, std::string_view stem);

}  // namespace irs
