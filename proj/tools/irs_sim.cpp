// irs_sim: Monte Carlo simulator for the two-stage IRS uplink receiver.
//
//   irs_sim run          [--config f] [--runs E] [--seed s] [--out dir] ...
//   irs_sim sweep-snr    --values 0,10,20,30,40
//   irs_sim sweep-pilots --values 4,8,16,32
//   irs_sim sweep-irs    --values 16,32,64
//   irs_sim reproduce fig3|fig4|fig6|fig7

#include <cmath>
#include <cstdint>
#include <exception>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irs/errors.hpp"
#include "irs/harness.hpp"

namespace {

struct Cli {
  std::string config_path;
  int runs = 200;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "out";
  std::string methods = "parkron,krf,ls";
  bool noiseless = false;
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values;
  int threads = 0;
  bool serial = false;
  bool per_block = false;
  std::string nmse_frames = "all";
  std::string route = "direct";
  std::string figure;
};

struct Figure {
  irs::SweepAxis axis;
  std::vector<double> values;
  bool per_block;
};

Figure figure_defaults(const std::string& name) {
  if (name == "fig3") return {irs::SweepAxis::Snr, {0, 10, 20, 30, 40}, false};
  if (name == "fig4") return {irs::SweepAxis::Snr, {0, 10, 20, 30, 40}, true};
  if (name == "fig6") return {irs::SweepAxis::Pilots, {4, 8, 16, 32}, false};
  if (name == "fig7") return {irs::SweepAxis::Irs, {16, 32, 64}, false};
  throw irs::ConfigError("unknown figure '" + name + "' (expected fig3, fig4, fig6 or fig7)");
}

int execute(const Cli& cli, irs::SweepAxis axis, std::vector<double> values, bool per_block, const std::string& stem) {
  irs::SweepSpec spec;
  spec.base = cli.config_path.empty() ? irs::SystemConfig{} : irs::load_config(cli.config_path);
  if (cli.seed_given) spec.base.seed = cli.seed;
  if (!std::isnan(cli.snr_db)) spec.base.snr_db = cli.snr_db;
  if (cli.noiseless) spec.base.snr_db = std::numeric_limits<double>::infinity();
  spec.base.validate();

  spec.axis = axis;
  spec.values = cli.values.empty() ? std::move(values) : cli.values;
  if (axis == irs::SweepAxis::None) spec.values = {0.0};
  spec.runs = cli.runs;
  spec.methods = irs::parse_methods(cli.methods);
  spec.execution = cli.serial ? irs::Execution::Serial : irs::Execution::Parallel;
  spec.threads = cli.threads;
  spec.per_block = per_block || cli.per_block;
  spec.options.nmse_frames = cli.nmse_frames == "first" ? irs::NmseFrames::First : irs::NmseFrames::All;
  spec.options.route = cli.route == "factored" ? irs::ChannelRoute::Factored : irs::ChannelRoute::Direct;

  const auto rows = irs::run_sweep(spec, &std::cerr);
  for (const auto& path : irs::emit_outputs(rows, cli.out, stem)) std::cout << path.string() << '\n';
  for (const auto& r : rows) {
    if (r.metric.ends_with("_db") || r.metric == "ber") {
      std::cout << r.method << ' ' << r.sweep_name << '=' << r.sweep_value << ' ' << r.metric << ' ' << r.mean
                << " +- " << r.stderr_ << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo simulator for the two-stage IRS-assisted MIMO uplink receiver"};
  app.require_subcommand(1);
  app.fallthrough();

  Cli cli;
  app.add_option("--config", cli.config_path, "Flat key = value scenario file")->check(CLI::ExistingFile);
  app.add_option("--runs", cli.runs, "Monte Carlo runs per point")->check(CLI::PositiveNumber);
  app.add_option_function<std::uint64_t>(
      "--seed", [&cli](const std::uint64_t& s) { cli.seed = s, cli.seed_given = true; }, "Master seed");
  app.add_option("--out", cli.out, "Output directory");
  app.add_option("--methods", cli.methods, "Comma-separated subset of parkron,krf,ls");
  app.add_flag("--noiseless", cli.noiseless, "Disable noise (infinite SNR)");
  app.add_option("--snr", cli.snr_db, "Override snr_db of the scenario");
  app.add_option("--values", cli.values, "Sweep values (comma-separated)")->delimiter(',');
  app.add_option("--threads", cli.threads, "OpenMP threads (0 = runtime default)");
  app.add_flag("--serial", cli.serial, "Run Monte Carlo runs serially");
  app.add_flag("--per-block", cli.per_block, "Also emit NMSE(W) per tracking block");
  app.add_option("--nmse-frames", cli.nmse_frames, "Frames averaged for NMSE(R)")
      ->check(CLI::IsMember({"all", "first"}));
  app.add_option("--route", cli.route, "Tracked-channel reconstruction")->check(CLI::IsMember({"direct", "factored"}));

  auto* run = app.add_subcommand("run", "Single scenario");
  auto* snr = app.add_subcommand("sweep-snr", "Sweep the training SNR");
  auto* pilots = app.add_subcommand("sweep-pilots", "Sweep Tp with Tp + Td fixed");
  auto* irs_n = app.add_subcommand("sweep-irs", "Sweep the number of IRS elements");
  auto* reproduce = app.add_subcommand("reproduce", "Regenerate the data behind one figure");
  reproduce->add_option("figure", cli.figure, "fig3, fig4, fig6 or fig7")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig4", "fig6", "fig7"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return execute(cli, irs::SweepAxis::None, {}, false, "run");
    if (snr->parsed()) return execute(cli, irs::SweepAxis::Snr, {0, 10, 20, 30, 40}, false, "sweep_snr");
    if (pilots->parsed()) return execute(cli, irs::SweepAxis::Pilots, {4, 8, 16, 32}, false, "sweep_pilots");
    if (irs_n->parsed()) return execute(cli, irs::SweepAxis::Irs, {16, 32, 64}, false, "sweep_irs");
    if (reproduce->parsed()) {
      const Figure fig = figure_defaults(cli.figure);
      return execute(cli, fig.axis, fig.values, fig.per_block, cli.figure);
    }
  } catch (const irs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
