#include "irs/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <omp.h>

#include "irs/baselines.hpp"
#include "irs/errors.hpp"

namespace irs {

namespace {

struct Series {
  double mean = 0.0;
  double stderr_ = 0.0;
};

Series mean_and_stderr(const std::vector<double>& x) {
  Series s;
  if (x.empty()) return s;
  const auto n = static_cast<double>(x.size());
  s.mean = pairwise_sum(x) / n;
  if (x.size() > 1) {
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - s.mean) * (x[i] - s.mean);
    s.stderr_ = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
  }
  return s;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double frame_average(const std::vector<double>& per_frame, NmseFrames frames) {
  if (frames == NmseFrames::First) return per_frame.front();
  return pairwise_sum(per_frame) / static_cast<double>(per_frame.size());
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::Parkron: return "parkron";
    case Method::Krf: return "krf";
    case Method::Ls: return "ls";
  }
  return "unknown";
}

std::vector<Method> parse_methods(std::string_view text) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (token == "parkron") out.push_back(Method::Parkron);
    else if (token == "krf") out.push_back(Method::Krf);
    else if (token == "ls") out.push_back(Method::Ls);
    else throw ConfigError("unknown method '" + std::string(token) + "' (expected parkron, krf or ls)");
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double nmse(const Matrix& truth, const Matrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
    throw DimensionError("nmse: shape mismatch");
  }
  const double ref = truth.squaredNorm();
  if (ref == 0.0) throw NumericalError("nmse: zero reference");
  return (truth - estimate).squaredNorm() / ref;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

ScenarioSetup::ScenarioSetup(const SystemConfig& config)
    : design(design_training(config)), ls(design, config) {}

RunRecord simulate_run(const SystemConfig& config, const ScenarioSetup& setup, const RandomSource& source,
                       std::uint64_t run, const RunOptions& options) {
  const TrainingDesign& design = setup.design;
  RunRecord rec;
  rec.run = run;
  const auto frames = static_cast<std::size_t>(config.I);

  Substream geo = source.stream(run, 0, 0, Purpose::Geometry);
  const SteeringMatrices steering = steering_matrices(draw_geometry(config, geo), config);
  const ChannelRealization channel = realize_channels(steering, evolve_fading(config, source, run), config);

  std::vector<Vector> received;
  for (std::size_t i = 0; i < frames; ++i) {
    Substream noise = source.stream(run, i, 0, Purpose::Stage1Noise);
    received.push_back(synthesize_stage1(channel, design, config, static_cast<int>(i), &noise).received);
  }
  Substream als_rng = source.stream(run, 0, 0, Purpose::AlsInit);
  const Stage1Estimate est = run_stage1(received, setup.ls, config, steering.bs_rx, options.als, als_rng);
  rec.als_iterations = est.als.iterations;

  std::vector<double> r_ls, r_krf, r_pk;
  std::vector<KrfStaticEstimate> krf;
  for (std::size_t i = 0; i < frames; ++i) {
    const Matrix truth = combined_channel(channel, static_cast<int>(i));
    krf.push_back(krf_static_baseline(est.ls[i], config.M, config.Q));
    r_ls.push_back(nmse(truth, est.ls[i]));
    r_krf.push_back(nmse(truth, krf.back().combined));
    r_pk.push_back(nmse(truth, est.combined[i]));
  }
  rec.nmse_r_ls = frame_average(r_ls, options.nmse_frames);
  rec.nmse_r_krf = frame_average(r_krf, options.nmse_frames);
  rec.nmse_r_parkron = frame_average(r_pk, options.nmse_frames);

  const auto K = static_cast<std::size_t>(config.K);
  const CoreTensor core = build_core_tensor(est.irs_tx, est.irs_rx, est.irs_phases);
  const Matrix pilot_factor = symbol_factor(est.ue_tx, design.stage2_pilots);
  std::vector<double> w_pk, w_krf;
  std::vector<std::vector<double>> w_pk_block(K), w_krf_block(K);
  double bals_its = 0.0;
  for (std::size_t i = 0; i < frames; ++i) {
    const int frame = static_cast<int>(i);
    Substream data_rng = source.stream(run, i, 0, Purpose::Data);
    const FrameData data = draw_frame_data(config, data_rng);
    Substream noise = source.stream(run, i, 0, Purpose::Stage2Noise);
    const Stage2Signal sig = synthesize_stage2(channel, design, data, est.irs_phases, config, frame, &noise);

    const Matrix f0 = init_fading(stack_blocks(sig.pilot_blocks), core, steering.bs_rx, pilot_factor);
    const TrackingState st = bals_detect(stack_blocks(sig.data_blocks), core, steering.bs_rx, est.ue_tx, f0,
                                         options.bals);
    bals_its += st.iterations;
    rec.bit_errors += count_bit_errors(demap_bpsk(st.symbols), data.bits);
    rec.bits += data.bits.size();

    const Matrix w_static = krf_static_channel(krf[i], est.irs_phases);
    for (std::size_t k = 0; k < K; ++k) {
      const Matrix truth = effective_channel(channel, est.irs_phases, frame, static_cast<int>(k) + 1);
      const Vector fk = st.fading.col(static_cast<Index>(k));
      const Matrix w_hat = options.route == ChannelRoute::Direct
                               ? tracked_channel(core, steering.bs_rx, est.ue_tx, fk)
                               : tracked_channel_factored(core, steering.bs_rx, est.ue_tx,
                                                          kron_factorize(fk, config.L1, config.L2));
      const double e_pk = nmse(truth, w_hat);
      const double e_krf = nmse(truth, w_static);
      w_pk.push_back(e_pk);
      w_krf.push_back(e_krf);
      w_pk_block[k].push_back(e_pk);
      w_krf_block[k].push_back(e_krf);
    }
  }
  rec.nmse_w_parkron = pairwise_sum(w_pk) / static_cast<double>(w_pk.size());
  rec.nmse_w_krf = pairwise_sum(w_krf) / static_cast<double>(w_krf.size());
  for (std::size_t k = 0; k < K; ++k) {
    rec.nmse_w_parkron_block.push_back(pairwise_sum(w_pk_block[k]) / static_cast<double>(frames));
    rec.nmse_w_krf_block.push_back(pairwise_sum(w_krf_block[k]) / static_cast<double>(frames));
  }
  rec.bals_iterations = bals_its / static_cast<double>(frames);
  rec.ok = true;
  return rec;
}

ScenarioResult run_scenario(const SystemConfig& config, int runs, const RunOptions& options, Execution execution,
                            int threads) {
  if (runs < 1) throw ConfigError("run_scenario: runs must be at least 1");
  config.validate();
  const ScenarioSetup setup(config);
  const RandomSource source(config.seed);

  ScenarioResult result;
  result.runs.resize(static_cast<std::size_t>(runs));
  const auto one = [&](int r) {
    auto& slot = result.runs[static_cast<std::size_t>(r)];
    try {
      slot = simulate_run(config, setup, source, static_cast<std::uint64_t>(r), options);
    } catch (const std::exception& e) {
      slot = RunRecord{};
      slot.run = static_cast<std::uint64_t>(r);
      slot.error = e.what();
    }
  };
  if (execution == Execution::Serial) {
    for (int r = 0; r < runs; ++r) one(r);
  } else {
    const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(team)
    for (int r = 0; r < runs; ++r) one(r);
  }

  result.attempted = runs;
  for (const auto& r : result.runs) (r.ok ? result.succeeded : result.failed) += 1;
  return result;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::vector<SummaryRow> summarize(const ScenarioResult& result, std::span<const Method> methods,
                                  std::string_view sweep_name, double sweep_value, bool per_block) {
  std::vector<SummaryRow> rows;
  std::vector<const RunRecord*> ok;
  for (const auto& r : result.runs)
    if (r.ok) ok.push_back(&r);

  const auto collect = [&](auto field) {
    std::vector<double> v;
    v.reserve(ok.size());
    for (const auto* r : ok) v.push_back(field(*r));
    return v;
  };
  const auto add = [&](std::string_view method, std::string metric, const std::vector<double>& values) {
    const Series s = mean_and_stderr(values);
    rows.push_back({std::string(method), std::string(sweep_name), sweep_value, metric, s.mean, s.stderr_, values.size()});
  };
  const auto add_nmse = [&](std::string_view method, const std::string& metric, const std::vector<double>& values) {
    add(method, metric, values);
    const Series s = mean_and_stderr(values);
    const double db_err = s.mean > 0.0 ? 10.0 / std::log(10.0) * s.stderr_ / s.mean : 0.0;
    rows.push_back({std::string(method), std::string(sweep_name), sweep_value, metric + "_db",
                    values.empty() ? 0.0 : to_db(s.mean), db_err, values.size()});
  };

  for (const Method m : methods) {
    const auto name = method_name(m);
    switch (m) {
      case Method::Ls:
        add_nmse(name, "nmse_r", collect([](const RunRecord& r) { return r.nmse_r_ls; }));
        break;
      case Method::Krf:
        add_nmse(name, "nmse_r", collect([](const RunRecord& r) { return r.nmse_r_krf; }));
        add_nmse(name, "nmse_w", collect([](const RunRecord& r) { return r.nmse_w_krf; }));
        if (per_block && !ok.empty()) {
          for (std::size_t k = 0; k < ok.front()->nmse_w_krf_block.size(); ++k)
            add_nmse(name, "nmse_w_block" + std::to_string(k + 1),
                     collect([k](const RunRecord& r) { return r.nmse_w_krf_block[k]; }));
        }
        break;
      case Method::Parkron:
        add_nmse(name, "nmse_r", collect([](const RunRecord& r) { return r.nmse_r_parkron; }));
        add_nmse(name, "nmse_w", collect([](const RunRecord& r) { return r.nmse_w_parkron; }));
        if (per_block && !ok.empty()) {
          for (std::size_t k = 0; k < ok.front()->nmse_w_parkron_block.size(); ++k)
            add_nmse(name, "nmse_w_block" + std::to_string(k + 1),
                     collect([k](const RunRecord& r) { return r.nmse_w_parkron_block[k]; }));
        }
        add(name, "ber", collect([](const RunRecord& r) {
              return r.bits ? static_cast<double>(r.bit_errors) / static_cast<double>(r.bits) : 0.0;
            }));
        add(name, "als_iterations", collect([](const RunRecord& r) { return r.als_iterations; }));
        add(name, "bals_iterations", collect([](const RunRecord& r) { return r.bals_iterations; }));
        break;
    }
  }
  rows.push_back({"all", std::string(sweep_name), sweep_value, "runs_failed", static_cast<double>(result.failed), 0.0,
                  static_cast<std::size_t>(result.attempted)});
  return rows;
}

std::string_view sweep_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::None: return "none";
    case SweepAxis::Snr: return "snr_db";
    case SweepAxis::Pilots: return "Tp";
    case SweepAxis::Irs: return "N";
  }
  return "none";
}

SystemConfig sweep_point(const SystemConfig& base, SweepAxis axis, double value) {
  SystemConfig c = base;
  const auto as_int = [value]() {
    if (value != std::floor(value) || value < 1.0) throw ConfigError("sweep value must be a positive integer");
    return static_cast<int>(value);
  };
  switch (axis) {
    case SweepAxis::None: break;
    case SweepAxis::Snr: c.snr_db = value; break;
    case SweepAxis::Pilots: {
      const int total = base.Tp + base.Td;
      c.Tp = as_int();
      c.Td = total - c.Tp;
      break;
    }
    case SweepAxis::Irs: {
      c.N = as_int();
      c.use_default_panel();
      const int per_element = std::max(base.Q, (base.T0 + base.N - 1) / base.N);
      c.T0 = per_element * c.N;
      break;
    }
  }
  c.validate();
  return c;
}

std::vector<SummaryRow> run_sweep(const SweepSpec& spec, std::ostream* log) {
  std::vector<SummaryRow> rows;
  const std::vector<double> values = spec.values.empty() ? std::vector<double>{0.0} : spec.values;
  const auto name = sweep_name(spec.axis);
  for (const double v : values) {
    SystemConfig c;
    try {
      c = sweep_point(spec.base, spec.axis, v);
    } catch (const ConfigError& e) {
      if (log) *log << "warning: skipping " << name << " = " << format_number(v) << ": " << e.what() << '\n';
      rows.push_back({"all", std::string(name), v, "invalid_point", 1.0, 0.0, 0});
      continue;
    }
    const ScenarioResult res = run_scenario(c, spec.runs, spec.options, spec.execution, spec.threads);
    if (log && res.failed > 0) {
      *log << "warning: " << res.failed << " of " << res.attempted << " runs failed at " << name << " = "
           << format_number(v) << '\n';
    }
    auto block = summarize(res, spec.methods, name, v, spec.per_block);
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

std::string to_csv(std::span<const SummaryRow> rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.method + ',' + r.sweep_name + ',' + format_number(r.sweep_value) + ',' + r.metric + ',' +
           format_number(r.mean) + ',' + format_number(r.stderr_) + ',' + std::to_string(r.runs) + '\n';
  }
  return out;
}

std::vector<std::filesystem::path> emit_outputs(std::span<const SummaryRow> rows,
                                                const std::filesystem::path& directory, std::string_view stem) {
  std::filesystem::create_directories(directory);
  std::vector<std::filesystem::path> written;
  const auto write = [&](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
    written.push_back(path);
  };
  write(directory / (std::string(stem) + ".csv"), to_csv(rows));

  // std::map keeps the series order stable across runs.
  std::map<std::pair<std::string, std::string>, std::string> series;
  for (const auto& r : rows) {
    if (r.metric == "runs_failed" || r.metric == "invalid_point") continue;
    auto& text = series[{r.method, r.metric}];
    if (text.empty()) text = "# " + r.sweep_name + " mean stderr\n";
    text += format_number(r.sweep_value) + ' ' + format_number(r.mean) + ' ' + format_number(r.stderr_) + '\n';
  }
  for (const auto& [key, text] : series) {
    write(directory / (std::string(stem) + '_' + key.first + '_' + key.second + ".dat"), text);
  }
  return written;
}

}  // namespace irs
