#include "irs/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "irs/errors.hpp"

namespace irs {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

Index numerical_rank(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = 1e-10 * s(0);
  Index r = 0;
  while (r < s.size() && s(r) > tol) ++r;
  return r;
}

void add_noise(Matrix& block, double variance, Substream& rng) {
  for (Index j = 0; j < block.cols(); ++j)
    for (Index i = 0; i < block.rows(); ++i) block(i, j) += rng.complex_normal(variance);
}

double noise_variance_for(double mean_power, double snr_db) {
  return mean_power / std::pow(10.0, snr_db / 10.0);
}

}  // namespace

double spatial_frequency(double angle) { return kPi * std::cos(angle); }

Vector ula_steering(double mu, Index size) {
  if (size < 1) throw DimensionError("ula_steering: size must be at least 1");
  Vector a(size);
  for (Index m = 0; m < size; ++m) a(m) = std::polar(1.0, -static_cast<double>(m) * mu);
  return a;
}

Vector ura_steering(double mu, double psi, Index rows, Index cols) {
  return kron(ula_steering(mu, rows), ula_steering(psi, cols));
}

GeometryParams draw_geometry(const SystemConfig& config, Substream& rng) {
  GeometryParams g;
  auto draw = [&rng](int count, double half_width) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (auto& v : out) v = rng.uniform(-half_width, half_width);
    return out;
  };
  g.bs_arrival = draw(config.L1, kPi);
  g.ue_departure = draw(config.L2, kPi);
  g.irs_arrival_azimuth = draw(config.L2, kPi / 2);
  g.irs_arrival_elevation = draw(config.L2, kPi / 2);
  g.irs_departure_azimuth = draw(config.L1, kPi / 2);
  g.irs_departure_elevation = draw(config.L1, kPi / 2);
  return g;
}

SteeringMatrices steering_matrices(const GeometryParams& g, const SystemConfig& config) {
  SteeringMatrices s;
  s.bs_rx.resize(config.M, config.L1);
  s.irs_tx.resize(config.N, config.L1);
  for (int l = 0; l < config.L1; ++l) {
    const auto li = static_cast<std::size_t>(l);
    s.bs_rx.col(l) = ula_steering(spatial_frequency(g.bs_arrival[li]), config.M);
    const double az = g.irs_departure_azimuth[li];
    const double el = g.irs_departure_elevation[li];
    s.irs_tx.col(l) = ura_steering(kPi * std::cos(az) * std::sin(el), kPi * std::cos(az), config.N1, config.N2);
  }
  s.ue_tx.resize(config.Q, config.L2);
  s.irs_rx.resize(config.N, config.L2);
  for (int l = 0; l < config.L2; ++l) {
    const auto li = static_cast<std::size_t>(l);
    s.ue_tx.col(l) = ula_steering(spatial_frequency(g.ue_departure[li]), config.Q);
    const double az = g.irs_arrival_azimuth[li];
    const double el = g.irs_arrival_elevation[li];
    s.irs_rx.col(l) = ura_steering(kPi * std::cos(az) * std::sin(el), kPi * std::cos(az), config.N1, config.N2);
  }
  return s;
}

FadingTrajectory evolve_fading(const SystemConfig& config, const RandomSource& source, std::uint64_t run) {
  if (config.delta < 0.0 || config.delta > 1.0 || config.lambda < 0.0 || config.lambda > 1.0) {
    throw ConfigError("evolve_fading: AR coefficients must lie in [0, 1]");
  }
  FadingTrajectory f;
  const double zeta_var = 1.0 - config.delta * config.delta;
  const double xi_var = 1.0 - config.lambda * config.lambda;

  Substream init = source.stream(run, 0, 0, Purpose::FadingInit);
  f.bs_irs_init = init.complex_normal(config.L1, 1);
  f.irs_ue_init = init.complex_normal(config.L2, 1);

  const auto frames = static_cast<std::size_t>(config.I);
  const auto blocks = static_cast<std::size_t>(config.K) + 1;
  f.bs_irs.resize(frames);
  f.bs_irs_innovation.resize(frames);
  f.irs_ue.assign(frames, std::vector<Vector>(blocks));
  f.irs_ue_innovation.assign(frames, std::vector<Vector>(blocks));

  Vector alpha = f.bs_irs_init;
  Vector beta = f.irs_ue_init;
  for (std::size_t i = 0; i < frames; ++i) {
    Substream za = source.stream(run, i, 0, Purpose::BsIrsInnovation);
    f.bs_irs_innovation[i] = za.complex_normal(config.L1, 1, zeta_var);
    alpha = config.delta * alpha + f.bs_irs_innovation[i];
    f.bs_irs[i] = alpha;
    for (std::size_t k = 0; k < blocks; ++k) {
      Substream xb = source.stream(run, i, k, Purpose::IrsUeInnovation);
      f.irs_ue_innovation[i][k] = xb.complex_normal(config.L2, 1, xi_var);
      beta = config.lambda * beta + f.irs_ue_innovation[i][k];
      f.irs_ue[i][k] = beta;
    }
  }
  return f;
}

ChannelRealization realize_channels(const SteeringMatrices& steering, const FadingTrajectory& fading,
                                    const SystemConfig& config) {
  ChannelRealization c;
  c.steering = steering;
  const auto frames = static_cast<std::size_t>(config.I);
  const auto blocks = static_cast<std::size_t>(config.K) + 1;
  c.bs_irs.resize(frames);
  c.irs_ue.assign(frames, std::vector<Matrix>(blocks));
  for (std::size_t i = 0; i < frames; ++i) {
    c.bs_irs[i] = steering.bs_rx * fading.bs_irs[i].asDiagonal() * steering.irs_tx.adjoint();
    for (std::size_t k = 0; k < blocks; ++k) {
      c.irs_ue[i][k] = steering.irs_rx * fading.irs_ue[i][k].asDiagonal() * steering.ue_tx.adjoint();
    }
  }
  return c;
}

Matrix combined_channel(const ChannelRealization& channel, int frame) {
  const auto i = static_cast<std::size_t>(frame);
  return khatri_rao(channel.irs_ue[i][0].transpose(), channel.bs_irs[i]);
}

Matrix effective_channel(const ChannelRealization& channel, const Vector& irs_phases, int frame, int block) {
  const auto i = static_cast<std::size_t>(frame);
  const auto k = static_cast<std::size_t>(block);
  return channel.bs_irs[i] * irs_phases.asDiagonal() * channel.irs_ue[i][k];
}

Eigen::MatrixXd hadamard(Index n) {
  if (!is_power_of_two(n)) throw DimensionError("hadamard: order must be a power of two");
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(1, 1);
  while (h.rows() < n) {
    const Index r = h.rows();
    Eigen::MatrixXd next(2 * r, 2 * r);
    next << h, h, h, -h;
    h = std::move(next);
  }
  return h;
}

Matrix dft_matrix(Index rows, Index n) {
  Matrix f(rows, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < rows; ++r)
      f(r, c) = std::polar(1.0, -2.0 * kPi * static_cast<double>((r * c) % n) / static_cast<double>(n));
  return f;
}

TrainingDesign design_training(const SystemConfig& config) {
  if (config.T0 < config.Q * config.N) {
    throw ConfigError("design_training: T0 >= Q*N is required");
  }
  TrainingDesign d;
  const Index T0 = config.T0;
  const Index N = config.N;
  const Index Q = config.Q;
  d.irs_phases = dft_matrix(N, T0);

  // Candidate pilot rows: Hadamard rows when T0 is a power of two, DFT rows
  // otherwise. For the DFT source the shifts 0, N, 2N, ... tile the full
  // frequency grid and are tried first.
  d.stage1_pilots_hadamard = is_power_of_two(T0);
  Matrix source;
  std::vector<Index> order;
  if (d.stage1_pilots_hadamard) {
    source = hadamard(T0).cast<cplx>();
    for (Index r = 0; r < T0; ++r) order.push_back(r);
  } else {
    source = dft_matrix(T0, T0);
    for (Index r = 0; r < T0; r += N) order.push_back(r);
    for (Index r = 0; r < T0; ++r)
      if (r % N != 0) order.push_back(r);
  }

  Matrix z(0, T0);
  for (Index r : order) {
    if (z.rows() == Q) break;
    Matrix trial(z.rows() + 1, T0);
    trial << z, source.row(r);
    if (numerical_rank(khatri_rao(d.irs_phases, trial)) == N * trial.rows()) {
      z = std::move(trial);
      d.stage1_pilot_rows.push_back(r);
    }
  }
  if (z.rows() != Q) {
    throw ConfigError("design_training: cannot build stage-1 pilots with S kr Z of full rank Q*N");
  }
  d.stage1_pilots = std::move(z);

  const Index Tp = config.Tp;
  if (Tp < Q) throw ConfigError("design_training: Tp >= Q is required for orthogonal pilots");
  d.stage2_pilots = is_power_of_two(Tp) ? Matrix(hadamard(Tp).topRows(Q).cast<cplx>())
                                         : dft_matrix(Q, Tp);
  return d;
}

FrameData draw_frame_data(const SystemConfig& config, Substream& rng) {
  FrameData f;
  const Index count = static_cast<Index>(config.Q) * config.Td;
  f.bits.resize(static_cast<std::size_t>(count));
  f.symbols.resize(config.Q, config.Td);
  for (Index n = 0; n < count; ++n) {
    const bool one = rng.bit();
    f.bits[static_cast<std::size_t>(n)] = one ? 1 : 0;
    f.symbols(n % config.Q, n / config.Q) = one ? -1.0 : 1.0;
  }
  return f;
}

Stage1Signal synthesize_stage1(const ChannelRealization& channel, const TrainingDesign& design,
                               const SystemConfig& config, int frame, Substream* noise) {
  const auto i = static_cast<std::size_t>(frame);
  const Matrix& g = channel.bs_irs[i];
  const Matrix& h = channel.irs_ue[i][0];
  Matrix y(config.M, config.T0);
  for (Index t = 0; t < config.T0; ++t) {
    const Vector reflected = design.irs_phases.col(t).cwiseProduct(h * design.stage1_pilots.col(t));
    y.col(t) = g * reflected;
  }
  Stage1Signal out;
  if (noise != nullptr && !config.noiseless()) {
    out.noise_variance = noise_variance_for(y.squaredNorm() / static_cast<double>(y.size()), config.snr_db);
    add_noise(y, out.noise_variance, *noise);
  }
  out.received = vec(y);
  return out;
}

Stage2Signal synthesize_stage2(const ChannelRealization& channel, const TrainingDesign& design,
                               const FrameData& data, const Vector& irs_phases,
                               const SystemConfig& config, int frame, Substream* noise) {
  if (irs_phases.size() != config.N) throw DimensionError("synthesize_stage2: IRS phase vector length must be N");
  Stage2Signal out;
  double power = 0.0;
  Index samples = 0;
  for (int k = 1; k <= config.K; ++k) {
    const Matrix w = effective_channel(channel, irs_phases, frame, k);
    out.pilot_blocks.push_back(w * design.stage2_pilots);
    out.data_blocks.push_back(w * data.symbols);
    power += out.pilot_blocks.back().squaredNorm() + out.data_blocks.back().squaredNorm();
    samples += out.pilot_blocks.back().size() + out.data_blocks.back().size();
  }
  if (noise != nullptr && !config.noiseless()) {
    out.noise_variance = noise_variance_for(power / static_cast<double>(samples), config.snr_db);
    for (std::size_t k = 0; k < out.pilot_blocks.size(); ++k) {
      add_noise(out.pilot_blocks[k], out.noise_variance, *noise);
      add_noise(out.data_blocks[k], out.noise_variance, *noise);
    }
  }
  return out;
}

}  // namespace irs
