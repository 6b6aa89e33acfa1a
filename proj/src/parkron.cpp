#include "irs/parkron.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "irs/errors.hpp"

namespace irs {

namespace {

double relative_residual(const Matrix& unfolded, const Matrix& factor, const Matrix& other, double scale) {
  return (unfolded - factor * other.transpose()).norm() / scale;
}

void require_finite(double value, const char* where) {
  if (!std::isfinite(value)) throw NumericalError(std::string(where) + ": non-finite iterate");
}

// One ALS run from the given starting point. Mode order: 0 = BS (fixed),
// 1 = UE, 2 = IRS, 3 = frames.
AlsResult iterate_als(const ComplexTensor& tensor, AlsResult state, const Matrix& ue_rep,
                      const AlsOptions& options) {
  const Matrix t1 = unfold(tensor, 1);
  const Matrix t2 = unfold(tensor, 2);
  const Matrix t3 = unfold(tensor, 3);
  const double scale = tensor.norm();
  if (scale == 0.0) throw NumericalError("constrained_cp_als: zero tensor");

  const Matrix& u1 = state.bs_factor;
  Matrix ue = state.ue_factor;
  Matrix u3 = state.irs_product.transpose();
  Matrix f = state.fading;

  Matrix u2 = ue * ue_rep;
  double prev = relative_residual(t3, f, khatri_rao(u3, khatri_rao(u2, u1)), scale);
  require_finite(prev, "constrained_cp_als");
  state.residual_history.assign(1, prev);
  state.converged = prev < options.residual_floor;

  int it = 0;
  while (!state.converged && it < options.max_iter) {
    ++it;
    // Constrained UE factor: least squares directly in the L2 free columns.
    const Matrix w1 = khatri_rao(f, khatri_rao(u3, u1));
    ue = t1 * pinv(ue_rep * w1.transpose());
    u2 = ue * ue_rep;

    u3 = t2 * pinv(khatri_rao(f, khatri_rao(u2, u1)).transpose());

    const Matrix w3 = khatri_rao(u3, khatri_rao(u2, u1));
    f = t3 * pinv(w3.transpose());

    const double res = relative_residual(t3, f, w3, scale);
    require_finite(res, "constrained_cp_als");
    state.residual_history.push_back(res);
    state.converged = res < options.residual_floor || std::abs(prev - res) < options.tol * prev;
    prev = res;
  }
  state.ue_factor = std::move(ue);
  state.irs_product = u3.transpose();
  state.fading = std::move(f);
  state.iterations = it;
  state.residual = prev;
  return state;
}

}  // namespace

CombinedChannelLs::CombinedChannelLs(const TrainingDesign& design, const SystemConfig& config)
    : M_(config.M), MQ_(static_cast<Index>(config.M) * config.Q), N_(config.N) {
  const Matrix sz = khatri_rao(design.irs_phases, design.stage1_pilots);
  if (sz.cols() < sz.rows()) throw EstimationError("estimate_combined: T0 < Q*N");
  auto p = pseudoinverse(sz.transpose());
  if (p.rank < sz.rows()) throw EstimationError("estimate_combined: S kr Z is rank deficient");
  projector_ = std::move(p.matrix);
}

CombinedChannelEstimate CombinedChannelLs::estimate(const Vector& received) const {
  const Index T0 = projector_.cols();
  if (received.size() != M_ * T0) throw DimensionError("estimate_combined: received length must be M*T0");
  const Matrix y = unvec(received, M_, T0);
  const Matrix u = y * projector_.transpose();
  CombinedChannelEstimate out;
  out.u_hat = vec(u);
  out.R = unvec(out.u_hat, MQ_, N_);
  return out;
}

CombinedChannelEstimate estimate_combined(const Vector& received, const TrainingDesign& design,
                                          const SystemConfig& config) {
  return CombinedChannelLs(design, config).estimate(received);
}

ComplexTensor assemble_combined_tensor(const std::vector<Matrix>& combined, Index M, Index Q) {
  if (combined.empty()) throw DimensionError("assemble_combined_tensor: no frames");
  const Index rows = combined.front().rows();
  const Index N = combined.front().cols();
  if (rows != M * Q) throw DimensionError("assemble_combined_tensor: rows must equal M*Q");
  const auto I = static_cast<Index>(combined.size());
  ComplexTensor t({M, Q, N, I});
  auto data = t.data();
  for (Index i = 0; i < I; ++i) {
    const Matrix& r = combined[static_cast<std::size_t>(i)];
    if (r.rows() != rows || r.cols() != N) throw DimensionError("assemble_combined_tensor: shape mismatch");
    std::copy(r.data(), r.data() + r.size(), data.begin() + i * rows * N);
  }
  return t;
}

Matrix bs_replication(Index L1, Index L2) {
  return kron(Matrix::Ones(1, L2), Matrix::Identity(L1, L1));
}

Matrix ue_replication(Index L1, Index L2) {
  return kron(Matrix::Identity(L2, L2), Matrix::Ones(1, L1));
}

void check_uniqueness(Index M, Index Q, Index N, Index I, Index L1, Index L2) {
  const Index ll = L1 * L2;
  if (Q * N * I < ll || Q * M * I < ll || Q * M * N < ll) {
    throw ConfigError("constrained_cp_als: uniqueness requires Q*N*I, Q*M*I and Q*M*N >= L1*L2");
  }
}

namespace {

Matrix frame_slice(const ComplexTensor& tensor, Index i) {
  const Index rows = tensor.extent(0) * tensor.extent(1), N = tensor.extent(2);
  return Eigen::Map<const Matrix>(tensor.data().data() + i * rows * N, rows, N);
}

// Eigenvectors of the pencil (r1, r0) restricted to the dominant rank-`rank`
// subspace of r0. Empty when r0 is numerically rank deficient.
std::optional<Matrix> pencil_vectors(const Matrix& r0, const Matrix& r1, Index rank) {
  Eigen::JacobiSVD<Matrix> svd(r0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() < rank || sv(0) == 0.0 || sv(rank - 1) < 1e-10 * sv(0)) return std::nullopt;
  const Matrix u = svd.matrixU().leftCols(rank);
  const Matrix v = svd.matrixV().leftCols(rank);
  const Matrix inv = sv.head(rank).cwiseInverse().cast<cplx>().asDiagonal();
  Eigen::ComplexEigenSolver<Matrix> eig(u.adjoint() * r1 * v * inv);
  if (eig.info() != Eigen::Success) return std::nullopt;
  return Matrix(u * eig.eigenvectors());
}

// Given the UE factor, the remaining factors follow in closed form: project
// every frame onto the known mode-0/1 structure and split each path pair's
// (frames x N) block by a rank-1 fit.
std::optional<AlsResult> complete_from_ue(const ComplexTensor& tensor, const Matrix& bs_rx, const Matrix& ue,
                                          Index L1, Index L2) {
  const Index N = tensor.extent(2), I = tensor.extent(3), ll = L1 * L2;
  AlsResult init;
  init.bs_factor = bs_rx * bs_replication(L1, L2);
  init.ue_factor = ue;
  const Pseudoinverse kp = pseudoinverse(khatri_rao(ue * ue_replication(L1, L2), init.bs_factor));
  if (kp.rank < ll) return std::nullopt;
  std::vector<Matrix> projected;
  for (Index i = 0; i < I; ++i) projected.push_back(kp.matrix * frame_slice(tensor, i));

  init.fading.resize(I, ll);
  init.irs_product.resize(ll, N);
  for (Index p = 0; p < ll; ++p) {
    Matrix stacked(I, N);
    for (Index i = 0; i < I; ++i) stacked.row(i) = projected[static_cast<std::size_t>(i)].row(p);
    if (stacked.norm() == 0.0) return std::nullopt;
    const auto t = dominant_singular_triplet(stacked);
    init.fading.col(p) = t.value * t.left;
    init.irs_product.row(p) = t.right.adjoint();
  }
  const Matrix model = khatri_rao(init.irs_product.transpose(), khatri_rao(ue * ue_replication(L1, L2), init.bs_factor));
  init.residual = (unfold(tensor, 3) - init.fading * model.transpose()).norm() / tensor.norm();
  if (!std::isfinite(init.residual)) return std::nullopt;
  return init;
}

// Columns scaled to a unit first entry; empty if any first entry vanishes.
std::optional<Matrix> unit_first_row(Matrix m) {
  for (Index c = 0; c < m.cols(); ++c) {
    if (std::abs(m(0, c)) < 1e-12 * m.col(c).norm()) return std::nullopt;
    m.col(c) /= m(0, c);
  }
  return m;
}

}  // namespace

std::optional<AlsResult> pencil_initialization(const ComplexTensor& tensor, const Matrix& bs_rx, Index L1,
                                               Index L2) {
  const Index M = tensor.extent(0), Q = tensor.extent(1), N = tensor.extent(2), I = tensor.extent(3);
  const Index ll = L1 * L2;
  if (I < 2 || N < ll) return std::nullopt;
  const Matrix r0 = frame_slice(tensor, 0);
  const Matrix r1 = frame_slice(tensor, 1);

  std::vector<Matrix> ue_candidates;

  // Full pencil: each eigenvector is proportional to kron(conj(a_tx), a_rx)
  // for one path pair, and its BS part tells which l1 it belongs to.
  if (M * Q >= ll) {
    if (const auto columns = pencil_vectors(r0, r1, ll)) {
      std::vector<std::vector<Vector>> groups(static_cast<std::size_t>(L1));
      for (Index j = 0; j < ll; ++j) {
        const auto split = dominant_singular_triplet(unvec(columns->col(j), M, Q));
        Index best = 0;
        double best_score = -1.0;
        for (Index l = 0; l < L1; ++l) {
          const double score = std::abs(bs_rx.col(l).dot(split.left)) / bs_rx.col(l).norm();
          if (score > best_score) best_score = score, best = l;
        }
        groups[static_cast<std::size_t>(best)].push_back(split.right.conjugate());
      }
      for (const auto& g : groups) {
        if (static_cast<Index>(g.size()) != L2) continue;
        Matrix ue(Q, L2);
        for (Index l2 = 0; l2 < L2; ++l2) ue.col(l2) = g[static_cast<std::size_t>(l2)];
        if (auto u = unit_first_row(ue)) ue_candidates.push_back(std::move(*u));
      }
    }
  }

  // Per-BS-path pencils: removing the known A_rx leaves, for each l1, a
  // Q x N block conj(A_tx) D(f_i restricted to l1) P_l1 whose pencil only
  // has to separate the L2 UE paths.
  const Pseudoinverse rx = pseudoinverse(bs_rx);
  if (rx.rank == L1 && Q >= L2) {
    const Matrix strip = kron(Matrix::Identity(Q, Q), rx.matrix);  // rows q*L1 + l1
    const Matrix s0 = strip * r0;
    const Matrix s1 = strip * r1;
    for (Index l1 = 0; l1 < L1; ++l1) {
      Matrix b0(Q, N), b1(Q, N);
      for (Index q = 0; q < Q; ++q) {
        b0.row(q) = s0.row(q * L1 + l1);
        b1.row(q) = s1.row(q * L1 + l1);
      }
      if (const auto columns = pencil_vectors(b0, b1, L2)) {
        if (auto u = unit_first_row(*columns)) ue_candidates.push_back(std::move(*u));
      }
    }
  }

  std::optional<AlsResult> best;
  for (const auto& ue : ue_candidates) {
    auto init = complete_from_ue(tensor, bs_rx, ue, L1, L2);
    if (init && (!best || init->residual < best->residual)) best = std::move(init);
  }
  return best;
}

AlsResult constrained_cp_als(const ComplexTensor& tensor, const Matrix& bs_rx, Index L1, Index L2,
                             const AlsOptions& options, Substream& rng) {
  if (tensor.order() != 4) throw DimensionError("constrained_cp_als: expected an order-4 tensor");
  const Index M = tensor.extent(0), Q = tensor.extent(1), N = tensor.extent(2), I = tensor.extent(3);
  if (bs_rx.rows() != M || bs_rx.cols() != L1) throw DimensionError("constrained_cp_als: A_rx must be M x L1");
  check_uniqueness(M, Q, N, I, L1, L2);

  const Index ll = L1 * L2;
  const Matrix ue_rep = ue_replication(L1, L2);
  const Matrix bs_factor = bs_rx * bs_replication(L1, L2);

  std::optional<AlsResult> best;
  const auto consider = [&](AlsResult candidate) {
    if (!best || candidate.residual < best->residual) best = std::move(candidate);
  };

  if (options.pencil_init) {
    if (auto init = pencil_initialization(tensor, bs_rx, L1, L2)) {
      init->candidate = 0;
      consider(iterate_als(tensor, std::move(*init), ue_rep, options));
    }
  }
  for (int r = 0; r < options.random_restarts || !best; ++r) {
    AlsResult init;
    init.bs_factor = bs_factor;
    init.ue_factor = rng.complex_normal(Q, L2);
    init.irs_product = rng.complex_normal(ll, N);
    init.fading = rng.complex_normal(I, ll);
    init.candidate = r + 1;
    consider(iterate_als(tensor, std::move(init), ue_rep, options));
  }
  return std::move(*best);
}

KrfResult krf_factorize(const Matrix& irs_product, Index L1, Index L2) {
  if (irs_product.rows() != L1 * L2) throw DimensionError("krf_factorize: rows must equal L1*L2");
  const Index N = irs_product.cols();
  Matrix rx(N, L2), tx(N, L1);
  for (Index n = 0; n < N; ++n) {
    const Matrix block = unvec(irs_product.col(n), L1, L2);
    if (block.norm() == 0.0) throw NumericalError("krf_factorize: zero column");
    const auto t = dominant_singular_triplet(block);
    const double root = std::sqrt(t.value);
    // block ~ (root * u) (root * conj(v))^T with u = conj(B_tx row), conj(v) = B_rx row.
    tx.row(n) = (root * t.left).adjoint();
    rx.row(n) = (root * t.right).adjoint();
  }
  KrfResult out;
  const Vector crx = rx.row(0).transpose();
  const Vector ctx = tx.row(0).transpose();
  if ((crx.array().abs() == 0.0).any() || (ctx.array().abs() == 0.0).any()) {
    throw NumericalError("krf_factorize: zero reference entry");
  }
  out.irs_rx = rx * crx.cwiseInverse().asDiagonal();
  out.irs_tx = tx * ctx.cwiseInverse().asDiagonal();
  out.irs_rx.row(0).setOnes();
  out.irs_tx.row(0).setOnes();
  out.column_scale = kron(crx, ctx.conjugate());
  return out;
}

KronFactors kron_factorize(const Vector& f, Index L1, Index L2) {
  if (f.size() != L1 * L2) throw DimensionError("kron_factorize: length must equal L1*L2");
  if (f.norm() == 0.0) throw NumericalError("kron_factorize: zero vector");
  const auto t = dominant_singular_triplet(unvec(f, L1, L2));
  // unvec(f) = alpha beta^T ~ sigma u v^H; rotate so alpha(0) is real-positive.
  const cplx u0 = t.left(0);
  const cplx rot = std::abs(u0) > 0.0 ? std::conj(u0) / std::abs(u0) : cplx(1.0);
  KronFactors out;
  out.bs_irs = t.value * rot * t.left;
  out.irs_ue = t.right.conjugate() / rot;
  return out;
}

Vector configure_irs(const Matrix& combined) {
  const auto t = dominant_singular_triplet(combined);
  Vector s(t.right.size());
  for (Index n = 0; n < s.size(); ++n) s(n) = std::polar(1.0, std::arg(t.right(n)));
  return s;
}

Matrix rebuild_combined(const Matrix& ue_tx, const Matrix& bs_rx, const Vector& fading_row,
                        const Matrix& irs_product) {
  return kron(ue_tx.conjugate(), bs_rx) * fading_row.asDiagonal() * irs_product;
}

Stage1Estimate run_stage1(const std::vector<Vector>& received, const CombinedChannelLs& ls,
                          const SystemConfig& config, const Matrix& bs_rx, const AlsOptions& options,
                          Substream& rng) {
  if (static_cast<int>(received.size()) != config.I) throw DimensionError("run_stage1: one block per frame expected");
  const Index L1 = config.L1, L2 = config.L2;
  Stage1Estimate est;

  for (const auto& y : received) est.ls.push_back(ls.estimate(y).R);

  est.als = constrained_cp_als(assemble_combined_tensor(est.ls, config.M, config.Q), bs_rx, L1, L2, options, rng);

  // Vandermonde normalization of the UE factor and of P_B's first IRS
  // element; the fading matrix absorbs both scalings so the model product
  // is unchanged.
  Matrix ue = est.als.ue_factor;
  Matrix pb = est.als.irs_product;
  Matrix f = est.als.fading;
  const Vector c = ue.row(0).transpose();
  const Vector d = pb.col(0);
  if ((c.array().abs() < std::numeric_limits<double>::min()).any() ||
      (d.array().abs() < std::numeric_limits<double>::min()).any()) {
    throw EstimationError("run_stage1: zero reference entry in the estimated factors");
  }
  ue = ue * c.cwiseInverse().asDiagonal();
  ue.row(0).setOnes();
  pb = d.cwiseInverse().asDiagonal() * pb;
  pb.col(0).setOnes();
  const Vector comp = (ue_replication(L1, L2).transpose() * c).cwiseProduct(d);
  f = f * comp.asDiagonal();

  est.ue_tx = ue.conjugate();
  est.irs_product = pb;
  est.fading = f;

  const KrfResult krf = krf_factorize(pb, L1, L2);
  est.irs_rx = krf.irs_rx;
  est.irs_tx = krf.irs_tx;
  for (Index i = 0; i < f.rows(); ++i) {
    const Vector fi = f.row(i).transpose().cwiseProduct(krf.column_scale);
    const KronFactors kf = kron_factorize(fi, L1, L2);
    est.bs_irs_gains.push_back(kf.bs_irs);
    est.irs_ue_gains.push_back(kf.irs_ue);
    est.combined.push_back(rebuild_combined(est.ue_tx, bs_rx, f.row(i).transpose(), pb));
  }
  est.irs_phases = configure_irs(est.combined.front());
  return est;
}

}  // namespace irs
