#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "irs/channel.hpp"
#include "irs/errors.hpp"
#include "irs/parkron.hpp"
#include "support.hpp"

namespace irs {
namespace {

using test::random_matrix;
using test::random_vector;
using test::rel_error;
using test::vandermonde;

// Known factors of the constrained CP model.
struct CpFactors {
  Matrix bs_rx;        // M x L1
  Matrix ue_tx;        // Q x L2
  Matrix irs_product;  // L1L2 x N
  Matrix fading;       // I x L1L2
};

CpFactors random_factors(Index M, Index Q, Index N, Index I, Index L1, Index L2, std::uint64_t key) {
  CpFactors f;
  f.bs_rx = vandermonde(M, L1, key);
  f.ue_tx = vandermonde(Q, L2, key + 1);
  f.irs_product = khatri_rao(vandermonde(N, L2, key + 2).transpose(), vandermonde(N, L1, key + 3).adjoint());
  f.fading = random_matrix(I, L1 * L2, key + 4);
  return f;
}

// Direct sum over path pairs p = l2*L1 + l1.
ComplexTensor brute_tensor(const CpFactors& f) {
  const Index M = f.bs_rx.rows(), Q = f.ue_tx.rows(), N = f.irs_product.cols(), I = f.fading.rows();
  const Index L1 = f.bs_rx.cols(), L2 = f.ue_tx.cols();
  ComplexTensor t({M, Q, N, I});
  for (Index i = 0; i < I; ++i)
    for (Index n = 0; n < N; ++n)
      for (Index q = 0; q < Q; ++q)
        for (Index m = 0; m < M; ++m) {
          cplx acc = 0.0;
          for (Index l2 = 0; l2 < L2; ++l2)
            for (Index l1 = 0; l1 < L1; ++l1) {
              const Index p = l2 * L1 + l1;
              acc += f.bs_rx(m, l1) * std::conj(f.ue_tx(q, l2)) * f.irs_product(p, n) * f.fading(i, p);
            }
          t(m, q, n, i) = acc;
        }
  return t;
}

std::vector<Matrix> model_slices(const CpFactors& f) {
  std::vector<Matrix> out;
  for (Index i = 0; i < f.fading.rows(); ++i)
    out.push_back(rebuild_combined(f.ue_tx, f.bs_rx, f.fading.row(i).transpose(), f.irs_product));
  return out;
}

bool non_increasing(const std::vector<double>& h, double slack = 1e-12) {
  for (std::size_t k = 1; k < h.size(); ++k)
    if (h[k] > h[k - 1] + slack) return false;
  return true;
}

// Smallest per-row residual after the best scalar fit of `estimate` rows to `truth` rows.
double row_aligned_error(const Matrix& truth, const Matrix& estimate) {
  double err = 0.0;
  for (Index n = 0; n < truth.rows(); ++n) {
    const cplx c = truth.row(n).dot(estimate.row(n)) / truth.row(n).squaredNorm();
    err += (estimate.row(n) - c * truth.row(n)).squaredNorm();
  }
  return std::sqrt(err) / truth.norm();
}

TEST(CombinedLs, StructuralMatchesDenseOmega) {
  SystemConfig c;
  c.M = 2;
  c.Q = 2;
  c.N = 2;
  c.N1 = 2;
  c.N2 = 1;
  c.T0 = 4;
  c.L1 = 1;
  c.L2 = 1;
  const TrainingDesign d = design_training(c);
  const Matrix omega = kron(khatri_rao(d.irs_phases, d.stage1_pilots).transpose(), Matrix::Identity(c.M, c.M));
  ASSERT_EQ(omega.rows(), 8);
  ASSERT_EQ(omega.cols(), 8);
  const Vector y = random_vector(8, 21);
  const Vector dense = omega.completeOrthogonalDecomposition().pseudoInverse() * y;
  EXPECT_LT(rel_error(dense, estimate_combined(y, d, c).u_hat), 1e-10);
}

TEST(CombinedLs, NoiselessRecovery) {
  const SystemConfig c;
  const TrainingDesign d = design_training(c);
  const RandomSource src(22);
  Substream geo = src.stream(0, 0, 0, Purpose::Geometry);
  const ChannelRealization ch =
      realize_channels(steering_matrices(draw_geometry(c, geo), c), evolve_fading(c, src, 0), c);
  const CombinedChannelEstimate est = estimate_combined(synthesize_stage1(ch, d, c, 0, nullptr).received, d, c);
  const Matrix truth = combined_channel(ch, 0);
  EXPECT_LT(rel_error(vec(truth), est.u_hat), 1e-10);
  EXPECT_EQ(est.R, unvec(est.u_hat, c.M * c.Q, c.N));
}

TEST(CombinedLs, RejectsWrongLength) {
  const SystemConfig c;
  const CombinedChannelLs ls(design_training(c), c);
  EXPECT_THROW(ls.estimate(Vector::Zero(10)), DimensionError);
}

TEST(Assemble, SingleFrameIsReshape) {
  const Matrix r = random_matrix(6, 5, 23);
  const ComplexTensor t = assemble_combined_tensor({r}, 2, 3);
  EXPECT_EQ(t.shape(), (std::vector<Index>{2, 3, 5, 1}));
  for (Index n = 0; n < 5; ++n)
    for (Index q = 0; q < 3; ++q)
      for (Index m = 0; m < 2; ++m) EXPECT_EQ(t(m, q, n, 0), r(q * 2 + m, n));
}

TEST(Assemble, SlicesRoundTrip) {
  const std::vector<Matrix> rs{random_matrix(4, 3, 24), random_matrix(4, 3, 25), random_matrix(4, 3, 26)};
  const ComplexTensor t = assemble_combined_tensor(rs, 2, 2);
  const Matrix u3 = unfold(t, 3);
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_EQ(unvec(u3.row(static_cast<Index>(i)).transpose(), 4, 3), rs[i]);
}

TEST(Assemble, ShapeMismatch) {
  EXPECT_THROW(assemble_combined_tensor({random_matrix(4, 3, 1), random_matrix(4, 2, 2)}, 2, 2), DimensionError);
  EXPECT_THROW(assemble_combined_tensor({random_matrix(5, 3, 1)}, 2, 2), DimensionError);
}

TEST(Assemble, MatchesConstrainedCpOracle) {
  const CpFactors f = random_factors(3, 2, 5, 4, 2, 3, 27);
  const ComplexTensor model = assemble_combined_tensor(model_slices(f), 3, 2);
  EXPECT_LT(rel_error(brute_tensor(f), model), 1e-12);

  // Same tensor as identity-core mode products with the replicated factors.
  const Index ll = 6;
  ComplexTensor core({ll, ll, ll, ll});
  for (Index p = 0; p < ll; ++p) core(p, p, p, p) = 1.0;
  ComplexTensor cp = mode_n_product(core, f.bs_rx * bs_replication(2, 3), 0);
  cp = mode_n_product(cp, f.ue_tx.conjugate() * ue_replication(2, 3), 1);
  cp = mode_n_product(cp, f.irs_product.transpose(), 2);
  cp = mode_n_product(cp, f.fading, 3);
  EXPECT_LT(rel_error(cp, model), 1e-12);
}

TEST(Replication, Patterns) {
  const Matrix phi1 = bs_replication(2, 3);
  const Matrix phi2 = ue_replication(2, 3);
  for (Index l2 = 0; l2 < 3; ++l2)
    for (Index l1 = 0; l1 < 2; ++l1) {
      const Index p = l2 * 2 + l1;
      for (Index r = 0; r < 2; ++r) EXPECT_EQ(phi1(r, p), cplx(r == l1 ? 1.0 : 0.0));
      for (Index r = 0; r < 3; ++r) EXPECT_EQ(phi2(r, p), cplx(r == l2 ? 1.0 : 0.0));
    }
}

TEST(Als, NoiselessRecoversModel) {
  const CpFactors f = random_factors(2, 2, 32, 2, 2, 2, 28);
  const ComplexTensor t = brute_tensor(f);
  Substream rng(29);
  const AlsResult r = constrained_cp_als(t, f.bs_rx, 2, 2, AlsOptions{}, rng);
  EXPECT_LE(r.residual, 1e-8);
  std::vector<Matrix> rebuilt;
  for (Index i = 0; i < 2; ++i)
    rebuilt.push_back(rebuild_combined(r.ue_factor.conjugate(), f.bs_rx, r.fading.row(i).transpose(), r.irs_product));
  EXPECT_LT(rel_error(t, assemble_combined_tensor(rebuilt, 2, 2)), 1e-8);
}

TEST(Als, NoiselessWithoutPencil) {
  const CpFactors f = random_factors(3, 2, 8, 3, 2, 2, 30);
  Substream rng(31);
  AlsOptions opts;
  opts.pencil_init = false;
  opts.max_iter = 2000;
  opts.tol = 1e-12;
  opts.random_restarts = 5;
  EXPECT_LE(constrained_cp_als(brute_tensor(f), f.bs_rx, 2, 2, opts, rng).residual, 1e-8);
}

TEST(Als, ResidualNonIncreasingOnNoisyInstances) {
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const CpFactors f = random_factors(2, 2, 16, 3, 2, 2, 100 + 10 * trial);
    ComplexTensor t = brute_tensor(f);
    Substream noise(5000 + trial);
    for (auto& v : t.data()) v += noise.complex_normal(0.01);
    Substream rng(7000 + trial);
    AlsOptions opts;
    opts.pencil_init = false;
    opts.random_restarts = 1;
    const AlsResult r = constrained_cp_als(t, f.bs_rx, 2, 2, opts, rng);
    EXPECT_TRUE(non_increasing(r.residual_history)) << "trial " << trial;
    EXPECT_EQ(r.residual, r.residual_history.back());
  }
}

TEST(Als, FixedFactorUntouched) {
  const CpFactors f = random_factors(2, 2, 8, 2, 2, 2, 32);
  Substream rng(33);
  const AlsResult r = constrained_cp_als(brute_tensor(f), f.bs_rx, 2, 2, AlsOptions{}, rng);
  EXPECT_EQ(r.bs_factor, f.bs_rx * bs_replication(2, 2));
}

TEST(Als, RefusesNonUniqueSetups) {
  EXPECT_THROW(check_uniqueness(1, 1, 2, 1, 2, 2), ConfigError);
  EXPECT_NO_THROW(check_uniqueness(2, 2, 32, 2, 2, 2));
  const ComplexTensor t = test::random_tensor({1, 1, 2, 1}, 34);
  Substream rng(35);
  EXPECT_THROW(constrained_cp_als(t, Matrix::Ones(1, 2), 2, 2, AlsOptions{}, rng), ConfigError);
}

TEST(Als, NonFiniteInputIsNumericalError) {
  CpFactors f = random_factors(2, 2, 8, 2, 2, 2, 36);
  ComplexTensor t = brute_tensor(f);
  t(0, 0, 0, 0) = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  Substream rng(37);
  AlsOptions opts;
  opts.pencil_init = false;
  EXPECT_THROW(constrained_cp_als(t, f.bs_rx, 2, 2, opts, rng), NumericalError);
}

TEST(Krf, InvertsKhatriRaoProduct) {
  const Index N = 32, L1 = 2, L2 = 3;
  const Matrix brx = vandermonde(N, L2, 38);
  const Matrix btx = vandermonde(N, L1, 39);
  const Matrix pb = khatri_rao(brx.transpose(), btx.adjoint());
  const KrfResult r = krf_factorize(pb, L1, L2);
  const Matrix rebuilt = r.column_scale.asDiagonal() * khatri_rao(r.irs_rx.transpose(), r.irs_tx.adjoint());
  EXPECT_LT(rel_error(pb, rebuilt), 1e-10);
  // Each row is only determined up to a scalar shared by the pair.
  EXPECT_LT(row_aligned_error(brx, r.irs_rx), 1e-10);
  EXPECT_LT(row_aligned_error(btx, r.irs_tx), 1e-10);
  EXPECT_EQ(r.irs_rx.row(0), Matrix::Ones(1, L2));
  EXPECT_EQ(r.irs_tx.row(0), Matrix::Ones(1, L1));
}

TEST(Krf, PerRowProductsAreExact) {
  // The IRS coupling sum_n conj(B_tx(n,l1)) B_rx(n,l2) is what stage 2 needs.
  const Index N = 16;
  const Matrix brx = vandermonde(N, 2, 40);
  const Matrix btx = vandermonde(N, 2, 41);
  const KrfResult r = krf_factorize(khatri_rao(brx.transpose(), btx.adjoint()), 2, 2);
  const Vector s = random_vector(N, 42);
  const Matrix j_true = btx.adjoint() * s.asDiagonal() * brx;
  const Matrix j_est = r.irs_tx.adjoint() * s.asDiagonal() * r.irs_rx;
  EXPECT_LT(rel_error(j_true, unvec(r.column_scale, 2, 2).cwiseProduct(j_est)), 1e-10);
}

TEST(Krf, SinglePathIsElementwise) {
  const Matrix pb = random_matrix(1, 5, 43);
  const KrfResult r = krf_factorize(pb, 1, 1);
  EXPECT_EQ(r.irs_rx.rows(), 5);
  EXPECT_LT(rel_error(pb, r.column_scale(0) * r.irs_rx.cwiseProduct(r.irs_tx.conjugate()).transpose()), 1e-12);
}

TEST(Krf, ZeroColumn) {
  Matrix pb = random_matrix(4, 3, 44);
  pb.col(1).setZero();
  EXPECT_THROW(krf_factorize(pb, 2, 2), NumericalError);
}

TEST(Kron, SinglePathConvention) {
  const Vector f = Vector::Constant(1, cplx(3.0, -4.0));
  const KronFactors k = kron_factorize(f, 1, 1);
  EXPECT_NEAR(std::abs(k.bs_irs(0) - 5.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(k.irs_ue(0) - cplx(0.6, -0.8)), 0.0, 1e-14);
}

TEST(Kron, ExactProduct) {
  const Vector alpha = random_vector(3, 45);
  const Vector beta = random_vector(4, 46);
  const Vector f = kron(beta, alpha);
  const KronFactors k = kron_factorize(f, 3, 4);
  EXPECT_LT(rel_error(f, kron(k.irs_ue, k.bs_irs)), 1e-12);
  EXPECT_EQ(k.bs_irs(0).imag(), 0.0);
  EXPECT_GT(k.bs_irs(0).real(), 0.0);
}

TEST(Kron, NoisyInputGivesBestRankOne) {
  const Vector f = random_vector(6, 47);
  const KronFactors k = kron_factorize(f, 2, 3);
  Eigen::JacobiSVD<Matrix> svd(unvec(f, 2, 3), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix best = svd.singularValues()(0) * svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
  EXPECT_LT(rel_error(vec(best), kron(k.irs_ue, k.bs_irs)), 1e-12);
}

TEST(Kron, Errors) {
  EXPECT_THROW(kron_factorize(Vector::Zero(4), 2, 2), NumericalError);
  EXPECT_THROW(kron_factorize(Vector::Ones(3), 2, 2), DimensionError);
}

TEST(ConfigureIrs, PhaseExtraction) {
  Vector v(2);
  v << 1.0, cplx(0.0, 1.0);
  v /= std::sqrt(2.0);
  const Matrix r = random_vector(4, 48) * v.adjoint();
  const Vector s = configure_irs(r);
  EXPECT_NEAR(std::abs(s(0) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(s(1) - cplx(0.0, 1.0)), 0.0, 1e-12);
}

TEST(ConfigureIrs, BeatsRandomConfigurations) {
  const SystemConfig c;
  const RandomSource src(49);
  for (std::uint64_t run = 0; run < 5; ++run) {
    Substream geo = src.stream(run, 0, 0, Purpose::Geometry);
    const ChannelRealization ch =
        realize_channels(steering_matrices(draw_geometry(c, geo), c), evolve_fading(c, src, run), c);
    const Vector s = configure_irs(combined_channel(ch, 0));
    for (Index n = 0; n < s.size(); ++n) EXPECT_NEAR(std::abs(s(n)), 1.0, 1e-14);
    const double gain = effective_channel(ch, s, 0, 0).norm();
    Substream rs(50 + run);
    double random_gain = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vector sr(c.N);
      for (Index n = 0; n < c.N; ++n) sr(n) = std::polar(1.0, rs.uniform(-3.14159265, 3.14159265));
      random_gain += effective_channel(ch, sr, 0, 0).norm() / 100.0;
    }
    EXPECT_GT(gain, random_gain) << "run " << run;
  }
}

TEST(ConfigureIrs, ZeroMatrix) { EXPECT_THROW(configure_irs(Matrix::Zero(3, 3)), NumericalError); }

TEST(Stage1, NoiselessEndToEnd) {
  SystemConfig c;
  c.snr_db = std::numeric_limits<double>::infinity();
  const TrainingDesign d = design_training(c);
  const CombinedChannelLs ls(d, c);
  const RandomSource src(51);
  Substream geo = src.stream(0, 0, 0, Purpose::Geometry);
  const SteeringMatrices st = steering_matrices(draw_geometry(c, geo), c);
  const ChannelRealization ch = realize_channels(st, evolve_fading(c, src, 0), c);
  std::vector<Vector> y;
  for (int i = 0; i < c.I; ++i) y.push_back(synthesize_stage1(ch, d, c, i, nullptr).received);
  Substream rng(52);
  const Stage1Estimate est = run_stage1(y, ls, c, st.bs_rx, AlsOptions{}, rng);

  for (int i = 0; i < c.I; ++i) {
    const Matrix truth = combined_channel(ch, i);
    const double e = (truth - est.combined[static_cast<std::size_t>(i)]).squaredNorm() / truth.squaredNorm();
    EXPECT_LE(e, 1e-8) << "frame " << i;
  }
  EXPECT_EQ(est.ue_tx.row(0), Matrix::Ones(1, c.L2));
  EXPECT_EQ(est.irs_rx.row(0), Matrix::Ones(1, c.L2));
  EXPECT_EQ(est.irs_tx.row(0), Matrix::Ones(1, c.L1));
  EXPECT_LT(row_aligned_error(st.ue_tx.transpose(), est.ue_tx.transpose()), 1e-8);

  // The normalizations cancel in the model product.
  for (int i = 0; i < c.I; ++i) {
    const auto row = static_cast<Index>(i);
    const Matrix raw = rebuild_combined(est.als.ue_factor.conjugate(), st.bs_rx, est.als.fading.row(row).transpose(),
                                        est.als.irs_product);
    EXPECT_LT(rel_error(raw, est.combined[static_cast<std::size_t>(i)]), 1e-10);
  }
  // Kronecker factors rebuild the compensated fading.
  const KrfResult krf = krf_factorize(est.irs_product, c.L1, c.L2);
  for (int i = 0; i < c.I; ++i) {
    const auto& a = est.bs_irs_gains[static_cast<std::size_t>(i)];
    const auto& b = est.irs_ue_gains[static_cast<std::size_t>(i)];
    const Vector fi = est.fading.row(i).transpose().cwiseProduct(krf.column_scale);
    EXPECT_LT(rel_error(fi, kron(b, a)), 1e-8);
  }
  for (Index n = 0; n < c.N; ++n) EXPECT_NEAR(std::abs(est.irs_phases(n)), 1.0, 1e-14);
}

}  // namespace
}  // namespace irs
