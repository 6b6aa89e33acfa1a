#include "irs/tbt.hpp"

#include <cmath>
#include <limits>

#include "irs/errors.hpp"

namespace irs {

CoreTensor build_core_tensor(const Matrix& irs_tx, const Matrix& irs_rx, const Vector& irs_phases) {
  if (irs_tx.rows() != irs_phases.size() || irs_rx.rows() != irs_phases.size()) {
    throw DimensionError("build_core_tensor: steering rows must match the IRS phase vector");
  }
  CoreTensor core;
  core.J = irs_tx.adjoint() * irs_phases.asDiagonal() * irs_rx;
  const Index L1 = core.J.rows(), L2 = core.J.cols();
  core.tensor = ComplexTensor({L1, L2, L1 * L2});
  for (Index l2 = 0; l2 < L2; ++l2)
    for (Index l1 = 0; l1 < L1; ++l1) core.tensor(l1, l2, l2 * L1 + l1) = core.J(l1, l2);
  return core;
}

ComplexTensor stack_blocks(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) throw DimensionError("stack_blocks: no blocks");
  const Index rows = blocks.front().rows(), cols = blocks.front().cols();
  ComplexTensor t({rows, cols, static_cast<Index>(blocks.size())});
  auto out = t.data().begin();
  for (const auto& b : blocks) {
    if (b.rows() != rows || b.cols() != cols) throw DimensionError("stack_blocks: block shape mismatch");
    out = std::copy(b.data(), b.data() + b.size(), out);
  }
  return t;
}

Matrix symbol_factor(const Matrix& ue_tx, const Matrix& symbols) {
  return (ue_tx.adjoint() * symbols).transpose();
}

Matrix init_fading(const ComplexTensor& pilots, const CoreTensor& core, const Matrix& bs_rx,
                   const Matrix& pilot_factor) {
  const Index ll = core.J.size();
  if (pilots.order() != 3 || pilots.extent(0) != bs_rx.rows() || pilots.extent(1) != pilot_factor.rows()) {
    throw DimensionError("init_fading: pilot tensor must be M x Tp x K");
  }
  if (pilots.extent(0) * pilots.extent(1) < ll) throw DimensionError("init_fading: M*Tp >= L1*L2 is required");
  const Matrix system = unfold(core.tensor, 2) * kron(pilot_factor, bs_rx).transpose();
  const Pseudoinverse p = pseudoinverse(system);
  if (p.rank < ll) throw EstimationError("init_fading: pilot system is row-rank deficient");
  return (unfold(pilots, 2) * p.matrix).transpose();
}

TrackingState bals_detect(const ComplexTensor& data, const CoreTensor& core, const Matrix& bs_rx,
                          const Matrix& ue_tx, const Matrix& fading_init, const BalsOptions& options) {
  const Index M = bs_rx.rows(), Q = ue_tx.rows(), ll = core.J.size();
  if (data.order() != 3 || data.extent(0) != M || fading_init.rows() != ll ||
      fading_init.cols() != data.extent(2)) {
    throw DimensionError("bals_detect: inconsistent data tensor or fading shape");
  }
  const Index K = data.extent(2);
  if (M * K < Q || M * data.extent(1) < ll) {
    throw DimensionError("bals_detect: M*K >= Q and M*Td >= L1*L2 are required");
  }
  const Matrix y1 = unfold(data, 1);
  const Matrix y2 = unfold(data, 2);
  const double scale = data.norm();
  if (scale == 0.0) throw NumericalError("bals_detect: zero data tensor");
  const Matrix ue_conj = ue_tx.conjugate();
  const Matrix j_ue = ue_conj * unfold(core.tensor, 1);  // Q x (L1*L2*L1)
  const Matrix j3 = unfold(core.tensor, 2);

  TrackingState st;
  st.fading = fading_init;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iter; ++it) {
    const Matrix sys_x = j_ue * kron(st.fading.transpose(), bs_rx).transpose();
    const Matrix xt = y1 * pinv(sys_x);
    const double res_x = (y1 - xt * sys_x).norm() / scale;
    st.symbols = xt.transpose();

    const Matrix sys_f = j3 * kron(symbol_factor(ue_tx, st.symbols), bs_rx).transpose();
    const Matrix ft = y2 * pinv(sys_f);
    const double res_f = (y2 - ft * sys_f).norm() / scale;
    st.fading = ft.transpose();

    if (!std::isfinite(res_x) || !std::isfinite(res_f)) throw NumericalError("bals_detect: non-finite iterate");
    st.residual_history.push_back(res_x);
    st.residual_history.push_back(res_f);
    st.iterations = it;
    if (std::abs(prev - res_f) < options.tol * prev) {
      st.converged = true;
      break;
    }
    prev = res_f;
  }
  return st;
}

std::vector<std::uint8_t> demap_bpsk(const Matrix& symbols) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(symbols.size()));
  for (Index n = 0; n < symbols.size(); ++n) bits[static_cast<std::size_t>(n)] = symbols.data()[n].real() >= 0.0 ? 0 : 1;
  return bits;
}

std::size_t count_bit_errors(const std::vector<std::uint8_t>& detected, const std::vector<std::uint8_t>& reference) {
  if (detected.size() != reference.size()) throw DimensionError("count_bit_errors: length mismatch");
  std::size_t errors = 0;
  for (std::size_t n = 0; n < detected.size(); ++n) errors += detected[n] != reference[n];
  return errors;
}

Matrix tracked_channel(const CoreTensor& core, const Matrix& bs_rx, const Matrix& ue_tx, const Vector& fading) {
  const Matrix mixed = core.J.cwiseProduct(unvec(fading, core.J.rows(), core.J.cols()));
  return bs_rx * mixed * ue_tx.adjoint();
}

Matrix tracked_channel_factored(const CoreTensor& core, const Matrix& bs_rx, const Matrix& ue_tx,
                                const KronFactors& gains) {
  return bs_rx * gains.bs_irs.asDiagonal() * core.J * gains.irs_ue.asDiagonal() * ue_tx.adjoint();
}

}  // namespace irs
