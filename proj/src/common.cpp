#include "bdris/common.hpp"

#include <algorithm>
#include <vector>

namespace bdris {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::constraint_violation: return "constraint_violation";
    case ErrorCode::unstable_amplifier_loop: return "unstable_amplifier_loop";
    case ErrorCode::resonant_network: return "resonant_network";
    case ErrorCode::non_symmetric: return "non_symmetric";
    case ErrorCode::non_unitary: return "non_unitary";
    case ErrorCode::zero_norm_group: return "zero_norm_group";
    case ErrorCode::bracket_not_found: return "bracket_not_found";
    case ErrorCode::infeasible_budget: return "infeasible_budget";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::size_limit: return "size_limit";
    case ErrorCode::non_convergence: return "non_convergence";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::config_error: return "config_error";
  }
  return "unknown";
}

double relative_difference(const CMatrix& a, const CMatrix& b, double floor) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

double unitarity_error(const CMatrix& m) {
  return (m.adjoint() * m - CMatrix::Identity(m.cols(), m.cols())).norm();
}

double symmetry_error(const CMatrix& m) {
  const double n = m.norm();
  if (n == 0.0) return 0.0;
  return (m - m.transpose()).norm() / n;
}

CMatrix block_diagonal(const std::vector<CMatrix>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  CMatrix out = CMatrix::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace bdris
