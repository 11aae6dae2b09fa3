#include "bdris/netcore.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bdris::netcore {

namespace {

bool near_zero(const CMatrix& m, double tol, double scale) {
  return m.size() == 0 || m.cwiseAbs().maxCoeff() <= tol * std::max(scale, 1.0);
}

void require_square(const CMatrix& m, Eigen::Index n, const char* name) {
  require(m.rows() == n && m.cols() == n, ErrorCode::dimension_mismatch,
          std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
}

// Inverse of a square matrix, refusing ill-conditioned inputs.
CMatrix guarded_inverse(const CMatrix& m, double condition_cap, ErrorCode code,
                        const char* what) {
  Eigen::PartialPivLU<CMatrix> lu(m);
  // rcond() alone misses exact zero pivots, so check the pivot ratio and the result too.
  const RVector pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double pivot_ratio = pivots.size() ? pivots.minCoeff() / pivots.maxCoeff() : 1.0;
  const double rcond = std::min(lu.rcond(), pivot_ratio);
  if (!(rcond > 0.0) || 1.0 / rcond > condition_cap) {
    throw Error(code, std::string(what) + " is singular or ill-conditioned (rcond=" +
                          std::to_string(rcond) + ")");
  }
  CMatrix inv = lu.inverse();
  require(inv.allFinite(), code, std::string(what) + " is singular");
  return inv;
}

}  // namespace

// ---------------------------------------------------------------- Architecture

Architecture::Architecture(int group_count, int group_size, bool reciprocal)
    : group_count_(group_count), group_size_(group_size), reciprocal_(reciprocal) {
  require(group_count > 0 && group_size > 0, ErrorCode::invalid_argument,
          "group count and group size must be positive");
}

Architecture Architecture::single_connected(int elements, bool reciprocal) {
  return Architecture(elements, 1, reciprocal);
}

Architecture Architecture::fully_connected(int elements, bool reciprocal) {
  return Architecture(1, elements, reciprocal);
}

Architecture Architecture::group_connected(int elements, int group_size, bool reciprocal) {
  require(group_size > 0 && elements > 0 && elements % group_size == 0,
          ErrorCode::invalid_argument,
          "group size " + std::to_string(group_size) + " does not divide " +
              std::to_string(elements) + " elements");
  return Architecture(elements / group_size, group_size, reciprocal);
}

std::string Architecture::label() const {
  if (is_single_connected()) return "single";
  const std::string suffix = reciprocal_ ? "-r" : "-nr";
  if (is_fully_connected()) return "full" + suffix;
  return "group" + std::to_string(group_size_) + suffix;
}

ThetaMatrix ThetaMatrix::checked(CMatrix value, const Architecture& arch, double tol) {
  const ThetaReport report = validate_theta(value, arch, tol);
  require(report.ok, ErrorCode::constraint_violation, "theta infeasible: " + report.reason);
  return ThetaMatrix{std::move(value), arch};
}

// ------------------------------------------------------- ImpedanceNetworkSpec

ImpedanceNetworkSpec ImpedanceNetworkSpec::matched(CMatrix phi_ia, CMatrix phi_ai, RVector amp) {
  const auto n = amp.size();
  require_square(phi_ia, n, "phi_IA");
  require_square(phi_ai, n, "phi_AI");
  require((amp.array() >= 0.0).all(), ErrorCode::invalid_argument,
          "amplification factors must be non-negative");
  return ImpedanceNetworkSpec{CMatrix::Zero(n, n), std::move(phi_ia), std::move(phi_ai),
                              CMatrix::Zero(n, n), std::move(amp)};
}

ImpedanceNetworkSpec ImpedanceNetworkSpec::reciprocal(CMatrix phi_ia, RVector amp) {
  CMatrix phi_ai = phi_ia.transpose();
  return matched(std::move(phi_ia), std::move(phi_ai), std::move(amp));
}

CMatrix ImpedanceNetworkSpec::full_phi() const {
  const auto n = ports();
  CMatrix phi(2 * n, 2 * n);
  phi << phi_ii, phi_ia, phi_ai, phi_aa;
  return phi;
}

bool ImpedanceNetworkSpec::is_lossless(double tol) const {
  const CMatrix phi = full_phi();
  return unitarity_error(phi) <= tol * std::sqrt(static_cast<double>(phi.cols()));
}

bool ImpedanceNetworkSpec::is_matched(double tol) const {
  return near_zero(phi_ii, tol, 1.0) && near_zero(phi_aa, tol, 1.0);
}

bool ImpedanceNetworkSpec::is_reciprocal(double tol) const {
  return relative_difference(phi_ai, phi_ia.transpose(), 1.0) <= tol;
}

NoiseModel NoiseModel::checked(double sigma_r_sq, double sigma_i_sq) {
  require(sigma_r_sq > 0.0 && sigma_i_sq > 0.0, ErrorCode::invalid_argument,
          "noise powers must be strictly positive");
  return NoiseModel{sigma_r_sq, sigma_i_sq};
}

// ------------------------------------------------------ PartitionedScattering

PartitionedScattering::PartitionedScattering(CMatrix s, int n_t, int n_i, int n_r)
    : s_(std::move(s)), n_{n_t, n_i, n_r} {
  require(n_t > 0 && n_i >= 0 && n_r > 0, ErrorCode::invalid_argument,
          "partition sizes must be positive");
  const int n = n_t + n_i + n_r;
  require(s_.rows() == n && s_.cols() == n, ErrorCode::dimension_mismatch,
          "S must be N x N with N = n_t + n_i + n_r");
}

int PartitionedScattering::size(Side side) const noexcept { return n_[static_cast<int>(side)]; }

int PartitionedScattering::offset(Side side) const noexcept {
  int off = 0;
  for (int k = 0; k < static_cast<int>(side); ++k) off += n_[k];
  return off;
}

CMatrix PartitionedScattering::block(Side row, Side col) const {
  return s_.block(offset(row), offset(col), size(row), size(col));
}

bool PartitionedScattering::is_unilateral(double tol) const {
  const double scale = s_.cwiseAbs().maxCoeff();
  return near_zero(block(Side::transmitter, Side::receiver), tol, scale) &&
         near_zero(block(Side::ris, Side::receiver), tol, scale) &&
         near_zero(block(Side::transmitter, Side::ris), tol, scale);
}

bool PartitionedScattering::is_matched(double tol) const {
  const double scale = s_.cwiseAbs().maxCoeff();
  return near_zero(block(Side::transmitter, Side::transmitter), tol, scale) &&
         near_zero(block(Side::ris, Side::ris), tol, scale) &&
         near_zero(block(Side::receiver, Side::receiver), tol, scale);
}

PartitionedScattering PartitionedScattering::from_channels(const CMatrix& h_rt,
                                                           const CMatrix& h_ri,
                                                           const CMatrix& h_it) {
  const auto n_r = h_rt.rows(), n_t = h_rt.cols(), n_i = h_it.rows();
  require(h_ri.rows() == n_r && h_ri.cols() == n_i && h_it.cols() == n_t,
          ErrorCode::dimension_mismatch, "channel blocks are not conformable");
  const auto n = n_t + n_i + n_r;
  CMatrix s = CMatrix::Zero(n, n);
  s.block(n_t, 0, n_i, n_t) = h_it;
  s.block(n_t + n_i, 0, n_r, n_t) = h_rt;
  s.block(n_t + n_i, n_t, n_r, n_i) = h_ri;
  return PartitionedScattering(std::move(s), static_cast<int>(n_t), static_cast<int>(n_i),
                               static_cast<int>(n_r));
}

// ------------------------------------------------------------------ operations

CMatrix assemble_theta(const ImpedanceNetworkSpec& spec, double tol) {
  const auto n = spec.amp.size();
  require_square(spec.phi_ia, n, "phi_IA");
  require_square(spec.phi_ai, n, "phi_AI");
  require_square(spec.phi_ii, n, "phi_II");
  require_square(spec.phi_aa, n, "phi_AA");
  require(spec.is_matched(tol), ErrorCode::constraint_violation,
          "network ports are not matched/isolated (phi_II, phi_AA != 0)");
  require(spec.is_lossless(tol), ErrorCode::constraint_violation,
          "network is not lossless (phi^H phi != I)");
  return spec.phi_ia * spec.amp.cast<Complex>().asDiagonal() * spec.phi_ai;
}

ActiveReflection general_active_reflection(const ImpedanceNetworkSpec& spec,
                                           double condition_cap) {
  const auto n = spec.amp.size();
  require_square(spec.phi_ia, n, "phi_IA");
  require_square(spec.phi_ai, n, "phi_AI");
  require_square(spec.phi_ii, n, "phi_II");
  require_square(spec.phi_aa, n, "phi_AA");

  const CMatrix amp = spec.amp.cast<Complex>().asDiagonal();
  const CMatrix loop = CMatrix::Identity(n, n) - spec.phi_aa * amp;
  const CMatrix loop_inv =
      guarded_inverse(loop, condition_cap, ErrorCode::unstable_amplifier_loop,
                      "unstable amplifier loop: (I - phi_AA A)");
  ActiveReflection out;
  out.pi_i = spec.phi_ia * amp * loop_inv;
  out.gamma_i = spec.phi_ii + out.pi_i * spec.phi_ai;
  return out;
}

ThetaReport validate_theta(const CMatrix& theta, const Architecture& arch, double tol) {
  ThetaReport report;
  const int n = arch.elements();
  if (theta.rows() != n || theta.cols() != n) {
    report.ok = false;
    report.reason = "theta is " + std::to_string(theta.rows()) + "x" +
                    std::to_string(theta.cols()) + ", architecture needs " +
                    std::to_string(n) + "x" + std::to_string(n);
    return report;
  }

  const int ng = arch.group_size();
  double worst_off = 0.0;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) {
      if (r / ng == c / ng) continue;
      const double mag = std::abs(theta(r, c));
      if (mag > worst_off) {
        worst_off = mag;
        report.row = r;
        report.col = c;
      }
    }
  }
  if (worst_off > 0.0) {
    report.ok = false;
    report.violation = worst_off;
    report.reason = "non-zero off-block entry (" + std::to_string(report.row + 1) + "," +
                    std::to_string(report.col + 1) + ")";
    return report;
  }

  if (arch.reciprocal()) {
    const double limit = tol * std::max(theta.norm(), 1e-300);
    double worst = 0.0;
    int wr = -1, wc = -1;
    for (int g = 0; g < arch.group_count(); ++g) {
      const int off = arch.offset(g);
      for (int c = 0; c < ng; ++c) {
        for (int r = c + 1; r < ng; ++r) {
          const double d = std::abs(theta(off + r, off + c) - theta(off + c, off + r));
          if (d > worst) {
            worst = d;
            wr = off + c;
            wc = off + r;
          }
        }
      }
    }
    if (worst > limit) {
      report.ok = false;
      report.row = wr;
      report.col = wc;
      report.violation = worst;
      report.reason = "asymmetric block entry (" + std::to_string(wr + 1) + "," +
                      std::to_string(wc + 1) + ") vs (" + std::to_string(wc + 1) + "," +
                      std::to_string(wr + 1) + ")";
    }
  }
  return report;
}

// Takagi factorization through the real symmetric embedding
//   M = [[Re A, Im A], [Im A, -Re A]],
// whose eigenpairs (σ, [u; v]) with σ ≥ 0 give A conj(q) = σ q for q = u + jv.
TakagiFactors takagi(const CMatrix& sym, double tol) {
  require(sym.rows() == sym.cols(), ErrorCode::dimension_mismatch, "takagi needs a square matrix");
  const auto n = sym.rows();
  require(symmetry_error(sym) <= tol, ErrorCode::non_symmetric,
          "takagi input is not complex symmetric");

  RMatrix m(2 * n, 2 * n);
  m << sym.real(), sym.imag(), sym.imag(), -sym.real();
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(m);
  require(eig.info() == Eigen::Success, ErrorCode::non_convergence,
          "eigen-decomposition of the real embedding failed");

  // Eigenvalues are ascending; the top n are the singular values.
  TakagiFactors out;
  out.q.resize(n, n);
  out.sigma.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index idx = 2 * n - 1 - k;
    out.sigma(k) = std::max(eig.eigenvalues()(idx), 0.0);
    const auto vec = eig.eigenvectors().col(idx);
    for (Eigen::Index i = 0; i < n; ++i) out.q(i, k) = Complex(vec(i), vec(n + i));
  }

  // Columns for tiny or zero singular values may pair up with their own
  // rotations (σ ≈ -σ); re-orthonormalize in descending order and complete the
  // basis where a column collapses.
  for (Eigen::Index k = 0; k < n; ++k) {
    CVector col = out.q.col(k);
    for (Eigen::Index j = 0; j < k; ++j) col -= out.q.col(j).dot(col) * out.q.col(j);
    double nrm = col.norm();
    if (nrm < 0.5) {
      for (Eigen::Index e = 0; e < n && nrm < 0.5; ++e) {
        col = CVector::Unit(n, e);
        for (Eigen::Index j = 0; j < k; ++j) col -= out.q.col(j).dot(col) * out.q.col(j);
        nrm = col.norm();
      }
    }
    out.q.col(k) = col / nrm;
  }
  return out;
}

GeneralChannel general_channel(const PartitionedScattering& s, const CMatrix& gamma_t,
                               const CMatrix& gamma_r, const CMatrix& gamma_i,
                               const CMatrix& pi_i, double condition_cap) {
  const int n_t = s.size(Side::transmitter);
  const int n_i = s.size(Side::ris);
  const int n_r = s.size(Side::receiver);
  require_square(gamma_t, n_t, "Gamma_T");
  require_square(gamma_r, n_r, "Gamma_R");
  require_square(gamma_i, n_i, "Gamma_I");
  require_square(pi_i, n_i, "Pi_I");

  const int n = n_t + n_i + n_r;
  CMatrix gamma = CMatrix::Zero(n, n);
  gamma.block(0, 0, n_t, n_t) = gamma_t;
  gamma.block(n_t, n_t, n_i, n_i) = gamma_i;
  gamma.block(n_t + n_i, n_t + n_i, n_r, n_r) = gamma_r;

  const CMatrix system = CMatrix::Identity(n, n) - s.matrix() * gamma;
  const CMatrix t = guarded_inverse(system, condition_cap, ErrorCode::resonant_network,
                                    "resonant/unstable network: (I - S Gamma)") *
                    s.matrix();

  const int ot = s.offset(Side::transmitter);
  const int oi = s.offset(Side::ris);
  const int orr = s.offset(Side::receiver);
  const CMatrix t_tt = t.block(ot, ot, n_t, n_t);
  const CMatrix t_rt = t.block(orr, ot, n_r, n_t);
  const CMatrix t_ri = t.block(orr, oi, n_r, n_i);
  const CMatrix t_rr = t.block(orr, orr, n_r, n_r);

  const CMatrix eye_t = CMatrix::Identity(n_t, n_t);
  const CMatrix eye_r = CMatrix::Identity(n_r, n_r);
  const CMatrix tx_map = eye_t + t_tt + gamma_t * t_tt;
  const CMatrix tx_inv = guarded_inverse(tx_map, condition_cap, ErrorCode::resonant_network,
                                         "resonant/unstable network: (I + T_TT + Gamma_T T_TT)");

  GeneralChannel out;
  const CMatrix rx_port = eye_r + gamma_r;
  out.h = rx_port * t_rt * tx_inv;
  CMatrix ris_src(n_i, 2 * n_i);
  ris_src << gamma_i, pi_i;
  out.ris_noise_map = rx_port * t_ri * ris_src;
  out.receiver_noise = rx_port * (eye_r + t_rr * gamma_r);
  return out;
}

CMatrix simplified_channel(const CMatrix& h_rt, const CMatrix& h_ri, const CMatrix& h_it,
                           const CMatrix& theta) {
  require(h_ri.rows() == h_rt.rows() && h_it.cols() == h_rt.cols() &&
              theta.rows() == h_ri.cols() && theta.cols() == h_it.rows(),
          ErrorCode::dimension_mismatch, "channel matrices are not conformable");
  return h_rt + h_ri * theta * h_it;
}

CMatrix passive_reduction(const CMatrix& phi_ia, const RVector& psi, double tol) {
  require_square(phi_ia, psi.size(), "phi_IA");
  require(unitarity_error(phi_ia) <= tol * std::sqrt(static_cast<double>(psi.size())),
          ErrorCode::non_unitary, "phi_IA is not unitary");
  const CVector loads = (kJ * psi.cast<Complex>()).array().exp();
  return phi_ia * loads.asDiagonal() * phi_ia.transpose();
}

}  // namespace bdris::netcore
