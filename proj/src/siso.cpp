#include "bdris/siso.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bdris::siso {

namespace {

void check_dims(const CMatrix& theta, const SisoChannel& ch) {
  const auto n = ch.h_it.size();
  require(ch.h_ri.size() == n && theta.rows() == n && theta.cols() == n,
          ErrorCode::dimension_mismatch, "SISO channel and theta are not conformable");
}

void check_group_layout(const SisoChannel& ch, const Architecture& arch) {
  require(ch.h_ri.size() == ch.h_it.size() && arch.elements() == ch.elements(),
          ErrorCode::dimension_mismatch, "architecture size does not match the channel");
}

// Extends orthonormal columns to a unitary matrix. Each new column is the
// canonical basis vector with the largest residual after projection (lowest
// index on ties).
CMatrix complete_basis(const CMatrix& given) {
  const auto n = given.rows();
  CMatrix out(n, n);
  out.leftCols(given.cols()) = given;
  // covered(e) = ||P e_e||^2 for the projector onto the columns so far, so the
  // residual norm of e_e is sqrt(1 - covered(e)) without forming it.
  RVector covered = given.rowwise().squaredNorm();
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = given.cols(); k < n; ++k) {
    double best_norm = -1.0;
    Eigen::Index best_e = -1;
    for (Eigen::Index e = 0; e < n; ++e) {
      if (used[static_cast<std::size_t>(e)]) continue;
      const double nrm = std::sqrt(std::max(1.0 - covered(e), 0.0));
      if (nrm > best_norm + 1e-12) {
        best_norm = nrm;
        best_e = e;
      }
    }
    used[static_cast<std::size_t>(best_e)] = true;
    CVector cand = CVector::Unit(n, best_e);
    for (int pass = 0; pass < 2; ++pass) {
      cand -= out.leftCols(k) * (out.leftCols(k).adjoint() * cand);
    }
    out.col(k) = cand.normalized();
    covered += out.col(k).cwiseAbs2();
  }
  return out;
}

double sum_of_group_norm_products(const SisoChannel& ch, int group_size) {
  const int n = ch.elements();
  require(group_size > 0 && n % group_size == 0, ErrorCode::invalid_argument,
          "group size must divide the element count");
  double total = 0.0;
  for (int off = 0; off < n; off += group_size) {
    total += ch.h_ri.segment(off, group_size).norm() * ch.h_it.segment(off, group_size).norm();
  }
  return total;
}

SisoSolution finish(CMatrix unit_theta, const SisoChannel& ch, const PowerBudget& pb,
                    const Architecture& arch) {
  const double amp = amp_factor_equal(pb, ch.h_it, ch.elements());
  CMatrix theta = amp * unit_theta;
  const double gamma = snr(theta, ch, pb);
  return SisoSolution{ThetaMatrix::checked(std::move(theta), arch, 1e-9), amp, gamma};
}

void require_no_direct_link(const SisoChannel& ch) {
  require(ch.h_rt == Complex(0.0, 0.0), ErrorCode::invalid_argument,
          "closed-form SISO solvers require a blocked direct link (h_RT = 0)");
}

struct GroupVectors {
  CVector u;  // h_IT,g / ||h_IT,g||
  CVector v;  // h_RI,g^H / ||h_RI,g||
};

GroupVectors group_vectors(const SisoChannel& ch, int off, int size) {
  const CVector h_it = ch.h_it.segment(off, size);
  const CVector h_ri = ch.h_ri.segment(off, size).adjoint();
  const double n_it = h_it.norm();
  const double n_ri = h_ri.norm();
  require(n_it > 0.0 && n_ri > 0.0, ErrorCode::zero_norm_group,
          "group starting at element " + std::to_string(off) +
              " has a zero channel; alignment is undefined");
  return GroupVectors{h_it / n_it, h_ri / n_ri};
}

}  // namespace

double snr(const CMatrix& theta, const SisoChannel& ch, const PowerBudget& pb) {
  check_dims(theta, ch);
  const Complex gain = ch.h_rt + (ch.h_ri * theta * ch.h_it)(0, 0);
  const double noise = pb.sigma_i_sq * (ch.h_ri * theta).squaredNorm() + pb.sigma_r_sq;
  return pb.p_t * std::norm(gain) / noise;
}

double radiated_power(const CMatrix& theta, const SisoChannel& ch, const PowerBudget& pb) {
  check_dims(theta, ch);
  return pb.p_t * (theta * ch.h_it).squaredNorm() + pb.sigma_i_sq * theta.squaredNorm();
}

double amp_factor_equal(const PowerBudget& pb, const CVector& h_it, int elements) {
  const double denom = pb.p_t * h_it.squaredNorm() + pb.sigma_i_sq * elements;
  require(denom > 0.0, ErrorCode::invalid_argument,
          "amplification undefined: P_T ||h_IT||^2 + sigma_I^2 N_I = 0");
  return std::sqrt(pb.p_a / denom);
}

CMatrix complete_unitary(const CVector& first) {
  const double nrm = first.norm();
  require(nrm > 0.0, ErrorCode::zero_norm_group, "cannot complete a zero vector");
  return complete_basis(first / nrm);
}

CMatrix symmetric_unitary_map(const CVector& u, const CVector& v) {
  require(u.size() == v.size(), ErrorCode::dimension_mismatch, "u and v differ in size");
  const auto n = u.size();
  const Complex inner = (u.transpose() * v)(0, 0);  // u^T v
  const double r = std::min(std::abs(inner), 1.0);
  const Complex half_phase = std::polar(1.0, 0.5 * std::arg(inner));

  // X = Q^H is built to send u* -> z* and v -> z with z^T z = u^T v; then
  // Θ = Q Q^T is symmetric unitary and Θ u = Q z = v.
  CMatrix x;
  if (1.0 - r < 1e-12 || n == 1) {
    CMatrix src(n, 1), dst(n, 1);
    src.col(0) = u.conjugate();
    dst.col(0) = std::conj(half_phase) * CVector::Unit(n, 0);
    x = complete_basis(dst) * complete_basis(src).adjoint();
  } else {
    const double a = std::sqrt(0.5 * (1.0 + r));
    const double b = std::sqrt(0.5 * (1.0 - r));
    const CVector z = half_phase * (a * CVector::Unit(n, 0) + kJ * b * CVector::Unit(n, 1));

    CMatrix src(n, 2), dst(n, 2);
    src.col(0) = u.conjugate();
    src.col(1) = v - inner * src.col(0);
    src.col(1).normalize();
    dst.col(0) = z.conjugate();
    dst.col(1) = z - inner * dst.col(0);
    dst.col(1).normalize();
    x = complete_basis(dst) * complete_basis(src).adjoint();
  }
  const CMatrix q = x.adjoint();
  return q * q.transpose();
}

SisoSolution solve_drs(const SisoChannel& ch, const PowerBudget& pb) {
  require(ch.h_ri.size() == ch.h_it.size(), ErrorCode::dimension_mismatch,
          "h_RI and h_IT differ in length");
  require_no_direct_link(ch);
  const int n = ch.elements();
  CVector phases(n);
  for (int k = 0; k < n; ++k) {
    phases(k) = std::polar(1.0, -std::arg(ch.h_ri(k) * ch.h_it(k)));
  }
  return finish(phases.asDiagonal().toDenseMatrix(), ch, pb, Architecture::single_connected(n));
}

SisoSolution solve_bdris_nonreciprocal(const SisoChannel& ch, const PowerBudget& pb,
                                       const Architecture& arch) {
  check_group_layout(ch, arch);
  require(!arch.reciprocal() || arch.is_single_connected(), ErrorCode::invalid_argument,
          "non-reciprocal solver called with a reciprocal architecture");
  require_no_direct_link(ch);
  const int ng = arch.group_size();
  CMatrix unit = CMatrix::Zero(ch.elements(), ch.elements());
  for (int g = 0; g < arch.group_count(); ++g) {
    const int off = arch.offset(g);
    const GroupVectors gv = group_vectors(ch, off, ng);
    unit.block(off, off, ng, ng) = complete_unitary(gv.v) * complete_unitary(gv.u).adjoint();
  }
  return finish(std::move(unit), ch, pb, arch);
}

SisoSolution solve_bdris_reciprocal(const SisoChannel& ch, const PowerBudget& pb,
                                    const Architecture& arch) {
  check_group_layout(ch, arch);
  require(arch.reciprocal(), ErrorCode::invalid_argument,
          "reciprocal solver called with a non-reciprocal architecture");
  require_no_direct_link(ch);
  const int ng = arch.group_size();
  CMatrix unit = CMatrix::Zero(ch.elements(), ch.elements());
  for (int g = 0; g < arch.group_count(); ++g) {
    const int off = arch.offset(g);
    const GroupVectors gv = group_vectors(ch, off, ng);
    unit.block(off, off, ng, ng) = symmetric_unitary_map(gv.u, gv.v);
  }
  return finish(std::move(unit), ch, pb, arch);
}

SisoSolution solve(const SisoChannel& ch, const PowerBudget& pb, const Architecture& arch) {
  if (arch.is_single_connected()) return solve_drs(ch, pb);
  if (arch.reciprocal()) return solve_bdris_reciprocal(ch, pb, arch);
  return solve_bdris_nonreciprocal(ch, pb, arch);
}

double closed_form_active_snr(const SisoChannel& ch, const PowerBudget& pb, int group_size) {
  const double s = sum_of_group_norm_products(ch, group_size);
  const double denom = pb.sigma_i_sq * pb.p_a * ch.h_ri.squaredNorm() +
                       pb.sigma_r_sq * (pb.p_t * ch.h_it.squaredNorm() +
                                        pb.sigma_i_sq * ch.elements());
  return pb.p_t * pb.p_a * s * s / denom;
}

double closed_form_passive_snr(const SisoChannel& ch, const PowerBudget& pb, int group_size) {
  const double s = sum_of_group_norm_products(ch, group_size);
  return pb.p_t_passive * s * s / pb.sigma_r_sq;
}

// ------------------------------------------------------------------ scaling laws

const char* to_string(ScalingKind kind) {
  switch (kind) {
    case ScalingKind::active_d: return "active-d";
    case ScalingKind::active_bd_group: return "active-bd-group";
    case ScalingKind::active_bd_full: return "active-bd-full";
    case ScalingKind::passive_d: return "passive-d";
    case ScalingKind::passive_bd_group: return "passive-bd-group";
    case ScalingKind::passive_bd_full: return "passive-bd-full";
  }
  return "unknown";
}

ScalingKind scaling_kind_from_string(const std::string& name) {
  for (auto kind : {ScalingKind::active_d, ScalingKind::active_bd_group,
                    ScalingKind::active_bd_full, ScalingKind::passive_d,
                    ScalingKind::passive_bd_group, ScalingKind::passive_bd_full}) {
    if (name == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::invalid_argument, "unknown scaling kind '" + name + "'");
}

double ScalingParams::alpha() const {
  const double denom =
      sigma_i_sq * p_a * zeta_ri_sq + sigma_r_sq * p_t * zeta_it_sq + sigma_r_sq * sigma_i_sq;
  require(denom > 0.0, ErrorCode::invalid_argument, "alpha undefined: zero denominator");
  return p_t * p_a * zeta_ri_sq * zeta_it_sq / denom;
}

double ScalingParams::beta() const {
  require(sigma_r_sq > 0.0, ErrorCode::invalid_argument, "beta undefined: sigma_R^2 = 0");
  return p_t_passive * zeta_ri_sq * zeta_it_sq / sigma_r_sq;
}

double gamma_half_ratio(int n) {
  require(n >= 1, ErrorCode::invalid_argument, "gamma ratio needs n >= 1");
  // Γ(3/2)/Γ(1) = √π/2, then Γ(k+3/2)/Γ(k+1) = Γ(k+1/2)/Γ(k) · (k+1/2)/k.
  double ratio = 0.5 * std::sqrt(std::numbers::pi);
  for (int k = 1; k < n; ++k) ratio *= (k + 0.5) / k;
  return ratio;
}

double group_gain_factor(int group_size) {
  const double r = gamma_half_ratio(group_size);
  const double r2 = r * r;
  return r2 * r2 / (static_cast<double>(group_size) * group_size);
}

double asymptotic_snr(ScalingKind kind, int elements, int group_size, const ScalingParams& params) {
  require(elements > 0, ErrorCode::invalid_argument, "element count must be positive");
  const double n = elements;
  auto group_factor = [&] {
    require(group_size > 0 && elements % group_size == 0, ErrorCode::invalid_argument,
            "group size must divide the element count");
    return group_gain_factor(group_size);
  };
  switch (kind) {
    case ScalingKind::active_d: return params.alpha() * n * group_gain_factor(1);
    case ScalingKind::active_bd_group: return params.alpha() * n * group_factor();
    case ScalingKind::active_bd_full: return params.alpha() * n;
    case ScalingKind::passive_d: return params.beta() * n * n * group_gain_factor(1);
    case ScalingKind::passive_bd_group: return params.beta() * n * n * group_factor();
    case ScalingKind::passive_bd_full: return params.beta() * n * n;
  }
  throw Error(ErrorCode::invalid_argument, "invalid scaling kind");
}

Crossover crossover_elements(const ScalingParams& params) {
  require(params.p_t > 0.0 && params.p_a > 0.0 && params.p_t_passive > 0.0 &&
              params.sigma_i_sq > 0.0 && params.sigma_r_sq > 0.0,
          ErrorCode::invalid_argument, "crossover needs strictly positive powers");
  const double denom = params.sigma_i_sq * params.p_a * params.zeta_ri_sq +
                       params.sigma_r_sq * params.p_t * params.zeta_it_sq +
                       params.sigma_r_sq * params.sigma_i_sq;
  require(denom > 0.0 && std::isfinite(denom), ErrorCode::invalid_argument,
          "crossover denominator is zero or not finite");
  const double n_bar =
      (params.p_t / params.p_t_passive) * params.sigma_r_sq * params.p_a / denom;
  return Crossover{n_bar, 16.0 / (std::numbers::pi * std::numbers::pi) * n_bar};
}

}  // namespace bdris::siso
