#pragma once

#include "bdris/common.hpp"
#include "bdris/netcore.hpp"

namespace bdris::siso {

using netcore::Architecture;
using netcore::ThetaMatrix;

struct SisoChannel {
  Complex h_rt{0.0, 0.0};
  CVector h_it;     // N_I
  CRowVector h_ri;  // 1 x N_I

  int elements() const { return static_cast<int>(h_it.size()); }
};

struct PowerBudget {
  double p_t = 0.0;          // transmit power, active system [W]
  double p_a = 0.0;          // RIS radiated power budget [W]
  double p_t_passive = 0.0;  // transmit power, passive system [W]
  double sigma_i_sq = 0.0;   // RIS dynamic noise [W]
  double sigma_r_sq = 0.0;   // receiver noise [W]
};

struct SisoSolution {
  ThetaMatrix theta;  // includes the amplification factor
  double amp_factor;
  double snr;
};

/// P_T |h_RT + h_RI Θ h_IT|^2 / (σ_I^2 ||h_RI Θ||^2 + σ_R^2)
double snr(const CMatrix& theta, const SisoChannel& ch, const PowerBudget& pb);

/// P_T ||Θ h_IT||^2 + σ_I^2 ||Θ||_F^2
double radiated_power(const CMatrix& theta, const SisoChannel& ch, const PowerBudget& pb);

/// Common amplification that exhausts P_A for a block-unitary Θ̄.
double amp_factor_equal(const PowerBudget& pb, const CVector& h_it, int elements);

SisoSolution solve_drs(const SisoChannel& ch, const PowerBudget& pb);
SisoSolution solve_bdris_nonreciprocal(const SisoChannel& ch, const PowerBudget& pb,
                                       const Architecture& arch);
SisoSolution solve_bdris_reciprocal(const SisoChannel& ch, const PowerBudget& pb,
                                    const Architecture& arch);

// Dispatches on arch (single-connected, reciprocal or not) to the solvers above.
SisoSolution solve(const SisoChannel& ch, const PowerBudget& pb, const Architecture& arch);

/// Maximum SNR of the equal-amplification active RIS in closed form.
double closed_form_active_snr(const SisoChannel& ch, const PowerBudget& pb, int group_size);

/// SNR of a passive RIS using the unit-modulus-scattering optimum for the
/// given group size (no amplifier noise, P_T^passive).
double closed_form_passive_snr(const SisoChannel& ch, const PowerBudget& pb, int group_size);

// Unitary building blocks, exposed for testing.

/// Unitary matrix whose first column is the unit vector `first`; completed by
/// Gram–Schmidt over the canonical basis.
CMatrix complete_unitary(const CVector& first);

/// Symmetric unitary Θ with Θ u = v for unit vectors u, v.
CMatrix symmetric_unitary_map(const CVector& u, const CVector& v);

// ----------------------------------------------------------------- scaling laws

enum class ScalingKind {
  active_d,
  active_bd_group,
  active_bd_full,
  passive_d,
  passive_bd_group,
  passive_bd_full,
};

const char* to_string(ScalingKind kind);
ScalingKind scaling_kind_from_string(const std::string& name);

struct ScalingParams {
  double p_t;
  double p_a;
  double p_t_passive;
  double sigma_i_sq;
  double sigma_r_sq;
  double zeta_ri_sq;
  double zeta_it_sq;

  double alpha() const;
  double beta() const;
};

/// Γ(n+½)/Γ(n) for integer n ≥ 1, built from Γ(n+½) = (2n)! √π / (4^n n!).
double gamma_half_ratio(int n);

/// Γ^4(N_G+½) / (N_G^2 Γ^4(N_G)); π²/16 at N_G = 1, tends to 1 as N_G grows.
double group_gain_factor(int group_size);

double asymptotic_snr(ScalingKind kind, int elements, int group_size, const ScalingParams& params);

struct Crossover {
  double n_bar;    // active D-RIS vs passive D-RIS
  double n_tilde;  // fully-connected active BD-RIS vs passive D-RIS
};

Crossover crossover_elements(const ScalingParams& params);

}  // namespace bdris::siso
