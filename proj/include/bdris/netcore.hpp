#pragma once

#include "bdris/common.hpp"

#include <string>

namespace bdris::netcore {

/// Circuit topology of the reconfigurable impedance network: G groups of N_G
/// fully interconnected elements, optionally reciprocal.
///
/// Single-connected (the classic diagonal RIS) is N_G = 1; fully-connected is
/// G = 1. Reciprocal networks force every Θ block to be complex symmetric.
class Architecture {
 public:
  Architecture(int group_count, int group_size, bool reciprocal);

  static Architecture single_connected(int elements, bool reciprocal = true);
  static Architecture fully_connected(int elements, bool reciprocal = true);
  static Architecture group_connected(int elements, int group_size, bool reciprocal = true);

  int group_count() const noexcept { return group_count_; }
  int group_size() const noexcept { return group_size_; }
  int elements() const noexcept { return group_count_ * group_size_; }
  bool reciprocal() const noexcept { return reciprocal_; }
  bool is_single_connected() const noexcept { return group_size_ == 1; }
  bool is_fully_connected() const noexcept { return group_count_ == 1; }

  // Offset of group g inside the element index range.
  int offset(int g) const noexcept { return g * group_size_; }

  // e.g. "full-nr", "group4-r", "single"
  std::string label() const;

  bool operator==(const Architecture&) const = default;

 private:
  int group_count_;
  int group_size_;
  bool reciprocal_;
};

/// Θ together with the architecture whose feasible set it must lie in.
struct ThetaMatrix {
  CMatrix value;
  Architecture arch;

  // Throws constraint_violation when `value` is outside the feasible set.
  static ThetaMatrix checked(CMatrix value, const Architecture& arch, double tol = kDefaultTol);
};

/// Partitioned scattering matrix Φ of the 2N_I-port passive network plus the
/// amplifier gains A = diag(amp).
struct ImpedanceNetworkSpec {
  CMatrix phi_ii;
  CMatrix phi_ia;
  CMatrix phi_ai;
  CMatrix phi_aa;
  RVector amp;

  // Matched/isolated network (Φ_II = Φ_AA = 0) with independent Φ_IA, Φ_AI.
  static ImpedanceNetworkSpec matched(CMatrix phi_ia, CMatrix phi_ai, RVector amp);
  // Matched/isolated reciprocal network; Φ_AI is aliased to Φ_IA^T.
  static ImpedanceNetworkSpec reciprocal(CMatrix phi_ia, RVector amp);

  int ports() const noexcept { return static_cast<int>(amp.size()); }

  CMatrix full_phi() const;
  bool is_lossless(double tol = kDefaultTol) const;
  bool is_matched(double tol = kDefaultTol) const;
  bool is_reciprocal(double tol = kDefaultTol) const;
};

struct NoiseModel {
  double sigma_r_sq;  // receiver noise power [W]
  double sigma_i_sq;  // RIS dynamic noise power [W]

  static NoiseModel checked(double sigma_r_sq, double sigma_i_sq);
};

enum class Side { transmitter = 0, ris = 1, receiver = 2 };

/// N-port scattering matrix of the whole system partitioned into transmitter,
/// RIS and receiver ports.
class PartitionedScattering {
 public:
  PartitionedScattering(CMatrix s, int n_t, int n_i, int n_r);

  const CMatrix& matrix() const noexcept { return s_; }
  int size(Side side) const noexcept;
  int offset(Side side) const noexcept;
  CMatrix block(Side row, Side col) const;

  // S_TR = S_IR = S_TI = 0
  bool is_unilateral(double tol = kDefaultTol) const;
  // S_TT = S_II = S_RR = 0
  bool is_matched(double tol = kDefaultTol) const;

  // Assemble S from the three transmission blocks of the simplified model.
  static PartitionedScattering from_channels(const CMatrix& h_rt, const CMatrix& h_ri,
                                             const CMatrix& h_it);

 private:
  CMatrix s_;
  int n_[3];
};

/// Θ = Φ_IA diag(amp) Φ_AI. Requires a matched/isolated lossless spec.
CMatrix assemble_theta(const ImpedanceNetworkSpec& spec, double tol = kDefaultTol);

struct ActiveReflection {
  CMatrix gamma_i;  // scattering matrix of the N_I-port active network
  CMatrix pi_i;     // amplifier-noise transfer
};

/// Γ_I = Φ_II + Φ_IA A (I − Φ_AA A)^{-1} Φ_AI and Π_I = Φ_IA A (I − Φ_AA A)^{-1}.
ActiveReflection general_active_reflection(const ImpedanceNetworkSpec& spec,
                                           double condition_cap = 1e12);

struct ThetaReport {
  bool ok = true;
  std::string reason;
  int row = -1;  // worst violating entry (0-based), -1 when ok
  int col = -1;
  double violation = 0.0;
};

/// Block-diagonal structure must hold exactly; symmetry of each block within
/// `tol` relative to ||Θ||_F when the architecture is reciprocal.
ThetaReport validate_theta(const CMatrix& theta, const Architecture& arch,
                           double tol = kDefaultTol);

struct TakagiFactors {
  CMatrix q;      // unitary
  RVector sigma;  // non-negative, descending
};

/// sym = Q diag(sigma) Q^T for complex symmetric `sym`.
TakagiFactors takagi(const CMatrix& sym, double tol = kDefaultTol);

struct GeneralChannel {
  CMatrix h;               // N_R x N_T
  CMatrix ris_noise_map;   // N_R x 2N_I, applied to [n_in; n_A]
  CMatrix receiver_noise;  // N_R x N_R, applied to n_R
};

/// End-to-end channel of the general (mismatched, coupled) model.
GeneralChannel general_channel(const PartitionedScattering& s, const CMatrix& gamma_t,
                               const CMatrix& gamma_r, const CMatrix& gamma_i,
                               const CMatrix& pi_i, double condition_cap = 1e12);

/// H = H_RT + H_RI Θ H_IT.
CMatrix simplified_channel(const CMatrix& h_rt, const CMatrix& h_ri, const CMatrix& h_it,
                           const CMatrix& theta);

/// Amplifiers replaced by reactive loads e^{jψ}: Θ = Φ_IA diag(e^{jψ}) Φ_IA^T.
CMatrix passive_reduction(const CMatrix& phi_ia, const RVector& psi, double tol = kDefaultTol);

}  // namespace bdris::netcore
