#pragma once

#include "bdris/channel.hpp"
#include "bdris/common.hpp"
#include "bdris/netcore.hpp"

#include <vector>

namespace bdris::mimo {

using netcore::Architecture;
using netcore::NoiseModel;

/// Spectral-efficiency maximization instance for an active BD-RIS link.
struct MimoProblem {
  CMatrix h_rt;  // N_R x N_T
  CMatrix h_ri;  // N_R x N_I
  CMatrix h_it;  // N_I x N_T
  Architecture arch;
  int streams;
  double p_t;  // transmit power budget [W]
  double p_a;  // RIS radiated power budget [W]
  NoiseModel noise;

  static MimoProblem make(const channel::ChannelRealization& ch, const Architecture& arch,
                          int streams, double p_t, double p_a, const NoiseModel& noise);

  int n_t() const { return static_cast<int>(h_rt.cols()); }
  int n_r() const { return static_cast<int>(h_rt.rows()); }
  int n_i() const { return static_cast<int>(h_it.rows()); }

  CMatrix channel(const CMatrix& theta) const;
};

struct MimoState {
  CMatrix w;      // N_R x N_S combiner
  CMatrix u;      // N_S x N_S weight
  CMatrix theta;  // N_I x N_I
  CMatrix f;      // N_T x N_S precoder
  std::vector<double> rate_trace;  // b/s/Hz, entry 0 is the initialization
  int iterations = 0;
  bool converged = false;
};

struct WmmseOptions {
  double tol = 1e-5;  // relative rate improvement per outer iteration
  int max_iters = 200;
};

/// log2 det(I + R^{-1} H F F^H H^H)
double spectral_efficiency(const CMatrix& h, const CMatrix& f, const CMatrix& noise_cov);

/// σ_I^2 H_RI Θ Θ^H H_RI^H + σ_R^2 I
CMatrix noise_covariance(const CMatrix& h_ri, const CMatrix& theta, const NoiseModel& noise);

/// MMSE combiner (H F F^H H^H + R)^{-1} H F.
CMatrix update_w(const CMatrix& h, const CMatrix& f, const CMatrix& noise_cov);

/// Optimal MSE weight I + F^H H^H R^{-1} H F.
CMatrix update_u(const CMatrix& f, const CMatrix& h, const CMatrix& noise_cov);

/// E = W^H H F F^H H^H W − 2 Re{W^H H F} + W^H R W + I.
CMatrix mse_matrix(const CMatrix& h, const CMatrix& f, const CMatrix& w, const CMatrix& noise_cov);

/// Tr(U E) at the given point; the quantity every block update decreases.
double weighted_mse(const MimoProblem& p, const CMatrix& w, const CMatrix& u,
                    const CMatrix& theta, const CMatrix& f);

/// ||Θ H_IT F||_F^2 + σ_I^2 ||Θ||_F^2
double radiated_power(const CMatrix& theta, const CMatrix& h_it, const CMatrix& f,
                      double sigma_i_sq);

/// Binary map P with vec(Θ_g) = P θ̄_g for symmetric Θ_g; θ̄_g holds the
/// N_G(N_G+1)/2 distinct entries.
class SymmetricMap {
 public:
  explicit SymmetricMap(int group_size);

  int group_size() const noexcept { return n_; }
  int full_dim() const noexcept { return n_ * n_; }
  int reduced_dim() const noexcept { return n_ * (n_ + 1) / 2; }
  const RMatrix& matrix() const noexcept { return p_; }

  // Reduced index (0-based) of entry (row, col) of the symmetric block.
  int reduced_index(int row, int col) const noexcept;

 private:
  int n_;
  RMatrix p_;
};

/// min x^H B x − 2 Re{x^H c}  s.t.  x^H D x ≤ budget
struct QcqpCanonical {
  CMatrix b;
  CVector c;
  CMatrix d;
  double budget = 0.0;
};

struct QcqpSolution {
  CVector x;
  double mu = 0.0;
  double constraint = 0.0;  // x^H D x
};

double qcqp_objective(const QcqpCanonical& q, const CVector& x);

/// Θ-subproblem over the stacked vec(Θ_g) (non-reciprocal layout).
QcqpCanonical build_theta_qcqp(const MimoProblem& p, const CMatrix& w, const CMatrix& u,
                               const CMatrix& f);

/// Θ-subproblem over the stacked θ̄_g (reciprocal layout), B̄ = P^T B P etc.
QcqpCanonical build_theta_qcqp_reciprocal(const MimoProblem& p, const CMatrix& w,
                                          const CMatrix& u, const CMatrix& f);

/// x(μ) = (B + μ D)^{-1} c with the smallest μ ≥ 0 meeting the budget.
QcqpSolution solve_qcqp_ball(const QcqpCanonical& q);

/// Stacked vector <-> block-diagonal Θ for either layout.
CMatrix theta_from_vector(const Architecture& arch, const CVector& x);
CVector vector_from_theta(const Architecture& arch, const CMatrix& theta);

/// Fully-connected non-reciprocal Θ-subproblem solved in matrix form
/// (A + μI) Θ (K + σ_I^2 I) = C, avoiding the N_I^2-dimensional system.
struct FullThetaSolution {
  CMatrix theta;
  double mu = 0.0;
};
FullThetaSolution solve_theta_fully_connected(const MimoProblem& p, const CMatrix& w,
                                              const CMatrix& u, const CMatrix& f);

CMatrix update_theta(const MimoProblem& p, const MimoState& state);

/// min Tr(F^H Q F) − 2 Re Tr(F^H G)  s.t.  Tr(F^H M F) ≤ budget_m,  ||F||^2 ≤ budget_t
struct PrecoderQcqp {
  CMatrix q;
  CMatrix g;
  CMatrix m;  // empty: no coupling constraint
  double budget_m = 0.0;
  double budget_t = 0.0;
};

struct PrecoderSolution {
  CMatrix f;
  double mu_m = 0.0;
  double mu_t = 0.0;
};

double precoder_objective(const PrecoderQcqp& q, const CMatrix& f);
CMatrix precoder_at(const PrecoderQcqp& q, double mu_m, double mu_t);
PrecoderSolution solve_precoder(const PrecoderQcqp& q);

PrecoderQcqp build_precoder_qcqp(const MimoProblem& p, const MimoState& state);
CMatrix update_f(const MimoProblem& p, const MimoState& state);

/// Feasible deterministic starting point.
MimoState initialize(const MimoProblem& p);

MimoState wmmse_optimize(const MimoProblem& p, const WmmseOptions& options = {});

/// Direct-link-only capacity log2 det(I + H Q H^H / σ^2) with water-filled Q.
double waterfilling_rate(const CMatrix& h, double power, double sigma_sq);

}  // namespace bdris::mimo
