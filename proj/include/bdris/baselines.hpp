#pragma once

#include "bdris/common.hpp"
#include "bdris/mimo.hpp"

#include <functional>

namespace bdris::baselines {

using mimo::MimoProblem;
using mimo::MimoState;

// Real-valued objective of a block-diagonal Q and its Euclidean gradient G,
// normalized so that df = Re Tr(G^H dQ).
using Objective = std::function<double(const CMatrix&)>;
using Gradient = std::function<CMatrix(const CMatrix&)>;

/// Q ↦ Q skew(Q^H G) applied block by block; off-block entries of G are ignored.
CMatrix project_tangent(const CMatrix& q, const CMatrix& g, int group_size);

/// QR retraction of Q + ξ per block, with the R diagonal made positive.
CMatrix retract(const CMatrix& q, const CMatrix& xi, int group_size);

// ||Q_g^H Q_g − I||_F, worst block
double block_unitarity_error(const CMatrix& q, int group_size);

struct CgMemory {
  CMatrix grad;  // Riemannian gradient at the previous point
  CMatrix dir;   // previous search direction
  double step = 0.0;
  bool valid = false;
};

struct CgStep {
  CMatrix q;
  double value = 0.0;
  double grad_norm = 0.0;
  bool stalled = false;
};

/// One Polak–Ribière+ step with Armijo backtracking (at most 50 halvings).
CgStep riemannian_cg_step(const Objective& f, const Gradient& grad, const CMatrix& q,
                          int group_size, CgMemory& memory);

struct CgOptions {
  int max_steps = 100;
  double grad_tol = 1e-6;
};

struct CgResult {
  CMatrix q;
  double value = 0.0;
  int steps = 0;  // accepted moves
  bool converged = false;
};

CgResult riemannian_cg(const Objective& f, const Gradient& grad, const CMatrix& q0,
                       int group_size, const CgOptions& options = {});

struct PassiveOptions {
  mimo::WmmseOptions outer;
  CgOptions cg;
};

/// Passive BD-RIS: Θ block-unitary (Θ = Q) or, when reciprocal, Θ = Q Q^T per
/// block. Uses p.p_t as the passive transmit power; P_A and σ_I^2 are ignored.
MimoState passive_bdris_mimo(const MimoProblem& p, const PassiveOptions& options = {});

/// Passive D-RIS, Θ = diag(e^{jθ_n}); p.arch is replaced by single-connected.
MimoState passive_drs_mimo(const MimoProblem& p, const PassiveOptions& options = {});

/// Active D-RIS: the active algorithm on a single-connected architecture.
MimoState active_drs_mimo(const MimoProblem& p, const mimo::WmmseOptions& options = {});

/// Rate of a passive state (noise covariance σ_R^2 I).
double passive_rate(const MimoProblem& p, const CMatrix& theta, const CMatrix& f);

}  // namespace bdris::baselines
