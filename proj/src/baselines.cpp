#include "bdris/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bdris::baselines {

namespace {

double inner(const CMatrix& a, const CMatrix& b) { return (a.adjoint() * b).trace().real(); }

int group_count(const CMatrix& q, int n) {
  require(n >= 1 && q.rows() == q.cols() && q.rows() % n == 0, ErrorCode::dimension_mismatch,
          "matrix is not a stack of square blocks of the given size");
  return static_cast<int>(q.rows()) / n;
}

mimo::NoiseModel passive_noise(const MimoProblem& p) { return {p.noise.sigma_r_sq, 0.0}; }

}  // namespace

CMatrix project_tangent(const CMatrix& q, const CMatrix& g, int n) {
  const int groups = group_count(q, n);
  CMatrix out = CMatrix::Zero(q.rows(), q.cols());
  for (int b = 0; b < groups; ++b) {
    const auto qb = q.block(b * n, b * n, n, n);
    const CMatrix x = qb.adjoint() * g.block(b * n, b * n, n, n);
    out.block(b * n, b * n, n, n) = qb * (0.5 * (x - x.adjoint()));
  }
  return out;
}

CMatrix retract(const CMatrix& q, const CMatrix& xi, int n) {
  const int groups = group_count(q, n);
  CMatrix out = CMatrix::Zero(q.rows(), q.cols());
  for (int b = 0; b < groups; ++b) {
    const CMatrix y = q.block(b * n, b * n, n, n) + xi.block(b * n, b * n, n, n);
    Eigen::HouseholderQR<CMatrix> qr(y);
    CMatrix qq = qr.householderQ() * CMatrix::Identity(n, n);
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i) {
      const double mag = std::abs(r(i, i));
      if (mag > 0.0) qq.col(i) *= r(i, i) / mag;
    }
    out.block(b * n, b * n, n, n) = qq;
  }
  return out;
}

double block_unitarity_error(const CMatrix& q, int n) {
  const int groups = group_count(q, n);
  double worst = 0.0;
  for (int b = 0; b < groups; ++b) {
    worst = std::max(worst, unitarity_error(q.block(b * n, b * n, n, n)));
  }
  return worst;
}

CgStep riemannian_cg_step(const Objective& f, const Gradient& grad, const CMatrix& q, int n,
                          CgMemory& memory) {
  CgStep out;
  out.q = q;
  out.value = f(q);
  const CMatrix g = project_tangent(q, grad(q), n);
  out.grad_norm = g.norm();
  if (out.grad_norm == 0.0) {
    memory.valid = false;
    return out;
  }

  CMatrix d = -g;
  if (memory.valid) {
    // Transport by re-projection onto the tangent space at q.
    const CMatrix g_old = project_tangent(q, memory.grad, n);
    const CMatrix d_old = project_tangent(q, memory.dir, n);
    const double beta =
        std::max(0.0, inner(g, g - g_old) / std::max(memory.grad.squaredNorm(), 1e-300));
    d = -g + beta * d_old;
    if (inner(g, d) >= 0.0) d = -g;  // restart on non-descent
  }
  const double slope = inner(g, d);

  double t = memory.valid && memory.step > 0.0 ? 2.0 * memory.step : 1.0 / d.norm();
  t = std::min(t, std::numbers::pi / d.norm());
  for (int bt = 0; bt < 50; ++bt, t *= 0.5) {
    const CMatrix cand = retract(q, t * d, n);
    const double val = f(cand);
    if (val <= out.value + 1e-4 * t * slope) {
      out.q = cand;
      out.value = val;
      memory.grad = g;
      memory.dir = d;
      memory.step = t;
      memory.valid = true;
      return out;
    }
  }
  out.stalled = true;
  memory.valid = false;
  return out;
}

CgResult riemannian_cg(const Objective& f, const Gradient& grad, const CMatrix& q0, int n,
                       const CgOptions& options) {
  CgResult res;
  res.q = q0;
  res.value = f(q0);
  CgMemory memory;
  bool retried = false;
  for (int k = 0; k < options.max_steps; ++k) {
    const CgStep step = riemannian_cg_step(f, grad, res.q, n, memory);
    if (step.grad_norm < options.grad_tol) {
      res.converged = true;
      break;
    }
    if (step.stalled) {
      // One steepest-descent retry from a fresh memory, then give up.
      if (retried) break;
      retried = true;
      continue;
    }
    retried = false;
    res.q = step.q;
    res.value = step.value;
    ++res.steps;
  }
  return res;
}

namespace {

// Θ-dependent part of Tr(U E) for a passive RIS:
// Tr(Θ^H A Θ K) − 2 Re Tr(Θ^H C).
struct PassiveThetaModel {
  CMatrix a;
  CMatrix k;
  CMatrix c;

  PassiveThetaModel(const MimoProblem& p, const CMatrix& w, const CMatrix& u, const CMatrix& f) {
    const CMatrix itf = p.h_it * f;
    a = p.h_ri.adjoint() * w * u * w.adjoint() * p.h_ri;
    a = 0.5 * (a + a.adjoint());
    k = itf * itf.adjoint();
    const CMatrix eye = CMatrix::Identity(w.cols(), w.cols());
    c = p.h_ri.adjoint() * w * u * (eye - w.adjoint() * p.h_rt * f) * itf.adjoint();
  }

  double value(const CMatrix& theta) const {
    return (theta.adjoint() * a * theta * k).trace().real() -
           2.0 * (theta.adjoint() * c).trace().real();
  }
  CMatrix gradient(const CMatrix& theta) const { return 2.0 * (a * theta * k - c); }
};

MimoState run_passive(const MimoProblem& p, const PassiveOptions& options) {
  const int n = p.arch.group_size();
  const bool sym = p.arch.reciprocal() && n > 1;
  const mimo::NoiseModel noise = passive_noise(p);
  const CMatrix r = noise.sigma_r_sq * CMatrix::Identity(p.n_r(), p.n_r());

  MimoState s;
  CMatrix q = CMatrix::Identity(p.n_i(), p.n_i());
  auto theta_of = [&](const CMatrix& qq) -> CMatrix { return sym ? CMatrix(qq * qq.transpose()) : qq; };
  s.theta = theta_of(q);
  {
    // Same starting precoder as the active algorithm.
    mimo::MimoProblem tmp = p;
    tmp.p_a = 0.0;
    s.f = mimo::initialize(tmp).f;
  }
  mimo::PrecoderQcqp pq;
  pq.budget_t = p.p_t;

  auto rate = [&](const CMatrix& theta, const CMatrix& f) {
    return mimo::spectral_efficiency(p.channel(theta), f, r);
  };
  s.rate_trace.push_back(rate(s.theta, s.f));

  for (int it = 0; it < options.outer.max_iters; ++it) {
    const CMatrix h = p.channel(s.theta);
    s.w = mimo::update_w(h, s.f, r);
    s.u = mimo::update_u(s.f, h, r);

    const PassiveThetaModel model(p, s.w, s.u, s.f);
    Objective obj;
    Gradient grad;
    if (sym) {
      obj = [&](const CMatrix& qq) { return model.value(qq * qq.transpose()); };
      grad = [&](const CMatrix& qq) {
        const CMatrix g = model.gradient(qq * qq.transpose());
        return CMatrix((g + g.transpose()) * qq.conjugate());
      };
    } else {
      obj = [&](const CMatrix& qq) { return model.value(qq); };
      grad = [&](const CMatrix& qq) { return model.gradient(qq); };
    }
    const CgResult cg = riemannian_cg(obj, grad, q, n, options.cg);
    if (cg.value <= obj(q)) q = cg.q;
    s.theta = theta_of(q);

    const CMatrix h2 = p.channel(s.theta);
    const CMatrix hw = h2.adjoint() * s.w;
    pq.q = 0.5 * (hw * s.u * hw.adjoint() + (hw * s.u * hw.adjoint()).adjoint());
    pq.g = hw * s.u;
    const CMatrix cand = mimo::solve_precoder(pq).f;
    if (mimo::precoder_objective(pq, cand) <= mimo::precoder_objective(pq, s.f)) s.f = cand;

    const double now = rate(s.theta, s.f);
    const double prev = s.rate_trace.back();
    s.rate_trace.push_back(now);
    s.iterations = it + 1;
    if (std::abs(now - prev) <= options.outer.tol * std::max(std::abs(prev), 1e-12)) {
      s.converged = true;
      break;
    }
  }
  const CMatrix h = p.channel(s.theta);
  s.w = mimo::update_w(h, s.f, r);
  s.u = mimo::update_u(s.f, h, r);
  return s;
}

}  // namespace

MimoState passive_bdris_mimo(const MimoProblem& p, const PassiveOptions& options) {
  return run_passive(p, options);
}

MimoState passive_drs_mimo(const MimoProblem& p, const PassiveOptions& options) {
  MimoProblem d = p;
  d.arch = netcore::Architecture::single_connected(p.n_i());
  return run_passive(d, options);
}

MimoState active_drs_mimo(const MimoProblem& p, const mimo::WmmseOptions& options) {
  MimoProblem d = p;
  d.arch = netcore::Architecture::single_connected(p.n_i());
  return mimo::wmmse_optimize(d, options);
}

double passive_rate(const MimoProblem& p, const CMatrix& theta, const CMatrix& f) {
  const CMatrix r = p.noise.sigma_r_sq * CMatrix::Identity(p.n_r(), p.n_r());
  return mimo::spectral_efficiency(p.channel(theta), f, r);
}

}  // namespace bdris::baselines
