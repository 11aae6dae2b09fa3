#include "bdris/mimo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bdris::mimo {

namespace {

constexpr int kMaxDenseDim = 4096;

double trace_re(const CMatrix& m) { return m.trace().real(); }

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

// Smallest mu >= 0 with sum_i w_i / (lambda_i + mu)^2 <= budget.
//
// lambda is clamped to >= 0. Components on the (numerical) null space whose
// weight is round-off are dropped by zeroing w_i; a null component carrying real
// weight makes mu = 0 infeasible. The returned mu always sits on the feasible
// side of the bracket.
double ball_multiplier(RVector& lambda, RVector& weight, double budget) {
  const double lam_max = std::max(lambda.size() ? lambda.maxCoeff() : 0.0, 0.0);
  const double wsum = weight.sum();
  if (!(wsum > 0.0)) return 0.0;
  require(budget > 0.0, ErrorCode::infeasible_budget, "power budget must be positive");

  const double null_tol = 1e-12 * lam_max;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    lambda(i) = std::max(lambda(i), 0.0);
    if (lambda(i) <= null_tol) {
      lambda(i) = 0.0;
      if (weight(i) <= 1e-20 * wsum) weight(i) = 0.0;
    }
  }

  auto f = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      if (weight(i) == 0.0) continue;
      const double den = lambda(i) + mu;
      if (den <= 0.0) return std::numeric_limits<double>::infinity();
      s += weight(i) / (den * den);
    }
    return s;
  };

  if (f(0.0) <= budget) return 0.0;

  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) > budget) {
    lo = hi;
    hi *= 10.0;
    require(hi < 1e300, ErrorCode::bracket_not_found, "multiplier bracket not found");
  }
  if (lo == 0.0) {
    lo = hi / 10.0;
    while (f(lo) <= budget) {
      hi = lo;
      lo /= 10.0;
      if (lo < 1e-300) {
        lo = 0.0;
        break;
      }
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (f(mid) > budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

// Index maps from (group, row, col) of Θ into the stacked unknown.
struct Layout {
  int groups;
  int n;
  bool reduced;
  SymmetricMap sym;

  explicit Layout(const Architecture& arch)
      : groups(arch.group_count()),
        n(arch.group_size()),
        reduced(arch.reciprocal()),
        sym(arch.group_size()) {}

  int per_group() const { return reduced ? sym.reduced_dim() : n * n; }
  int dim() const { return groups * per_group(); }
  int index(int g, int row, int col) const {
    return g * per_group() + (reduced ? sym.reduced_index(row, col) : col * n + row);
  }
};

QcqpCanonical build_qcqp(const MimoProblem& p, const CMatrix& w, const CMatrix& u,
                         const CMatrix& f, const Layout& layout) {
  require(w.rows() == p.n_r() && u.rows() == w.cols() && u.cols() == w.cols() &&
              f.rows() == p.n_t() && f.cols() == w.cols(),
          ErrorCode::dimension_mismatch, "W/U/F dimensions do not match the problem");
  const int full = p.n_i() * layout.n;
  require(full <= kMaxDenseDim, ErrorCode::size_limit,
          "dense QCQP dimension N_I*N_G = " + std::to_string(full) + " exceeds " +
              std::to_string(kMaxDenseDim));

  const CMatrix wuw = w * u * w.adjoint();
  const CMatrix a = p.h_ri.adjoint() * wuw * p.h_ri;
  const CMatrix itf = p.h_it * f;
  const CMatrix k = itf * itf.adjoint();
  const CMatrix eye_s = CMatrix::Identity(w.cols(), w.cols());
  const CMatrix c_full =
      p.h_ri.adjoint() * w * u * (eye_s - w.adjoint() * p.h_rt * f) * itf.adjoint();
  const double s2 = p.noise.sigma_i_sq;

  const int n = layout.n;
  const int dim = layout.dim();
  QcqpCanonical q;
  q.b = CMatrix::Zero(dim, dim);
  q.c = CVector::Zero(dim);
  q.d = CMatrix::Zero(dim, dim);
  q.budget = p.p_a;

  // Entry ((c n + r), (c' n + r')) of (X^T ⊗ Y) is X(c', c) Y(r, r').
  for (int g = 0; g < layout.groups; ++g) {
    const int og = g * n;
    for (int col = 0; col < n; ++col) {
      for (int row = 0; row < n; ++row) {
        const int ti = layout.index(g, row, col);
        q.c(ti) += c_full(og + row, og + col);
        for (int g2 = 0; g2 < layout.groups; ++g2) {
          const int og2 = g2 * n;
          for (int col2 = 0; col2 < n; ++col2) {
            const Complex kx = k(og2 + col2, og + col);
            for (int row2 = 0; row2 < n; ++row2) {
              const int tj = layout.index(g2, row2, col2);
              Complex v = kx * a(og + row, og2 + row2);
              if (g == g2) {
                if (col == col2) v += s2 * a(og + row, og2 + row2);
                Complex dv = row == row2 ? kx : Complex{};
                if (row == row2 && col == col2) dv += s2;
                q.d(ti, tj) += dv;
              }
              q.b(ti, tj) += v;
            }
          }
        }
      }
    }
  }
  q.b = hermitian_part(q.b);
  q.d = hermitian_part(q.d);
  return q;
}

}  // namespace

MimoProblem MimoProblem::make(const channel::ChannelRealization& ch, const Architecture& arch,
                              int streams, double p_t, double p_a, const NoiseModel& noise) {
  const auto nr = ch.h_rt.rows(), nt = ch.h_rt.cols(), ni = ch.h_it.rows();
  require(ch.h_ri.rows() == nr && ch.h_ri.cols() == ni && ch.h_it.cols() == nt,
          ErrorCode::dimension_mismatch, "channel blocks are inconsistent");
  require(arch.elements() == ni, ErrorCode::dimension_mismatch,
          "architecture element count does not match N_I");
  require(streams >= 1 && streams <= std::min(nt, nr), ErrorCode::invalid_argument,
          "stream count must satisfy 1 <= N_S <= min(N_T, N_R)");
  require(p_t > 0.0 && p_a >= 0.0, ErrorCode::invalid_argument, "power budgets must be positive");
  return MimoProblem{ch.h_rt, ch.h_ri, ch.h_it, arch, streams, p_t, p_a,
                     NoiseModel::checked(noise.sigma_r_sq, noise.sigma_i_sq)};
}

CMatrix MimoProblem::channel(const CMatrix& theta) const {
  return netcore::simplified_channel(h_rt, h_ri, h_it, theta);
}

double spectral_efficiency(const CMatrix& h, const CMatrix& f, const CMatrix& noise_cov) {
  require(noise_cov.rows() == h.rows() && noise_cov.cols() == h.rows() && f.rows() == h.cols(),
          ErrorCode::dimension_mismatch, "spectral_efficiency dimensions");
  Eigen::LLT<CMatrix> llt(hermitian_part(noise_cov));
  require(llt.info() == Eigen::Success, ErrorCode::invalid_argument,
          "noise covariance is not positive definite");
  // log det(I + L^{-1} H F F^H H^H L^{-H})
  const CMatrix g = llt.matrixL().solve(h * f);
  const CMatrix m = CMatrix::Identity(g.cols(), g.cols()) + g.adjoint() * g;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  double r = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    r += std::log2(std::max(es.eigenvalues()(i), 1.0));
  }
  return r;
}

CMatrix noise_covariance(const CMatrix& h_ri, const CMatrix& theta, const NoiseModel& noise) {
  const CMatrix t = h_ri * theta;
  CMatrix r = noise.sigma_i_sq * (t * t.adjoint());
  r.diagonal().array() += noise.sigma_r_sq;
  return hermitian_part(r);
}

CMatrix update_w(const CMatrix& h, const CMatrix& f, const CMatrix& noise_cov) {
  const CMatrix hf = h * f;
  Eigen::LLT<CMatrix> llt(hermitian_part(hf * hf.adjoint() + noise_cov));
  require(llt.info() == Eigen::Success, ErrorCode::invalid_argument,
          "combiner inner matrix is not positive definite");
  return llt.solve(hf);
}

CMatrix update_u(const CMatrix& f, const CMatrix& h, const CMatrix& noise_cov) {
  const CMatrix hf = h * f;
  Eigen::LLT<CMatrix> llt(hermitian_part(noise_cov));
  require(llt.info() == Eigen::Success, ErrorCode::invalid_argument,
          "noise covariance is not positive definite");
  CMatrix u = hf.adjoint() * llt.solve(hf);
  u.diagonal().array() += 1.0;
  return hermitian_part(u);
}

CMatrix mse_matrix(const CMatrix& h, const CMatrix& f, const CMatrix& w, const CMatrix& noise_cov) {
  const CMatrix whf = w.adjoint() * h * f;
  CMatrix e = whf * whf.adjoint() - whf - whf.adjoint() + w.adjoint() * noise_cov * w;
  e.diagonal().array() += 1.0;
  return e;
}

double weighted_mse(const MimoProblem& p, const CMatrix& w, const CMatrix& u, const CMatrix& theta,
                    const CMatrix& f) {
  const CMatrix h = p.channel(theta);
  const CMatrix r = noise_covariance(p.h_ri, theta, p.noise);
  return trace_re(u * mse_matrix(h, f, w, r));
}

double radiated_power(const CMatrix& theta, const CMatrix& h_it, const CMatrix& f,
                      double sigma_i_sq) {
  return (theta * h_it * f).squaredNorm() + sigma_i_sq * theta.squaredNorm();
}

// ------------------------------------------------------------------ SymmetricMap

SymmetricMap::SymmetricMap(int group_size) : n_(group_size) {
  require(group_size >= 1, ErrorCode::invalid_argument, "group size must be positive");
  p_ = RMatrix::Zero(full_dim(), reduced_dim());
  for (int col = 0; col < n_; ++col) {
    for (int row = 0; row < n_; ++row) p_(col * n_ + row, reduced_index(row, col)) = 1.0;
  }
}

int SymmetricMap::reduced_index(int row, int col) const noexcept {
  const int a = std::min(row, col);
  const int b = std::max(row, col);
  return b * (b + 1) / 2 + a;
}

// ------------------------------------------------------------------ Θ-subproblem

double qcqp_objective(const QcqpCanonical& q, const CVector& x) {
  return x.dot(q.b * x).real() - 2.0 * x.dot(q.c).real();
}

QcqpCanonical build_theta_qcqp(const MimoProblem& p, const CMatrix& w, const CMatrix& u,
                               const CMatrix& f) {
  Architecture nr(p.arch.group_count(), p.arch.group_size(), false);
  return build_qcqp(p, w, u, f, Layout(nr));
}

QcqpCanonical build_theta_qcqp_reciprocal(const MimoProblem& p, const CMatrix& w,
                                          const CMatrix& u, const CMatrix& f) {
  Architecture r(p.arch.group_count(), p.arch.group_size(), true);
  return build_qcqp(p, w, u, f, Layout(r));
}

QcqpSolution solve_qcqp_ball(const QcqpCanonical& q) {
  const auto n = q.b.rows();
  require(q.b.cols() == n && q.c.size() == n && q.d.rows() == n && q.d.cols() == n,
          ErrorCode::dimension_mismatch, "QCQP dimensions are inconsistent");
  QcqpSolution sol;
  sol.x = CVector::Zero(n);
  if (n == 0 || q.c.squaredNorm() == 0.0) return sol;

  Eigen::LLT<CMatrix> llt(hermitian_part(q.d));
  require(llt.info() == Eigen::Success, ErrorCode::invalid_argument,
          "constraint matrix D is not positive definite");
  const auto l = llt.matrixL();

  // Whitened problem: B~ = L^{-1} B L^{-H}, d = V^H L^{-1} c.
  const CMatrix y = l.solve(q.b);
  const CMatrix bt = hermitian_part(l.solve(CMatrix(y.adjoint())));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(bt);
  require(es.info() == Eigen::Success, ErrorCode::non_convergence, "eigensolver failed");
  const CVector dvec = es.eigenvectors().adjoint() * l.solve(q.c);

  RVector lambda = es.eigenvalues();
  RVector weight = dvec.cwiseAbs2();
  sol.mu = ball_multiplier(lambda, weight, q.budget);

  CVector coeff(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    coeff(i) = weight(i) == 0.0 ? Complex{} : dvec(i) / (lambda(i) + sol.mu);
  }
  sol.x = l.adjoint().solve(es.eigenvectors() * coeff);
  sol.constraint = sol.x.dot(q.d * sol.x).real();
  return sol;
}

CMatrix theta_from_vector(const Architecture& arch, const CVector& x) {
  const Layout layout(arch);
  require(x.size() == layout.dim(), ErrorCode::dimension_mismatch,
          "vector length does not match the architecture");
  const int n = layout.n;
  CMatrix theta = CMatrix::Zero(arch.elements(), arch.elements());
  for (int g = 0; g < layout.groups; ++g) {
    for (int col = 0; col < n; ++col) {
      for (int row = 0; row < n; ++row) {
        theta(g * n + row, g * n + col) = x(layout.index(g, row, col));
      }
    }
  }
  return theta;
}

CVector vector_from_theta(const Architecture& arch, const CMatrix& theta) {
  const Layout layout(arch);
  require(theta.rows() == arch.elements() && theta.cols() == arch.elements(),
          ErrorCode::dimension_mismatch, "theta does not match the architecture");
  const int n = layout.n;
  CVector x = CVector::Zero(layout.dim());
  for (int g = 0; g < layout.groups; ++g) {
    for (int col = 0; col < n; ++col) {
      for (int row = layout.reduced ? col : 0; row < n; ++row) {
        x(layout.index(g, row, col)) = theta(g * n + row, g * n + col);
      }
    }
  }
  return x;
}

FullThetaSolution solve_theta_fully_connected(const MimoProblem& p, const CMatrix& w,
                                              const CMatrix& u, const CMatrix& f) {
  require(p.arch.is_fully_connected() && !p.arch.reciprocal(), ErrorCode::invalid_argument,
          "matrix-form Θ solve needs a non-reciprocal fully-connected architecture");
  const int ni = p.n_i();
  const CMatrix itf = p.h_it * f;
  CMatrix k = itf * itf.adjoint();
  k.diagonal().array() += p.noise.sigma_i_sq;
  const CMatrix a = hermitian_part(p.h_ri.adjoint() * w * u * w.adjoint() * p.h_ri);
  const CMatrix eye_s = CMatrix::Identity(w.cols(), w.cols());
  const CMatrix c = p.h_ri.adjoint() * w * u * (eye_s - w.adjoint() * p.h_rt * f) * itf.adjoint();

  FullThetaSolution sol;
  sol.theta = CMatrix::Zero(ni, ni);
  if (c.squaredNorm() == 0.0) return sol;

  Eigen::LLT<CMatrix> llt(hermitian_part(k));
  require(llt.info() == Eigen::Success, ErrorCode::invalid_argument,
          "K + σ_I² I is not positive definite");
  // G = C K^{-1}; constraint Tr(Θ K Θ^H) = Σ [V^H G K G^H V]_ii / (λ_i + μ)^2.
  const CMatrix g = llt.solve(CMatrix(c.adjoint())).adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
  require(es.info() == Eigen::Success, ErrorCode::non_convergence, "eigensolver failed");
  const CMatrix vg = es.eigenvectors().adjoint() * g;
  const CMatrix vc = es.eigenvectors().adjoint() * c;

  RVector lambda = es.eigenvalues();
  RVector weight(ni);
  for (int i = 0; i < ni; ++i) weight(i) = vg.row(i).dot(vc.row(i)).real();
  weight = weight.cwiseMax(0.0);
  sol.mu = ball_multiplier(lambda, weight, p.p_a);

  CMatrix scaled = vg;
  for (int i = 0; i < ni; ++i) {
    scaled.row(i) *= weight(i) == 0.0 ? 0.0 : 1.0 / (lambda(i) + sol.mu);
  }
  sol.theta = es.eigenvectors() * scaled;
  return sol;
}

CMatrix update_theta(const MimoProblem& p, const MimoState& s) {
  CMatrix candidate;
  if (p.arch.is_fully_connected() && !p.arch.reciprocal()) {
    candidate = solve_theta_fully_connected(p, s.w, s.u, s.f).theta;
  } else {
    const Layout layout(p.arch);
    const QcqpCanonical q = build_qcqp(p, s.w, s.u, s.f, layout);
    candidate = theta_from_vector(p.arch, solve_qcqp_ball(q).x);
  }
  // The subproblem is solved exactly; this only guards against round-off.
  const double before = weighted_mse(p, s.w, s.u, s.theta, s.f);
  const double after = weighted_mse(p, s.w, s.u, candidate, s.f);
  if (after > before + 1e-12 * std::abs(before)) return s.theta;
  return candidate;
}

// ------------------------------------------------------------------ F-subproblem

double precoder_objective(const PrecoderQcqp& q, const CMatrix& f) {
  return trace_re(f.adjoint() * q.q * f) - 2.0 * trace_re(f.adjoint() * q.g);
}

namespace {

struct PrecoderEval {
  CMatrix f;
  double mu_t = 0.0;
};

// Exact minimizer over ||F||^2 <= budget_t for fixed mu_m.
PrecoderEval precoder_inner(const PrecoderQcqp& q, double mu_m) {
  CMatrix x = q.q;
  if (mu_m != 0.0 && q.m.size() != 0) x += mu_m * q.m;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(x));
  require(es.info() == Eigen::Success, ErrorCode::non_convergence, "eigensolver failed");
  const CMatrix vg = es.eigenvectors().adjoint() * q.g;
  RVector lambda = es.eigenvalues();
  RVector weight = vg.rowwise().squaredNorm();
  PrecoderEval out;
  out.mu_t = ball_multiplier(lambda, weight, q.budget_t);
  CMatrix scaled = vg;
  for (Eigen::Index i = 0; i < scaled.rows(); ++i) {
    scaled.row(i) *= weight(i) == 0.0 ? 0.0 : 1.0 / (lambda(i) + out.mu_t);
  }
  out.f = es.eigenvectors() * scaled;
  return out;
}

double coupling(const PrecoderQcqp& q, const CMatrix& f) {
  return q.m.size() == 0 ? 0.0 : trace_re(f.adjoint() * q.m * f);
}

}  // namespace

CMatrix precoder_at(const PrecoderQcqp& q, double mu_m, double mu_t) {
  CMatrix x = q.q;
  if (q.m.size() != 0) x += mu_m * q.m;
  x.diagonal().array() += mu_t;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(x));
  const RVector& lam = es.eigenvalues();
  const double tol = 1e-14 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  CMatrix vg = es.eigenvectors().adjoint() * q.g;
  for (Eigen::Index i = 0; i < vg.rows(); ++i) vg.row(i) *= lam(i) > tol ? 1.0 / lam(i) : 0.0;
  return es.eigenvectors() * vg;
}

PrecoderSolution solve_precoder(const PrecoderQcqp& q) {
  require(q.q.rows() == q.q.cols() && q.g.rows() == q.q.rows() &&
              (q.m.size() == 0 || (q.m.rows() == q.q.rows() && q.m.cols() == q.q.cols())),
          ErrorCode::dimension_mismatch, "precoder QCQP dimensions");
  require(q.budget_t > 0.0, ErrorCode::infeasible_budget, "transmit budget must be positive");
  require(q.budget_m >= 0.0, ErrorCode::infeasible_budget,
          "theta consumes entire amplification budget");

  PrecoderSolution sol;
  PrecoderEval e = precoder_inner(q, 0.0);
  if (coupling(q, e.f) <= q.budget_m) {
    sol.f = e.f;
    sol.mu_t = e.mu_t;
    return sol;
  }

  // Coupling constraint active: outer search on mu_m, inner mu_t in closed form.
  auto g = [&](double mu) { return coupling(q, precoder_inner(q, mu).f); };
  const double scale = std::max(q.q.norm(), 1e-300) / std::max(q.m.norm(), 1e-300);
  double lo = 0.0;
  double hi = scale;
  while (g(hi) > q.budget_m) {
    lo = hi;
    hi *= 10.0;
    require(hi < 1e300 * std::max(scale, 1.0), ErrorCode::bracket_not_found,
            "coupling multiplier bracket not found");
  }
  if (lo == 0.0) {
    lo = hi / 10.0;
    while (g(lo) <= q.budget_m) {
      hi = lo;
      lo /= 10.0;
      if (lo < 1e-300) {
        lo = 0.0;
        break;
      }
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (g(mid) > q.budget_m) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  e = precoder_inner(q, hi);
  sol.f = e.f;
  sol.mu_m = hi;
  sol.mu_t = e.mu_t;
  return sol;
}

PrecoderQcqp build_precoder_qcqp(const MimoProblem& p, const MimoState& s) {
  const CMatrix h = p.channel(s.theta);
  PrecoderQcqp q;
  const CMatrix hw = h.adjoint() * s.w;
  q.q = hermitian_part(hw * s.u * hw.adjoint());
  q.g = hw * s.u;
  const CMatrix th = s.theta * p.h_it;
  q.m = hermitian_part(th.adjoint() * th);
  double budget = p.p_a - p.noise.sigma_i_sq * s.theta.squaredNorm();
  // Round-off from an exactly active Θ-update should not be reported as infeasible.
  if (budget < 0.0 && budget > -1e-9 * p.p_a) budget = 0.0;
  q.budget_m = budget;
  q.budget_t = p.p_t;
  return q;
}

CMatrix update_f(const MimoProblem& p, const MimoState& s) {
  const PrecoderQcqp q = build_precoder_qcqp(p, s);
  const CMatrix candidate = solve_precoder(q).f;
  const double before = precoder_objective(q, s.f);
  const double after = precoder_objective(q, candidate);
  if (after > before + 1e-12 * std::abs(before)) return s.f;
  return candidate;
}

// ------------------------------------------------------------------ outer loop

MimoState initialize(const MimoProblem& p) {
  MimoState s;
  const int ns = p.streams;
  const int nt = p.n_t();
  CMatrix basis;
  if (p.h_rt.norm() > 0.0) {
    Eigen::JacobiSVD<CMatrix> svd(p.h_rt, Eigen::ComputeFullV);
    basis = svd.matrixV().leftCols(ns);
  } else {
    basis = CMatrix::Identity(nt, ns);
  }
  s.f = std::sqrt(p.p_t / ns) * basis;

  const double unit = radiated_power(CMatrix::Identity(p.n_i(), p.n_i()), p.h_it, s.f,
                                     p.noise.sigma_i_sq);
  const double c = unit > 0.0 ? std::sqrt(0.9 * p.p_a / unit) : 0.0;
  s.theta = c * CMatrix::Identity(p.n_i(), p.n_i());

  const CMatrix h = p.channel(s.theta);
  const CMatrix r = noise_covariance(p.h_ri, s.theta, p.noise);
  s.w = update_w(h, s.f, r);
  s.u = update_u(s.f, h, r);
  s.rate_trace.push_back(spectral_efficiency(h, s.f, r));
  return s;
}

MimoState wmmse_optimize(const MimoProblem& p, const WmmseOptions& options) {
  MimoState s = initialize(p);
  for (int k = 0; k < options.max_iters; ++k) {
    CMatrix h = p.channel(s.theta);
    CMatrix r = noise_covariance(p.h_ri, s.theta, p.noise);
    s.w = update_w(h, s.f, r);
    s.u = update_u(s.f, h, r);
    s.theta = update_theta(p, s);
    s.f = update_f(p, s);

    h = p.channel(s.theta);
    r = noise_covariance(p.h_ri, s.theta, p.noise);
    const double rate = spectral_efficiency(h, s.f, r);
    const double prev = s.rate_trace.back();
    s.rate_trace.push_back(rate);
    s.iterations = k + 1;
    if (std::abs(rate - prev) <= options.tol * std::max(std::abs(prev), 1e-12)) {
      s.converged = true;
      break;
    }
  }
  // Leave W, U consistent with the returned (Θ, F).
  const CMatrix h = p.channel(s.theta);
  const CMatrix r = noise_covariance(p.h_ri, s.theta, p.noise);
  s.w = update_w(h, s.f, r);
  s.u = update_u(s.f, h, r);
  return s;
}

double waterfilling_rate(const CMatrix& h, double power, double sigma_sq) {
  require(power >= 0.0 && sigma_sq > 0.0, ErrorCode::invalid_argument,
          "waterfilling needs non-negative power and positive noise");
  Eigen::JacobiSVD<CMatrix> svd(h);
  std::vector<double> gains;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const double g = svd.singularValues()(i) * svd.singularValues()(i) / sigma_sq;
    if (g > 0.0) gains.push_back(g);
  }
  std::sort(gains.rbegin(), gains.rend());
  // Largest active set whose water level stays above every 1/g_i.
  for (std::size_t k = gains.size(); k >= 1; --k) {
    double inv_sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) inv_sum += 1.0 / gains[i];
    const double level = (power + inv_sum) / static_cast<double>(k);
    if (level > 1.0 / gains[k - 1]) {
      double rate = 0.0;
      for (std::size_t i = 0; i < k; ++i) rate += std::log2(level * gains[i]);
      return rate;
    }
  }
  return 0.0;
}

}  // namespace bdris::mimo
