#include "bdris/baselines.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace bdris;
using namespace bdris::baselines;
using netcore::Architecture;
using netcore::NoiseModel;
using testutil::Rng;

namespace {

CMatrix block_unitary(Rng& rng, int n, int group) {
  std::vector<CMatrix> blocks;
  for (int g = 0; g < n / group; ++g) blocks.push_back(rng.unitary(group));
  return block_diagonal(blocks);
}

MimoProblem passive_problem(Rng& rng, int nt, int ni, int nr, const Architecture& arch) {
  channel::ChannelRealization ch;
  ch.h_rt = rng.matrix(nr, nt) * 0.2;
  ch.h_ri = rng.matrix(nr, ni);
  ch.h_it = rng.matrix(ni, nt);
  return MimoProblem::make(ch, arch, std::min(nt, nr), 1.0, 0.0, NoiseModel::checked(0.1, 0.1));
}

}  // namespace

TEST(Manifold, TangentProjection) {
  Rng rng(1);
  const CMatrix q = block_unitary(rng, 6, 3);
  const CMatrix g = rng.matrix(6, 6);
  const CMatrix xi = project_tangent(q, g, 3);
  for (int b = 0; b < 2; ++b) {
    const CMatrix qb = q.block(3 * b, 3 * b, 3, 3), xb = xi.block(3 * b, 3 * b, 3, 3);
    const CMatrix s = qb.adjoint() * xb;
    EXPECT_LE((s + s.adjoint()).norm(), 1e-12);
  }
  EXPECT_EQ(xi.block(0, 3, 3, 3).norm(), 0.0);
  EXPECT_LE((project_tangent(q, xi, 3) - xi).norm(), 1e-12);
}

TEST(Manifold, RetractionStaysOnManifold) {
  Rng rng(2);
  const CMatrix q = block_unitary(rng, 6, 2);
  EXPECT_LE((retract(q, CMatrix::Zero(6, 6), 2) - q).norm(), 1e-12);
  const CMatrix xi = project_tangent(q, rng.matrix(6, 6), 2);
  const CMatrix r = retract(q, xi, 2);
  EXPECT_LE(block_unitarity_error(r, 2), 1e-12);
  EXPECT_EQ(r.block(0, 2, 2, 4).norm(), 0.0);
  // First-order agreement with the tangent step.
  const CMatrix small = retract(q, 1e-5 * xi, 2);
  EXPECT_LE((small - q - 1e-5 * xi).norm(), 1e-8);
}

TEST(RiemannianCg, ZeroGradientIsFixedPoint) {
  Rng rng(3);
  const CMatrix q = block_unitary(rng, 4, 2);
  const auto res = riemannian_cg([](const CMatrix&) { return 1.0; },
                                 [](const CMatrix& x) { return CMatrix(CMatrix::Zero(x.rows(), x.cols())); }, q, 2);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.steps, 0);
  EXPECT_EQ(res.q, q);
}

TEST(RiemannianCg, ConvergesToTarget) {
  Rng rng(4);
  for (int group : {1, 2, 3, 6}) {
    const CMatrix target = block_unitary(rng, 6, group);
    const Objective f = [&](const CMatrix& x) { return (x - target).squaredNorm(); };
    const Gradient g = [&](const CMatrix&) { return CMatrix(-2.0 * target); };
    const auto res = riemannian_cg(f, g, CMatrix::Identity(6, 6), group, CgOptions{500, 1e-9});
    EXPECT_LE((res.q - target).norm(), 1e-6) << "group " << group;
    EXPECT_LE(block_unitarity_error(res.q, group), 1e-12);
  }
}

TEST(RiemannianCg, StepNeverIncreases) {
  Rng rng(5);
  const CMatrix a = rng.hermitian_psd(4, 4), k = rng.hermitian_psd(4, 2), c = rng.matrix(4, 4);
  const Objective f = [&](const CMatrix& x) {
    return (x.adjoint() * a * x * k).trace().real() - 2.0 * (x.adjoint() * c).trace().real();
  };
  const Gradient g = [&](const CMatrix& x) { return CMatrix(2.0 * (a * x * k - c)); };
  CMatrix q = CMatrix::Identity(4, 4);
  CgMemory mem;
  double prev = f(q);
  for (int i = 0; i < 50; ++i) {
    const auto step = riemannian_cg_step(f, g, q, 4, mem);
    EXPECT_LE(step.value, prev + 1e-12 * std::abs(prev));
    prev = step.value;
    q = step.q;
  }
  EXPECT_LE(block_unitarity_error(q, 4), 1e-10);
}

TEST(PassiveMimo, SingleElementMatchesPhaseSweep) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = passive_problem(rng, 1, 1, 1, Architecture::single_connected(1));
    const auto s = passive_drs_mimo(p, PassiveOptions{{1e-13, 5000}, {}});
    double best = 0.0;
    for (int k = 0; k < 4096; ++k) {
      CMatrix theta(1, 1);
      theta(0, 0) = std::polar(1.0, 2.0 * std::numbers::pi * k / 4096.0);
      CMatrix f = CMatrix::Constant(1, 1, std::sqrt(p.p_t));
      best = std::max(best, passive_rate(p, theta, f));
    }
    EXPECT_GE(s.rate_trace.back(), best - 1e-5);
    EXPECT_LE(s.rate_trace.back(), best + 1e-4);
    EXPECT_NEAR(std::abs(s.theta(0, 0)), 1.0, 1e-12);
  }
}

TEST(PassiveMimo, FeasibleAndMonotone) {
  Rng rng(7);
  for (const auto& arch : {Architecture::group_connected(8, 2, true), Architecture::group_connected(8, 4, false),
                           Architecture::fully_connected(8, true)}) {
    const auto p = passive_problem(rng, 2, 8, 2, arch);
    const auto s = passive_bdris_mimo(p, PassiveOptions{{1e-7, 50}, {}});
    for (std::size_t k = 1; k < s.rate_trace.size(); ++k) {
      EXPECT_GE(s.rate_trace[k], s.rate_trace[k - 1] - 1e-9 * s.rate_trace[k - 1]) << arch.label();
    }
    EXPECT_LE(s.f.squaredNorm(), p.p_t * (1 + 1e-9));
    EXPECT_LE(unitarity_error(s.theta), 1e-9) << arch.label();
    EXPECT_TRUE(netcore::validate_theta(s.theta, arch, 1e-9).ok) << arch.label();
    EXPECT_NEAR(passive_rate(p, s.theta, s.f), s.rate_trace.back(), 1e-12);
  }
}

TEST(PassiveMimo, DrsIsDiagonalUnitModulus) {
  Rng rng(8);
  const auto p = passive_problem(rng, 2, 6, 2, Architecture::fully_connected(6, true));
  const auto s = passive_drs_mimo(p);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(std::abs(s.theta(i, i)), 1.0, 1e-12);
    for (int j = 0; j < 6; ++j)
      if (i != j) EXPECT_EQ(s.theta(i, j), Complex{});
  }
}

TEST(PassiveMimo, BdRisAtLeastDrsOnAverage) {
  Rng rng(9);
  double drs = 0.0, bd = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    const auto p = passive_problem(rng, 2, 8, 2, Architecture::fully_connected(8, false));
    drs += passive_drs_mimo(p).rate_trace.back();
    bd += passive_bdris_mimo(p).rate_trace.back();
  }
  EXPECT_GE(bd, drs);
}

TEST(ActiveDrs, SingleConnectedResult) {
  Rng rng(10);
  channel::ChannelRealization ch;
  ch.h_rt = rng.matrix(2, 2) * 0.2;
  ch.h_ri = rng.matrix(2, 4);
  ch.h_it = rng.matrix(4, 2);
  const auto p = MimoProblem::make(ch, Architecture::fully_connected(4, false), 2, 1.0, 0.5,
                                   NoiseModel::checked(0.1, 0.05));
  const auto s = active_drs_mimo(p);
  EXPECT_TRUE(netcore::validate_theta(s.theta, Architecture::single_connected(4), 1e-9).ok);
  EXPECT_LE(mimo::radiated_power(s.theta, p.h_it, s.f, p.noise.sigma_i_sq), p.p_a * (1 + 1e-9));
}
