#include "bdris/siso.hpp"

#include "oracle/oracle_values.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace bdris;
using namespace bdris::siso;
using netcore::Architecture;
using testutil::Rng;
using testutil::rel;

namespace {

PowerBudget budget() {
  PowerBudget pb;
  pb.p_t = 1.9;
  pb.p_a = 0.1;
  pb.p_t_passive = 2.0;
  pb.sigma_i_sq = dbm_to_watts(-90.0);
  pb.sigma_r_sq = dbm_to_watts(-90.0);
  return pb;
}

SisoChannel random_channel(Rng& rng, int n, double scale = 1e-3) {
  SisoChannel ch;
  ch.h_it = rng.vector(n) * scale;
  ch.h_ri = rng.vector(n).transpose() * scale;
  return ch;
}

ScalingParams scaling() {
  return ScalingParams{1.9, 0.1, 2.0, dbm_to_watts(-90.0), dbm_to_watts(-90.0), db_to_linear(-70.0),
                       db_to_linear(-70.0)};
}

// Random Θ = amp · (block-diagonal unitary), symmetric when reciprocal.
CMatrix random_feasible(Rng& rng, const Architecture& arch, double amp) {
  std::vector<CMatrix> blocks;
  for (int g = 0; g < arch.group_count(); ++g) {
    CMatrix u = rng.unitary(arch.group_size());
    if (arch.group_size() == 1) u(0, 0) /= std::abs(u(0, 0));
    blocks.push_back(arch.reciprocal() ? CMatrix(u * u.transpose()) : u);
  }
  return amp * block_diagonal(blocks);
}

}  // namespace

TEST(SisoSnr, FrozenInstance) {
  SisoChannel ch;
  ch.h_rt = Complex(0.05, -0.02);
  ch.h_it = CVector(3);
  ch.h_it << Complex(0.3, -0.2), Complex(-0.5, 0.1), Complex(0.2, 0.7);
  ch.h_ri = CRowVector(3);
  ch.h_ri << Complex(1.1, 0.4), Complex(-0.3, -0.9), Complex(0.6, 0.0);
  CMatrix theta = CMatrix::Zero(3, 3);
  theta(0, 0) = std::polar(1.5, 0.3);
  theta(1, 1) = std::polar(0.7, -1.1);
  theta(2, 2) = std::polar(2.0, 2.0);
  theta(0, 1) = Complex(0.2, 0.1);
  PowerBudget pb;
  pb.p_t = 0.8;
  pb.sigma_i_sq = 0.05;
  pb.sigma_r_sq = 0.3;
  EXPECT_LE(rel(snr(theta, ch, pb), oracle::kSisoSnr3), 1e-12);
  EXPECT_LE(rel(radiated_power(theta, ch, pb), oracle::kSisoRadiated3), 1e-12);
}

TEST(SisoSnr, ZeroThetaLeavesDirectLink) {
  SisoChannel ch;
  ch.h_rt = Complex(0.0, 2.0);
  ch.h_it = CVector::Ones(4);
  ch.h_ri = CRowVector::Ones(4);
  PowerBudget pb = budget();
  pb.sigma_r_sq = 0.5;
  EXPECT_NEAR(snr(CMatrix::Zero(4, 4), ch, pb), pb.p_t * 4.0 / 0.5, 1e-12);
}

TEST(AmpFactor, EqualGainChannel) {
  CVector h(100);
  for (int k = 0; k < 100; ++k) h(k) = std::polar(std::sqrt(db_to_linear(-70.0)), 0.1 * k);
  EXPECT_LE(rel(amp_factor_equal(budget(), h, 100), oracle::kAmpEqual100), 1e-12);
}

TEST(AmpFactor, SaturatesBudget) {
  Rng rng(1);
  const auto pb = budget();
  const auto ch = random_channel(rng, 16);
  const double a = amp_factor_equal(pb, ch.h_it, 16);
  const CMatrix theta = a * rng.unitary(16);
  EXPECT_LE(rel(radiated_power(theta, ch, pb), pb.p_a), 1e-12);
}

TEST(CompleteUnitary, FirstColumnAndUnitarity) {
  Rng rng(2);
  const CVector v = rng.vector(6);
  const CMatrix u = complete_unitary(v);
  EXPECT_LE((u.col(0) - v.normalized()).norm(), 1e-14);
  EXPECT_LE(unitarity_error(u), 1e-12);
  EXPECT_THROW(complete_unitary(CVector::Zero(3)), Error);
}

TEST(SymmetricUnitaryMap, MapsConjugateToTarget) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    const CVector u = rng.vector(n).normalized();
    // Include the degenerate cases v = u* phase and n = 1.
    const CVector v = trial % 5 == 0 ? CVector(std::polar(1.0, 0.7) * u.conjugate())
                                     : CVector(rng.vector(n).normalized());
    const CMatrix theta = symmetric_unitary_map(u, v);
    EXPECT_LE(unitarity_error(theta), 1e-10);
    EXPECT_LE(symmetry_error(theta), 1e-10);
    EXPECT_LE((theta * u - v).norm(), 1e-10) << "n=" << n;
  }
}

TEST(SisoSolvers, DrsMatchesClosedForm) {
  Rng rng(4);
  const auto pb = budget();
  for (int trial = 0; trial < 20; ++trial) {
    const auto ch = random_channel(rng, 8);
    const auto sol = solve_drs(ch, pb);
    EXPECT_LE(rel(sol.snr, closed_form_active_snr(ch, pb, 1)), 1e-9);
    EXPECT_LE(rel(radiated_power(sol.theta.value, ch, pb), pb.p_a), 1e-9);
    EXPECT_TRUE(netcore::validate_theta(sol.theta.value, Architecture::single_connected(8)).ok);
  }
}

TEST(SisoSolvers, BdMatchesClosedFormAllGroupSizes) {
  Rng rng(5);
  const auto pb = budget();
  for (int g : {1, 2, 4, 8}) {
    for (bool reciprocal : {false, true}) {
      const auto arch = Architecture::group_connected(8, g, reciprocal);
      const auto ch = random_channel(rng, 8);
      const auto sol = solve(ch, pb, arch);
      EXPECT_LE(rel(sol.snr, closed_form_active_snr(ch, pb, g)), 1e-9) << arch.label();
      EXPECT_LE(rel(radiated_power(sol.theta.value, ch, pb), pb.p_a), 1e-9);
      EXPECT_TRUE(netcore::validate_theta(sol.theta.value, arch).ok) << arch.label();
    }
  }
}

TEST(SisoSolvers, ReciprocalEqualsNonReciprocal) {
  Rng rng(6);
  const auto pb = budget();
  for (int trial = 0; trial < 20; ++trial) {
    const auto ch = random_channel(rng, 12);
    const int g = trial % 2 == 0 ? 4 : 12;
    const auto r = solve_bdris_reciprocal(ch, pb, Architecture::group_connected(12, g, true));
    const auto nr = solve_bdris_nonreciprocal(ch, pb, Architecture::group_connected(12, g, false));
    EXPECT_LE(rel(r.snr, nr.snr), 1e-9);
    EXPECT_LE(symmetry_error(r.theta.value), 1e-9);
  }
}

TEST(SisoSolvers, RandomSearchNeverBeatsSolver) {
  Rng rng(7);
  const auto pb = budget();
  for (const auto& arch : {Architecture::single_connected(4), Architecture::group_connected(4, 2, false),
                           Architecture::fully_connected(4, true)}) {
    const auto ch = random_channel(rng, 4);
    const auto sol = solve(ch, pb, arch);
    const double amp = amp_factor_equal(pb, ch.h_it, 4);
    double best = 0.0;
    for (int s = 0; s < 20000; ++s) {
      const CMatrix theta = random_feasible(rng, arch, amp);
      best = std::max(best, snr(theta, ch, pb));
    }
    EXPECT_LE(best, sol.snr * (1.0 + 1e-9)) << arch.label();
    EXPECT_GE(best, 0.5 * sol.snr) << arch.label();
  }
}

TEST(SisoSolvers, DirectLinkRejected) {
  Rng rng(8);
  auto ch = random_channel(rng, 4);
  ch.h_rt = Complex(1e-4, 0.0);
  EXPECT_THROW(solve_drs(ch, budget()), Error);
  EXPECT_THROW(solve(ch, budget(), Architecture::fully_connected(4, true)), Error);
}

TEST(SisoSolvers, GroupSizeMustDivide) {
  Rng rng(9);
  const auto ch = random_channel(rng, 6);
  EXPECT_THROW(solve(ch, budget(), Architecture::group_connected(8, 4, false)), Error);
}

TEST(SisoPassive, FullyConnectedGain) {
  // Passive fully-connected: (Σ ||h_RI,g|| ||h_IT,g||)^2 with a single group.
  Rng rng(10);
  const auto pb = budget();
  const auto ch = random_channel(rng, 8);
  const double expect = pb.p_t_passive * std::pow(ch.h_ri.norm() * ch.h_it.norm(), 2) / pb.sigma_r_sq;
  EXPECT_LE(rel(closed_form_passive_snr(ch, pb, 8), expect), 1e-12);
  double d = 0.0;
  for (int k = 0; k < 8; ++k) d += std::abs(ch.h_ri(k)) * std::abs(ch.h_it(k));
  EXPECT_LE(rel(closed_form_passive_snr(ch, pb, 1), pb.p_t_passive * d * d / pb.sigma_r_sq), 1e-12);
}

TEST(Scaling, GroupFactors) {
  EXPECT_LE(rel(group_gain_factor(1), oracle::kGroupFactor1), 1e-12);
  EXPECT_LE(rel(group_gain_factor(2), oracle::kGroupFactor2), 1e-12);
  EXPECT_LE(rel(group_gain_factor(4), oracle::kGroupFactor4), 1e-12);
  EXPECT_LE(rel(group_gain_factor(8), oracle::kGroupFactor8), 1e-12);
  EXPECT_LE(rel(group_gain_factor(1), std::numbers::pi * std::numbers::pi / 16.0), 1e-12);
  EXPECT_LE(rel(gamma_half_ratio(1), oracle::kGammaHalfRatio1), 1e-12);
  EXPECT_LE(rel(gamma_half_ratio(8), oracle::kGammaHalfRatio8), 1e-12);
  // Large group sizes approach one from below.
  EXPECT_LT(group_gain_factor(1024), 1.0);
  EXPECT_GT(group_gain_factor(1024), 0.999);
}

TEST(Scaling, AlphaBetaCrossover) {
  const auto p = scaling();
  EXPECT_LE(rel(p.alpha(), oracle::kAlpha), 1e-12);
  EXPECT_LE(rel(p.beta(), oracle::kBeta), 1e-12);
  const auto c = crossover_elements(p);
  EXPECT_LE(rel(c.n_bar, oracle::kNBar), 1e-12);
  EXPECT_LE(rel(c.n_tilde, oracle::kNTilde), 1e-12);
  // At the crossover the two scaling laws meet.
  EXPECT_LE(rel(asymptotic_snr(ScalingKind::active_d, 1, 1, p) * c.n_bar,
                asymptotic_snr(ScalingKind::passive_d, 1, 1, p) * c.n_bar * c.n_bar),
            1e-9);
}

TEST(Scaling, AsymptoticValues) {
  const auto p = scaling();
  EXPECT_LE(rel(asymptotic_snr(ScalingKind::active_d, 64, 1, p), oracle::kAsymActiveD64), 1e-12);
  EXPECT_LE(rel(asymptotic_snr(ScalingKind::active_bd_full, 64, 64, p), oracle::kAsymActiveFull64), 1e-12);
  EXPECT_LE(rel(asymptotic_snr(ScalingKind::active_bd_group, 64, 4, p), oracle::kAsymActiveGroup4_64), 1e-12);
  EXPECT_LE(rel(asymptotic_snr(ScalingKind::passive_d, 256, 1, p), oracle::kAsymPassiveD256), 1e-12);
  EXPECT_LE(rel(asymptotic_snr(ScalingKind::passive_bd_full, 256, 256, p), oracle::kAsymPassiveFull256), 1e-12);
  EXPECT_LE(rel(asymptotic_snr(ScalingKind::passive_bd_group, 256, 4, p), oracle::kAsymPassiveGroup4_256),
            1e-12);
}

TEST(Scaling, KindNamesRoundTrip) {
  for (auto k : {ScalingKind::active_d, ScalingKind::active_bd_group, ScalingKind::active_bd_full,
                 ScalingKind::passive_d, ScalingKind::passive_bd_group, ScalingKind::passive_bd_full}) {
    EXPECT_EQ(scaling_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(scaling_kind_from_string("bogus"), Error);
}

TEST(Scaling, MonteCarloFullOverDriftGain) {
  // Average over i.i.d. Rayleigh channels approaches 16/π² (in dB) for large N.
  Rng rng(11);
  const auto pb = budget();
  double full = 0.0, d = 0.0;
  for (int t = 0; t < 400; ++t) {
    const auto ch = random_channel(rng, 256, 1e-3);
    full += closed_form_passive_snr(ch, pb, 256);
    d += closed_form_passive_snr(ch, pb, 1);
  }
  EXPECT_NEAR(linear_to_db(full / d), oracle::kFullOverDriftDb, 0.1);
}
