#include "bdris/channel.hpp"

#include "oracle/oracle_values.hpp"

#include <gtest/gtest.h>

using namespace bdris;
using namespace bdris::channel;

TEST(Pathloss, FrozenValues) {
  EXPECT_NEAR(pathloss_db(1.0), oracle::kPathloss1, 1e-12);
  EXPECT_NEAR(pathloss_db(10.0), oracle::kPathloss10, 1e-12);
  EXPECT_NEAR(pathloss_db(300.0), oracle::kPathloss300, 1e-12);
  EXPECT_NEAR(pathloss_gain(10.0), std::pow(10.0, -oracle::kPathloss10 / 10.0), 1e-20);
  EXPECT_THROW(pathloss_db(0.0), Error);
  EXPECT_THROW(pathloss_db(-2.0), Error);
}

TEST(Geometry, ReferenceDistances) {
  const auto g = Geometry::reference();
  EXPECT_NEAR(distance(g.tx, g.rx), oracle::kDistTxRx, 1e-12);
  EXPECT_NEAR(distance(g.ris, g.rx), 10.0, 1e-12);
  Geometry bad = g;
  bad.rx = bad.ris;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(RandomStream, UniformInOpenInterval) {
  RandomStream rs(1, 2, 3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rs.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rician, RayleighSecondMoment) {
  FadingSpec spec;
  spec.kappa = 0.0;
  spec.pathloss_linear = 2.5;
  spec.rows = 100;
  spec.cols = 1000;
  RandomStream rs(42, 0, 1);
  const CMatrix h = draw_rician(spec, rs);
  EXPECT_NEAR(h.squaredNorm() / h.size() / 2.5, 1.0, 0.02);
  EXPECT_NEAR(std::abs(h.mean()) / std::sqrt(2.5), 0.0, 0.01);
}

TEST(Rician, LosLimit) {
  FadingSpec spec;
  spec.kappa = 1e9;
  spec.pathloss_linear = 1e-7;
  spec.rows = 3;
  spec.cols = 4;
  spec.los = los_matrix(3, 4, 0.4, -0.7);
  RandomStream rs(3, 0, 1);
  const CMatrix h = draw_rician(spec, rs);
  const CMatrix ref = std::sqrt(1e-7) * spec.los;
  for (int i = 0; i < h.size(); ++i) {
    EXPECT_LE(std::abs(h(i) - ref(i)) / std::abs(ref(i)), 1e-4);
  }
}

TEST(Rician, UnitKappaSecondMoment) {
  FadingSpec spec;
  spec.kappa = 1.0;
  spec.pathloss_linear = 1e-7;
  spec.rows = 1;
  spec.cols = 100000;
  RandomStream rs(9, 0, 2);
  const CMatrix h = draw_rician(spec, rs);
  EXPECT_NEAR(h.squaredNorm() / h.size() / 1e-7, 1.0, 0.02);
}

TEST(LosMatrix, UnitModulusRankOne) {
  const CMatrix l = los_matrix(4, 3, 0.3, 1.1);
  EXPECT_NEAR(l.cwiseAbs().maxCoeff(), 1.0, 1e-14);
  EXPECT_NEAR(l.cwiseAbs().minCoeff(), 1.0, 1e-14);
  Eigen::JacobiSVD<CMatrix> svd(l);
  EXPECT_LT(svd.singularValues()(1), 1e-12);
}

TEST(Realization, Deterministic) {
  const auto g = Geometry::reference();
  const auto a = generate_realization(g, {2, 8, 3}, 1.0, 17, 4);
  const auto b = generate_realization(g, {2, 8, 3}, 1.0, 17, 4);
  EXPECT_EQ(a.h_rt, b.h_rt);
  EXPECT_EQ(a.h_ri, b.h_ri);
  EXPECT_EQ(a.h_it, b.h_it);
  const auto c = generate_realization(g, {2, 8, 3}, 1.0, 17, 5);
  EXPECT_NE(a.h_rt, c.h_rt);
  EXPECT_EQ(a.h_rt.rows(), 3);
  EXPECT_EQ(a.h_ri.cols(), 8);
  EXPECT_EQ(a.h_it.cols(), 2);
}

TEST(Realization, MomentsMatchPathloss) {
  const auto g = Geometry::reference();
  const int trials = 20000;
  double rt = 0.0, ri = 0.0, it = 0.0, cross = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto r = generate_realization(g, {2, 2, 2}, 1.0, 5, t);
    rt += r.h_rt.squaredNorm() / 4.0;
    ri += r.h_ri.squaredNorm() / 4.0;
    it += r.h_it.squaredNorm() / 4.0;
    // NLOS parts are independent across links; the normalized product averages out.
    cross += (r.h_rt(0, 0) * std::conj(r.h_it(0, 0))).real() /
             std::sqrt(pathloss_gain(distance(g.tx, g.rx)) * pathloss_gain(distance(g.tx, g.ris)));
  }
  EXPECT_NEAR(rt / trials / pathloss_gain(oracle::kDistTxRx), 1.0, 0.03);
  EXPECT_NEAR(ri / trials / pathloss_gain(10.0), 1.0, 0.03);
  EXPECT_NEAR(it / trials / pathloss_gain(distance(g.tx, g.ris)), 1.0, 0.03);
  // The mean product equals the LOS term product (κ/(κ+1) times a unit phasor);
  // bound only its fluctuation.
  EXPECT_LE(std::abs(cross / trials), 0.5 + 0.05);
}
