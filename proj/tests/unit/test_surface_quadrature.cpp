#include <array>
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "../support/oracles.hpp"
#include "stokesreg/experiments.hpp"
#include "stokesreg/surface_quadrature.hpp"

using namespace stokesreg;

TEST(BuildRule, RejectsBadArguments) {
  EXPECT_THROW(build_rule(make_sphere(), 0.0), InvalidConfig);
  EXPECT_THROW(build_rule(make_sphere(), 0.1, 1.0 / std::sqrt(3.0)), InvalidConfig);
  EXPECT_THROW(build_rule(make_sphere(), 0.1, 0.0), InvalidConfig);
}

TEST(BuildRule, SphereCountNearPublishedAtOneThirtySecond) {
  const auto rule = build_rule(make_sphere(), 1.0 / 32);
  EXPECT_NEAR(static_cast<double>(rule.size()) / 17070.0, 1.0, 0.02);
}

TEST(BuildRule, EllipsoidCountNearPublishedAtOneThirtySecond) {
  const auto rule = build_rule(make_ellipsoid(), 1.0 / 32);
  EXPECT_NEAR(static_cast<double>(rule.size()) / 6902.0, 1.0, 0.03);
}

TEST(BuildRule, NodeInvariants) {
  for (const auto& surface : {make_sphere(), make_ellipsoid(), make_molecule()}) {
    const double h = 1.0 / 16;
    const auto rule = build_rule(surface, h);
    for (const auto& n : rule.nodes()) {
      ASSERT_GT(n.weight, 0.0);
      ASSERT_GT(n.pou_weight, 0.0);
      ASSERT_LE(n.pou_weight, 1.0);
      const double ni = std::abs(n.point.normal[n.axis]);
      ASSERT_GT(ni, rule.theta());
      ASSERT_NEAR(n.weight, n.pou_weight * h * h / ni, 1e-15);
    }
  }
}

TEST(BuildRule, WeightsCarryPartitionOfUnity) {
  const auto rule = build_rule(make_ellipsoid(), 1.0 / 16);
  const double t2 = rule.theta() * rule.theta();
  std::array<int, 3> per_axis{};
  for (const auto& n : rule.nodes()) {
    const double ni = n.point.normal[n.axis];
    ASSERT_GT(ni * ni, t2);
    const auto psi = partition_weights(n.point.normal, rule.theta());
    ASSERT_NEAR(n.pou_weight, psi[n.axis], 1e-15);
    ASSERT_NEAR(n.weight, n.pou_weight * rule.h() * rule.h() / std::abs(ni), 1e-15);
    ++per_axis[n.axis];
  }
  for (int c : per_axis) EXPECT_GT(c, 0);
}

TEST(PartitionWeights, SumToOneForRandomNormals) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto psi = partition_weights(oracle::random_unit(rng), kDefaultTheta);
    EXPECT_NEAR(psi[0] + psi[1] + psi[2], 1.0, 1e-12);
    for (double v : psi) EXPECT_GE(v, 0.0);
  }
  const auto axis = partition_weights(Vec3(0, 0, 1), kDefaultTheta);
  EXPECT_EQ(axis[2], 1.0);
  EXPECT_EQ(axis[0], 0.0);
}

TEST(IntegrateScalar, SphereArea) {
  const auto rule = build_rule(make_sphere(), 1.0 / 32);
  EXPECT_NEAR(surface_area(rule) / (4 * kPi), 1.0, 1e-4);
}

TEST(IntegrateScalar, EllipsoidAreaAgainstTriangulation) {
  const double tri = oracle::ellipsoid_area_triangulated(1.0, 0.6, 0.4, 400);
  SurfaceSpec spec;
  spec.kind = SurfaceKind::ellipsoid;
  EXPECT_NEAR(exact_area(spec) / tri, 1.0, 1e-7);  // closed form vs triangulation
  const auto rule = build_rule(make_ellipsoid(), 1.0 / 32);
  EXPECT_NEAR(surface_area(rule) / tri, 1.0, 1e-3);
}

TEST(IntegrateScalar, NormalComponentIntegratesToZero) {
  for (const auto& surface : {make_sphere(), make_ellipsoid(), make_molecule()}) {
    const auto rule = build_rule(surface, 1.0 / 32);
    for (int d = 0; d < 3; ++d)
      EXPECT_NEAR(integrate_scalar(rule, [d](const QuadratureNode& n) { return n.point.normal[d]; }), 0.0, 1e-4)
          << surface.name() << " component " << d;
  }
}

TEST(IntegrateScalar, DivergenceTheoremVolume) {
  // integral of x . n / 3 over the surface is the enclosed volume
  const auto rule = build_rule(make_ellipsoid(), 1.0 / 32);
  const double vol = integrate_scalar(rule, [](const QuadratureNode& n) {
    return n.point.position.dot(n.point.normal) / 3.0;
  });
  EXPECT_NEAR(vol / (4.0 / 3.0 * kPi * 1.0 * 0.6 * 0.4), 1.0, 2e-5);
}

TEST(IntegrateScalar, EmptyRuleThrows) {
  const QuadratureRule empty(make_sphere(), 0.1, kDefaultTheta, {});
  EXPECT_THROW(surface_area(empty), UsageError);
}

TEST(BuildRule, DeterministicAcrossThreadCounts) {
  const int before = num_threads();
  set_num_threads(1);
  const auto a = build_rule(make_molecule(), 1.0 / 16);
  set_num_threads(std::max(before, 2));
  const auto b = build_rule(make_molecule(), 1.0 / 16);
  set_num_threads(before);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.position(i), b.position(i));
    ASSERT_EQ(a[i].weight, b[i].weight);
  }
}
