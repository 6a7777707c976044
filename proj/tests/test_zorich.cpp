#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qcgrowth/sampling.hpp"
#include "qcgrowth/zorich.hpp"

using namespace qcg;

namespace {

BeamPoint random_point(Rng& rng, int n, double lo = -3.0, double hi = 3.0) {
  VecN u(n - 1);
  for (int i = 0; i < n - 1; ++i) u[i] = rng.uniform(lo, hi);
  return BeamPoint(u, rng.uniform(-5.0, 2.0));
}

}  // namespace

TEST(Zorich, PlanarExamples) {
  const ZorichMap z(2);
  const VecN a = z(BeamPoint(VecN{0.0}, 0.0));
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_DOUBLE_EQ(a[1], 0.0);
  const VecN b = z(BeamPoint(VecN{1.0}, 0.0));
  EXPECT_NEAR(b[0], -1.0, 1e-15);
  EXPECT_NEAR(b[1], 0.0, 1e-15);
  const VecN q = z.psi(VecN{0.5});
  EXPECT_NEAR(q[0], 0.0, 1e-15);
  EXPECT_NEAR(q[1], 1.0, 1e-15);
}

TEST(Zorich, SpatialExamples) {
  const ZorichMap z(3);
  const VecN p = z(BeamPoint(VecN{0.5, 0.5}, 0.0));
  EXPECT_NEAR(p[0], 0.0, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
  EXPECT_NEAR(p[2], 1.0, 1e-15);
  // Cell boundary lands on the equator.
  EXPECT_NEAR(z.psi(VecN{0.0, 0.3})[2], 0.0, 1e-15);
  EXPECT_NEAR(z.psi(VecN{0.7, 1.0})[2], 0.0, 1e-15);
  // Lower half of Q covers the lower hemisphere.
  EXPECT_NEAR(z.psi(VecN{0.5, 1.5})[2], -1.0, 1e-15);
}

TEST(Zorich, InverseExamples) {
  const ZorichMap z2(2);
  const BeamPoint a = z2.inverse(VecN{std::numbers::e, 0.0});
  EXPECT_NEAR(a.base(0), 0.0, 1e-15);
  EXPECT_NEAR(a.height(), 1.0, 1e-15);

  const ZorichMap z3(3);
  const BeamPoint b = z3.inverse(VecN{0.0, 0.0, -1.0});
  // Hand inversion: reflect to the pole, centre of the unit cell, then u2 -> 2 - u2.
  EXPECT_NEAR(b.base(0), 0.5, 1e-15);
  EXPECT_NEAR(b.base(1), 1.5, 1e-15);
  EXPECT_NEAR(b.height(), 0.0, 1e-15);

  EXPECT_THROW(z2.inverse(VecN{0.0, 0.0}), DomainError);
  EXPECT_THROW(z3.inverse(VecN{0.0, 0.0, 0.0}), DomainError);
}

TEST(Zorich, EquatorTieGoesUp) {
  const ZorichMap z(3);
  const BeamPoint b = z.inverse(VecN{1.0, 0.2, 0.0});
  EXPECT_LE(b.base(1), 1.0);
}

class ZorichDim : public ::testing::TestWithParam<int> {};

TEST_P(ZorichDim, NormIdentityAndScaling) {
  const int n = GetParam();
  const ZorichMap z(n);
  Rng rng(5, static_cast<std::uint64_t>(n));
  for (int k = 0; k < 10000; ++k) {
    const BeamPoint x = random_point(rng, n);
    const VecN y = z(x);
    EXPECT_NEAR(norm(y) / std::exp(x.height()), 1.0, 1e-12);
    const VecN y0 = z(BeamPoint(x.base(), 0.0)) * std::exp(x.height());
    EXPECT_LE(norm(y - y0), 1e-12 * norm(y));
  }
}

TEST_P(ZorichDim, Automorphy) {
  const int n = GetParam();
  const ZorichMap z(n);
  EXPECT_LT(verify_automorphy(z, 10000, 9), n == 2 ? 1e-12 : 1e-9);
  const std::vector<LatticeGroupElement> id{LatticeGroupElement::identity(n - 1)};
  EXPECT_EQ(verify_automorphy(z, 100, 9, id), 0.0);
  EXPECT_THROW(verify_automorphy(z, 0, 9), InvalidInput);
}

TEST_P(ZorichDim, RoundTrip) {
  const int n = GetParam();
  const ZorichMap z(n);
  Rng rng(6, static_cast<std::uint64_t>(n));
  for (int k = 0; k < 10000; ++k) {
    const BeamPoint x = random_point(rng, n);
    const BeamPoint back = z.inverse(z(x));
    EXPECT_LT(z.quotient_distance(back, x), 1e-9);
    EXPECT_TRUE(z.group().in_fundamental(back.base(), 1e-12));
    const VecN y = z(x);
    EXPECT_LT(norm(z(back) - y), 1e-9 * norm(y));
  }
}

TEST_P(ZorichDim, HintSelectsNearestRepresentative) {
  const int n = GetParam();
  const ZorichMap z(n);
  Rng rng(8, static_cast<std::uint64_t>(n));
  for (int k = 0; k < 2000; ++k) {
    const BeamPoint x = random_point(rng, n, -5.0, 5.0);
    const BeamPoint got = z.inverse(z(x), x);
    EXPECT_LT(distance(got, x), 1e-9);
  }
}

TEST_P(ZorichDim, JacobianMatchesFiniteDifferences) {
  const int n = GetParam();
  const ZorichMap z(n);
  Rng rng(10, static_cast<std::uint64_t>(n));
  for (int k = 0; k < 200; ++k) {
    BeamPoint x = random_point(rng, n, 0.05, 0.95);
    if (n == 3 && std::abs(std::abs(x.base(0) - 0.5) - std::abs(x.base(1) - 0.5)) < 1e-3) continue;
    SmallMat m(n);
    const double h = 1e-6;
    for (int j = 0; j < n; ++j) {
      BeamPoint p = x, q = x;
      p.vec()[j] += h;
      q.vec()[j] -= h;
      const VecN d = (z(p) - z(q)) * (0.5 / h);
      for (int i = 0; i < n; ++i) m(i, j) = d[i];
    }
    EXPECT_NEAR(std::abs(determinant(m)) / z.jacobian(x), 1.0, 1e-6);
  }
}

TEST_P(ZorichDim, SliceBracketIsModerate) {
  const ZorichMap z(GetParam());
  const double c = slice_lipschitz_bracket(z, 20000, 4);
  EXPECT_GE(c, 1.0);
  EXPECT_LE(c, 4.0);
}

INSTANTIATE_TEST_SUITE_P(Dims, ZorichDim, ::testing::Values(2, 3));
