#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "qcgrowth/mapzoo.hpp"
#include "qcgrowth/sampling.hpp"

using namespace qcg;

namespace {

double fd_det(const QCMap& f, const VecN& x, double h) {
  SmallMat m(f.n);
  for (int j = 0; j < f.n; ++j) {
    VecN p = x, q = x;
    p[j] += h;
    q[j] -= h;
    const VecN d = (f.eval(p) - f.eval(q)) * (0.5 / h);
    for (int i = 0; i < f.n; ++i) m(i, j) = d[i];
  }
  return determinant(m);
}

VecN random_in_ball(Rng& rng, int n, double r) { return rng.in_ball(n) * r; }

}  // namespace

TEST(Zoo, ContentsPerDimension) {
  auto has = [](const std::vector<QCMap>& z, const std::string& l) {
    for (const auto& f : z)
      if (f.label == l) return true;
    return false;
  };
  const auto z2 = builtin_zoo(2);
  for (const char* l : {"identity", "scalar", "diag", "power", "log-corrected", "spiral", "snowflake"}) EXPECT_TRUE(has(z2, l)) << l;
  int snow = 0;
  for (const auto& f : z2) snow += f.label == "snowflake";
  EXPECT_EQ(snow, 5);
  const auto z3 = builtin_zoo(3);
  EXPECT_TRUE(has(z3, "power"));
  EXPECT_FALSE(has(z3, "spiral"));
  EXPECT_THROW(builtin_zoo(4), InvalidInput);
  EXPECT_THROW(make_map("nope", 2), InvalidInput);
}

TEST(Zoo, FixesOriginAndJacobiansMatchDifferences) {
  for (int n : {2, 3})
    for (const auto& f : builtin_zoo(n)) {
      const VecN y = f.eval(VecN(n));
      EXPECT_EQ(norm(y), 0.0) << f.label;
      if (f.label == "snowflake") continue;  // piecewise affine, handled below
      Rng rng(3, static_cast<std::uint64_t>(n));
      for (int k = 0; k < 200; ++k) {
        const VecN x = random_in_ball(rng, n, std::exp(std::min(f.M, 0.0) - 0.5));
        if (norm(x) < 1e-3) continue;
        const double ja = f.jacobian(x);
        const double jf = fd_det(f, x, 1e-6 * norm(x));
        EXPECT_NEAR(jf / ja, 1.0, 1e-5) << f.label;
      }
    }
}

TEST(Zoo, RadialMapsPreserveSpheres) {
  for (int n : {2, 3}) {
    const QCMap p = make_map("power", n, {{"d", 2.5}});
    const QCMap lc = make_map("log-corrected", n);
    Rng rng(4, static_cast<std::uint64_t>(n));
    for (int k = 0; k < 1000; ++k) {
      const VecN x = random_in_ball(rng, n, 0.3);
      const double r = norm(x);
      EXPECT_NEAR(norm(p(x)), std::pow(r, 2.5), 1e-12 * std::pow(r, 2.5));
      const double hl = r * r / std::log(1.0 / r);
      EXPECT_NEAR(norm(lc(x)), hl, 1e-12 * hl);
    }
  }
}

TEST(Zoo, RadialDilatation) {
  for (double d : {0.5, 2.0, 3.0}) EXPECT_NEAR(radial_dilatation(power_profile(d), 0.3), (d - 1.0) / (d + 1.0), 1e-14);
}

TEST(Zoo, LogCorrectedLogTransform) {
  const auto p = log_corrected_profile(2.0);
  for (double t : {-2.0, -10.0, -40.0}) EXPECT_NEAR(p.log_transform(t), 2.0 * t - std::log(-t), 1e-12);
  const auto [c1, c2] = p.slope_bounds(-60.0, -1.0);
  EXPECT_GT(c1, 1.0);
  EXPECT_LE(c2, 3.0 + 1e-9);
}

TEST(Zoo, NonMonotoneProfileRejected) {
  RadialProfile bad{"bad", [](double r) { return r * (2.0 + std::sin(1.0 / r)); }, {}};
  EXPECT_THROW(radial_map(bad, 2), InvalidInput);
}

TEST(Zoo, SpiralIsVolumePreservingAndNormPreserving) {
  const QCMap s = make_map("spiral", 2, {{"c", 1.0}});
  Rng rng(5, 0);
  for (int k = 0; k < 500; ++k) {
    const VecN x = random_in_ball(rng, 2, 0.9);
    EXPECT_NEAR(norm(s(x)), norm(x), 1e-14);
    EXPECT_NEAR(fd_det(s, x, 1e-7 * norm(x)), 1.0, 1e-6);
  }
}

TEST(Zoo, DomainEnforced) {
  const QCMap f = make_map("log-corrected", 2);
  EXPECT_THROW(f(VecN{0.5, 0.0}), DomainError);
  EXPECT_NO_THROW(f(VecN{0.3, 0.0}));
}

TEST(Snowflake, LevelZeroIsIdentity) {
  const QCMap f = make_map("snowflake", 2, {{"L", 0}});
  Rng rng(6, 0);
  for (int k = 0; k < 2000; ++k) {
    const VecN x = random_in_ball(rng, 2, std::exp(-1.0));
    if (norm(x) < 1e-9) continue;
    const VecN y = f(x);
    EXPECT_LT(norm(y - x), 1e-12 * norm(x));
  }
}

TEST(Snowflake, IdentityOffSquares) {
  SnowflakeBeamSpec spec;
  spec.level = 3;
  const SnowflakeBeam beam(spec);
  const QCMap f = snowflake_beam_map(spec);
  const ZorichMap z(2);
  Rng rng(7, 0);
  int checked = 0;
  for (int k = 0; k < 5000; ++k) {
    const BeamPoint x(VecN{rng.uniform(0.0, 2.0)}, rng.uniform(-14.0, -1.01));
    if (beam.square_of(x) != 0) continue;
    const VecN y = z(x);
    EXPECT_LT(norm(f(y) - y), 1e-12 * norm(y));
    ++checked;
  }
  EXPECT_GT(checked, 3000);
  // Below every square the map is the identity as well.
  const VecN deep{std::exp(-20.0), 0.0};
  EXPECT_LT(norm(f(deep) - deep), 1e-12 * norm(deep));
}

TEST(Snowflake, SquaresAreDisjointAndInsideDomain) {
  SnowflakeBeamSpec spec;
  const auto ds = spec.active_squares();
  ASSERT_FALSE(ds.empty());
  EXPECT_EQ(ds.front(), -3);
  EXPECT_EQ(ds.back(), -12);
  for (std::size_t i = 0; i + 1 < ds.size(); ++i)
    EXPECT_LT(ds[i + 1] + spec.half_side(ds[i + 1]), ds[i] - spec.half_side(ds[i]));
  EXPECT_LT(ds.front() + spec.half_side(ds.front()), spec.M);
}

TEST(Snowflake, ImageDiameterShrinksRelativeToRadius) {
  // Z(S_d) lies in the annular sector e^{d -+ hs}, angular width pi / |d|, so its
  // diameter is at most the radial thickness plus the outer arc.
  SnowflakeBeamSpec spec;
  const ZorichMap z(2);
  double prev = std::numeric_limits<double>::infinity();
  for (int d : spec.active_squares()) {
    const double hs = spec.half_side(d);
    double diam = 0.0;
    std::vector<VecN> pts;
    for (int i = 0; i <= 40; ++i)
      for (int j = 0; j <= 40; ++j) pts.push_back(z(BeamPoint(VecN{1.0 - hs + 2 * hs * i / 40}, d - hs + 2 * hs * j / 40)));
    for (std::size_t a = 0; a < pts.size(); a += 7)
      for (std::size_t b = 0; b < pts.size(); ++b) diam = std::max(diam, distance(pts[a], pts[b]));
    const double radial = std::exp(d + hs) - std::exp(d - hs);
    EXPECT_GE(diam, radial * (1.0 - 1e-12)) << d;
    EXPECT_LE(diam, radial + std::exp(d + hs) * std::numbers::pi / std::abs(d)) << d;
    const double rel = diam / std::exp(d);
    EXPECT_LT(rel, prev);
    prev = rel;
  }
}

TEST(Snowflake, GradedLevels) {
  SnowflakeBeamSpec spec;
  spec.level = 4;
  EXPECT_EQ(spec.level_at(-3), 0);
  EXPECT_EQ(spec.level_at(-5), 2);
  EXPECT_EQ(spec.level_at(-8), 4);
  spec.graded = false;
  EXPECT_EQ(spec.level_at(-3), 4);
}

TEST(Snowflake, ExactVolumeMatchesGridIntegration) {
  for (int L : {0, 2, 4}) {
    SnowflakeBeamSpec spec;
    spec.level = L;
    const SnowflakeBeam beam(spec);
    const QCMap f = snowflake_beam_map(spec);
    for (double s : {-8.02, -8.0, -7.97, -5.05, -4.5}) {
      // Oracle: int_{E} J_f~(x) pi e^{2 f~_t(x)} dx over the part of the square below s.
      const int d = static_cast<int>(std::lround(s));
      const double hs = spec.half_side(d);
      const int res = 1200;
      double corr = 0.0;
      const double cell = 2.0 * hs / res;
      for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
          const BeamPoint x(VecN{1.0 - hs + (i + 0.5) * cell}, d - hs + (j + 0.5) * cell);
          if (x.height() >= s || std::abs(x.height() - d) > hs) continue;
          const BeamPoint y = beam(x);
          corr += (beam.jacobian(x) * std::exp(2.0 * y.height()) - std::exp(2.0 * x.height())) * cell * cell;
        }
      corr *= std::numbers::pi;
      const double r = std::exp(s);
      const double v = f.exact_volume(r);
      EXPECT_NEAR(v - std::numbers::pi * r * r, corr, 2e-3 * std::numbers::pi * r * r * hs + 1e-16) << "L=" << L << " s=" << s;
      if (L == 0) {
        EXPECT_NEAR(v, std::numbers::pi * r * r, 1e-15 * v);
      }
    }
  }
}

TEST(Snowflake, DividedDifferenceAgreesWithQuadrature) {
  // int over the triangle (0,0),(1,0),(0,1) of e^{2y}: (e^2 - 3) / 4.
  EXPECT_NEAR(detail::integrate_exp2t({0, 0}, {1, 0}, {0, 1}), (std::exp(2.0) - 3.0) / 4.0, 1e-14);
  // Nearly flat triangle goes through the series branch; the oracle drops the
  // quadratic term (relative size ~1e-8).
  const double v = detail::integrate_exp2t({0, 1}, {1, 1 + 1e-5}, {0, 1 + 2e-4});
  EXPECT_NEAR(v, 1e-4 * std::exp(2.0 + 2.0 * (1e-5 + 2e-4) / 3.0), 1e-11);
}

TEST(Zoo, CatalogListing) {
  const std::string s = list_zoo();
  EXPECT_NE(s.find("identity"), std::string::npos);
  EXPECT_NE(s.find("log-corrected"), std::string::npos);
  EXPECT_NE(s.find("snowflake"), std::string::npos);
  EXPECT_NE(s.find("L (0..4)"), std::string::npos);
}
