#include <gtest/gtest.h>

#include <cmath>

#include "collapse/family_builder.hpp"
#include "collapse/gaussian_core.hpp"

using namespace collapse;

namespace {

FamilySpec p_spec(FamilyKind k, double R, int n = 1) {
  FamilySpec s;
  s.family = k;
  s.R = R;
  s.n = n;
  return s;
}

FamilySpec q_spec(FamilyKind k, double R, int m, int n = 1) {
  FamilySpec s = p_spec(k, R, n);
  s.m = m;
  return s;
}

bool same_terms(const WavepacketSum& a, const WavepacketSum& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& x = a.terms()[k];
    const auto& y = b.terms()[k];
    if (x.center != y.center || x.modulation != y.modulation || x.amplitude != y.amplitude || x.width != y.width)
      return false;
  }
  return true;
}

}  // namespace

TEST(TubeConstant, CalibratedValues) {
  EXPECT_EQ(calibrated_tube_constant(BlockSignature::lambda(1)), 2.0);
  EXPECT_EQ(calibrated_tube_constant(BlockSignature::lambda(2)), 3.0);
  EXPECT_EQ(calibrated_tube_constant(BlockSignature::gamma(1)), 2.0);
  EXPECT_EQ(calibrated_tube_constant(BlockSignature::g(1)), 3.0);
}

TEST(SpherePoints, LargeCircleArc) {
  const PointCloud c = sphere_points(1024.0, 1, 0, true);
  EXPECT_GE(c.size(), 10u);
  EXPECT_LE(c.size(), 33u);
  EXPECT_EQ(check_point_cloud(c), "");
  for (std::size_t k = 1; k < c.size(); ++k)
    EXPECT_NEAR(std::sqrt(distance2(c.points[k], c.points[k - 1])), 32.0, 1e-9);
}

TEST(SpherePoints, SmallestScale) {
  const PointCloud c = sphere_points(4.0, 1, 0, true);
  EXPECT_GE(c.size(), 1u);
  EXPECT_EQ(check_point_cloud(c), "");
}

TEST(SpherePoints, HigherDimensionEnvelope) {
  for (double R : {16.0, 64.0}) {
    const PointCloud c = sphere_points(R, 2, 7, true);
    EXPECT_EQ(check_point_cloud(c), "");
    EXPECT_LE(c.size(), static_cast<std::size_t>(std::ceil(std::pow(R, 1.5))));
    EXPECT_GE(c.size(), static_cast<std::size_t>(std::floor(std::pow(R, 1.5) / 20.0)));
  }
}

TEST(SpherePoints, FloorOffUsesWholeCircle) {
  const PointCloud c = sphere_points(256.0, 1, 0, false);
  EXPECT_EQ(c.size(), 16u);
  EXPECT_EQ(check_point_cloud(c), "");
}

TEST(BallLattice, DirectCounts) {
  EXPECT_EQ(ball_lattice_points(16.0, 1, 1, 1 << 20).size(), 9u);
  const PointCloud c = ball_lattice_points(64.0, 2, 1, 1 << 20);
  EXPECT_EQ(c.size(), 1025u);
  EXPECT_DOUBLE_EQ(min_pairwise_distance(c), 8.0);
}

TEST(BallLattice, TwoDimensionalSpacing) {
  const PointCloud c = ball_lattice_points(16.0, 1, 2, 1 << 20);
  EXPECT_DOUBLE_EQ(min_pairwise_distance(c), 4.0);
  EXPECT_EQ(check_point_cloud(c), "");
  // |k|^2 <= 16 in Z^2
  EXPECT_EQ(c.size(), 49u);
}

TEST(BallLattice, CapRaisesResourceError) {
  try {
    ball_lattice_points(64.0, 2, 1, 1000);
    FAIL() << "expected ResourceError";
  } catch (const ResourceError& e) {
    EXPECT_EQ(e.required(), 1025u);
    EXPECT_NE(std::string(e.what()).find("1025"), std::string::npos);
  }
}

TEST(LambdaP, UnitModulationsAndPhaseLaw) {
  const WavepacketSum s = build_lambda_p(p_spec(FamilyKind::LambdaP, 64.0));
  EXPECT_EQ(s.signature(), BlockSignature::lambda(1));
  for (const auto& t : s.terms()) {
    EXPECT_NEAR(std::sqrt(norm2(t.modulation)), 1.0, 1e-12);
    EXPECT_NEAR(s.signature().dispersion(t.modulation), 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(t.width, s.meta().C * 64.0);
  }
  EXPECT_GE(s.size(), 1u);
  EXPECT_LE(s.size(), 8u);
}

TEST(LambdaP, GramBoundAtSmallScale) {
  const WavepacketSum s = build_lambda_p(p_spec(FamilyKind::LambdaP, 64.0));
  const double A = 4.0 * std::sqrt(kPi * s.meta().C) * std::sqrt(static_cast<double>(s.size()));
  EXPECT_LE(gram_l2_norm(s), A * std::pow(64.0, 0.75));
}

TEST(LambdaP, FocusesAtOriginAtTimeR) {
  for (double R : {64.0, 256.0}) {
    const WavepacketSum s = build_lambda_p(p_spec(FamilyKind::LambdaP, R));
    const RealVec origin{0.0, 0.0};
    EXPECT_GE(std::abs(evolve_eval(s, R, origin)), 0.25 * s.size());
  }
}

TEST(LambdaQ, SharedModulationAndCount) {
  const WavepacketSum s = build_lambda_q(q_spec(FamilyKind::LambdaQ, 64.0, 2));
  EXPECT_LE(s.size(), 2 * 512u + 1);
  EXPECT_GE(s.size(), 256u);
  for (const auto& t : s.terms()) {
    EXPECT_EQ(t.modulation, (RealVec{1.0, 1.0}));
    EXPECT_EQ(t.center[0], t.center[1]);
  }
}

TEST(LambdaQ, DiagonalAtLatticePoints) {
  const WavepacketSum s = build_lambda_q(q_spec(FamilyKind::LambdaQ, 16.0, 1));
  for (const auto& t : s.terms()) {
    const RealVec x{t.center[0], t.center[0]};
    EXPECT_GE(std::abs(evolve_eval(s, 0.0, x)), 0.9);
  }
}

TEST(GammaP, ZeroTimePhaseAndConstraints) {
  FamilySpec spec = p_spec(FamilyKind::GammaP, 256.0);
  const WavepacketSum s = build_gamma_p(spec);
  const PointCloud c = family_points(spec);
  EXPECT_EQ(check_point_cloud(c), "");
  EXPECT_GE(min_pairwise_distance(c), 16.0);
  for (const auto& t : s.terms()) {
    EXPECT_LE(std::abs(s.signature().dispersion(t.modulation)), 1e-9);
    const double nrm = std::sqrt(norm2(t.modulation));
    EXPECT_GE(nrm, 0.5 * std::sqrt(2.0) / 2.0);
    EXPECT_LE(nrm, std::sqrt(2.0) + 1e-12);
    EXPECT_GE(t.modulation[0], 0.1);
    EXPECT_GE(t.modulation[1], 0.1);
    // points on y = -x
    EXPECT_NEAR(t.center[0], -t.center[1], 1e-9 * 256.0);
  }
}

TEST(GammaP, HigherDimensionConstraints) {
  FamilySpec spec = p_spec(FamilyKind::GammaP, 64.0, 2);
  const PointCloud c = family_points(spec);
  EXPECT_EQ(check_point_cloud(c), "");
  EXPECT_GE(c.size(), static_cast<std::size_t>(std::floor(std::pow(64.0, 1.5) / 20.0)));
}

TEST(GammaQ, DriftOfEvolvedCenters) {
  const WavepacketSum s = build_gamma_q(q_spec(FamilyKind::GammaQ, 16.0, 1));
  const double t = 0.75;
  for (const auto& term : s.terms()) {
    EXPECT_EQ(term.modulation, (RealVec{1.0, 0.0}));
    // |evolved term| peaks where x = -x_k + t xi and y = -x_k
    const double xk = -term.center[0];
    const RealVec peak{-xk + t, -xk};
    const double at_peak = std::abs(evolve_eval(term, s.signature(), t, peak));
    for (double dx : {-0.3, 0.3}) {
      EXPECT_LT(std::abs(evolve_eval(term, s.signature(), t, RealVec{peak[0] + dx, peak[1]})), at_peak);
      EXPECT_LT(std::abs(evolve_eval(term, s.signature(), t, RealVec{peak[0], peak[1] + dx})), at_peak);
    }
  }
}

TEST(GammaQ, DiagonalLowerBound) {
  const WavepacketSum s = build_gamma_q(q_spec(FamilyKind::GammaQ, 16.0, 1));
  for (double t : {0.0, 0.5, 1.0})
    for (std::size_t k = 0; k < s.size(); k += 2) {
      const double x = t - (-s.terms()[k].center[0]);
      EXPECT_GE(std::abs(evolve_eval(s, t, RealVec{x, x})), 0.5);
    }
}

TEST(GP, ConeConstraintAndPhase) {
  FamilySpec spec = p_spec(FamilyKind::GP, 64.0);
  const WavepacketSum s = build_g_p(spec);
  EXPECT_EQ(check_point_cloud(family_points(spec)), "");
  EXPECT_LE(s.size(), static_cast<std::size_t>(std::ceil(64.0)));
  for (const auto& t : s.terms()) {
    EXPECT_LE(std::abs(s.signature().dispersion(t.modulation)), 1e-9);
    const double nrm = std::sqrt(norm2(t.modulation));
    EXPECT_GE(nrm, 0.5);
    EXPECT_LE(nrm, 2.0);
  }
}

TEST(GQ, ModulationAndCenters) {
  const WavepacketSum s = build_g_q(q_spec(FamilyKind::GQ, 16.0, 1));
  for (const auto& t : s.terms()) {
    EXPECT_EQ(t.modulation, (RealVec{1.0, 1.0, -1.0}));
    EXPECT_NEAR(s.signature().dispersion(t.modulation), 1.0, 1e-15);
    EXPECT_EQ(t.center[0], t.center[1]);
    EXPECT_EQ(t.center[0], t.center[2]);
  }
  for (double t : {0.0, 0.25, 0.5, 1.0})
    for (std::size_t k = 0; k < s.size(); k += 3) {
      const double x = t - (-s.terms()[k].center[0]);
      EXPECT_GE(std::abs(evolve_eval(s, t, RealVec{x, x, x})), 0.5);
    }
}

TEST(Builders, DeterministicRebuilds) {
  for (FamilyKind k : {FamilyKind::LambdaP, FamilyKind::GammaP, FamilyKind::GP}) {
    FamilySpec spec = p_spec(k, 16.0, 2);
    spec.seed = 11;
    EXPECT_TRUE(same_terms(build_family(spec), build_family(spec)));
  }
  FamilySpec q = q_spec(FamilyKind::LambdaQ, 16.0, 2, 2);
  EXPECT_TRUE(same_terms(build_family(q), build_family(q)));
}

TEST(Builders, SeedChangesHigherDimensionalPlacement) {
  FamilySpec a = p_spec(FamilyKind::LambdaP, 64.0, 2);
  FamilySpec b = a;
  b.seed = 99;
  EXPECT_FALSE(same_terms(build_family(a), build_family(b)));
}

TEST(Builders, ValidationNamesField) {
  FamilySpec s = p_spec(FamilyKind::LambdaP, 2.0);
  try {
    build_family(s);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("R"), std::string::npos);
  }
  FamilySpec q = q_spec(FamilyKind::LambdaQ, 16.0, 1);
  q.direction = {0.6, 0.6};
  EXPECT_THROW(build_family(q), ConfigError);
  FamilySpec wrong = p_spec(FamilyKind::GammaP, 16.0);
  EXPECT_THROW(build_lambda_p(wrong), ContractViolation);
}

TEST(Builders, EmptyRegionReportsAchievedZero) {
  try {
    detail::require_nonempty({}, "sphere_points");
    FAIL();
  } catch (const ConstructionError& e) {
    EXPECT_EQ(e.achieved(), 0u);
  }
}
