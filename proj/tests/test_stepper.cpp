#include <gtest/gtest.h>

#include <numbers>

#include "dualsav/flows.hpp"
#include "dualsav/stepper.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dualsav;
using namespace dualsav::testing;

namespace {

FlowPreset small_preset(const std::string& name) {
  PresetOverrides o;
  o.vertices = 8;
  return preset(name, o);
}

}  // namespace

TEST(Stepper, UnstabilizedL2ResponseIsDiagonalSolve) {
  const PolygonalCurve c(jittered_polygon(20, 3));
  FlowConfig cfg;
  cfg.beta_nu2 = 0.0;
  cfg.beta_tau = 0.0;
  const AssembledStep step = assemble_step(c, cfg);
  const ResponseSet resp = compute_responses(step, cfg);
  const Vector expected = -step.geometric_load.cwiseQuotient(step.masses);
  EXPECT_LE((resp.geometric - expected).lpNorm<Eigen::Infinity>(), 1e-13);
  EXPECT_LE((resp.mesh + step.mesh_load.cwiseQuotient(step.masses)).lpNorm<Eigen::Infinity>(), 1e-10);
  EXPECT_EQ(resp.solves, 2);
}

TEST(Stepper, ResponseCountIsTwoPlusConstraints) {
  const FlowPreset p = small_preset("helfrich");
  const PolygonalCurve c = make_initial_curve(p.initial);
  EXPECT_EQ(compute_responses(assemble_step(c, p.config), p.config).solves, 4);
}

TEST(Stepper, SynthesisIsLinearInXi) {
  const FlowPreset p = small_preset("helfrich");
  const PolygonalCurve c = make_initial_curve(p.initial);
  const AssembledStep step = assemble_step(c, p.config);
  const ResponseSet resp = compute_responses(step, p.config);
  const std::vector<double> la{0.3, -1.2}, lb{2.0, 0.7};
  const ReducedUnknowns a(1.5, la), b(-0.4, lb);
  const ReducedUnknowns ab(Vector(2.0 * a.values + 3.0 * b.values));
  const Vector lhs = synthesize_normal(ab, resp, step);
  const Vector rhs = 2.0 * synthesize_normal(a, resp, step) + 3.0 * synthesize_normal(b, resp, step);
  EXPECT_LE((lhs - rhs).norm(), 1e-12 * rhs.norm());
  const Vector vg = synthesize_normal(ReducedUnknowns(step.shift_geom, std::vector<double>{0.0, 0.0}), resp, step);
  EXPECT_LE((vg - resp.geometric).norm(), 1e-14 * vg.norm());
}

TEST(Stepper, UnconstrainedSavHasClosedForm) {
  const FlowPreset p = preset("csf");
  const PolygonalCurve c(jittered_polygon(64, 17, 0.05));
  const FlowConfig& cfg = p.config;
  const SavState sav = SavState::initial(c, cfg);
  const ConstraintTargets targets = ConstraintTargets::from_curve(c, cfg);
  const StepResult r = advance(c, sav, cfg, targets);
  const AssembledStep step = assemble_step(c, cfg);
  const ResponseSet resp = compute_responses(step, cfg);
  const double s = step.shift_geom;
  const double expected = sav.r_g / (1.0 - cfg.dt / (2.0 * s * s) * step.geometric_load.dot(resp.geometric));
  EXPECT_NEAR(r.sav.r_g, expected, 1e-14 * expected);
  EXPECT_LE(r.report.newton_iterations, 2);
}

TEST(Stepper, MeshDenominatorIsAtLeastOne) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const PolygonalCurve c(jittered_polygon(30, seed, 0.3));
    for (MeshWeight w : {MeshWeight::Uniform, MeshWeight::LagrangianReference}) {
      FlowConfig cfg;
      cfg.beta_tau = 100.0;
      cfg.mesh_weight = w;
      const AssembledStep step = assemble_step(c, cfg);
      const ResponseSet resp = compute_responses(step, cfg);
      EXPECT_GE(mesh_sav_denominator(step.shift_mesh, step.mesh_load, resp.mesh, cfg.dt), 1.0);
    }
  }
}

TEST(Stepper, ReducedJacobianMatchesFiniteDifferences) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const std::string name : {"csf", "apcsf", "cdf", "helfrich"}) {
    PresetOverrides o;
    o.vertices = 24;
    const FlowPreset p = preset(name, o);
    const PolygonalCurve c = make_initial_curve(p.initial);
    const FlowConfig& cfg = p.config;
    const SavState sav = SavState::initial(c, cfg);
    const ConstraintTargets targets = ConstraintTargets::from_curve(c, cfg);
    const AssembledStep step = assemble_step(c, cfg);
    const ResponseSet resp = compute_responses(step, cfg);
    const Vector vtau = (sav.r_m / step.shift_mesh) * resp.mesh;
    const ReducedSystem sys(step, resp, c, vtau, cfg.dt, sav.r_g, targets);
    for (int trial = 0; trial < 5; ++trial) {
      Vector xi(sys.dimension());
      xi[0] = sav.r_g * (1.0 + 0.2 * u(gen));
      for (Eigen::Index i = 1; i < xi.size(); ++i) xi[i] = u(gen);
      EXPECT_LE(jacobian_fd_error(sys, ReducedUnknowns(xi)), 1e-6) << name;
    }
  }
}

TEST(Stepper, ShrinkingCircleStep) {
  PresetOverrides o;
  o.vertices = 128;
  const FlowPreset p = preset("csf", o);
  const PolygonalCurve c = make_initial_curve(p.initial);
  const SavState sav = SavState::initial(c, p.config);
  const StepResult r = advance(c, sav, p.config, ConstraintTargets::from_curve(c, p.config));
  const double exact = std::sqrt(1.0 - 2.0 * p.config.dt);
  for (const Vec2& x : r.curve.vertices()) EXPECT_NEAR(x.norm(), exact, 5e-4 * p.config.dt + 1e-4);
  // rotation symmetry keeps the nodes equally spaced and moves them purely inward
  const auto l = edge_lengths(r.curve.vertices());
  EXPECT_NEAR(*std::max_element(l.begin(), l.end()) / *std::min_element(l.begin(), l.end()), 1.0, 1e-12);
  EXPECT_LE(r.report.tangential_velocity.lpNorm<Eigen::Infinity>(), 1e-10);
  EXPECT_LT(r.sav.r_g, sav.r_g);
}

class MonolithicOracle : public ::testing::TestWithParam<std::string> {};

TEST_P(MonolithicOracle, ReducedStepSolvesFullSystem) {
  const FlowPreset p = small_preset(GetParam());
  const FlowConfig& cfg = p.config;
  PolygonalCurve c = make_initial_curve(p.initial);
  SavState sav = SavState::initial(c, cfg);
  const ConstraintTargets targets = ConstraintTargets::from_curve(c, cfg);
  for (int n = 0; n < 5; ++n) {
    const std::vector<Vec2> x(c.vertices().begin(), c.vertices().end());
    StepResult r = advance(c, sav, cfg, targets);
    const MonolithicResidual res = monolithic_residual(x, cfg, sav, targets, r);
    EXPECT_LE(res.max(), 1e-9) << "step " << n << ": normal " << res.normal << " tangential " << res.tangential
                               << " r_g " << res.sav_geom << " r_m " << res.sav_mesh << " constraints "
                               << res.constraints;
    EXPECT_TRUE(r.report.dissipation_check_g);
    EXPECT_TRUE(r.report.dissipation_check_m);
    c = std::move(r.curve);
    sav = r.sav;
  }
}

INSTANTIATE_TEST_SUITE_P(Flows, MonolithicOracle, ::testing::Values("csf", "apcsf", "cdf", "helfrich"));

TEST(Stepper, ConstraintsHoldToNewtonTolerance) {
  PresetOverrides o;
  o.vertices = 64;
  const FlowPreset p = preset("helfrich", o);
  PolygonalCurve c = make_initial_curve(p.initial);
  SavState sav = SavState::initial(c, p.config);
  const ConstraintTargets targets = ConstraintTargets::from_curve(c, p.config);
  for (int n = 0; n < 10; ++n) {
    StepResult r = advance(c, sav, p.config, targets);
    EXPECT_NEAR(r.curve.area(), targets.values[0], 1e-12 * targets.values[0]);
    EXPECT_NEAR(r.curve.length(), targets.values[1], 1e-12 * targets.values[1]);
    EXPECT_EQ(r.report.multipliers.size(), 2u);
    c = std::move(r.curve);
    sav = r.sav;
  }
}

TEST(Stepper, IterationCapRaisesNewtonDivergence) {
  PresetOverrides o;
  o.vertices = 32;
  o.newton_max_iterations = 1;
  const FlowPreset p = preset("helfrich", o);
  const PolygonalCurve c = make_initial_curve(p.initial);
  try {
    advance(c, SavState::initial(c, p.config), p.config, ConstraintTargets::from_curve(c, p.config));
    FAIL() << "expected NewtonDivergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NewtonDivergence);
  }
}

TEST(Stepper, ResidualAtZeroSavIsRejected) {
  const FlowPreset p = small_preset("apcsf");
  const PolygonalCurve c = make_initial_curve(p.initial);
  const SavState sav = SavState::initial(c, p.config);
  const ConstraintTargets targets = ConstraintTargets::from_curve(c, p.config);
  const AssembledStep step = assemble_step(c, p.config);
  const ResponseSet resp = compute_responses(step, p.config);
  const Vector vtau = Vector::Zero(8);
  const ReducedSystem sys(step, resp, c, vtau, p.config.dt, sav.r_g, targets);
  try {
    sys.residual(ReducedUnknowns(0.0, std::vector<double>{1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroGeometricSav);
  }
}

TEST(Stepper, CollapsedUpdateIsDegenerate) {
  std::vector<Vec2> x = regular_polygon(6);
  x[1] = x[0];
  try {
    checked_curve(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateUpdate);
  }
}

TEST(Stepper, WarmStartReachesSameSolution) {
  PresetOverrides o;
  o.vertices = 48;
  FlowPreset p = preset("apcsf", o);
  const PolygonalCurve c = make_initial_curve(p.initial);
  const SavState sav = SavState::initial(c, p.config);
  const ConstraintTargets targets = ConstraintTargets::from_curve(c, p.config);
  const StepResult cold = advance(c, sav, p.config, targets);
  p.config.newton.warm_start = true;
  const StepResult warm = advance(c, sav, p.config, targets, cold.report.multipliers);
  EXPECT_NEAR(warm.sav.r_g, cold.sav.r_g, 1e-12);
  EXPECT_NEAR(warm.report.multipliers[0], cold.report.multipliers[0], 1e-9 * std::abs(cold.report.multipliers[0]));
  EXPECT_LE(warm.report.newton_iterations, cold.report.newton_iterations);
}
