#include <gtest/gtest.h>

#include <mixsmpc/closedloop.hpp>

#include "case_study.hpp"

using namespace mixsmpc;
using fixtures::interval;
using fixtures::scalar;

namespace {

ClosedLoopConfig quiet_config(double x0)
{
  const GaussianMixture quiet({Vector::Zero(1)}, Vector::Ones(1), scalar(1e-12));
  const auto em = ErrorModel::from_mixture(scalar(1.0), scalar(1.0), scalar(-1.0), quiet);
  const auto spec = fixtures::road_spec();
  const auto sets = tighten(em, spec);
  auto cfg = fixtures::road_closed_loop_config();
  cfg.bmpc.Z = sets.Z;
  cfg.bmpc.V = sets.V;
  cfg.bmpc.atoms = quiet.decouple().first.atoms;
  cfg.bmpc.weights = quiet.weights();
  cfg.bmpc.Z_F = terminal_set(em, sets.Z, sets.V, cfg.bmpc.atoms);
  cfg.mixture = quiet;
  cfg.x0 = Vector::Constant(1, x0);
  return cfg;
}

}  // namespace

TEST(ClosedLoop, RelationHoldsExactlyAlongEpisodes)
{
  const auto cfg = fixtures::road_closed_loop_config();
  const RandomStream master(5);
  for (std::uint64_t ep = 0; ep < 50; ++ep) {
    const auto tr = run_episode(cfg, master.substream(ep));
    const auto [ex, eu] = relation_errors(tr, cfg.bmpc.K);
    EXPECT_LE(ex, 1e-12) << "episode " << ep;
    EXPECT_LE(eu, 1e-12) << "episode " << ep;
    ASSERT_EQ(tr.steps.size(), cfg.T);
    ASSERT_EQ(tr.states.size(), cfg.T + 1);
  }
}

TEST(ClosedLoop, DisturbanceReconstruction)
{
  const auto cfg = fixtures::road_closed_loop_config();
  const RandomStream master(6);
  for (std::uint64_t ep = 0; ep < 20; ++ep) {
    const auto tr = run_episode(cfg, master.substream(ep));
    for (std::size_t k = 0; k < tr.steps.size(); ++k) {
      EXPECT_LE((tr.steps[k].w - tr.w_true[k]).lpNorm<Eigen::Infinity>(), 1e-12);
      EXPECT_EQ(tr.steps[k].w_x, cfg.mixture.means()[tr.steps[k].j - 1]);
    }
  }
}

TEST(ClosedLoop, FreshMeasurementStepHasZeroError)
{
  const auto cfg = fixtures::road_closed_loop_config();
  const auto tr = run_episode(cfg, RandomStream(7));
  int fresh = 0;
  for (const auto & s : tr.steps) {
    if (s.xi != 0) { continue; }
    ++fresh;
    EXPECT_EQ(s.e, Vector::Zero(1));
    EXPECT_EQ(s.u, s.v);
  }
  EXPECT_GT(fresh, 0);
}

TEST(ClosedLoop, NominalStepErrorBookkeeping)
{
  const auto cfg = fixtures::road_closed_loop_config();
  const Matrix A_K = cfg.bmpc.A + cfg.bmpc.B * cfg.bmpc.K;
  const RandomStream master(8);
  int checked = 0;
  for (std::uint64_t ep = 0; ep < 100; ++ep) {
    const auto tr = run_episode(cfg, master.substream(ep));
    for (std::size_t k = 0; k + 1 < tr.steps.size(); ++k) {
      if (tr.steps[k + 1].xi != 1) { continue; }
      const Vector predicted = A_K * tr.steps[k].e + tr.steps[k].w_e;
      EXPECT_LE((tr.steps[k + 1].e - predicted).lpNorm<Eigen::Infinity>(), 1e-12);
      ++checked;
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(ClosedLoop, ZeroNoiseStaysAtOrigin)
{
  const auto cfg = quiet_config(0.0);
  const auto tr = run_episode(cfg, RandomStream(9));
  for (const auto & s : tr.steps) {
    EXPECT_EQ(s.xi, 0);
    EXPECT_LE(s.x.norm(), 1e-5);
    EXPECT_LE(s.u.norm(), 1e-5);
  }
}

TEST(ClosedLoop, ZeroNoiseRegulatesToOrigin)
{
  const auto cfg = quiet_config(1.0);
  const auto tr = run_episode(cfg, RandomStream(10));
  for (const auto & s : tr.steps) { EXPECT_EQ(s.xi, 0); }
  EXPECT_LE(tr.states.back().norm(), 1e-4);
  EXPECT_LT(std::abs(tr.states[1][0]), 1.0);
}

TEST(ClosedLoop, EpisodesAreDeterministic)
{
  const auto cfg = fixtures::road_closed_loop_config();
  const auto a = run_episode(cfg, RandomStream(123));
  const auto b = run_episode(cfg, RandomStream(123));
  const auto c = run_episode(cfg, RandomStream(124));
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    EXPECT_EQ(a.steps[k].x, b.steps[k].x);
    EXPECT_EQ(a.steps[k].u, b.steps[k].u);
    EXPECT_EQ(a.steps[k].j, b.steps[k].j);
    EXPECT_EQ(a.steps[k].xi, b.steps[k].xi);
  }
  EXPECT_NE(a.states.back(), c.states.back());
}

TEST(ClosedLoop, PlantNoiseIndependentOfController)
{
  auto cfg = fixtures::road_closed_loop_config();
  const RandomStream rng(321);
  const auto a = run_episode(cfg, rng);
  cfg.bmpc.epsilon = 1e-3;
  const auto b = run_episode(cfg, rng);
  ASSERT_EQ(a.w_true.size(), b.w_true.size());
  for (std::size_t k = 0; k < a.w_true.size(); ++k) { EXPECT_EQ(a.w_true[k], b.w_true[k]); }
}

TEST(ClosedLoop, ViolationFlagsMatchStates)
{
  const auto cfg = fixtures::road_closed_loop_config();
  const RandomStream master(11);
  for (std::uint64_t ep = 0; ep < 30; ++ep) {
    const auto tr = run_episode(cfg, master.substream(ep));
    for (std::size_t k = 0; k <= cfg.T; ++k) {
      EXPECT_EQ(tr.state_violated[0][k], std::abs(tr.states[k][0]) > 2.0);
      EXPECT_EQ(tr.state_violated[1][k], std::abs(tr.states[k][0]) > 3.0);
    }
    for (std::size_t k = 0; k < cfg.T; ++k) { EXPECT_EQ(tr.input_violated[k], std::abs(tr.steps[k].u[0]) > 2.0); }
  }
}

TEST(ClosedLoop, InfeasibleStartIsSolverFault)
{
  auto cfg = fixtures::road_closed_loop_config();
  cfg.x0 = Vector::Constant(1, 5.0);
  EXPECT_THROW(run_episode(cfg, RandomStream(1)), SolverFault);
}

TEST(ClosedLoop, OneEpisodeIsFast)
{
  const auto cfg = fixtures::road_closed_loop_config();
  const auto t0 = std::chrono::steady_clock::now();
  run_episode(cfg, RandomStream(12));
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 2.0);
}
