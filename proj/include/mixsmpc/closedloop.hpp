#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bmpc.hpp"
#include "mixture.hpp"
#include "random.hpp"
#include "tightening.hpp"

namespace mixsmpc {

/// Everything needed to simulate the plant under the branch-MPC controller.
struct ClosedLoopConfig
{
  BmpcConfig bmpc;
  /// disturbance acting on the plant
  GaussianMixture mixture;
  /// original (untightened) sets, used only to flag violations
  std::vector<ChanceConstraint> state_constraints;
  ChanceConstraint input_constraint;
  Vector x0;
  std::size_t T{10};
};

struct ControllerState
{
  /// nominal successor chosen at the previous step (x(0) before the first step)
  Vector z_prev;
  /// error x − z₀ of the last step
  Vector e;
  std::size_t k{0};
  std::optional<ShiftCandidate> warm;
};

/// Per-step record of an episode.
struct StepRecord
{
  std::size_t k{0};
  Vector x, u, z, e, v;
  int xi{0};
  /// disturbance as reconstructed by the controller from x(k+1)
  Vector w;
  /// drawn component, 1-based like the tree branches
  std::size_t j{0};
  Vector w_x, w_e;
  double solve_seconds{0.0};
};

struct Trajectory
{
  std::vector<StepRecord> steps;
  /// x(0), …, x(T)
  std::vector<Vector> states;
  /// [constraint][k] for x(k), k = 0..T
  std::vector<std::vector<bool>> state_violated;
  /// u(k), k = 0..T−1
  std::vector<bool> input_violated;
  /// disturbance injected by the simulator, for checking the reconstruction
  std::vector<Vector> w_true;
};

/**
 * @brief Controller side of the loop.
 *
 * act() solves the branch MPC and returns u = v₀ + K·(x − z₀). observe()
 * receives the next measurement, recovers w, draws the component j from its
 * posterior and keeps z₁ʲ as the nominal fallback for the next step.
 */
class Controller
{
public:
  Controller(const BmpcConfig & cfg, GaussianMixture mixture, const Vector & x0)
      : solver_(cfg), mixture_(std::move(mixture)), A_K_(cfg.A + cfg.B * cfg.K)
  {
    if (x0.size() != cfg.n() || mixture_.dim() != cfg.n()) { throw DimensionMismatch("Controller: state dimension"); }
    state_.z_prev = x0;
    state_.e = Vector::Zero(cfg.n());
  }

  const ControllerState & state() const { return state_; }
  const BmpcSolution & solution() const { return sol_; }
  const Matrix & A_K() const { return A_K_; }

  Vector act(const Vector & x_meas)
  {
    const BmpcConfig & cfg = solver_.config();
    sol_ = solver_.solve(x_meas, state_.z_prev, state_.warm);
    if (sol_.status != BmpcStatus::Optimal) {
      throw SolverFault("branch MPC infeasible for both initial conditions at step " + std::to_string(state_.k));
    }
    x_meas_ = x_meas;
    state_.e = x_meas - sol_.z0();
    u_ = sol_.v0() + cfg.K * state_.e;
    return u_;
  }

  /// Returns the reconstructed w and the component draw.
  std::pair<Vector, GaussianMixture::ConditionalDraw> observe(const Vector & x_next, RandomStream & rng)
  {
    const BmpcConfig & cfg = solver_.config();
    Vector w = x_next - cfg.A * x_meas_ - cfg.B * u_;
    auto draw = mixture_.sample_conditional(w, rng);
    const std::size_t d = draw.index + 1;
    state_.z_prev = sol_.z1(d);
    state_.warm = shift_candidate(sol_, d, cfg);
    ++state_.k;
    return {std::move(w), std::move(draw)};
  }

private:
  BmpcSolver solver_;
  GaussianMixture mixture_;
  Matrix A_K_;
  ControllerState state_;
  BmpcSolution sol_;
  Vector x_meas_, u_;
};

/**
 * @brief Simulate one episode of T steps.
 *
 * Plant noise and the controller's component draws use separate substreams
 * of `rng`, so the disturbance sequence does not depend on controller choices.
 */
inline Trajectory run_episode(const ClosedLoopConfig & cfg, const RandomStream & rng)
{
  RandomStream plant = rng.substream(0);
  RandomStream draws = rng.substream(1);
  Controller ctrl(cfg.bmpc, cfg.mixture, cfg.x0);
  const Matrix & A = cfg.bmpc.A;
  const Matrix & B = cfg.bmpc.B;

  Trajectory tr;
  tr.state_violated.assign(cfg.state_constraints.size(), std::vector<bool>(cfg.T + 1, false));
  tr.input_violated.assign(cfg.T, false);
  Vector x = cfg.x0;
  tr.states.push_back(x);
  auto flag_state = [&](std::size_t k) {
    for (std::size_t c = 0; c < cfg.state_constraints.size(); ++c) {
      tr.state_violated[c][k] = !contains(cfg.state_constraints[c].set, x, 0.0);
    }
  };
  flag_state(0);

  for (std::size_t k = 0; k < cfg.T; ++k) {
    StepRecord rec;
    rec.k = k;
    rec.x = x;
    rec.u = ctrl.act(x);
    const BmpcSolution & sol = ctrl.solution();
    rec.z = sol.z0();
    rec.e = ctrl.state().e;
    rec.v = sol.v0();
    rec.xi = sol.xi;
    rec.solve_seconds = sol.solve_seconds;
    tr.input_violated[k] = !contains(cfg.input_constraint.set, rec.u, 0.0);

    const Vector w = cfg.mixture.sample(plant);
    tr.w_true.push_back(w);
    x = A * x + B * rec.u + w;
    auto [w_rec, draw] = ctrl.observe(x, draws);
    rec.w = std::move(w_rec);
    rec.j = draw.index + 1;
    rec.w_x = std::move(draw.w_x);
    rec.w_e = std::move(draw.w_e);
    tr.steps.push_back(std::move(rec));
    tr.states.push_back(x);
    flag_state(k + 1);
  }
  return tr;
}

/// Largest |x − z₀ − e| and |u − v₀ − K e| along an episode.
inline std::pair<double, double> relation_errors(const Trajectory & tr, const Matrix & K)
{
  double ex = 0.0, eu = 0.0;
  for (const auto & s : tr.steps) {
    ex = std::max(ex, (s.x - s.z - s.e).lpNorm<Eigen::Infinity>());
    eu = std::max(eu, (s.u - s.v - K * s.e).lpNorm<Eigen::Infinity>());
  }
  return {ex, eu};
}

}  // namespace mixsmpc
