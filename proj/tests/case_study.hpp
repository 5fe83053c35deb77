// The vehicle-on-a-road setup shared by several suites.
#pragma once

#include <mixsmpc/bmpc.hpp>
#include <mixsmpc/closedloop.hpp>
#include <mixsmpc/tightening.hpp>

namespace fixtures {

using namespace mixsmpc;

inline PolytopeH interval(double lo, double hi) { return PolytopeH::box(Vector::Constant(1, lo), Vector::Constant(1, hi)); }
inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline GaussianMixture road_mixture()
{
  return {{Vector::Constant(1, -1.5), Vector::Constant(1, 0.0), Vector::Constant(1, 1.5)},
          Eigen::Vector3d(0.2, 0.3, 0.5),
          scalar(0.25)};
}

inline ChanceSpec road_spec()
{
  return {{{"inner", interval(-2, 2), 0.6}, {"outer", interval(-3, 3), 0.99}}, {"input", interval(-2, 2), 0.65}};
}

inline ErrorModel road_error_model(double K = -1.0, PrsNoise noise = PrsNoise::Component)
{
  return ErrorModel::from_mixture(scalar(1.0), scalar(1.0), scalar(K), road_mixture(), noise);
}

/// Branch-MPC data for the road example with tightened and terminal sets filled in.
inline BmpcConfig road_bmpc_config(QpBackend backend = QpBackend::InteriorPoint)
{
  const auto em = road_error_model();
  const auto sets = tighten(em, road_spec());
  const auto [disc, gauss] = road_mixture().decouple();
  BmpcConfig cfg;
  cfg.A = em.A();
  cfg.B = em.B();
  cfg.K = em.K();
  cfg.Z = sets.Z;
  cfg.V = sets.V;
  cfg.Z_F = terminal_set(em, sets.Z, sets.V, disc.atoms);
  cfg.atoms = disc.atoms;
  cfg.weights = disc.weights;
  cfg.N = 5;
  cfg.Q = cfg.R = cfg.P = scalar(1.0);
  cfg.epsilon = 1e3;
  cfg.backend = backend;
  return cfg;
}

inline ClosedLoopConfig road_closed_loop_config()
{
  const auto spec = road_spec();
  return {road_bmpc_config(), road_mixture(), spec.state, spec.input, Vector::Zero(1), 10};
}

}  // namespace fixtures
