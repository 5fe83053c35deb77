#pragma once

#include <mixsmpc/qp.hpp>
#include <mixsmpc/random.hpp>

namespace fixtures {

struct DenseQp
{
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd E;
  Eigen::VectorXd d;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  mixsmpc::QpProblem sparse() const
  {
    return {H.sparseView(), f, E.sparseView(), d, A.sparseView(), b};
  }
};

/// Random strictly convex, feasible QP with n variables, mi inequalities, me equalities.
inline DenseQp random_qp(mixsmpc::RandomStream & rng, int n, int mi, int me = 0)
{
  DenseQp q;
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index i = 0; i < G.size(); ++i) { G.data()[i] = rng.normal(); }
  q.H = G * G.transpose() / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
  q.f = 3.0 * rng.normal_vector(n);
  const Eigen::VectorXd x_feas = rng.normal_vector(n);
  q.A.resize(mi, n);
  for (Eigen::Index i = 0; i < q.A.size(); ++i) { q.A.data()[i] = rng.normal(); }
  q.b = q.A * x_feas;
  for (int i = 0; i < mi; ++i) { q.b[i] += rng.uniform(); }
  q.E.resize(me, n);
  for (Eigen::Index i = 0; i < q.E.size(); ++i) { q.E.data()[i] = rng.normal(); }
  q.d = q.E * x_feas;
  return q;
}

}  // namespace fixtures
