#pragma once

#include <Eigen/LU>

#include <string>
#include <vector>

#include "mixture.hpp"
#include "setops.hpp"

namespace mixsmpc {

/// Which covariance drives the error recursion e⁺ = A_K e + w_e in the Lyapunov equation.
enum class PrsNoise {
  Component,  ///< shared component covariance Σ (the actual law of w_e)
  Mixture,    ///< full mixture variance (conservative)
};

/**
 * @brief Closed-loop error dynamics e(k+1) = A_K e(k) + w_e(k), A_K = A + BK.
 *
 * Holds the stationary covariance Σ∞ from the discrete Lyapunov equation.
 */
class ErrorModel
{
public:
  ErrorModel(Matrix A, Matrix B, Matrix K, Matrix noise_cov)
      : A_(std::move(A)), B_(std::move(B)), K_(std::move(K)), noise_cov_(std::move(noise_cov))
  {
    const Eigen::Index n = A_.rows();
    if (A_.cols() != n || B_.rows() != n || K_.rows() != B_.cols() || K_.cols() != n) {
      throw DimensionMismatch("ErrorModel: inconsistent A, B, K shapes");
    }
    A_K_ = A_ + B_ * K_;
    sigma_inf_ = dlyap(A_K_, noise_cov_);
  }

  static ErrorModel from_mixture(Matrix A, Matrix B, Matrix K, const GaussianMixture & w, PrsNoise noise = PrsNoise::Component)
  {
    return {std::move(A), std::move(B), std::move(K), noise == PrsNoise::Component ? w.cov() : w.variance()};
  }

  const Matrix & A() const { return A_; }
  const Matrix & B() const { return B_; }
  const Matrix & K() const { return K_; }
  const Matrix & A_K() const { return A_K_; }
  const Matrix & noise_cov() const { return noise_cov_; }
  const Matrix & sigma_inf() const { return sigma_inf_; }
  Eigen::Index state_dim() const { return A_.rows(); }
  Eigen::Index input_dim() const { return B_.cols(); }

private:
  Matrix A_, B_, K_, noise_cov_, A_K_, sigma_inf_;
};

struct ChanceConstraint
{
  std::string name;
  PolytopeH set;
  double probability;
};

/// State chance constraints Pr(x ∈ X_j) ≥ p_j and one input constraint Pr(u ∈ U) ≥ p_u.
struct ChanceSpec
{
  std::vector<ChanceConstraint> state;
  ChanceConstraint input;

  void validate() const
  {
    auto check = [](const ChanceConstraint & c) {
      if (!(c.probability > 0.0 && c.probability < 1.0)) {
        throw DomainError("chance constraint '" + c.name + "': probability must lie in (0,1)");
      }
      for (Eigen::Index i = 0; i < c.set.rows(); ++i) {
        const double nrm = c.set.A().row(i).norm();
        if (nrm == 0.0 || c.set.b()[i] / nrm <= 0.0) {
          throw DomainError("chance constraint '" + c.name + "': set must contain the origin in its interior");
        }
      }
    };
    if (state.empty()) { throw DomainError("ChanceSpec: at least one state constraint is required"); }
    for (const auto & c : state) { check(c); }
    check(input);
  }
};

/// Probabilistic reachable set {e : eᵀΣ∞⁻¹e ≤ χ²ₙ(p)} of the error dynamics.
inline Ellipsoid prs_ellipsoid(const ErrorModel & em, double p)
{
  return Ellipsoid::from_shape(em.sigma_inf(), chi2_inv(p, static_cast<int>(em.state_dim())));
}

struct TightenedSets
{
  PolytopeH Z;  ///< nominal state set ∩ⱼ (Xⱼ ⊖ R^{pⱼ})
  PolytopeH V;  ///< nominal input set U ⊖ K·R^{p_u}
};

/**
 * @brief Deterministic nominal constraints from the chance constraints.
 *
 * Every state constraint is tightened by its own PRS level and the results are
 * intersected; the input set is tightened by the support function of the
 * image K·R^{p_u}, i.e. by sqrt(χ²ₙ(p_u)·aᵀKΣ∞Kᵀa) per halfspace.
 */
inline TightenedSets tighten(const ErrorModel & em, const ChanceSpec & spec)
{
  spec.validate();
  std::optional<PolytopeH> Z;
  for (const auto & c : spec.state) {
    if (c.set.dim() != em.state_dim()) { throw DimensionMismatch("tighten: state constraint '" + c.name + "' has wrong dimension"); }
    const PolytopeH Zj = mink_diff_ellipsoid(c.set, prs_ellipsoid(em, c.probability));
    if (is_empty(Zj)) { throw EmptyTightening(c.name, "tightening of state constraint '" + c.name + "' is empty"); }
    Z = Z ? intersect(*Z, Zj) : Zj;
  }
  Z = prune_redundant(*Z);
  if (is_empty(*Z)) { throw EmptyTightening("state", "intersection of the tightened state constraints is empty"); }

  const auto & U = spec.input;
  if (U.set.dim() != em.input_dim()) { throw DimensionMismatch("tighten: input constraint has wrong dimension"); }
  const double level = chi2_inv(U.probability, static_cast<int>(em.state_dim()));
  const Matrix KSK = em.K() * em.sigma_inf() * em.K().transpose();
  Vector bv = U.set.b();
  for (Eigen::Index i = 0; i < U.set.rows(); ++i) {
    const Vector a = U.set.A().row(i).transpose();
    bv[i] -= std::sqrt(level * std::max(0.0, a.dot(KSK * a)));
  }
  PolytopeH V(U.set.A(), bv);
  if (is_empty(V)) { throw EmptyTightening(U.name, "tightening of input constraint '" + U.name + "' is empty"); }
  return {std::move(*Z), std::move(V)};
}

/**
 * @brief Terminal set with (A+BK)Z_F ⊕ W ⊆ Z_F ⊆ Z and K·Z_F ⊆ V.
 *
 * Computed as the maximal robust invariant set and re-verified before return.
 */
inline PolytopeH terminal_set(
  const ErrorModel & em, const PolytopeH & Z, const PolytopeH & V, const std::vector<Vector> & W, int max_iter = 500)
{
  PolytopeH ZF = [&] {
    try {
      return max_rpi(Z, V, em.K(), em.A_K(), W, max_iter);
    } catch (const EmptySet & e) {
      throw EmptySet(std::string("terminal set: no set satisfies (A+BK)Z_F ⊕ W ⊆ Z_F with Z_F ⊆ Z and K Z_F ⊆ V (") + e.what() + ")");
    } catch (const NoConvergence & e) {
      throw NoConvergence(std::string("terminal set: invariance condition (A+BK)Z_F ⊕ W ⊆ Z_F not reached (") + e.what() + ")");
    }
  }();
  if (!is_subset(ZF, Z)) { throw EmptySet("terminal set: condition Z_F ⊆ Z violated"); }
  if (!is_subset(ZF, PolytopeH(V.A() * em.K(), V.b()))) { throw EmptySet("terminal set: condition K Z_F ⊆ V violated"); }
  if (!is_subset(ZF, pre_set(ZF, em.A_K(), W))) { throw EmptySet("terminal set: condition (A+BK)Z_F ⊕ W ⊆ Z_F violated"); }
  return ZF;
}

/**
 * @brief Discrete-time LQR gain u = Kx (note the sign) for weights Q, R.
 *
 * Riccati value iteration until the cost matrix stops changing.
 */
inline Matrix lqr_gain(const Matrix & A, const Matrix & B, const Matrix & Q, const Matrix & R, int max_iter = 100000)
{
  Matrix P = Q;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix S = R + B.transpose() * P * B;
    const Matrix G = S.ldlt().solve(B.transpose() * P * A);
    Matrix Pn = Q + A.transpose() * P * A - A.transpose() * P * B * G;
    Pn = 0.5 * (Pn + Pn.transpose());
    const double diff = (Pn - P).norm();
    P = std::move(Pn);
    if (diff <= 1e-13 * (1.0 + P.norm())) {
      const Matrix Sf = R + B.transpose() * P * B;
      return -Sf.ldlt().solve(B.transpose() * P * A);
    }
  }
  throw NoConvergence("lqr_gain: Riccati iteration did not converge (is (A,B) stabilizable?)");
}

}  // namespace mixsmpc
