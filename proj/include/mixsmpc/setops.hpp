#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "common.hpp"
#include "lp.hpp"

namespace mixsmpc {

/// Membership tolerance used by every set test in this header.
inline constexpr double kSetTol = 1e-9;

/**
 * @brief Polytope in halfspace form {x : A·x ≤ b}.
 *
 * The set may be unbounded or empty; emptiness is decided with is_empty().
 */
class PolytopeH
{
public:
  PolytopeH() = default;

  PolytopeH(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b))
  {
    if (A_.rows() < 1) { throw DimensionMismatch("PolytopeH needs at least one row"); }
    if (A_.rows() != b_.size()) { throw DimensionMismatch("PolytopeH: A rows and b size differ"); }
    if (!A_.allFinite() || b_.hasNaN()) { throw DomainError("PolytopeH: non-finite normal or NaN offset"); }
  }

  /// Axis-aligned box lower ≤ x ≤ upper.
  static PolytopeH box(const Vector & lower, const Vector & upper)
  {
    const Eigen::Index n = lower.size();
    if (upper.size() != n) { throw DimensionMismatch("PolytopeH::box: bound sizes differ"); }
    Matrix A(2 * n, n);
    A << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    Vector b(2 * n);
    b << upper, -lower;
    return {std::move(A), std::move(b)};
  }

  /// Whole space as the single row 0ᵀx ≤ 1.
  static PolytopeH full_space(Eigen::Index n) { return {Matrix::Zero(1, n), Vector::Ones(1)}; }

  const Matrix & A() const { return A_; }
  const Vector & b() const { return b_; }
  Eigen::Index dim() const { return A_.cols(); }
  Eigen::Index rows() const { return A_.rows(); }

private:
  Matrix A_;
  Vector b_;
};

/// Ellipsoid {x : xᵀ·shape_inv·x ≤ level} centred at the origin.
class Ellipsoid
{
public:
  Ellipsoid(Matrix shape_inv, double level) : shape_inv_(std::move(shape_inv)), level_(level)
  {
    if (!detail::is_symmetric(shape_inv_)) { throw NotSPD("Ellipsoid: shape matrix not symmetric"); }
    Eigen::LLT<Matrix> llt(shape_inv_);
    if (llt.info() != Eigen::Success) { throw NotSPD("Ellipsoid: shape matrix not positive definite"); }
    if (!(level_ >= 0.0) || !std::isfinite(level_)) { throw DomainError("Ellipsoid: level must be finite and non-negative"); }
    shape_ = llt.solve(Matrix::Identity(shape_inv_.rows(), shape_inv_.cols()));
    shape_ = 0.5 * (shape_ + shape_.transpose());
  }

  /// Build from the covariance-like matrix Σ (so shape_inv = Σ⁻¹).
  static Ellipsoid from_shape(const Matrix & shape, double level)
  {
    Eigen::LLT<Matrix> llt(shape);
    if (llt.info() != Eigen::Success) { throw NotSPD("Ellipsoid: shape not positive definite"); }
    Matrix inv = llt.solve(Matrix::Identity(shape.rows(), shape.cols()));
    return {0.5 * (inv + inv.transpose()), level};
  }

  const Matrix & shape_inv() const { return shape_inv_; }
  /// shape_inv⁻¹
  const Matrix & shape() const { return shape_; }
  double level() const { return level_; }
  Eigen::Index dim() const { return shape_inv_.rows(); }

  /// Support function h(a) = max_{x∈E} aᵀx.
  double support(const Vector & a) const { return std::sqrt(level_ * std::max(0.0, a.dot(shape_ * a))); }

  bool contains(const Vector & x, double tol = kSetTol) const { return x.dot(shape_inv_ * x) <= level_ + tol; }

private:
  Matrix shape_inv_;
  double level_;
  Matrix shape_;
};

inline double spectral_radius(const Matrix & M)
{
  if (M.size() == 0) { return 0.0; }
  return Eigen::EigenSolver<Matrix>(M, false).eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_spd(const Matrix & Q)
{
  if (!detail::is_symmetric(Q)) { return false; }
  Eigen::LLT<Matrix> llt(Q);
  return llt.info() == Eigen::Success;
}

namespace detail {

/// Kronecker-form solve of A·S·Aᵀ + Q = S, no input checks.
inline Matrix dlyap_kronecker(const Matrix & A, const Matrix & Q)
{
  const Eigen::Index n = A.rows();
  const Eigen::Index nn = n * n;
  Matrix M = Matrix::Identity(nn, nn);
  // column-major vec: vec(A S Aᵀ) = (A ⊗ A) vec(S)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) { M.block(i * n, j * n, n, n) -= A(i, j) * A; }
  }
  const Vector q = Eigen::Map<const Vector>(Q.data(), nn);
  Vector s = M.partialPivLu().solve(q);
  return Eigen::Map<Matrix>(s.data(), n, n);
}

}  // namespace detail

/**
 * @brief Solve the discrete Lyapunov equation A_K·Σ·A_Kᵀ + Q = Σ.
 *
 * Kronecker-form linear solve for n ≤ 20, squared Smith iteration above that.
 */
inline Matrix dlyap(const Matrix & A_K, const Matrix & Q)
{
  const Eigen::Index n = A_K.rows();
  if (A_K.cols() != n || Q.rows() != n || Q.cols() != n) { throw DimensionMismatch("dlyap: dimension mismatch"); }
  if (!is_spd(Q)) { throw NotSPD("dlyap: Q is not symmetric positive definite"); }
  if (spectral_radius(A_K) >= 1.0 - 1e-9) { throw NotStable("dlyap: closed-loop matrix is not Schur stable"); }

  Matrix S;
  if (n <= 20) {
    S = detail::dlyap_kronecker(A_K, Q);
    // one step of iterative refinement on the residual
    const Matrix R = A_K * S * A_K.transpose() + Q - S;
    S += detail::dlyap_kronecker(A_K, 0.5 * (R + R.transpose()));
  } else {
    S = Q;
    Matrix Ak = A_K;
    for (int it = 0; it < 64; ++it) {
      const Matrix inc = Ak * S * Ak.transpose();
      S += inc;
      Ak = Ak * Ak;
      if (inc.norm() <= 1e-17 * S.norm()) { break; }
    }
  }
  S = 0.5 * (S + S.transpose());
  if (!is_spd(S)) { throw NotSPD("dlyap: solution is not positive definite"); }
  return S;
}

/// Inverse CDF of the chi-squared distribution with `dof` degrees of freedom.
inline double chi2_inv(double p, int dof)
{
  if (!(p > 0.0 && p < 1.0)) { throw DomainError("chi2_inv: probability must lie in (0,1)"); }
  if (dof < 1) { throw DomainError("chi2_inv: degrees of freedom must be positive"); }
  return 2.0 * boost::math::gamma_p_inv(0.5 * dof, p);
}

inline bool contains(const PolytopeH & P, const Vector & x, double tol = kSetTol)
{
  if (x.size() != P.dim()) { throw DimensionMismatch("contains: dimension mismatch"); }
  return ((P.A() * x - P.b()).array() <= tol).all();
}

/// Phase-1 feasibility: empty iff no x satisfies A·x ≤ b + kSetTol.
inline bool is_empty(const PolytopeH & P)
{
  Vector b = P.b().array() + kSetTol;
  return lp::maximize(Vector::Zero(P.dim()), P.A(), b).status == lp::LpStatus::Infeasible;
}

/// Stack the rows of two polytopes.
inline PolytopeH intersect(const PolytopeH & P, const PolytopeH & Q)
{
  if (P.dim() != Q.dim()) { throw DimensionMismatch("intersect: dimension mismatch"); }
  Matrix A(P.rows() + Q.rows(), P.dim());
  A << P.A(), Q.A();
  Vector b(P.rows() + Q.rows());
  b << P.b(), Q.b();
  return {std::move(A), std::move(b)};
}

/// max aᵀx over P; +inf when unbounded, -inf when P is empty.
inline double support(const PolytopeH & P, const Vector & a)
{
  const auto r = lp::maximize(a, P.A(), P.b());
  switch (r.status) {
    case lp::LpStatus::Optimal: return r.value;
    case lp::LpStatus::Unbounded: return std::numeric_limits<double>::infinity();
    case lp::LpStatus::Infeasible: break;
  }
  return -std::numeric_limits<double>::infinity();
}

/// P ⊆ Q, checked row by row with slack `tol`.
inline bool is_subset(const PolytopeH & P, const PolytopeH & Q, double tol = kSetTol)
{
  if (is_empty(P)) { return true; }
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    if (support(P, Q.A().row(i).transpose()) > Q.b()[i] + tol) { return false; }
  }
  return true;
}

/**
 * @brief Remove redundant rows.
 *
 * Zero rows with non-negative offset are dropped, exact duplicates keep the
 * tighter offset, and every remaining row is tested with one LP against the
 * others. An empty input is returned unchanged. If nothing survives the set is
 * the whole space, represented by full_space().
 */
inline PolytopeH prune_redundant(const PolytopeH & P, double tol = kSetTol)
{
  if (is_empty(P)) { return P; }
  const Eigen::Index n = P.dim();

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const double nrm = P.A().row(i).lpNorm<Eigen::Infinity>();
    if (nrm <= 1e-14) { continue; }  // nonempty ⇒ b ≥ -tol
    bool dup = false;
    for (auto & k : keep) {
      if ((P.A().row(k) - P.A().row(i)).lpNorm<Eigen::Infinity>() <= 1e-14) {
        dup = true;
        if (P.b()[i] < P.b()[k]) { k = i; }
        break;
      }
    }
    if (!dup) { keep.push_back(i); }
  }
  if (keep.empty()) { return PolytopeH::full_space(n); }

  std::vector<bool> active(keep.size(), true);
  for (std::size_t t = 0; t < keep.size(); ++t) {
    // LP over the still-active rows other than t, plus row t relaxed by one unit to keep it bounded
    std::vector<Eigen::Index> rows;
    for (std::size_t s = 0; s < keep.size(); ++s) {
      if (s != t && active[s]) { rows.push_back(keep[s]); }
    }
    Matrix A(static_cast<Eigen::Index>(rows.size()) + 1, n);
    Vector b(A.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      A.row(static_cast<Eigen::Index>(r)) = P.A().row(rows[r]);
      b[static_cast<Eigen::Index>(r)] = P.b()[rows[r]];
    }
    A.row(A.rows() - 1) = P.A().row(keep[t]);
    b[A.rows() - 1] = P.b()[keep[t]] + 1.0;
    const auto r = lp::maximize(P.A().row(keep[t]).transpose(), A, b);
    if (r.status == lp::LpStatus::Optimal && r.value <= P.b()[keep[t]] + tol) { active[t] = false; }
  }
  std::vector<Eigen::Index> out;
  for (std::size_t t = 0; t < keep.size(); ++t) {
    if (active[t]) { out.push_back(keep[t]); }
  }
  if (out.empty()) { return PolytopeH::full_space(n); }
  Matrix A(static_cast<Eigen::Index>(out.size()), n);
  Vector b(A.rows());
  for (std::size_t r = 0; r < out.size(); ++r) {
    A.row(static_cast<Eigen::Index>(r)) = P.A().row(out[r]);
    b[static_cast<Eigen::Index>(r)] = P.b()[out[r]];
  }
  return {std::move(A), std::move(b)};
}

/// Exact Minkowski difference P ⊖ E via the ellipsoid support function.
inline PolytopeH mink_diff_ellipsoid(const PolytopeH & P, const Ellipsoid & E)
{
  if (P.dim() != E.dim()) { throw DimensionMismatch("mink_diff_ellipsoid: dimension mismatch"); }
  Vector b = P.b();
  for (Eigen::Index i = 0; i < P.rows(); ++i) { b[i] -= E.support(P.A().row(i).transpose()); }
  return {P.A(), std::move(b)};
}

/**
 * @brief Robust one-step pre-set {z : A_K·z + μ ∈ P for all μ ∈ W}.
 *
 * One row per row of P: (aᵀA_K, b − max_μ aᵀμ), then redundant rows are pruned.
 */
inline PolytopeH pre_set(const PolytopeH & P, const Matrix & A_K, const std::vector<Vector> & W)
{
  if (W.empty()) { throw DomainError("pre_set: disturbance set must be nonempty"); }
  if (A_K.rows() != P.dim() || A_K.cols() != P.dim()) { throw DimensionMismatch("pre_set: A_K has wrong shape"); }
  Matrix A = P.A() * A_K;
  Vector b = P.b();
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto & mu : W) { worst = std::max(worst, P.A().row(i).dot(mu)); }
    b[i] -= worst;
  }
  return prune_redundant(PolytopeH(std::move(A), std::move(b)));
}

/**
 * @brief Maximal robust positively invariant subset of Z ∩ {z : K·z ∈ V}.
 *
 * Iterates Ω₀ = Z ∩ K⁻¹V, Ω_{k+1} = Ω_k ∩ pre(Ω_k) until Ω_k ⊆ pre(Ω_k).
 * @throws EmptySet when an iterate becomes empty, NoConvergence after `max_iter` steps.
 */
inline PolytopeH max_rpi(
  const PolytopeH & Z, const PolytopeH & V, const Matrix & K, const Matrix & A_K, const std::vector<Vector> & W,
  int max_iter = 500)
{
  if (K.cols() != Z.dim() || K.rows() != V.dim()) { throw DimensionMismatch("max_rpi: K has wrong shape"); }
  if (spectral_radius(A_K) >= 1.0) { throw NotStable("max_rpi: A_K is not Schur stable"); }

  PolytopeH omega = prune_redundant(intersect(Z, PolytopeH(V.A() * K, V.b())));
  if (is_empty(omega)) { throw EmptySet("max_rpi: Z ∩ {z : Kz ∈ V} is empty"); }
  for (int it = 0; it < max_iter; ++it) {
    const PolytopeH pre = pre_set(omega, A_K, W);
    if (is_empty(pre) || is_empty(intersect(omega, pre))) {
      throw EmptySet("max_rpi: iterate " + std::to_string(it + 1) + " is empty; no robust invariant set exists");
    }
    if (is_subset(omega, pre)) { return omega; }
    omega = prune_redundant(intersect(omega, pre));
  }
  throw NoConvergence("max_rpi: no fixed point within " + std::to_string(max_iter) + " iterations");
}

}  // namespace mixsmpc
