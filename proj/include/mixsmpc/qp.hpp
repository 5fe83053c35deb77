#pragma once

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "common.hpp"

namespace mixsmpc {

/**
 * @brief Convex quadratic program
 *
 *   min ½xᵀHx + fᵀx  s.t.  A_eq·x = b_eq,  A_in·x ≤ b_in.
 */
struct QpProblem
{
  SparseMatrix H;
  Vector f;
  SparseMatrix A_eq;
  Vector b_eq;
  SparseMatrix A_in;
  Vector b_in;

  Eigen::Index num_vars() const { return f.size(); }

  /// Shape, symmetry and PSD checks. Throws DimensionMismatch / NotSPD.
  void validate() const
  {
    const Eigen::Index n = f.size();
    if (H.rows() != n || H.cols() != n) { throw DimensionMismatch("QpProblem: H must be n×n"); }
    if (A_eq.cols() != n || A_eq.rows() != b_eq.size()) { throw DimensionMismatch("QpProblem: equality rows inconsistent"); }
    if (A_in.cols() != n || A_in.rows() != b_in.size()) { throw DimensionMismatch("QpProblem: inequality rows inconsistent"); }
    const SparseMatrix Ht = H.transpose();
    const double scale = 1.0 + (H.nonZeros() > 0 ? Eigen::Map<const Vector>(H.valuePtr(), H.nonZeros()).cwiseAbs().maxCoeff() : 0.0);
    if (SparseMatrix(H - Ht).norm() > 1e-10 * scale) { throw NotSPD("QpProblem: H not symmetric"); }
    if (n == 0) { return; }
    SparseMatrix Hs = H;
    for (Eigen::Index i = 0; i < n; ++i) { Hs.coeffRef(i, i) += 1e-9 * scale; }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(Hs);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < 0.0).any()) {
      throw NotSPD("QpProblem: H not positive semidefinite");
    }
  }

  double objective(const Vector & x) const { return 0.5 * x.dot(H * x) + f.dot(x); }
};

enum class QpStatus { Optimal, Infeasible, MaxIter, Unbounded };

inline const char * to_string(QpStatus s)
{
  switch (s) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::Infeasible: return "Infeasible";
    case QpStatus::MaxIter: return "MaxIter";
    case QpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

struct QpSolution
{
  Vector x;
  double objective{std::numeric_limits<double>::quiet_NaN()};
  QpStatus status{QpStatus::MaxIter};
  Vector y_eq;  ///< equality multipliers
  Vector y_in;  ///< inequality multipliers (≥ 0)
  int iterations{0};
  bool polished{false};
};

enum class QpBackend { Admm, InteriorPoint };

struct QpSettings
{
  /// feasibility tolerance of an Optimal answer
  double tol = 1e-8;
  int max_iter = 20000;
  /// ADMM step size, proximal weight and over-relaxation
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  /// ADMM thresholds at which polishing is first tried (tightened while it fails)
  double eps_abs = 1e-3;
  double eps_rel = 1e-3;
  double eps_infeasible = 1e-7;
  bool polish = true;
  int check_every = 5;
  int adapt_rho_every = 50;
  /// Newton iterations of the interior-point backend
  int ipm_max_iter = 200;
};

namespace detail {

inline SparseMatrix vstack(const SparseMatrix & A, const SparseMatrix & B)
{
  SparseMatrix out(A.rows() + B.rows(), A.cols());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(A.nonZeros() + B.nonZeros()));
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) { t.emplace_back(it.row(), it.col(), it.value()); }
  }
  for (int k = 0; k < B.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(B, k); it; ++it) { t.emplace_back(A.rows() + it.row(), it.col(), it.value()); }
  }
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

inline double inf_norm(const Vector & v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// Stationarity residual ‖Hx + f + A_eqᵀy_eq + A_inᵀy_in‖∞.
inline double stationarity(const QpProblem & p, const Vector & x, const Vector & y_eq, const Vector & y_in)
{
  return inf_norm(p.H * x + p.f + p.A_eq.transpose() * y_eq + p.A_in.transpose() * y_in);
}

/// The acceptance test for status Optimal.
inline bool meets_contract(const QpProblem & p, const Vector & x, const Vector & y_eq, const Vector & y_in, double tol)
{
  if (!x.allFinite()) { return false; }
  const double eq = inf_norm(p.A_eq * x - p.b_eq);
  const double in = p.b_in.size() ? (p.A_in * x - p.b_in).maxCoeff() : 0.0;
  const double dual_sign = y_in.size() ? -y_in.minCoeff() : 0.0;
  return eq <= tol && in <= tol && dual_sign <= 1e-6 && stationarity(p, x, y_eq, y_in) <= 1e-6 * (1.0 + inf_norm(p.f));
}

}  // namespace detail

/**
 * @brief Operator-splitting (ADMM) QP solver with active-set polishing.
 *
 * Follows the OSQP iteration on l ≤ Ax ≤ u with the equality rows given a
 * stiffer penalty. The KKT matrix is factored once per ρ; successive solves
 * that only change f, b_eq, b_in reuse the factorization (see update()).
 * After the iteration meets eps_abs/eps_rel the active set is guessed from the
 * multipliers and the reduced equality-constrained KKT system is solved with
 * iterative refinement; the result is returned only if it passes the contract
 * tolerances, otherwise the iteration resumes with tighter thresholds.
 */
class AdmmSolver
{
public:
  explicit AdmmSolver(QpSettings settings = {}) : s_(settings) {}

  void setup(const QpProblem & p)
  {
    p.validate();
    p_ = p;
    n_ = p.num_vars();
    meq_ = p.A_eq.rows();
    m_ = meq_ + p.A_in.rows();
    A_ = detail::vstack(p.A_eq, p.A_in);
    At_ = A_.transpose();
    rho_vec_.resize(m_);
    analyzed_ = false;
    set_rho(s_.rho);
    x_ = Vector::Zero(n_);
    z_ = Vector::Zero(m_);
    y_ = Vector::Zero(m_);
    have_setup_ = true;
  }

  /// Replace the vector data of the problem; matrices stay as in setup().
  void update(const Vector & f, const Vector & b_eq, const Vector & b_in)
  {
    if (f.size() != n_ || b_eq.size() != meq_ || b_in.size() != m_ - meq_) {
      throw DimensionMismatch("AdmmSolver::update: vector sizes differ from setup");
    }
    p_.f = f;
    p_.b_eq = b_eq;
    p_.b_in = b_in;
  }

  const QpProblem & problem() const { return p_; }

  QpSolution solve(const std::optional<Vector> & x_hint = std::nullopt)
  {
    if (!have_setup_) { throw Error("AdmmSolver::solve called before setup"); }
    Vector l(m_), u(m_);
    l << p_.b_eq, Vector::Constant(m_ - meq_, -std::numeric_limits<double>::infinity());
    u << p_.b_eq, p_.b_in;

    if (x_hint) {
      if (x_hint->size() != n_) { throw DimensionMismatch("AdmmSolver: hint has wrong size"); }
      x_ = *x_hint;
    }
    z_ = (A_ * x_).cwiseMax(l).cwiseMin(u);
    // multipliers of the previous solve are kept as a dual warm start

    QpSolution sol;
    double eps_abs = s_.eps_abs;
    double eps_rel = s_.eps_rel;
    Vector rhs(n_ + m_);
    int it = 0;
    for (; it < s_.max_iter; ++it) {
      const Vector x_prev = x_;
      const Vector y_prev = y_;

      rhs.head(n_) = s_.sigma * x_ - p_.f;
      rhs.tail(m_) = z_ - y_.cwiseQuotient(rho_vec_);
      const Vector sol_kkt = kkt_.solve(rhs);
      const Vector x_tilde = sol_kkt.head(n_);
      const Vector z_tilde = z_ + (sol_kkt.tail(m_) - y_).cwiseQuotient(rho_vec_);
      x_ = s_.alpha * x_tilde + (1.0 - s_.alpha) * x_prev;
      const Vector z_hat = s_.alpha * z_tilde + (1.0 - s_.alpha) * z_;
      const Vector z_new = (z_hat + y_.cwiseQuotient(rho_vec_)).cwiseMax(l).cwiseMin(u);
      y_ += rho_vec_.cwiseProduct(z_hat - z_new);
      z_ = z_new;

      if ((it + 1) % s_.check_every != 0) { continue; }

      const Vector Ax = A_ * x_;
      const Vector Px = p_.H * x_;
      const Vector Aty = At_ * y_;
      const double r_prim = detail::inf_norm(Ax - z_);
      const double r_dual = detail::inf_norm(Px + p_.f + Aty);
      const double n_prim = std::max(detail::inf_norm(Ax), detail::inf_norm(z_));
      const double n_dual = std::max({detail::inf_norm(Px), detail::inf_norm(Aty), detail::inf_norm(p_.f)});

      if (r_prim <= eps_abs + eps_rel * n_prim && r_dual <= eps_abs + eps_rel * n_dual) {
        if (finish(sol, l, u, it + 1)) { return sol; }
        if (eps_abs <= 1e-13) { break; }
        eps_abs *= 0.1;
        eps_rel *= 0.1;
        continue;
      }

      if (primal_infeasible(y_ - y_prev, l, u)) {
        sol.status = QpStatus::Infeasible;
        sol.x = x_;
        sol.iterations = it + 1;
        reset_duals();
        return sol;
      }
      if (dual_infeasible(x_ - x_prev, l, u)) {
        sol.status = QpStatus::Unbounded;
        sol.x = x_;
        sol.iterations = it + 1;
        reset_duals();
        return sol;
      }

      if (s_.adapt_rho_every > 0 && (it + 1) % s_.adapt_rho_every == 0) {
        const double ratio = std::sqrt((r_prim / std::max(n_prim, 1e-10)) / std::max(r_dual / std::max(n_dual, 1e-10), 1e-30));
        if (ratio > 5.0 || ratio < 0.2) { set_rho(std::clamp(rho_ * ratio, 1e-6, 1e6)); }
      }
    }
    sol.x = x_;
    sol.iterations = it;
    if (finish(sol, l, u, it)) { return sol; }
    sol.status = QpStatus::MaxIter;
    sol.objective = p_.objective(x_);
    return sol;
  }

private:
  void set_rho(double rho)
  {
    rho_ = rho;
    for (Eigen::Index i = 0; i < m_; ++i) { rho_vec_[i] = i < meq_ ? 1e3 * rho : rho; }
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(p_.H.nonZeros() + 2 * A_.nonZeros() + n_ + m_));
    for (int k = 0; k < p_.H.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(p_.H, k); it; ++it) { t.emplace_back(it.row(), it.col(), it.value()); }
    }
    for (Eigen::Index i = 0; i < n_; ++i) { t.emplace_back(i, i, s_.sigma); }
    for (int k = 0; k < A_.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(A_, k); it; ++it) {
        t.emplace_back(n_ + it.row(), it.col(), it.value());
        t.emplace_back(it.col(), n_ + it.row(), it.value());
      }
    }
    for (Eigen::Index i = 0; i < m_; ++i) { t.emplace_back(n_ + i, n_ + i, -1.0 / rho_vec_[i]); }
    SparseMatrix K(n_ + m_, n_ + m_);
    K.setFromTriplets(t.begin(), t.end());
    if (!analyzed_) {
      kkt_.analyzePattern(K);
      analyzed_ = true;
    }
    kkt_.factorize(K);
    if (kkt_.info() != Eigen::Success) { throw Error("AdmmSolver: KKT factorization failed"); }
  }

  void reset_duals() { y_.setZero(); }

  bool primal_infeasible(const Vector & dy, const Vector & l, const Vector & u) const
  {
    const double nrm = detail::inf_norm(dy);
    if (nrm <= 1e-12) { return false; }
    const double eps = s_.eps_infeasible * nrm;
    if (detail::inf_norm(At_ * dy) > eps) { return false; }
    double support = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (dy[i] > 0.0) {
        support += u[i] * dy[i];
      } else if (dy[i] < 0.0) {
        if (!std::isfinite(l[i])) {
          if (dy[i] < -eps) { return false; }
          continue;
        }
        support += l[i] * dy[i];
      }
    }
    return support < -eps;
  }

  bool dual_infeasible(const Vector & dx, const Vector & l, const Vector & u) const
  {
    const double nrm = detail::inf_norm(dx);
    if (nrm <= 1e-12) { return false; }
    const double eps = s_.eps_infeasible * nrm;
    if (detail::inf_norm(p_.H * dx) > eps || p_.f.dot(dx) > -eps) { return false; }
    const Vector Adx = A_ * dx;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const bool lo_ok = !std::isfinite(l[i]) || Adx[i] >= -eps;
      const bool up_ok = !std::isfinite(u[i]) || Adx[i] <= eps;
      if (!lo_ok || !up_ok) { return false; }
    }
    return true;
  }

  /// Try the current iterate, then its polished version, against the contract.
  bool finish(QpSolution & sol, const Vector & l, const Vector & u, int iters)
  {
    sol.iterations = iters;
    if (s_.polish && polish(sol, l, u)) { return true; }
    const Vector y_eq = y_.head(meq_);
    const Vector y_in = y_.tail(m_ - meq_);
    if (detail::meets_contract(p_, x_, y_eq, y_in, s_.tol)) {
      sol.x = x_;
      sol.y_eq = y_eq;
      sol.y_in = y_in;
      sol.objective = p_.objective(x_);
      sol.status = QpStatus::Optimal;
      sol.polished = false;
      return true;
    }
    return false;
  }

  bool polish(QpSolution & sol, const Vector & l, const Vector & u)
  {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i < meq_ || u[i] - z_[i] < y_[i]) { act.push_back(i); }
    }
    (void)l;
    const Eigen::Index na = static_cast<Eigen::Index>(act.size());
    constexpr double delta = 1e-9;

    std::vector<Triplet> t_reg, t_true;
    for (int k = 0; k < p_.H.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(p_.H, k); it; ++it) {
        t_reg.emplace_back(it.row(), it.col(), it.value());
        t_true.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (Eigen::Index i = 0; i < n_; ++i) { t_reg.emplace_back(i, i, delta); }
    Vector rhs(n_ + na);
    rhs.head(n_) = -p_.f;
    for (Eigen::Index r = 0; r < na; ++r) {
      const Eigen::Index row = act[static_cast<std::size_t>(r)];
      rhs[n_ + r] = u[row];
      t_reg.emplace_back(n_ + r, n_ + r, -delta);
    }
    // gather active rows of A through its transpose (column access)
    for (Eigen::Index r = 0; r < na; ++r) {
      const Eigen::Index row = act[static_cast<std::size_t>(r)];
      for (SparseMatrix::InnerIterator it(At_, row); it; ++it) {
        for (auto * t : {&t_reg, &t_true}) {
          t->emplace_back(n_ + r, it.row(), it.value());
          t->emplace_back(it.row(), n_ + r, it.value());
        }
      }
    }
    SparseMatrix Kreg(n_ + na, n_ + na), Ktrue(n_ + na, n_ + na);
    Kreg.setFromTriplets(t_reg.begin(), t_reg.end());
    Ktrue.setFromTriplets(t_true.begin(), t_true.end());
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(Kreg);
    if (ldlt.info() != Eigen::Success) { return false; }
    Vector sol_kkt = ldlt.solve(rhs);
    for (int r = 0; r < 10; ++r) {
      const Vector res = rhs - Ktrue * sol_kkt;
      if (detail::inf_norm(res) <= 1e-14 * (1.0 + detail::inf_norm(rhs))) { break; }
      sol_kkt += ldlt.solve(res);
    }
    if (!sol_kkt.allFinite()) { return false; }

    Vector y = Vector::Zero(m_);
    for (Eigen::Index r = 0; r < na; ++r) { y[act[static_cast<std::size_t>(r)]] = sol_kkt[n_ + r]; }
    const Vector x = sol_kkt.head(n_);
    const Vector y_eq = y.head(meq_);
    const Vector y_in = y.tail(m_ - meq_);
    if (!detail::meets_contract(p_, x, y_eq, y_in, s_.tol)) { return false; }
    sol.x = x;
    sol.y_eq = y_eq;
    sol.y_in = y_in;
    sol.objective = p_.objective(x);
    sol.status = QpStatus::Optimal;
    sol.polished = true;
    x_ = x;
    y_ = y;
    return true;
  }

  QpSettings s_;
  QpProblem p_;
  Eigen::Index n_{0}, meq_{0}, m_{0};
  SparseMatrix A_, At_;
  Vector rho_vec_;
  double rho_{0.1};
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> kkt_;
  bool analyzed_{false};
  bool have_setup_{false};
  Vector x_, z_, y_;
};

/**
 * @brief Primal-dual interior-point QP solver (Mehrotra predictor-corrector).
 *
 * Alternate backend used to cross-check the ADMM solver. Infeasibility is
 * reported heuristically (diverging multipliers with stalled primal residual).
 */
class InteriorPointSolver
{
public:
  explicit InteriorPointSolver(QpSettings settings = {}) : s_(settings) {}

  QpSolution solve(const QpProblem & p, const std::optional<Vector> & x_hint = std::nullopt) const
  {
    p.validate();
    const Eigen::Index n = p.num_vars();
    const Eigen::Index me = p.A_eq.rows();
    const Eigen::Index mi = p.A_in.rows();
    const SparseMatrix Ait = p.A_in.transpose();
    const SparseMatrix Aet = p.A_eq.transpose();

    Vector x = x_hint ? *x_hint : Vector::Zero(n);
    Vector y = Vector::Zero(me);
    Vector s = (p.b_in - p.A_in * x).cwiseMax(1.0);
    Vector lam = Vector::Ones(mi);

    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt;
    bool analyzed = false;
    QpSolution sol;
    const double fscale = 1.0 + detail::inf_norm(p.f);
    constexpr double reg = 1e-10;

    for (int it = 0; it < s_.ipm_max_iter; ++it) {
      const Vector r_d = p.H * x + p.f + Aet * y + Ait * lam;
      const Vector r_eq = p.A_eq * x - p.b_eq;
      const Vector r_in = p.A_in * x + s - p.b_in;
      const double mu = mi > 0 ? s.dot(lam) / static_cast<double>(mi) : 0.0;

      if (detail::inf_norm(r_eq) <= 1e-10 && (mi == 0 || (p.A_in * x - p.b_in).maxCoeff() <= 1e-10) &&
          detail::inf_norm(r_d) <= 1e-10 * fscale && mu <= 1e-11) {
        sol.x = x;
        sol.y_eq = y;
        sol.y_in = lam;
        sol.iterations = it;
        sol.objective = p.objective(x);
        sol.status = detail::meets_contract(p, x, y, lam, s_.tol) ? QpStatus::Optimal : QpStatus::MaxIter;
        return sol;
      }
      if ((mi > 0 && lam.maxCoeff() > 1e12) || (me > 0 && detail::inf_norm(y) > 1e12)) {
        sol.x = x;
        sol.iterations = it;
        sol.status = QpStatus::Infeasible;
        return sol;
      }
      if (detail::inf_norm(x) > 1e12) {
        sol.x = x;
        sol.iterations = it;
        sol.status = QpStatus::Unbounded;
        return sol;
      }

      // reduced KKT: [H + A_inᵀ D A_in, A_eqᵀ; A_eq, 0], D = Λ S⁻¹
      const Vector d = lam.cwiseQuotient(s);
      SparseMatrix Hd = p.H + SparseMatrix(Ait * d.asDiagonal() * p.A_in);
      std::vector<Triplet> t;
      for (int k = 0; k < Hd.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator itr(Hd, k); itr; ++itr) { t.emplace_back(itr.row(), itr.col(), itr.value()); }
      }
      for (Eigen::Index i = 0; i < n; ++i) { t.emplace_back(i, i, reg); }
      for (int k = 0; k < p.A_eq.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator itr(p.A_eq, k); itr; ++itr) {
          t.emplace_back(n + itr.row(), itr.col(), itr.value());
          t.emplace_back(itr.col(), n + itr.row(), itr.value());
        }
      }
      for (Eigen::Index i = 0; i < me; ++i) { t.emplace_back(n + i, n + i, -reg); }
      SparseMatrix K(n + me, n + me);
      K.setFromTriplets(t.begin(), t.end());
      if (!analyzed) {
        ldlt.analyzePattern(K);
        analyzed = true;
      }
      ldlt.factorize(K);
      if (ldlt.info() != Eigen::Success) { break; }

      auto newton = [&](const Vector & r_c, Vector & dx, Vector & dy, Vector & ds, Vector & dl) {
        // Λ Δs + S Δλ = −r_c, Δs = −r_in − A_in Δx
        Vector rhs(n + me);
        rhs.head(n) = -r_d - Ait * (s.cwiseInverse().cwiseProduct(-r_c + lam.cwiseProduct(r_in)));
        rhs.tail(me) = -r_eq;
        Vector sol_k = ldlt.solve(rhs);
        dx = sol_k.head(n);
        dy = sol_k.tail(me);
        ds = -r_in - p.A_in * dx;
        dl = s.cwiseInverse().cwiseProduct(-r_c - lam.cwiseProduct(ds));
      };
      auto max_step = [](const Vector & v, const Vector & dv) {
        double a = 1.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
          if (dv[i] < 0.0) { a = std::min(a, -v[i] / dv[i]); }
        }
        return a;
      };

      Vector dx, dy, ds, dl;
      newton(s.cwiseProduct(lam), dx, dy, ds, dl);
      double sigma = 0.0;
      if (mi > 0) {
        const double a_aff = std::min(max_step(s, ds), max_step(lam, dl));
        const double mu_aff = (s + a_aff * ds).dot(lam + a_aff * dl) / static_cast<double>(mi);
        sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3);
        const Vector r_c = s.cwiseProduct(lam) + ds.cwiseProduct(dl) - Vector::Constant(mi, sigma * mu);
        newton(r_c, dx, dy, ds, dl);
      }
      const double a = mi > 0 ? std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(lam, dl))) : 1.0;
      x += a * dx;
      y += a * dy;
      s += a * ds;
      lam += a * dl;
      s = s.cwiseMax(1e-300);
      lam = lam.cwiseMax(1e-300);
    }
    sol.x = x;
    sol.y_eq = y;
    sol.y_in = lam;
    sol.iterations = s_.ipm_max_iter;
    sol.objective = p.objective(x);
    sol.status = detail::meets_contract(p, x, y, lam, s_.tol) ? QpStatus::Optimal : QpStatus::MaxIter;
    return sol;
  }

private:
  QpSettings s_;
};

/// One-shot solve with the chosen backend.
inline QpSolution solve(
  const QpProblem & p, QpSettings settings = {}, QpBackend backend = QpBackend::Admm,
  const std::optional<Vector> & x_hint = std::nullopt)
{
  if (backend == QpBackend::InteriorPoint) { return InteriorPointSolver(settings).solve(p, x_hint); }
  AdmmSolver solver(settings);
  solver.setup(p);
  return solver.solve(x_hint);
}

inline QpSolution solve(const QpProblem & p, double tol)
{
  QpSettings s;
  s.tol = tol;
  return solve(p, s);
}

}  // namespace mixsmpc
