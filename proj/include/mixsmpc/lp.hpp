#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "common.hpp"

namespace mixsmpc::lp {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult
{
  LpStatus status{LpStatus::Infeasible};
  double value{0.0};
  Vector x;
};

namespace detail {

/// Dense simplex tableau with Bland's anti-cycling rule.
class Tableau
{
public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : T_(Matrix::Zero(rows, cols + 1)), basis_(rows, -1) {}

  Matrix & data() { return T_; }
  std::vector<Eigen::Index> & basis() { return basis_; }
  Eigen::Index cols() const { return T_.cols() - 1; }
  Eigen::Index rows() const { return T_.rows(); }

  void pivot(Eigen::Index r, Eigen::Index c)
  {
    T_.row(r) /= T_(r, c);
    for (Eigen::Index i = 0; i < T_.rows(); ++i) {
      if (i != r && T_(i, c) != 0.0) { T_.row(i) -= T_(i, c) * T_.row(r); }
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  /// Maximize cost·y over the current feasible basis; columns >= `allowed` never enter.
  /// Returns false when unbounded.
  bool maximize(const Vector & cost, Eigen::Index allowed, double tol)
  {
    const Eigen::Index ncol = cols();
    for (int iter = 0; iter < 50000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        double red = cost[j];
        for (Eigen::Index i = 0; i < rows(); ++i) { red -= cost[basis_[static_cast<std::size_t>(i)]] * T_(i, j); }
        if (red > tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) { return true; }
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows(); ++i) {
        if (T_(i, enter) > tol) {
          const double ratio = T_(i, ncol) / T_(i, enter);
          if (ratio < best - 1e-14 ||
              (std::abs(ratio - best) <= 1e-14 && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) { return false; }
      pivot(leave, enter);
    }
    throw NoConvergence("simplex iteration limit reached");
  }

private:
  Matrix T_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

/**
 * @brief Maximize cᵀx subject to A·x ≤ b with x free.
 *
 * Two-phase dense simplex; intended for the small polytope problems in setops.
 */
inline LpResult maximize(const Vector & c, const Matrix & A, const Vector & b, double tol = 1e-11)
{
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (c.size() != n || b.size() != m) { throw DimensionMismatch("lp::maximize: inconsistent dimensions"); }

  Eigen::Index nart = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b[i] < 0.0) { ++nart; }
  }
  // columns: x+ (n), x- (n), slacks (m), artificials (nart)
  const Eigen::Index nstruct = 2 * n + m;
  detail::Tableau tab(m, nstruct + nart);
  Matrix & T = tab.data();
  Eigen::Index art = nstruct;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sgn = b[i] < 0.0 ? -1.0 : 1.0;
    T.row(i).segment(0, n) = sgn * A.row(i);
    T.row(i).segment(n, n) = -sgn * A.row(i);
    T(i, 2 * n + i) = sgn;
    T(i, nstruct + nart) = sgn * b[i];
    if (sgn < 0.0) {
      T(i, art) = 1.0;
      tab.basis()[static_cast<std::size_t>(i)] = art++;
    } else {
      tab.basis()[static_cast<std::size_t>(i)] = 2 * n + i;
    }
  }

  LpResult res;
  if (nart > 0) {
    Vector phase1 = Vector::Zero(nstruct + nart);
    phase1.tail(nart).setConstant(-1.0);
    tab.maximize(phase1, nstruct + nart, tol);
    double infeas = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] >= nstruct) { infeas += T(i, nstruct + nart); }
    }
    if (infeas > 1e-9) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    // drive remaining (zero-level) artificials out of the basis
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < nstruct) { continue; }
      for (Eigen::Index j = 0; j < nstruct; ++j) {
        if (std::abs(T(i, j)) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
    for (Eigen::Index j = nstruct; j < nstruct + nart; ++j) { T.col(j).setZero(); }
  }

  Vector cost = Vector::Zero(nstruct + nart);
  cost.head(n) = c;
  cost.segment(n, n) = -c;
  if (!tab.maximize(cost, nstruct, tol)) {
    res.status = LpStatus::Unbounded;
    return res;
  }
  Vector y = Vector::Zero(nstruct + nart);
  for (Eigen::Index i = 0; i < m; ++i) { y[tab.basis()[static_cast<std::size_t>(i)]] = T(i, nstruct + nart); }
  res.status = LpStatus::Optimal;
  res.x = y.head(n) - y.segment(n, n);
  res.value = c.dot(res.x);
  return res;
}

}  // namespace mixsmpc::lp
