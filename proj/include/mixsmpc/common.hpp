#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace mixsmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error
{
public:
  using Error::Error;
};

class DomainError : public Error
{
public:
  using Error::Error;
};

/// Spectral radius of a closed-loop matrix is not strictly below one.
class NotStable : public Error
{
public:
  using Error::Error;
};

class NotSPD : public Error
{
public:
  using Error::Error;
};

/// A set computation produced the empty set.
class EmptySet : public Error
{
public:
  using Error::Error;
};

class NoConvergence : public Error
{
public:
  using Error::Error;
};

/// Tightening of a named constraint produced an empty nominal set.
class EmptyTightening : public EmptySet
{
public:
  EmptyTightening(std::string constraint, const std::string & msg)
      : EmptySet(msg), constraint_(std::move(constraint))
  {}
  const std::string & constraint() const noexcept { return constraint_; }

private:
  std::string constraint_;
};

/// Both branch-MPC subproblems were infeasible.
class SolverFault : public Error
{
public:
  using Error::Error;
};

class IndexError : public Error
{
public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const char * msg)
{
  if (!cond) { throw DimensionMismatch(msg); }
}

inline bool is_symmetric(const Matrix & M, double tol = 1e-10)
{
  return M.rows() == M.cols() && (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + M.cwiseAbs().maxCoeff());
}

}  // namespace detail

}  // namespace mixsmpc
