#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <vector>

#include "common.hpp"
#include "random.hpp"

namespace mixsmpc {

/// Finite distribution over the mixture means.
struct DiscreteDisturbance
{
  std::vector<Vector> atoms;
  Vector weights;
};

/// Zero-mean Gaussian N(0, cov).
struct ZeroMeanGaussian
{
  Matrix cov;
};

/**
 * @brief Gaussian mixture whose components share one covariance.
 *
 * Density g(w) = Σᵢ πᵢ·N(w; μᵢ, Σ). The Cholesky factor of Σ is computed once
 * at construction; posterior evaluation works in log space.
 *
 * Mixtures with per-component covariances can be used by replacing every
 * component covariance with one common upper bound in the semidefinite order
 * (conservative); that preprocessing is left to the caller.
 */
class GaussianMixture
{
public:
  GaussianMixture(std::vector<Vector> means, Vector weights, Matrix cov)
      : means_(std::move(means)), weights_(std::move(weights)), cov_(std::move(cov))
  {
    if (means_.empty()) { throw DomainError("GaussianMixture: needs at least one component"); }
    if (static_cast<Eigen::Index>(means_.size()) != weights_.size()) {
      throw DimensionMismatch("GaussianMixture: number of means and weights differ");
    }
    const Eigen::Index n = cov_.rows();
    if (cov_.cols() != n) { throw DimensionMismatch("GaussianMixture: covariance not square"); }
    for (const auto & m : means_) {
      if (m.size() != n) { throw DimensionMismatch("GaussianMixture: mean dimension differs from covariance"); }
      if (!m.allFinite()) { throw DomainError("GaussianMixture: non-finite mean"); }
    }
    if ((weights_.array() < 0.0).any() || (weights_.array() > 1.0).any()) {
      throw DomainError("GaussianMixture: weights must lie in [0,1]");
    }
    if (std::abs(weights_.sum() - 1.0) > 1e-12) { throw DomainError("GaussianMixture: weights must sum to 1"); }
    if (!detail::is_symmetric(cov_)) { throw NotSPD("GaussianMixture: covariance not symmetric"); }
    chol_.compute(cov_);
    if (chol_.info() != Eigen::Success) { throw NotSPD("GaussianMixture: covariance not positive definite"); }
    L_ = chol_.matrixL();
    log_weights_ = weights_.array().log();
  }

  std::size_t components() const { return means_.size(); }
  Eigen::Index dim() const { return cov_.rows(); }
  const std::vector<Vector> & means() const { return means_; }
  const Vector & weights() const { return weights_; }
  const Matrix & cov() const { return cov_; }
  /// Lower Cholesky factor of the shared covariance.
  const Matrix & cov_factor() const { return L_; }

  /// Mean Σπᵢμᵢ.
  Vector mean() const
  {
    Vector m = Vector::Zero(dim());
    for (std::size_t i = 0; i < means_.size(); ++i) { m += weights_[static_cast<Eigen::Index>(i)] * means_[i]; }
    return m;
  }

  /// Covariance Σ + Σπᵢμᵢμᵢᵀ − m·mᵀ.
  Matrix variance() const
  {
    const Vector m = mean();
    Matrix V = cov_ - m * m.transpose();
    for (std::size_t i = 0; i < means_.size(); ++i) {
      V += weights_[static_cast<Eigen::Index>(i)] * means_[i] * means_[i].transpose();
    }
    return 0.5 * (V + V.transpose());
  }

  /// Draw a component index then a Gaussian around its mean.
  Vector sample(RandomStream & rng) const
  {
    const std::size_t i = rng.categorical(weights_);
    return means_[i] + L_ * rng.normal_vector(dim());
  }

  /// Split into the discrete part over the means and the zero-mean Gaussian part.
  std::pair<DiscreteDisturbance, ZeroMeanGaussian> decouple() const
  {
    return {DiscreteDisturbance{means_, weights_}, ZeroMeanGaussian{cov_}};
  }

  /// Component responsibilities πᵢN(w;μᵢ,Σ) / Σⱼ πⱼN(w;μⱼ,Σ), via log-sum-exp.
  Vector posterior_weights(const Vector & w) const
  {
    if (w.size() != dim()) { throw DimensionMismatch("posterior_weights: dimension mismatch"); }
    const Eigen::Index L = weights_.size();
    Vector logp(L);
    for (Eigen::Index i = 0; i < L; ++i) {
      if (weights_[i] == 0.0) {
        logp[i] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const Vector r = L_.triangularView<Eigen::Lower>().solve(w - means_[static_cast<std::size_t>(i)]);
      logp[i] = log_weights_[i] - 0.5 * r.squaredNorm();
    }
    const double mx = logp.maxCoeff();
    Vector rho = (logp.array() - mx).exp();
    rho /= rho.sum();
    return rho;
  }

  struct ConditionalDraw
  {
    std::size_t index;  ///< zero-based component index j
    Vector w_x;         ///< μ_j
    Vector w_e;         ///< fl(w − μ_j)
    Vector w_e_lo;      ///< rounding error of w_e, so that μ_j + (w_e + w_e_lo) = w exactly
  };

  /**
   * @brief Sample (w_x, w_e) from the lifting conditioned on an observed w.
   *
   * j ~ posterior_weights(w), w_x = μ_j, w_e = w − w_x. The difference is
   * formed with an error-free two-sum, so w_e + w_e_lo is the exact real
   * difference; w_e_lo is zero whenever w − μ_j is representable, in which
   * case w_x + w_e == w also holds in double arithmetic.
   */
  ConditionalDraw sample_conditional(const Vector & w, RandomStream & rng) const
  {
    const std::size_t j = rng.categorical(posterior_weights(w));
    Vector w_x = means_[j];
    Vector w_e(w.size()), w_e_lo(w.size());
    for (Eigen::Index c = 0; c < w.size(); ++c) {
      const double a = w[c];
      const double b = -w_x[c];
      const double s = a + b;
      const double bp = s - a;
      const double ap = s - bp;
      w_e[c] = s;
      w_e_lo[c] = (a - ap) + (b - bp);
    }
    return {j, std::move(w_x), std::move(w_e), std::move(w_e_lo)};
  }

private:
  std::vector<Vector> means_;
  Vector weights_;
  Matrix cov_;
  Eigen::LLT<Matrix> chol_;
  Matrix L_;
  Vector log_weights_;
};

}  // namespace mixsmpc
