#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "qp.hpp"
#include "setops.hpp"

namespace mixsmpc {

/**
 * @brief L-ary scenario tree of depth N.
 *
 * Node (i, j) is branch j ∈ {1..Lⁱ} at depth i (both 1-based as in the
 * usual tree notation). Its child under disturbance d ∈ {1..L} is
 * (i+1, (j−1)·L + d). Nodes are stored flat, depth by depth, branch by branch.
 */
class BranchTree
{
public:
  BranchTree(std::size_t L, std::size_t N, Vector weights) : L_(L), N_(N), weights_(std::move(weights))
  {
    if (L_ < 1 || N_ < 1) { throw DomainError("BranchTree: L and N must be positive"); }
    if (weights_.size() != static_cast<Eigen::Index>(L_)) { throw DimensionMismatch("BranchTree: one weight per branch expected"); }
    offsets_.resize(N_ + 2);
    offsets_[0] = 0;
    std::size_t width = 1;
    for (std::size_t i = 0; i <= N_; ++i) {
      offsets_[i + 1] = offsets_[i] + width;
      width *= L_;
    }
    prob_.resize(offsets_[N_ + 1]);
    prob_[0] = 1.0;
    for (std::size_t i = 0; i < N_; ++i) {
      for (std::size_t j = 1; j <= width_at(i); ++j) {
        for (std::size_t d = 1; d <= L_; ++d) {
          prob_[state_node(i + 1, child_index(i, j, d, L_))] = prob_[state_node(i, j)] * weights_[static_cast<Eigen::Index>(d - 1)];
        }
      }
    }
  }

  /// Branch index at depth i+1 reached from (i, j) under disturbance d.
  static std::size_t child_index(std::size_t i, std::size_t j, std::size_t d, std::size_t L)
  {
    std::size_t width = 1;
    for (std::size_t t = 0; t < i; ++t) { width *= L; }
    if (L < 1 || j < 1 || j > width || d < 1 || d > L) {
      throw IndexError("child_index: (i=" + std::to_string(i) + ", j=" + std::to_string(j) + ", d=" + std::to_string(d) + ") out of range");
    }
    return (j - 1) * L + d;
  }

  std::size_t L() const { return L_; }
  std::size_t N() const { return N_; }
  const Vector & weights() const { return weights_; }
  std::size_t width_at(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  /// Σ_{i=0}^{N} Lⁱ
  std::size_t state_node_count() const { return offsets_[N_ + 1]; }
  /// Σ_{i=0}^{N−1} Lⁱ
  std::size_t input_node_count() const { return offsets_[N_]; }
  std::size_t leaf_count() const { return width_at(N_); }

  /// Flat position of state node (i, j).
  std::size_t state_node(std::size_t i, std::size_t j) const
  {
    if (i > N_ || j < 1 || j > width_at(i)) { throw IndexError("state_node: index out of range"); }
    return offsets_[i] + j - 1;
  }
  /// Flat position of input node (i, j), i < N.
  std::size_t input_node(std::size_t i, std::size_t j) const
  {
    if (i >= N_) { throw IndexError("input_node: depth must be below the horizon"); }
    return state_node(i, j);
  }
  std::size_t depth_of(std::size_t flat) const
  {
    std::size_t i = 0;
    while (flat >= offsets_[i + 1]) { ++i; }
    return i;
  }
  double path_probability(std::size_t i, std::size_t j) const { return prob_[state_node(i, j)]; }
  double path_probability(std::size_t flat) const { return prob_[flat]; }

private:
  std::size_t L_, N_;
  Vector weights_;
  std::vector<std::size_t> offsets_;
  std::vector<double> prob_;
};

/// Data of the branch-MPC problem.
struct BmpcConfig
{
  Matrix A, B;
  /// terminal feedback, used by the shift candidate
  Matrix K;
  PolytopeH Z, V, Z_F;
  std::vector<Vector> atoms;
  Vector weights;
  std::size_t N{5};
  Matrix Q, R, P;
  double epsilon{1e3};
  QpSettings qp{};
  QpBackend backend{QpBackend::InteriorPoint};
  /// skip the ξ=1 QP when ξ=0 already beats any cost it could reach (J ≥ 0)
  bool skip_dominated{true};

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  BranchTree tree() const { return {atoms.size(), N, weights}; }

  void validate() const
  {
    const Eigen::Index nx = n(), nu = m();
    if (A.cols() != nx || B.rows() != nx || K.rows() != nu || K.cols() != nx) { throw DimensionMismatch("BmpcConfig: A, B, K shapes"); }
    if (Z.dim() != nx || Z_F.dim() != nx || V.dim() != nu) { throw DimensionMismatch("BmpcConfig: constraint set dimensions"); }
    if (Q.rows() != nx || Q.cols() != nx || P.rows() != nx || P.cols() != nx || R.rows() != nu || R.cols() != nu) {
      throw DimensionMismatch("BmpcConfig: cost weight shapes");
    }
    if (atoms.empty() || static_cast<Eigen::Index>(atoms.size()) != weights.size()) { throw DimensionMismatch("BmpcConfig: atoms/weights"); }
    for (const auto & a : atoms) {
      if (a.size() != nx) { throw DimensionMismatch("BmpcConfig: atom dimension"); }
    }
    if (!(epsilon >= 0.0)) { throw DomainError("BmpcConfig: epsilon must be non-negative"); }
    for (const Matrix * W : {&Q, &R, &P}) {
      const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (*W + W->transpose()));
      if (!detail::is_symmetric(*W) || es.eigenvalues().minCoeff() < -1e-12) { throw NotSPD("BmpcConfig: Q, R, P must be PSD"); }
    }
  }
};

/// Number of decision variables (all z-nodes, then all v-nodes).
inline Eigen::Index bmpc_variable_count(const BmpcConfig & cfg)
{
  const auto tree = cfg.tree();
  return static_cast<Eigen::Index>(tree.state_node_count()) * cfg.n() + static_cast<Eigen::Index>(tree.input_node_count()) * cfg.m();
}

struct BmpcSize
{
  Eigen::Index variables;
  Eigen::Index equality_rows;
  Eigen::Index inequality_rows;
  Eigen::Index state_nodes;
  Eigen::Index input_nodes;
  Eigen::Index rows() const { return equality_rows + inequality_rows; }
};

inline BmpcSize bmpc_size(const BmpcConfig & cfg)
{
  const auto tree = cfg.tree();
  const auto S = static_cast<Eigen::Index>(tree.state_node_count());
  const auto I = static_cast<Eigen::Index>(tree.input_node_count());
  const auto F = static_cast<Eigen::Index>(tree.leaf_count());
  return {S * cfg.n() + I * cfg.m(), S * cfg.n(), I * cfg.Z.rows() + I * cfg.V.rows() + F * cfg.Z_F.rows(), S, I};
}

/**
 * @brief Build the convex QP of the branch MPC for a fixed ξ.
 *
 * Equality rows: z₀¹ = x_meas (ξ=0) or z_prev (ξ=1), then, for every state
 * node s ≥ 1 in flat order, z_s − A·z_parent − B·v_parent = μ_d(s).
 * Inequality rows: Z for depths 0..N−1, V for every input node, Z_F for the
 * leaves. Cost: probability-weighted zᵀQz, vᵀRv, leaf zᵀPz (the ε·ξ² term is
 * added by solve_bmpc()).
 */
inline QpProblem assemble(const BmpcConfig & cfg, const Vector & x_meas, const Vector & z_prev, int xi)
{
  const Eigen::Index n = cfg.n(), m = cfg.m();
  if (x_meas.size() != n || z_prev.size() != n) { throw DimensionMismatch("assemble: state dimension"); }
  if (xi != 0 && xi != 1) { throw DomainError("assemble: xi must be 0 or 1"); }
  const auto tree = cfg.tree();
  const auto sz = bmpc_size(cfg);
  const auto S = static_cast<Eigen::Index>(tree.state_node_count());
  const std::size_t L = tree.L();
  auto zcol = [&](std::size_t node) { return static_cast<Eigen::Index>(node) * n; };
  auto vcol = [&](std::size_t node) { return S * n + static_cast<Eigen::Index>(node) * m; };

  QpProblem p;
  p.f = Vector::Zero(sz.variables);

  std::vector<Triplet> h;
  for (std::size_t s = 0; s < tree.state_node_count(); ++s) {
    const double pr = tree.path_probability(s);
    const Matrix & W = tree.depth_of(s) == tree.N() ? cfg.P : cfg.Q;
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        if (W(r, c) != 0.0) { h.emplace_back(zcol(s) + r, zcol(s) + c, 2.0 * pr * W(r, c)); }
      }
    }
  }
  for (std::size_t s = 0; s < tree.input_node_count(); ++s) {
    const double pr = tree.path_probability(s);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) {
        if (cfg.R(r, c) != 0.0) { h.emplace_back(vcol(s) + r, vcol(s) + c, 2.0 * pr * cfg.R(r, c)); }
      }
    }
  }
  p.H.resize(sz.variables, sz.variables);
  p.H.setFromTriplets(h.begin(), h.end());

  std::vector<Triplet> e;
  p.b_eq.resize(sz.equality_rows);
  for (Eigen::Index r = 0; r < n; ++r) { e.emplace_back(r, r, 1.0); }
  p.b_eq.head(n) = xi == 0 ? x_meas : z_prev;
  Eigen::Index row = n;
  for (std::size_t i = 0; i < tree.N(); ++i) {
    for (std::size_t j = 1; j <= tree.width_at(i); ++j) {
      const std::size_t parent = tree.state_node(i, j);
      for (std::size_t d = 1; d <= L; ++d) {
        const std::size_t child = tree.state_node(i + 1, BranchTree::child_index(i, j, d, L));
        for (Eigen::Index r = 0; r < n; ++r) {
          e.emplace_back(row + r, zcol(child) + r, 1.0);
          for (Eigen::Index c = 0; c < n; ++c) {
            if (cfg.A(r, c) != 0.0) { e.emplace_back(row + r, zcol(parent) + c, -cfg.A(r, c)); }
          }
          for (Eigen::Index c = 0; c < m; ++c) {
            if (cfg.B(r, c) != 0.0) { e.emplace_back(row + r, vcol(parent) + c, -cfg.B(r, c)); }
          }
        }
        p.b_eq.segment(row, n) = cfg.atoms[d - 1];
        row += n;
      }
    }
  }
  p.A_eq.resize(sz.equality_rows, sz.variables);
  p.A_eq.setFromTriplets(e.begin(), e.end());

  std::vector<Triplet> g;
  p.b_in.resize(sz.inequality_rows);
  row = 0;
  auto add_rows = [&](const PolytopeH & set, Eigen::Index col) {
    for (Eigen::Index r = 0; r < set.rows(); ++r) {
      for (Eigen::Index c = 0; c < set.dim(); ++c) {
        if (set.A()(r, c) != 0.0) { g.emplace_back(row + r, col + c, set.A()(r, c)); }
      }
    }
    p.b_in.segment(row, set.rows()) = set.b();
    row += set.rows();
  };
  for (std::size_t s = 0; s < tree.input_node_count(); ++s) { add_rows(cfg.Z, zcol(s)); }
  for (std::size_t s = 0; s < tree.input_node_count(); ++s) { add_rows(cfg.V, vcol(s)); }
  for (std::size_t s = tree.input_node_count(); s < tree.state_node_count(); ++s) { add_rows(cfg.Z_F, zcol(s)); }
  p.A_in.resize(sz.inequality_rows, sz.variables);
  p.A_in.setFromTriplets(g.begin(), g.end());
  return p;
}

enum class BmpcStatus { Optimal, Infeasible };

/// Optimizer of the branch MPC, one entry per tree node.
struct BmpcSolution
{
  BmpcStatus status{BmpcStatus::Infeasible};
  int xi{0};
  std::vector<Vector> z_nodes;
  std::vector<Vector> v_nodes;
  /// J + ε·ξ²
  double cost{std::numeric_limits<double>::infinity()};
  /// status of the ξ=0 and ξ=1 subproblems (ξ=1 is MaxIter-free "not solved" when skipped)
  QpStatus status_xi0{QpStatus::MaxIter};
  std::optional<QpStatus> status_xi1;
  double solve_seconds{0.0};

  const Vector & z0() const { return z_nodes.front(); }
  const Vector & v0() const { return v_nodes.front(); }
  /// Depth-1 node z₁^d, d ∈ {1..L}.
  const Vector & z1(std::size_t d) const { return z_nodes.at(d); }
};

/// Stack node values into the decision vector used by assemble().
inline Vector pack(const std::vector<Vector> & z_nodes, const std::vector<Vector> & v_nodes)
{
  Eigen::Index len = 0;
  for (const auto & z : z_nodes) { len += z.size(); }
  for (const auto & v : v_nodes) { len += v.size(); }
  Vector x(len);
  Eigen::Index k = 0;
  for (const auto & z : z_nodes) {
    x.segment(k, z.size()) = z;
    k += z.size();
  }
  for (const auto & v : v_nodes) {
    x.segment(k, v.size()) = v;
    k += v.size();
  }
  return x;
}

/// Largest violation of the constraints of assemble(cfg, x_meas, z_prev, xi) at the given nodes.
inline double max_violation(
  const BmpcConfig & cfg, const Vector & x_meas, const Vector & z_prev, int xi, const std::vector<Vector> & z_nodes,
  const std::vector<Vector> & v_nodes)
{
  const QpProblem p = assemble(cfg, x_meas, z_prev, xi);
  const Vector x = pack(z_nodes, v_nodes);
  if (x.size() != p.num_vars()) { throw DimensionMismatch("max_violation: node count does not match the tree"); }
  const double eq = (p.A_eq * x - p.b_eq).lpNorm<Eigen::Infinity>();
  const double in = (p.A_in * x - p.b_in).maxCoeff();
  return std::max({0.0, eq, in});
}

/// Probability-weighted stage cost J of a node assignment.
inline double tree_cost(const BmpcConfig & cfg, const std::vector<Vector> & z_nodes, const std::vector<Vector> & v_nodes)
{
  const auto tree = cfg.tree();
  double J = 0.0;
  for (std::size_t s = 0; s < z_nodes.size(); ++s) {
    const Matrix & W = tree.depth_of(s) == tree.N() ? cfg.P : cfg.Q;
    J += tree.path_probability(s) * z_nodes[s].dot(W * z_nodes[s]);
  }
  for (std::size_t s = 0; s < v_nodes.size(); ++s) { J += tree.path_probability(s) * v_nodes[s].dot(cfg.R * v_nodes[s]); }
  return J;
}

struct ShiftCandidate
{
  std::vector<Vector> z_nodes;
  std::vector<Vector> v_nodes;
  int xi{1};
};

/**
 * @brief Feasible point for the next problem built from the previous optimizer.
 *
 * Re-roots the tree at depth-1 node `realized_d` (1-based): new node (i, b)
 * copies old node (i+1, (d−1)·Lⁱ + b) for i < N, the last inputs become
 * v = K·z and the new leaves A_K·z + μ.
 */
inline ShiftCandidate shift_candidate(const BmpcSolution & prev, std::size_t realized_d, const BmpcConfig & cfg)
{
  if (prev.status != BmpcStatus::Optimal) { throw DomainError("shift_candidate: previous solution is not optimal"); }
  const auto tree = cfg.tree();
  const std::size_t L = tree.L(), N = tree.N();
  if (realized_d < 1 || realized_d > L) { throw IndexError("shift_candidate: realized branch out of range"); }
  const Matrix A_K = cfg.A + cfg.B * cfg.K;

  ShiftCandidate c;
  c.z_nodes.resize(tree.state_node_count());
  c.v_nodes.resize(tree.input_node_count());
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t b = 1; b <= tree.width_at(i); ++b) {
      const std::size_t old = tree.state_node(i + 1, (realized_d - 1) * tree.width_at(i) + b);
      c.z_nodes[tree.state_node(i, b)] = prev.z_nodes[old];
      if (i + 1 < N) { c.v_nodes[tree.input_node(i, b)] = prev.v_nodes[old]; }
    }
  }
  for (std::size_t l = 1; l <= tree.width_at(N - 1); ++l) {
    const Vector & z = c.z_nodes[tree.state_node(N - 1, l)];
    c.v_nodes[tree.input_node(N - 1, l)] = cfg.K * z;
    for (std::size_t d = 1; d <= L; ++d) {
      c.z_nodes[tree.state_node(N, BranchTree::child_index(N - 1, l, d, L))] = A_K * z + cfg.atoms[d - 1];
    }
  }
  return c;
}

/**
 * @brief Branch-MPC solver that keeps one factorized QP across calls.
 *
 * Both ξ subproblems share all matrices and differ only in the right-hand
 * side of the initial-condition row, so a single ADMM workspace serves both.
 * With the interior-point backend, any non-optimal answer is re-checked by
 * ADMM, which returns infeasibility certificates.
 */
class BmpcSolver
{
public:
  explicit BmpcSolver(BmpcConfig cfg) : cfg_(std::move(cfg)), tree_(cfg_.tree())
  {
    cfg_.validate();
    const Vector zero = Vector::Zero(cfg_.n());
    base_ = assemble(cfg_, zero, zero, 0);
  }

  const BmpcConfig & config() const { return cfg_; }
  const BranchTree & tree() const { return tree_; }
  BmpcSize size() const { return bmpc_size(cfg_); }

  /**
   * @brief Solve both ξ subproblems and keep the cheaper feasible one.
   *
   * Ties (costs equal to within solver accuracy) go to ξ = 0. With skip_dominated, ξ = 1 is not solved when the
   * ξ = 0 cost is ≤ ε, since J ≥ 0 makes ξ = 1 cost at least ε.
   */
  BmpcSolution solve(const Vector & x_meas, const Vector & z_prev, const std::optional<ShiftCandidate> & warm = std::nullopt)
  {
    if (x_meas.size() != cfg_.n() || z_prev.size() != cfg_.n()) { throw DimensionMismatch("BmpcSolver::solve: state dimension"); }
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<Vector> hint;
    if (warm) { hint = pack(warm->z_nodes, warm->v_nodes); }

    BmpcSolution best;
    const QpSolution s0 = solve_xi(x_meas, hint);
    best.status_xi0 = s0.status;
    if (s0.status == QpStatus::Optimal) { adopt(best, s0, 0, x_meas); }
    if (!(cfg_.skip_dominated && best.status == BmpcStatus::Optimal && best.cost <= cfg_.epsilon)) {
      const QpSolution s1 = solve_xi(z_prev, hint);
      best.status_xi1 = s1.status;
      const bool better = best.status != BmpcStatus::Optimal || s1.objective + cfg_.epsilon < best.cost - kTieTol * (1.0 + std::abs(best.cost));
      if (s1.status == QpStatus::Optimal && better) {
        adopt(best, s1, 1, z_prev);
      }
    }
    best.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
  }

  /// relative cost difference below which the two subproblems count as tied
  static constexpr double kTieTol = 1e-7;

private:
  QpSolution solve_xi(const Vector & root, const std::optional<Vector> & hint)
  {
    // the root is fixed, so its own Z rows decide feasibility without a solve
    if (((cfg_.Z.A() * root - cfg_.Z.b()).array() > 0.0).any()) {
      QpSolution s;
      s.status = QpStatus::Infeasible;
      return s;
    }
    Vector b_eq = base_.b_eq;
    b_eq.head(cfg_.n()) = root;
    if (cfg_.backend == QpBackend::InteriorPoint) {
      QpProblem p = base_;
      p.b_eq = b_eq;
      QpSolution s = InteriorPointSolver(cfg_.qp).solve(p, hint);
      if (s.status == QpStatus::Optimal) { return s; }
    }
    if (!admm_) {
      admm_.emplace(cfg_.qp);
      admm_->setup(base_);
    }
    admm_->update(base_.f, b_eq, base_.b_in);
    return admm_->solve(hint);
  }

  /// Take the optimizer and regenerate all states from root and inputs so the dynamics hold to rounding.
  void adopt(BmpcSolution & out, const QpSolution & s, int xi, const Vector & root) const
  {
    const Eigen::Index n = cfg_.n(), m = cfg_.m();
    const auto S = static_cast<Eigen::Index>(tree_.state_node_count());
    out.z_nodes.assign(tree_.state_node_count(), Vector());
    out.v_nodes.assign(tree_.input_node_count(), Vector());
    for (std::size_t k = 0; k < tree_.input_node_count(); ++k) {
      out.v_nodes[k] = s.x.segment(S * n + static_cast<Eigen::Index>(k) * m, m);
    }
    out.z_nodes[0] = root;
    for (std::size_t i = 0; i < tree_.N(); ++i) {
      for (std::size_t j = 1; j <= tree_.width_at(i); ++j) {
        const std::size_t parent = tree_.state_node(i, j);
        for (std::size_t d = 1; d <= tree_.L(); ++d) {
          out.z_nodes[tree_.state_node(i + 1, BranchTree::child_index(i, j, d, tree_.L()))] =
            cfg_.A * out.z_nodes[parent] + cfg_.B * out.v_nodes[parent] + cfg_.atoms[d - 1];
        }
      }
    }
    out.xi = xi;
    out.cost = tree_cost(cfg_, out.z_nodes, out.v_nodes) + cfg_.epsilon * xi * xi;
    out.status = BmpcStatus::Optimal;
  }

  BmpcConfig cfg_;
  BranchTree tree_;
  QpProblem base_;
  std::optional<AdmmSolver> admm_;
};

/// One-shot branch-MPC solve.
inline BmpcSolution solve_bmpc(
  const BmpcConfig & cfg, const Vector & x_meas, const Vector & z_prev, const std::optional<ShiftCandidate> & warm = std::nullopt)
{
  return BmpcSolver(cfg).solve(x_meas, z_prev, warm);
}

}  // namespace mixsmpc
