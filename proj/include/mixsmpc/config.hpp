#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "closedloop.hpp"
#include "tightening.hpp"

namespace mixsmpc {

/// Malformed configuration text; carries the position in the file.
class ParseError : public Error
{
public:
  ParseError(const std::string & msg, int line, int column)
      : Error(msg + " (line " + std::to_string(line + 1) + ", column " + std::to_string(column + 1) + ")"), line_(line + 1),
        column_(column + 1)
  {
  }
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_, column_;
};

/// Well-formed configuration whose values break an invariant.
class ValidationError : public Error
{
public:
  using Error::Error;
};

struct ExperimentConfig
{
  Matrix A, B;
  /// nullopt: LQR gain for Q, R
  std::optional<Matrix> K;
  Vector x0;
  std::vector<Vector> means;
  Vector weights;
  Matrix cov;
  ChanceSpec spec;
  std::size_t N{5};
  std::size_t T{10};
  Matrix Q, R, P;
  double epsilon{1e3};
  PrsNoise prs_noise{PrsNoise::Component};
  std::size_t episodes{1000};
  std::uint64_t seed{1};
  std::string out_dir{"out"};
  int terminal_max_iter{500};
  /// optional satisfaction values to compare against, by constraint name
  std::vector<std::pair<std::string, double>> references;
};

namespace detail {

inline std::string where(const YAML::Node & n)
{
  const auto m = n.Mark();
  if (m.is_null()) { return ""; }
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

inline double as_double(const YAML::Node & n, const std::string & field)
{
  try {
    return n.as<double>();
  } catch (const YAML::Exception &) {
    throw ParseError(field + ": expected a number", n.Mark().line, n.Mark().column);
  }
}

/// Number, flat list, or (for column vectors written as rows) a list of one-element lists.
inline Vector as_vector(const YAML::Node & n, const std::string & field)
{
  if (n.IsScalar()) { return Vector::Constant(1, as_double(n, field)); }
  if (!n.IsSequence()) { throw ParseError(field + ": expected a number or a list", n.Mark().line, n.Mark().column); }
  Vector v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) { v[static_cast<Eigen::Index>(i)] = as_double(n[i], field); }
  return v;
}

/// Number (1×1) or list of rows.
inline Matrix as_matrix(const YAML::Node & n, const std::string & field)
{
  if (n.IsScalar()) { return Matrix::Constant(1, 1, as_double(n, field)); }
  if (!n.IsSequence() || n.size() == 0) { throw ParseError(field + ": expected a number or a list of rows", n.Mark().line, n.Mark().column); }
  const std::size_t rows = n.size();
  const std::size_t cols = n[0].IsSequence() ? n[0].size() : 1;
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = as_vector(n[r], field);
    if (static_cast<std::size_t>(row.size()) != cols) {
      throw ParseError(field + ": rows have different lengths", n[r].Mark().line, n[r].Mark().column);
    }
    M.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return M;
}

inline YAML::Node required(const YAML::Node & parent, const std::string & key, const std::string & field)
{
  const YAML::Node n = parent[key];
  if (!n) { throw ParseError("missing field '" + field + "'", parent.Mark().line, parent.Mark().column); }
  return n;
}

/// {A, b} half-spaces or a {lower, upper} box.
inline PolytopeH as_polytope(const YAML::Node & n, const std::string & field)
{
  if (n["lower"] || n["upper"]) {
    const Vector lo = as_vector(required(n, "lower", field + ".lower"), field + ".lower");
    const Vector hi = as_vector(required(n, "upper", field + ".upper"), field + ".upper");
    if (lo.size() != hi.size()) { throw ValidationError(field + ": lower and upper differ in length" + where(n)); }
    if ((lo.array() > hi.array()).any()) { throw ValidationError(field + ": lower must not exceed upper" + where(n)); }
    return PolytopeH::box(lo, hi);
  }
  const Matrix A = as_matrix(required(n, "A", field + ".A"), field + ".A");
  const Vector b = as_vector(required(n, "b", field + ".b"), field + ".b");
  if (A.rows() != b.size()) { throw ValidationError(field + ": A and b have different row counts" + where(n)); }
  return {A, b};
}

inline ChanceConstraint as_constraint(const YAML::Node & n, const std::string & field, const std::string & default_name)
{
  ChanceConstraint c{default_name, as_polytope(n, field), 0.0};
  if (n["name"]) { c.name = n["name"].as<std::string>(); }
  c.probability = as_double(required(n, "probability", field + ".probability"), field + ".probability");
  return c;
}

}  // namespace detail

/**
 * @brief Check an experiment configuration; throws ValidationError naming the broken rule.
 */
inline void validate(const ExperimentConfig & c)
{
  const Eigen::Index n = c.A.rows();
  auto fail = [](const std::string & m) { throw ValidationError(m); };
  if (c.A.cols() != n) { fail("system.A must be square"); }
  if (c.B.rows() != n) { fail("system.B must have as many rows as A"); }
  const Eigen::Index m = c.B.cols();
  if (c.K && (c.K->rows() != m || c.K->cols() != n)) { fail("system.K must be m×n"); }
  if (c.x0.size() != n) { fail("system.x0 must have the state dimension"); }
  if (c.means.empty()) { fail("disturbance.means must list at least one component"); }
  for (const auto & mu : c.means) {
    if (mu.size() != n) { fail("disturbance.means entries must have the state dimension"); }
  }
  if (c.weights.size() != static_cast<Eigen::Index>(c.means.size()) || std::abs(c.weights.sum() - 1.0) > 1e-12 ||
      (c.weights.array() < 0.0).any()) {
    fail("disturbance.weights: weights must sum to 1, be non-negative and match the number of means");
  }
  if (c.cov.rows() != n || c.cov.cols() != n || !detail::is_symmetric(c.cov) || !is_spd(c.cov)) {
    fail("disturbance.cov must be symmetric positive definite with the state dimension");
  }
  if (c.spec.state.empty()) { fail("constraints.state must list at least one constraint"); }
  for (const auto & s : c.spec.state) {
    if (s.set.dim() != n) { fail("constraints.state." + s.name + " must have the state dimension"); }
  }
  if (c.spec.input.set.dim() != m) { fail("constraints.input must have the input dimension"); }
  try {
    c.spec.validate();
  } catch (const Error & e) {
    throw ValidationError(std::string("constraints: ") + e.what());
  }
  if (c.N < 1) { fail("horizon.N must be at least 1"); }
  if (c.T < 1) { fail("horizon.T must be at least 1"); }
  if (c.Q.rows() != n || c.Q.cols() != n || c.P.rows() != n || c.P.cols() != n || c.R.rows() != m || c.R.cols() != m) {
    fail("cost.Q, cost.P must be n×n and cost.R m×m");
  }
  if (!(c.epsilon >= 0.0)) { fail("cost.epsilon must be non-negative"); }
  if (c.episodes < 1) { fail("monte_carlo.episodes must be at least 1"); }
}

/// Parse and validate configuration text (YAML).
inline ExperimentConfig parse_config(const std::string & text)
{
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException & e) {
    throw ParseError(e.msg, e.mark.line, e.mark.column);
  }
  if (!root.IsMap()) { throw ParseError("top level must be a mapping", 0, 0); }
  using detail::as_matrix;
  using detail::as_vector;
  using detail::required;

  ExperimentConfig c;
  try {
    const auto sys = required(root, "system", "system");
    c.A = as_matrix(required(sys, "A", "system.A"), "system.A");
    c.B = as_matrix(required(sys, "B", "system.B"), "system.B");
    if (sys["K"] && !(sys["K"].IsScalar() && sys["K"].as<std::string>() == "lqr")) { c.K = as_matrix(sys["K"], "system.K"); }
    c.x0 = sys["x0"] ? as_vector(sys["x0"], "system.x0") : Vector::Zero(c.A.rows());

    const auto dist = required(root, "disturbance", "disturbance");
    const auto means = required(dist, "means", "disturbance.means");
    if (!means.IsSequence()) { throw ParseError("disturbance.means: expected a list", means.Mark().line, means.Mark().column); }
    for (const auto & mu : means) { c.means.push_back(as_vector(mu, "disturbance.means")); }
    c.weights = dist["weights"] ? as_vector(dist["weights"], "disturbance.weights") : Vector();
    c.cov = as_matrix(required(dist, "cov", "disturbance.cov"), "disturbance.cov");

    const auto cons = required(root, "constraints", "constraints");
    const auto state = required(cons, "state", "constraints.state");
    if (!state.IsSequence()) { throw ParseError("constraints.state: expected a list", state.Mark().line, state.Mark().column); }
    for (std::size_t i = 0; i < state.size(); ++i) {
      c.spec.state.push_back(detail::as_constraint(state[i], "constraints.state[" + std::to_string(i) + "]", "state" + std::to_string(i + 1)));
    }
    c.spec.input = detail::as_constraint(required(cons, "input", "constraints.input"), "constraints.input", "input");

    if (const auto h = root["horizon"]) {
      if (h["N"]) { c.N = h["N"].as<std::size_t>(); }
      if (h["T"]) { c.T = h["T"].as<std::size_t>(); }
    }
    const Eigen::Index n = c.A.rows(), m = c.B.cols();
    c.Q = Matrix::Identity(n, n);
    c.R = Matrix::Identity(m, m);
    c.P = Matrix::Identity(n, n);
    if (const auto cost = root["cost"]) {
      if (cost["Q"]) { c.Q = as_matrix(cost["Q"], "cost.Q"); }
      if (cost["R"]) { c.R = as_matrix(cost["R"], "cost.R"); }
      if (cost["P"]) { c.P = as_matrix(cost["P"], "cost.P"); }
      if (cost["epsilon"]) { c.epsilon = detail::as_double(cost["epsilon"], "cost.epsilon"); }
    }
    if (const auto noise = root["prs_noise"]) {
      const auto s = noise.as<std::string>();
      if (s == "component") {
        c.prs_noise = PrsNoise::Component;
      } else if (s == "mixture") {
        c.prs_noise = PrsNoise::Mixture;
      } else {
        throw ParseError("prs_noise: expected 'component' or 'mixture'", noise.Mark().line, noise.Mark().column);
      }
    }
    if (const auto mc = root["monte_carlo"]) {
      if (mc["episodes"]) { c.episodes = mc["episodes"].as<std::size_t>(); }
      if (mc["seed"]) { c.seed = mc["seed"].as<std::uint64_t>(); }
    }
    if (const auto out = root["output"]) {
      if (out["dir"]) { c.out_dir = out["dir"].as<std::string>(); }
    }
    if (const auto r = root["reference_satisfaction"]) {
      if (!r.IsMap()) { throw ParseError("reference_satisfaction: expected a mapping", r.Mark().line, r.Mark().column); }
      for (const auto & kv : r) {
        const auto name = kv.first.as<std::string>();
        c.references.emplace_back(name, detail::as_double(kv.second, "reference_satisfaction." + name));
      }
    }
    if (const auto t = root["terminal_set"]) {
      if (t["max_iter"]) { c.terminal_max_iter = t["max_iter"].as<int>(); }
    }
  } catch (const YAML::TypedBadConversion<std::size_t> & e) {
    throw ParseError("expected a non-negative integer", e.mark.line, e.mark.column);
  } catch (const YAML::RepresentationException & e) {
    throw ParseError(e.msg, e.mark.line, e.mark.column);
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) { throw ParseError("cannot read configuration file '" + path + "'", -1, -1); }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Offline part of the controller: gain, tightened sets, terminal set.
struct Design
{
  Matrix K;
  ErrorModel error_model;
  TightenedSets sets;
  PolytopeH Z_F;
  ClosedLoopConfig loop;
};

/**
 * @brief Run the offline synthesis for a configuration.
 *
 * Throws EmptyTightening / EmptySet / NoConvergence when no controller exists.
 */
inline Design design(const ExperimentConfig & c)
{
  const GaussianMixture mixture(c.means, c.weights, c.cov);
  const Matrix K = c.K ? *c.K : lqr_gain(c.A, c.B, c.Q, c.R);
  ErrorModel em = ErrorModel::from_mixture(c.A, c.B, K, mixture, c.prs_noise);
  TightenedSets sets = tighten(em, c.spec);
  const auto [disc, gauss] = mixture.decouple();
  PolytopeH Z_F = terminal_set(em, sets.Z, sets.V, disc.atoms, c.terminal_max_iter);

  BmpcConfig b;
  b.A = c.A;
  b.B = c.B;
  b.K = K;
  b.Z = sets.Z;
  b.V = sets.V;
  b.Z_F = Z_F;
  b.atoms = disc.atoms;
  b.weights = disc.weights;
  b.N = c.N;
  b.Q = c.Q;
  b.R = c.R;
  b.P = c.P;
  b.epsilon = c.epsilon;
  ClosedLoopConfig loop{b, mixture, c.spec.state, c.spec.input, c.x0, c.T};
  return {K, std::move(em), std::move(sets), std::move(Z_F), std::move(loop)};
}

}  // namespace mixsmpc
