#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "config.hpp"
#include "montecarlo.hpp"

namespace mixsmpc {

class IoError : public Error
{
public:
  using Error::Error;
};

/// Reference satisfaction values reported for the road example.
struct SoftReference
{
  std::string name;
  double value;
};

inline std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string join(const Vector & v, const char * sep)
{
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) { s += sep; }
    s += fmt17(v[i]);
  }
  return s;
}

inline std::string header(const std::string & name, Eigen::Index dim)
{
  if (dim == 1) { return name; }
  std::string s;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (i) { s += ','; }
    s += name + "_" + std::to_string(i + 1);
  }
  return s;
}

inline std::string blanks(Eigen::Index dim) { return std::string(static_cast<std::size_t>(dim - 1), ','); }

inline std::ofstream open_out(const std::filesystem::path & p)
{
  std::ofstream f(p, std::ios::binary);
  if (!f) { throw IoError("cannot write '" + p.string() + "'"); }
  return f;
}

}  // namespace detail

/// trajectories.csv: episode, k, x, u, z, e, v, xi, w, j (row k = T carries x only).
inline std::string trajectories_csv(const std::vector<Trajectory> & tr, Eigen::Index n, Eigen::Index m)
{
  using detail::header;
  std::ostringstream o;
  o << "episode,k," << header("x", n) << ',' << header("u", m) << ',' << header("z", n) << ',' << header("e", n) << ','
    << header("v", m) << ",xi," << header("w", n) << ",j\n";
  for (std::size_t ep = 0; ep < tr.size(); ++ep) {
    for (const auto & s : tr[ep].steps) {
      o << ep << ',' << s.k << ',' << detail::join(s.x, ",") << ',' << detail::join(s.u, ",") << ',' << detail::join(s.z, ",") << ','
        << detail::join(s.e, ",") << ',' << detail::join(s.v, ",") << ',' << s.xi << ',' << detail::join(s.w, ",") << ',' << s.j << '\n';
    }
    o << ep << ',' << tr[ep].steps.size() << ',' << detail::join(tr[ep].states.back(), ",") << ',' << detail::blanks(m) << ','
      << detail::blanks(n) << ',' << detail::blanks(n) << ',' << detail::blanks(m) << ",," << detail::blanks(n) << ",\n";
  }
  return o.str();
}

/// trajectories_long.csv: episode, k, variable, value.
inline std::string trajectories_long_csv(const std::vector<Trajectory> & tr)
{
  std::ostringstream o;
  o << "episode,k,variable,value\n";
  auto put = [&](std::size_t ep, std::size_t k, const std::string & name, const Vector & v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      o << ep << ',' << k << ',' << name << (v.size() > 1 ? "_" + std::to_string(i + 1) : "") << ',' << fmt17(v[i]) << '\n';
    }
  };
  for (std::size_t ep = 0; ep < tr.size(); ++ep) {
    for (const auto & s : tr[ep].steps) {
      put(ep, s.k, "x", s.x);
      put(ep, s.k, "u", s.u);
      put(ep, s.k, "z", s.z);
      put(ep, s.k, "e", s.e);
      put(ep, s.k, "v", s.v);
      put(ep, s.k, "w", s.w);
      o << ep << ',' << s.k << ",xi," << s.xi << '\n';
      o << ep << ',' << s.k << ",j," << s.j << '\n';
    }
    put(ep, tr[ep].steps.size(), "x", tr[ep].states.back());
  }
  return o.str();
}

/// violations.csv: constraint, k, count, rate.
inline std::string violations_csv(const McStats & s)
{
  std::ostringstream o;
  o << "constraint,k,count,rate\n";
  for (const auto & c : s.constraints) {
    for (std::size_t i = 0; i < c.k.size(); ++i) { o << c.name << ',' << c.k[i] << ',' << c.count[i] << ',' << fmt17(c.rate(i, s.episodes)) << '\n'; }
  }
  return o.str();
}

/// violations_long.csv: constraint, k, metric, value with the bound 1 − p for plotting.
inline std::string violations_long_csv(const McStats & s)
{
  std::ostringstream o;
  o << "constraint,k,metric,value\n";
  for (const auto & c : s.constraints) {
    for (std::size_t i = 0; i < c.k.size(); ++i) {
      o << c.name << ',' << c.k[i] << ",rate," << fmt17(c.rate(i, s.episodes)) << '\n';
      o << c.name << ',' << c.k[i] << ",bound," << fmt17(1.0 - c.target) << '\n';
    }
  }
  return o.str();
}

inline bool meets_target(const ConstraintStats & c, std::size_t episodes) { return c.satisfaction(episodes) >= c.target; }

/// summary.txt: satisfaction versus targets and problem sizes; no timing, so it is reproducible.
inline std::string summary_txt(const McStats & s, const std::vector<SoftReference> & refs = {})
{
  std::ostringstream o;
  char line[256];
  o << "episodes " << s.episodes << ", steps per episode " << s.T << ", seed " << s.seed << "\n\n";
  o << "satisfaction (1 - worst per-step violation rate)\n";
  for (const auto & c : s.constraints) {
    std::snprintf(line, sizeof line, "  %-12s %.4f  target >= %.4f  %s", c.name.c_str(), c.satisfaction(s.episodes), c.target,
                  meets_target(c, s.episodes) ? "PASS" : "FAIL");
    o << line;
    for (const auto & r : refs) {
      if (r.name == c.name) {
        std::snprintf(line, sizeof line, "  reference %.2f (diff %+.4f)", r.value, c.satisfaction(s.episodes) - r.value);
        o << line;
      }
    }
    o << '\n';
  }
  o << "\nsatisfaction, other normalizations\n";
  for (const auto & c : s.constraints) {
    std::snprintf(line, sizeof line, "  %-12s mean per-step %.4f  whole episode %.4f\n", c.name.c_str(), c.mean_satisfaction(s.episodes),
                  c.episode_satisfaction(s.episodes));
    o << line;
  }
  o << "\nproblem size per solve\n";
  o << "  state nodes        " << s.size.state_nodes << '\n';
  o << "  input nodes        " << s.size.input_nodes << '\n';
  o << "  variables          " << s.size.variables << "  (reference 488)\n";
  o << "  equality rows      " << s.size.equality_rows << '\n';
  o << "  inequality rows    " << s.size.inequality_rows << '\n';
  o << "  rows per solve     " << s.size.rows() << '\n';
  o << "  rows per episode   " << s.size.rows() * static_cast<Eigen::Index>(s.T) << "  (reference 16767)\n";
  o << "\nsteps started from the nominal state " << s.nominal_steps << " of " << s.total_steps << '\n';
  return o.str();
}

/// timing.txt: solve-time percentiles (varies run to run).
inline std::string timing_txt(const McStats & s)
{
  std::ostringstream o;
  char line[160];
  o << "workers " << s.workers << ", wall " << fmt17(s.wall_seconds) << " s\n";
  for (double q : {50.0, 90.0, 99.0, 100.0}) {
    std::snprintf(line, sizeof line, "solve p%-3.0f %.3f ms   episode p%-3.0f %.3f ms\n", q, 1e3 * percentile(s.solve_seconds, q), q,
                  1e3 * percentile(s.episode_seconds, q));
    o << line;
  }
  return o.str();
}

/// Write the report files into `dir` (created if needed).
inline void write_report(
  const std::filesystem::path & dir, const McStats & s, const std::vector<Trajectory> & tr, Eigen::Index n, Eigen::Index m,
  const std::vector<SoftReference> & refs = {})
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) { throw IoError("cannot create '" + dir.string() + "': " + ec.message()); }
  auto write = [&](const char * name, const std::string & text) {
    auto f = detail::open_out(dir / name);
    f << text;
    if (!f) { throw IoError(std::string("failed writing '") + (dir / name).string() + "'"); }
  };
  write("trajectories.csv", trajectories_csv(tr, n, m));
  write("trajectories_long.csv", trajectories_long_csv(tr));
  write("violations.csv", violations_csv(s));
  write("violations_long.csv", violations_long_csv(s));
  write("summary.txt", summary_txt(s, refs));
  write("timing.txt", timing_txt(s));
}

inline nlohmann::json to_json(const PolytopeH & P)
{
  nlohmann::json A = nlohmann::json::array();
  for (Eigen::Index r = 0; r < P.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < P.dim(); ++c) { row.push_back(P.A()(r, c)); }
    A.push_back(row);
  }
  return {{"A", A}, {"b", std::vector<double>(P.b().data(), P.b().data() + P.b().size())}};
}

inline PolytopeH polytope_from_json(const nlohmann::json & j)
{
  const auto & A = j.at("A");
  const auto & b = j.at("b");
  Matrix M(static_cast<Eigen::Index>(A.size()), A.empty() ? 0 : static_cast<Eigen::Index>(A[0].size()));
  Vector v(static_cast<Eigen::Index>(b.size()));
  for (std::size_t r = 0; r < A.size(); ++r) {
    for (std::size_t c = 0; c < A[r].size(); ++c) { M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = A[r][c].get<double>(); }
    v[static_cast<Eigen::Index>(r)] = b[r].get<double>();
  }
  return {M, v};
}

/// Tightened and terminal sets of a design as JSON.
inline nlohmann::json design_json(const Design & d)
{
  nlohmann::json K = nlohmann::json::array();
  for (Eigen::Index r = 0; r < d.K.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < d.K.cols(); ++c) { row.push_back(d.K(r, c)); }
    K.push_back(row);
  }
  return {{"K", K}, {"Z", to_json(d.sets.Z)}, {"V", to_json(d.sets.V)}, {"Z_F", to_json(d.Z_F)}};
}

}  // namespace mixsmpc
