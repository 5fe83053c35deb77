// smpc: offline design, single solves, episodes and Monte Carlo campaigns from a config file.
#include <CLI11.hpp>

#include <mixsmpc/config.hpp>
#include <mixsmpc/montecarlo.hpp>
#include <mixsmpc/report.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

using namespace mixsmpc;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNoController = 3, kSolver = 4 };

std::uint64_t pick_seed(const ExperimentConfig & cfg, const std::optional<std::uint64_t> & flag)
{
  if (flag) { return *flag; }
  if (const char * env = std::getenv("SMPC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception &) {
      throw ValidationError(std::string("SMPC_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return cfg.seed;
}

std::vector<SoftReference> references(const ExperimentConfig & cfg)
{
  std::vector<SoftReference> r;
  for (const auto & [name, v] : cfg.references) { r.push_back({name, v}); }
  return r;
}

void print_polytope(const char * name, const PolytopeH & P)
{
  std::printf("%s: %ld rows\n", name, static_cast<long>(P.rows()));
  for (Eigen::Index r = 0; r < P.rows(); ++r) {
    std::printf("  [");
    for (Eigen::Index c = 0; c < P.dim(); ++c) { std::printf("%s%s", c ? ", " : "", fmt17(P.A()(r, c)).c_str()); }
    std::printf("] x <= %s\n", fmt17(P.b()[r]).c_str());
  }
}

int cmd_tighten(const ExperimentConfig & cfg, const std::string & format)
{
  const Design d = design(cfg);
  if (format == "json") {
    std::cout << design_json(d).dump(2) << '\n';
  } else {
    print_polytope("Z", d.sets.Z);
    print_polytope("V", d.sets.V);
    print_polytope("Z_F", d.Z_F);
  }
  return kOk;
}

int cmd_solve(const ExperimentConfig & cfg, const std::vector<double> & x, const std::vector<double> & zp)
{
  const Design d = design(cfg);
  const Eigen::Index n = cfg.A.rows();
  Vector xv = x.empty() ? cfg.x0 : Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  Vector zv = zp.empty() ? xv : Eigen::Map<const Vector>(zp.data(), static_cast<Eigen::Index>(zp.size()));
  if (xv.size() != n || zv.size() != n) { throw ValidationError("--x and --z-prev need " + std::to_string(n) + " entries"); }
  const auto sz = bmpc_size(d.loop.bmpc);
  const auto sol = solve_bmpc(d.loop.bmpc, xv, zv);
  std::printf("variables %ld, equality rows %ld, inequality rows %ld\n", static_cast<long>(sz.variables), static_cast<long>(sz.equality_rows),
              static_cast<long>(sz.inequality_rows));
  if (sol.status != BmpcStatus::Optimal) {
    std::printf("infeasible for both initial conditions\n");
    return kSolver;
  }
  std::printf("xi %d, cost %s, solve %.3f ms\n", sol.xi, fmt17(sol.cost).c_str(), 1e3 * sol.solve_seconds);
  std::printf("z0 %s\nv0 %s\n", detail::join(sol.z0(), " ").c_str(), detail::join(sol.v0(), " ").c_str());
  for (std::size_t dd = 1; dd <= d.loop.bmpc.atoms.size(); ++dd) { std::printf("z1[%zu] %s\n", dd, detail::join(sol.z1(dd), " ").c_str()); }
  return kOk;
}

int cmd_simulate(const ExperimentConfig & cfg, std::uint64_t seed, const std::string & out)
{
  const Design d = design(cfg);
  const auto tr = run_episode(d.loop, RandomStream(seed));
  std::printf("%3s %12s %12s %12s %12s %3s %2s\n", "k", "x", "u", "z", "e", "xi", "j");
  for (const auto & s : tr.steps) {
    std::printf("%3zu %12.6f %12.6f %12.6f %12.6f %3d %2zu\n", s.k, s.x[0], s.u[0], s.z[0], s.e[0], s.xi, s.j);
  }
  std::printf("%3zu %12.6f\n", tr.steps.size(), tr.states.back()[0]);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream f(std::filesystem::path(out) / "trajectories.csv", std::ios::binary);
    f << trajectories_csv({tr}, cfg.A.rows(), cfg.B.cols());
    if (!f) { throw IoError("cannot write trajectories.csv in '" + out + "'"); }
  }
  return kOk;
}

int cmd_montecarlo(const ExperimentConfig & cfg, std::size_t episodes, std::uint64_t seed, const std::string & out, unsigned workers)
{
  const Design d = design(cfg);
  const auto res = run_monte_carlo(d.loop, episodes, seed, workers);
  write_report(out, res.stats, res.trajectories, cfg.A.rows(), cfg.B.cols(), references(cfg));
  std::cout << summary_txt(res.stats, references(cfg));
  std::cout << '\n' << timing_txt(res.stats);
  bool ok = true;
  for (const auto & c : res.stats.constraints) { ok = ok && meets_target(c, res.stats.episodes); }
  return ok ? kOk : kFailure;
}

int cmd_check(const ExperimentConfig & cfg, std::uint64_t seed)
{
  const Design d = design(cfg);
  const BmpcConfig & b = d.loop.bmpc;
  bool all = true;
  auto report = [&](const char * name, bool ok, const std::string & detail) {
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    all = all && ok;
  };

  report("terminal set", true, "invariant, inside Z, K Z_F inside V");

  const auto tree = b.tree();
  double worst_prob = 0.0;
  for (std::size_t i = 0; i <= tree.N(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 1; j <= tree.width_at(i); ++j) { sum += tree.path_probability(i, j); }
    worst_prob = std::max(worst_prob, std::abs(sum - 1.0));
  }
  report("tree probabilities", worst_prob <= 1e-12, "max |sum - 1| = " + fmt17(worst_prob));

  RandomStream rng(seed);
  BmpcSolver solver(b);
  double worst_shift = 0.0;
  int instances = 0;
  for (int t = 0; t < 200 && instances < 20; ++t) {
    Vector x(cfg.A.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i) { x[i] = 2.0 * rng.uniform() - 1.0; }
    x *= 3.0;
    const auto sol = solver.solve(x, x);
    if (sol.status != BmpcStatus::Optimal) { continue; }
    ++instances;
    for (std::size_t dd = 1; dd <= b.atoms.size(); ++dd) {
      const auto c = shift_candidate(sol, dd, b);
      worst_shift = std::max(worst_shift, max_violation(b, x, sol.z1(dd), 1, c.z_nodes, c.v_nodes));
    }
  }
  report("recursive feasibility", instances > 0 && worst_shift <= 1e-6,
         std::to_string(instances) + " instances, max violation " + fmt17(worst_shift));

  double ex = 0.0, eu = 0.0, ew = 0.0;
  const RandomStream master(seed);
  for (std::uint64_t ep = 0; ep < 20; ++ep) {
    const auto tr = run_episode(d.loop, master.substream(ep));
    const auto [a, c] = relation_errors(tr, b.K);
    ex = std::max(ex, a);
    eu = std::max(eu, c);
    for (std::size_t k = 0; k < tr.steps.size(); ++k) { ew = std::max(ew, (tr.steps[k].w - tr.w_true[k]).lpNorm<Eigen::Infinity>()); }
  }
  report("relation x = z + e", ex <= 1e-12, "max " + fmt17(ex));
  report("relation u = v + K e", eu <= 1e-12, "max " + fmt17(eu));
  report("disturbance reconstruction", ew <= 1e-12, "max " + fmt17(ew));
  return all ? kOk : kFailure;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Stochastic MPC under Gaussian-mixture disturbances"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::optional<std::size_t> episodes;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<double> x, z_prev;

  auto add_config = [&](CLI::App * s) { s->add_option("--config", config_path, "configuration file")->required(); };
  auto * tighten = app.add_subcommand("tighten", "print the tightened sets Z, V and the terminal set");
  add_config(tighten);
  tighten->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json", "csv"}));
  auto * solve = app.add_subcommand("solve", "solve one branch-MPC problem");
  add_config(solve);
  solve->add_option("--x", x, "measured state (default x0)");
  solve->add_option("--z-prev", z_prev, "previous nominal state (default: the measurement)");
  auto * simulate = app.add_subcommand("simulate", "run one episode and print it");
  add_config(simulate);
  simulate->add_option("--seed", seed, "episode seed");
  simulate->add_option("--out", out, "also write trajectories.csv here");
  auto * mc = app.add_subcommand("montecarlo", "run a Monte Carlo campaign and write reports");
  add_config(mc);
  mc->add_option("--episodes", episodes, "number of episodes");
  mc->add_option("--seed", seed, "master seed (overrides SMPC_SEED and the config)");
  mc->add_option("--out", out, "output directory");
  mc->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  mc->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));
  auto * check = app.add_subcommand("check", "run the invariant checks on a configuration");
  add_config(check);
  check->add_option("--seed", seed, "seed for the randomized checks");

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = load_config(config_path);
    if (tighten->parsed()) { return cmd_tighten(cfg, format); }
    if (solve->parsed()) { return cmd_solve(cfg, x, z_prev); }
    if (simulate->parsed()) { return cmd_simulate(cfg, pick_seed(cfg, seed), out); }
    if (mc->parsed()) { return cmd_montecarlo(cfg, episodes.value_or(cfg.episodes), pick_seed(cfg, seed), out.empty() ? cfg.out_dir : out, workers); }
    if (check->parsed()) { return cmd_check(cfg, pick_seed(cfg, seed)); }
  } catch (const ParseError & e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const ValidationError & e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const EmptySet & e) {
    std::fprintf(stderr, "no controller: %s\n", e.what());
    return kNoController;
  } catch (const NoConvergence & e) {
    std::fprintf(stderr, "no controller: %s\n", e.what());
    return kNoController;
  } catch (const NotStable & e) {
    std::fprintf(stderr, "no controller: %s\n", e.what());
    return kNoController;
  } catch (const SolverFault & e) {
    std::fprintf(stderr, "solver fault: %s\n", e.what());
    return kSolver;
  } catch (const std::exception & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
