#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "closedloop.hpp"

namespace mixsmpc {

/// Per-constraint violation counts over a campaign.
struct ConstraintStats
{
  std::string name;
  /// target lower bound on the satisfaction probability
  double target{0.0};
  bool is_input{false};
  /// time indices that are scored: 1..T for states, 0..T−1 for inputs
  std::vector<std::size_t> k;
  std::vector<std::size_t> count;
  /// episodes with at least one violation
  std::size_t episodes_violated{0};

  double rate(std::size_t i, std::size_t episodes) const { return static_cast<double>(count[i]) / static_cast<double>(episodes); }
  /// 1 − worst per-step violation rate
  double satisfaction(std::size_t episodes) const
  {
    std::size_t worst = 0;
    for (const auto c : count) { worst = std::max(worst, c); }
    return 1.0 - static_cast<double>(worst) / static_cast<double>(episodes);
  }
  /// 1 − mean per-step violation rate
  double mean_satisfaction(std::size_t episodes) const
  {
    double s = 0.0;
    for (const auto c : count) { s += static_cast<double>(c); }
    return 1.0 - s / (static_cast<double>(episodes) * static_cast<double>(count.size()));
  }
  /// fraction of episodes without any violation
  double episode_satisfaction(std::size_t episodes) const
  {
    return 1.0 - static_cast<double>(episodes_violated) / static_cast<double>(episodes);
  }
};

struct McStats
{
  std::size_t episodes{0};
  std::size_t T{0};
  std::uint64_t seed{0};
  std::vector<ConstraintStats> constraints;
  BmpcSize size{};
  std::size_t nominal_steps{0};
  std::size_t total_steps{0};
  /// per BMPC solve and per episode, in episode order
  std::vector<double> solve_seconds;
  std::vector<double> episode_seconds;
  double wall_seconds{0.0};
  unsigned workers{1};
};

struct McResult
{
  McStats stats;
  std::vector<Trajectory> trajectories;
};

/// Linear-interpolated percentile, q in [0, 100].
inline double percentile(std::vector<double> v, double q)
{
  if (v.empty()) { return 0.0; }
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/**
 * @brief Run M independent episodes, episode i on substream i of the seed.
 *
 * Episodes are handed to `workers` threads; results are stored by episode
 * index and reduced in that order, so everything except timing is independent
 * of the thread count. A SolverFault is re-thrown with the episode number.
 */
inline McResult run_monte_carlo(const ClosedLoopConfig & cfg, std::size_t M, std::uint64_t seed, unsigned workers = 1, bool keep_trajectories = true)
{
  if (M < 1) { throw DomainError("run_monte_carlo: at least one episode required"); }
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(M)));
  const RandomStream master(seed);
  std::vector<Trajectory> tr(M);
  std::vector<double> ep_seconds(M, 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;
  std::size_t error_episode = M;

  const auto wall0 = std::chrono::steady_clock::now();
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= M) { return; }
      try {
        const auto t0 = std::chrono::steady_clock::now();
        tr[i] = run_episode(cfg, master.substream(i));
        ep_seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (i < error_episode) {
          error_episode = i;
          error = std::current_exception();
        }
        next = M;
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) { pool.emplace_back(work); }
    for (auto & t : pool) { t.join(); }
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const SolverFault & e) {
      throw SolverFault("episode " + std::to_string(error_episode) + ": " + e.what());
    }
  }

  McResult res;
  McStats & s = res.stats;
  s.episodes = M;
  s.T = cfg.T;
  s.seed = seed;
  s.size = bmpc_size(cfg.bmpc);
  s.workers = workers;
  for (const auto & c : cfg.state_constraints) {
    ConstraintStats cs{c.name, c.probability, false, {}, {}, 0};
    for (std::size_t k = 1; k <= cfg.T; ++k) { cs.k.push_back(k); }
    cs.count.assign(cfg.T, 0);
    s.constraints.push_back(std::move(cs));
  }
  {
    ConstraintStats cs{cfg.input_constraint.name, cfg.input_constraint.probability, true, {}, {}, 0};
    for (std::size_t k = 0; k < cfg.T; ++k) { cs.k.push_back(k); }
    cs.count.assign(cfg.T, 0);
    s.constraints.push_back(std::move(cs));
  }
  for (std::size_t i = 0; i < M; ++i) {
    const Trajectory & t = tr[i];
    for (std::size_t c = 0; c < cfg.state_constraints.size(); ++c) {
      bool any = false;
      for (std::size_t k = 1; k <= cfg.T; ++k) {
        if (t.state_violated[c][k]) {
          ++s.constraints[c].count[k - 1];
          any = true;
        }
      }
      s.constraints[c].episodes_violated += any ? 1 : 0;
    }
    bool any = false;
    for (std::size_t k = 0; k < cfg.T; ++k) {
      if (t.input_violated[k]) {
        ++s.constraints.back().count[k];
        any = true;
      }
    }
    s.constraints.back().episodes_violated += any ? 1 : 0;
    for (const auto & st : t.steps) {
      s.solve_seconds.push_back(st.solve_seconds);
      s.nominal_steps += st.xi == 1 ? 1 : 0;
      ++s.total_steps;
    }
  }
  s.episode_seconds = std::move(ep_seconds);
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  if (keep_trajectories) { res.trajectories = std::move(tr); }
  return res;
}

}  // namespace mixsmpc
