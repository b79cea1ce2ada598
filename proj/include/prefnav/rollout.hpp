#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "prefnav/sim_env.hpp"

namespace prefnav {

struct TraceRow {
  double t{0.0};
  Pose2D pose;
  Action action;  // command applied from this pose; (0, 0) on the final row
};

/// One episode. rows.size() == steps + 1; the last row is the terminal pose.
struct RolloutTrace {
  Scene scene;
  double dt{0.2};
  std::vector<TraceRow> rows;
  DoneReason outcome{DoneReason::running};
  double ret{0.0};

  [[nodiscard]] std::size_t steps() const noexcept { return rows.empty() ? 0 : rows.size() - 1; }
  [[nodiscard]] std::vector<Pose2D> poses() const {
    std::vector<Pose2D> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.pose);
    return out;
  }
};

using Policy = std::function<Action(const StateVector&)>;

/// Runs `policy` from `ep` until the episode ends. ret is the discounted return.
inline RolloutTrace rollout(const SimEnv& env, EpisodeState ep, const Policy& policy,
                            double gamma = 0.99) {
  RolloutTrace trace;
  trace.scene = ep.scene;
  trace.dt = env.params().dt;
  StateVector s = observe(ep.scene, ep.robot);
  double discount = 1.0;
  int k = 0;
  while (ep.done_reason == DoneReason::running) {
    const Action a = policy(s);
    trace.rows.push_back({k * trace.dt, ep.robot, a});
    StepResult r = env.step(ep, a);
    trace.ret += discount * r.reward;
    discount *= gamma;
    s = std::move(r.state);
    ++k;
  }
  trace.rows.push_back({k * trace.dt, ep.robot, {0.0, 0.0}});
  trace.outcome = ep.done_reason;
  return trace;
}

struct EvalSummary {
  int episodes{0};
  double success_rate{0.0};
  double collision_rate{0.0};
  double timeout_rate{0.0};
  double mean_return{0.0};
  double mean_steps{0.0};

  friend bool operator==(const EvalSummary&, const EvalSummary&) = default;
};

inline EvalSummary summarize(const std::vector<RolloutTrace>& traces) {
  EvalSummary s;
  s.episodes = static_cast<int>(traces.size());
  if (traces.empty()) return s;
  for (const auto& t : traces) {
    s.success_rate += t.outcome == DoneReason::goal;
    s.collision_rate += t.outcome == DoneReason::collision;
    s.timeout_rate += t.outcome == DoneReason::timeout;
    s.mean_return += t.ret;
    s.mean_steps += static_cast<double>(t.steps());
  }
  const double n = static_cast<double>(traces.size());
  s.success_rate /= n;
  s.collision_rate /= n;
  s.timeout_rate /= n;
  s.mean_return /= n;
  s.mean_steps /= n;
  return s;
}

struct EvalResult {
  std::vector<RolloutTrace> traces;
  EvalSummary summary;
};

/// n episodes from env resets drawn with `rng`.
inline EvalResult evaluate_policy(const Policy& policy, const SimEnv& env, const ResetConfig& reset,
                                  int n_episodes, Rng& rng, double gamma = 0.99) {
  require(n_episodes >= 0, ErrorCode::invalid_argument, "evaluate: negative episode count");
  EvalResult out;
  out.traces.reserve(static_cast<std::size_t>(n_episodes));
  for (int i = 0; i < n_episodes; ++i) out.traces.push_back(rollout(env, env.reset(reset, rng), policy, gamma));
  out.summary = summarize(out.traces);
  return out;
}

inline EvalResult evaluate_scenes(const Policy& policy, const SimEnv& env,
                                  const std::vector<Scene>& scenes, double gamma = 0.99) {
  EvalResult out;
  for (const auto& sc : scenes) out.traces.push_back(rollout(env, env.start(sc), policy, gamma));
  out.summary = summarize(out.traces);
  return out;
}

}  // namespace prefnav
