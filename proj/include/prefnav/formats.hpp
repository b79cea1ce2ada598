#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefnav/demo_pipeline.hpp"
#include "prefnav/rollout.hpp"
#include "prefnav/td3bc.hpp"

namespace prefnav {

using Json = nlohmann::json;

inline constexpr int kDemoFormatVersion = 1;
inline constexpr int kTransitionsFormatVersion = 1;
inline constexpr int kTraceFormatVersion = 1;

namespace detail {

template <typename F>
auto parse_guard(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::format, what + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Geometry

inline Json to_json(Vec2 p) { return Json::array({p.x, p.y}); }
inline Json to_json(const Pose2D& p) { return Json::array({p.x, p.y, p.heading}); }
inline Json to_json(const ObstacleRect& r) { return Json::array({to_json(r.min_corner), to_json(r.max_corner)}); }

inline Vec2 vec2_from_json(const Json& j) {
  require(j.is_array() && j.size() == 2, ErrorCode::format, "expected [x, y]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline Pose2D pose_from_json(const Json& j) {
  require(j.is_array() && j.size() == 3, ErrorCode::format, "expected [x, y, heading]");
  const double x = j.at(0).get<double>(), y = j.at(1).get<double>(), h = j.at(2).get<double>();
  require(std::isfinite(x) && std::isfinite(y) && std::isfinite(h), ErrorCode::format, "pose must be finite");
  return make_pose(x, y, h);
}

inline ObstacleRect rect_from_json(const Json& j) {
  require(j.is_array() && j.size() == 2, ErrorCode::format, "expected [[xmin, ymin], [xmax, ymax]]");
  return make_rect(vec2_from_json(j.at(0)), vec2_from_json(j.at(1)));
}

inline Json to_json(const EnvironmentSpec& env) {
  Json obs = Json::array();
  for (const auto& o : env.obstacles) obs.push_back(to_json(o));
  Json anchors = Json::array();
  for (const auto& a : env.human_anchors) anchors.push_back(to_json(a));
  return {{"name", env.name},
          {"bounds", to_json(env.bounds)},
          {"obstacles", obs},
          {"human_anchors", anchors},
          {"robot_start_anchor", to_json(env.robot_start_anchor)},
          {"goal_anchor", to_json(env.goal_anchor)}};
}

inline EnvironmentSpec environment_from_json(const Json& j, const RadiusConfig& radii = {}) {
  return detail::parse_guard("environment", [&] {
    EnvironmentSpec env;
    env.name = j.at("name").get<std::string>();
    require(!env.name.empty(), ErrorCode::format, "environment: empty name");
    env.bounds = rect_from_json(j.at("bounds"));
    for (const auto& o : j.at("obstacles")) env.obstacles.push_back(rect_from_json(o));
    const auto& anchors = j.at("human_anchors");
    require(anchors.size() == env.human_anchors.size(), ErrorCode::format, "environment: need 4 human anchors");
    for (std::size_t i = 0; i < env.human_anchors.size(); ++i) env.human_anchors[i] = pose_from_json(anchors.at(i));
    env.robot_start_anchor = pose_from_json(j.at("robot_start_anchor"));
    env.goal_anchor = vec2_from_json(j.at("goal_anchor"));
    validate_environment(env, radii);
    return env;
  });
}

inline Json to_json(const Scene& s) {
  return {{"scene_id", scene_id(s)}, {"environment", to_json(s.env)}, {"anchor", s.anchor},
          {"human", to_json(s.human)}, {"robot_start", to_json(s.robot_start)}, {"goal", to_json(s.goal)}};
}

inline Scene scene_from_json(const Json& j) {
  return detail::parse_guard("scene", [&] {
    Scene s;
    s.env = environment_from_json(j.at("environment"));
    s.anchor = j.value("anchor", -1);
    s.human = pose_from_json(j.at("human"));
    s.robot_start = pose_from_json(j.at("robot_start"));
    s.goal = vec2_from_json(j.at("goal"));
    return s;
  });
}

// ---------------------------------------------------------------------------
// Demonstration files

struct DemoFile {
  RawDemoTrajectory raw;
  Scene scene;
};

inline Json demo_to_json(const RawDemoTrajectory& raw, const Scene& scene) {
  Json pts = Json::array();
  for (const auto& p : raw.points) pts.push_back(to_json(p));
  return {{"format_version", kDemoFormatVersion},
          {"scene_id", scene_id(scene)},
          {"environment", scene.env.name},
          {"anchor", scene.anchor},
          {"human", to_json(scene.human)},
          {"robot_start", to_json(scene.robot_start)},
          {"goal", to_json(scene.goal)},
          {"points", pts},
          {"speeds", raw.speeds},
          {"created_at", raw.created_at}};
}

/// `resolve` maps an environment name to its geometry.
template <typename Resolve>
DemoFile demo_from_json(const Json& j, Resolve&& resolve) {
  return detail::parse_guard("demo file", [&] {
    require(j.at("format_version").get<int>() == kDemoFormatVersion, ErrorCode::format,
            "demo file: unsupported format_version");
    DemoFile d;
    d.scene.env = resolve(j.at("environment").get<std::string>());
    d.scene.anchor = j.value("anchor", -1);
    d.scene.human = pose_from_json(j.at("human"));
    d.scene.robot_start = pose_from_json(j.at("robot_start"));
    d.scene.goal = vec2_from_json(j.at("goal"));
    for (const auto& p : j.at("points")) d.raw.points.push_back(vec2_from_json(p));
    d.raw.speeds = j.at("speeds").get<std::vector<double>>();
    d.raw.scene_id = j.at("scene_id").get<std::string>();
    d.raw.created_at = j.value("created_at", "");
    return d;
  });
}

/// Request body of a drawn trajectory: {points, speeds, created_at?}.
inline RawDemoTrajectory raw_from_json(const Json& j, const std::string& sid) {
  return detail::parse_guard("trajectory", [&] {
    RawDemoTrajectory raw;
    for (const auto& p : j.at("points")) raw.points.push_back(vec2_from_json(p));
    raw.speeds = j.at("speeds").get<std::vector<double>>();
    raw.scene_id = sid;
    raw.created_at = j.value("created_at", "");
    return raw;
  });
}

// ---------------------------------------------------------------------------
// Transitions files

struct TransitionProvenance {
  std::string demo;
  std::string scene_id;
  int variants{0};
  std::vector<int> skipped;
  std::size_t first{0};
  std::size_t count{0};
};

struct TransitionsFile {
  std::size_t state_dim{0};
  std::string environment;
  std::vector<Transition> transitions;
  std::vector<TransitionProvenance> provenance;
};

inline Json to_json(const TransitionsFile& f) {
  Json rows = Json::array();
  for (const auto& t : f.transitions)
    rows.push_back(Json::array({t.s.values, Json::array({t.a.v, t.a.omega}), t.r, t.s_next.values, t.done,
                                std::string(to_string(t.source))}));
  Json prov = Json::array();
  for (const auto& p : f.provenance)
    prov.push_back({{"demo", p.demo}, {"scene_id", p.scene_id}, {"variants", p.variants}, {"skipped", p.skipped},
                    {"first", p.first}, {"count", p.count}});
  return {{"format_version", kTransitionsFormatVersion}, {"state_dim", f.state_dim}, {"environment", f.environment},
          {"transitions", rows}, {"provenance", prov}};
}

inline TransitionsFile transitions_from_json(const Json& j) {
  return detail::parse_guard("transitions file", [&] {
    require(j.at("format_version").get<int>() == kTransitionsFormatVersion, ErrorCode::format,
            "transitions file: unsupported format_version");
    TransitionsFile f;
    f.state_dim = j.at("state_dim").get<std::size_t>();
    f.environment = j.value("environment", "");
    for (const auto& row : j.at("transitions")) {
      require(row.is_array() && row.size() == 6, ErrorCode::format, "transitions file: row needs 6 fields");
      Transition t;
      t.s.values = row.at(0).get<std::vector<double>>();
      t.a = {row.at(1).at(0).get<double>(), row.at(1).at(1).get<double>()};
      t.r = row.at(2).get<double>();
      t.s_next.values = row.at(3).get<std::vector<double>>();
      t.done = row.at(4).get<bool>();
      const auto src = row.at(5).get<std::string>();
      require(src == "demo" || src == "online", ErrorCode::format, "transitions file: bad source tag");
      t.source = src == "demo" ? Source::demo : Source::online;
      require(t.s.size() == f.state_dim && t.s_next.size() == f.state_dim, ErrorCode::format,
              "transitions file: state dimension mismatch");
      f.transitions.push_back(std::move(t));
    }
    for (const auto& p : j.value("provenance", Json::array()))
      f.provenance.push_back({p.at("demo").get<std::string>(), p.at("scene_id").get<std::string>(),
                              p.at("variants").get<int>(), p.at("skipped").get<std::vector<int>>(),
                              p.at("first").get<std::size_t>(), p.at("count").get<std::size_t>()});
    return f;
  });
}

// ---------------------------------------------------------------------------
// Traces

inline Json to_json(const RolloutTrace& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back(Json::array({r.t, r.pose.x, r.pose.y, r.pose.heading, r.action.v, r.action.omega}));
  return {{"format_version", kTraceFormatVersion}, {"scene", to_json(t.scene)}, {"dt", t.dt}, {"rows", rows},
          {"outcome", std::string(to_string(t.outcome))}, {"return", t.ret}};
}

inline RolloutTrace trace_from_json(const Json& j) {
  return detail::parse_guard("trace", [&] {
    RolloutTrace t;
    t.scene = scene_from_json(j.at("scene"));
    t.dt = j.at("dt").get<double>();
    for (const auto& r : j.at("rows")) {
      require(r.is_array() && r.size() == 6, ErrorCode::format, "trace: row needs 6 fields");
      t.rows.push_back({r.at(0).get<double>(),
                        {r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>()},
                        {r.at(4).get<double>(), r.at(5).get<double>()}});
    }
    const auto outcome = j.at("outcome").get<std::string>();
    bool known = false;
    for (DoneReason d : {DoneReason::running, DoneReason::goal, DoneReason::collision, DoneReason::timeout})
      if (to_string(d) == outcome) {
        t.outcome = d;
        known = true;
      }
    require(known, ErrorCode::format, "trace: unknown outcome");
    t.ret = j.value("return", 0.0);
    return t;
  });
}

// ---------------------------------------------------------------------------
// Training configuration and logs

inline Json to_json(const TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"sigma_explore", c.sigma_explore},
          {"sigma_target", c.sigma_target},
          {"target_clip", c.target_clip},
          {"lambda_rl", c.lambda_rl},
          {"lambda_bc", c.lambda_bc},
          {"batch_online", c.batch_online},
          {"batch_demo", c.batch_demo},
          {"lr_actor", c.lr_actor},
          {"lr_critic", c.lr_critic},
          {"p_env", c.p_env},
          {"n_ep", c.n_ep},
          {"epochs", c.epochs},
          {"interactions_per_epoch", c.interactions_per_epoch},
          {"update_every", c.update_every},
          {"eval_episodes", c.eval_episodes},
          {"preinit_steps", c.preinit_steps},
          {"buffer_capacity", c.buffer_capacity},
          {"lambda_switch_epoch", c.lambda_switch_epoch},
          {"lambda_rl_after", c.lambda_rl_after},
          {"lambda_bc_after", c.lambda_bc_after},
          {"lr_switch_epoch", c.lr_switch_epoch},
          {"lr_actor_after", c.lr_actor_after},
          {"tau", c.tau},
          {"policy_delay", c.policy_delay},
          {"target_actor_in_targets", c.target_actor_in_targets},
          {"hidden", c.hidden},
          {"checkpoint_every", c.checkpoint_every}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline TrainConfig train_config_from_json(const Json& j, TrainConfig c = {}) {
  return detail::parse_guard("train config", [&] {
    require(j.is_object(), ErrorCode::format, "train config: expected an object");
    const Json known = to_json(c);
    for (const auto& [key, value] : j.items()) {
      require(known.contains(key), ErrorCode::format, "train config: unknown key '" + key + "'");
      (void)value;
    }
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("gamma", c.gamma);
    get("sigma_explore", c.sigma_explore);
    get("sigma_target", c.sigma_target);
    get("target_clip", c.target_clip);
    get("lambda_rl", c.lambda_rl);
    get("lambda_bc", c.lambda_bc);
    get("batch_online", c.batch_online);
    get("batch_demo", c.batch_demo);
    get("lr_actor", c.lr_actor);
    get("lr_critic", c.lr_critic);
    get("p_env", c.p_env);
    get("n_ep", c.n_ep);
    get("epochs", c.epochs);
    get("interactions_per_epoch", c.interactions_per_epoch);
    get("update_every", c.update_every);
    get("eval_episodes", c.eval_episodes);
    get("preinit_steps", c.preinit_steps);
    get("buffer_capacity", c.buffer_capacity);
    get("lambda_switch_epoch", c.lambda_switch_epoch);
    get("lambda_rl_after", c.lambda_rl_after);
    get("lambda_bc_after", c.lambda_bc_after);
    get("lr_switch_epoch", c.lr_switch_epoch);
    get("lr_actor_after", c.lr_actor_after);
    get("tau", c.tau);
    get("policy_delay", c.policy_delay);
    get("target_actor_in_targets", c.target_actor_in_targets);
    get("hidden", c.hidden);
    get("checkpoint_every", c.checkpoint_every);
    c.validate();
    return c;
  });
}

inline Json to_json(const EvalSummary& s) {
  return {{"episodes", s.episodes},         {"success_rate", s.success_rate}, {"collision_rate", s.collision_rate},
          {"timeout_rate", s.timeout_rate}, {"mean_return", s.mean_return},   {"mean_steps", s.mean_steps}};
}

inline Json to_json(const EpochLog& l) {
  return {{"epoch", l.epoch},
          {"interactions", l.interactions},
          {"buffer_size", l.buffer_size},
          {"critic_updates", l.critic_updates},
          {"actor_updates", l.actor_updates},
          {"critic_loss", l.critic_loss},
          {"actor_j", l.actor_j},
          {"actor_bc", l.actor_bc},
          {"lambda_rl", l.lambda_rl},
          {"lambda_bc", l.lambda_bc},
          {"lr_actor", l.lr_actor},
          {"eval", to_json(l.eval)}};
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::format, path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path);
}

inline void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(1) + "\n"); }

}  // namespace prefnav
