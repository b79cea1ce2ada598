#include <gtest/gtest.h>

#include <filesystem>

#include "prefnav/formats.hpp"
#include "prefnav/scripted_demo.hpp"

using namespace prefnav;
namespace fs = std::filesystem;

namespace {

EnvironmentSpec resolve(const std::string& name) {
  auto env = find_builtin_environment(name);
  if (!env) throw Error(ErrorCode::format, "unknown environment " + name);
  return *env;
}

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / ("prefnav-formats-" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Formats, EnvironmentRoundTrip) {
  for (const auto& env : builtin_environments()) {
    const EnvironmentSpec back = environment_from_json(Json::parse(to_json(env).dump()));
    EXPECT_EQ(back.name, env.name);
    ASSERT_EQ(back.obstacles.size(), env.obstacles.size());
    for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
      EXPECT_EQ(back.obstacles[i].min_corner, env.obstacles[i].min_corner);
      EXPECT_EQ(back.obstacles[i].max_corner, env.obstacles[i].max_corner);
    }
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(back.human_anchors[i], env.human_anchors[i]);
    EXPECT_EQ(back.goal_anchor, env.goal_anchor);
  }
}

TEST(Formats, EnvironmentRejectsBadInput) {
  Json j = to_json(room_environment());
  j["human_anchors"].erase(0);
  EXPECT_THROW((void)environment_from_json(j), Error);
  j = to_json(room_environment());
  j["bounds"] = Json::array({Json::array({1, 1}), Json::array({0, 0})});
  EXPECT_THROW((void)environment_from_json(j), Error);
  j = to_json(room_environment());
  j.erase("goal_anchor");
  try {
    (void)environment_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::format);
  }
}

TEST(Formats, DemoRoundTrip) {
  const Scene sc = anchor_scenes(room_environment())[2];
  RawDemoTrajectory raw = scripted_demo(DemoStyle::speed_dip, sc, 4);
  raw.created_at = "2026-01-01T00:00:00Z";
  const DemoFile back = demo_from_json(Json::parse(demo_to_json(raw, sc).dump()), resolve);
  EXPECT_EQ(back.raw.points, raw.points);
  EXPECT_EQ(back.raw.speeds, raw.speeds);
  EXPECT_EQ(back.raw.created_at, raw.created_at);
  EXPECT_EQ(back.raw.scene_id, scene_id(sc));
  EXPECT_EQ(back.scene.human, sc.human);
  EXPECT_EQ(back.scene.robot_start, sc.robot_start);
  EXPECT_EQ(back.scene.goal, sc.goal);
  EXPECT_EQ(back.scene.anchor, 2);
  EXPECT_EQ(scene_id(back.scene), scene_id(sc));
}

TEST(Formats, DemoVersionChecked) {
  const Scene sc = anchor_scenes(room_environment())[0];
  Json j = demo_to_json(scripted_demo(DemoStyle::wide_curve, sc, 1), sc);
  j["format_version"] = 99;
  EXPECT_THROW((void)demo_from_json(j, resolve), Error);
  j["format_version"] = kDemoFormatVersion;
  j["points"][0] = Json::array({1.0});
  EXPECT_THROW((void)demo_from_json(j, resolve), Error);
}

TEST(Formats, TransitionsRoundTrip) {
  const SimEnv env(room_environment());
  const Scene sc = anchor_scenes(room_environment())[0];
  const auto pd = process_demo(scripted_demo(DemoStyle::wide_curve, sc, 2), sc, env);
  TransitionsFile f;
  f.state_dim = env.state_dim();
  f.environment = "room";
  for (const auto& v : pd.augmented.variants) f.transitions.insert(f.transitions.end(), v.begin(), v.end());
  f.provenance.push_back({"demo-1.json", scene_id(sc), 15, {}, 0, f.transitions.size()});
  const TransitionsFile back = transitions_from_json(Json::parse(to_json(f).dump()));
  EXPECT_EQ(back.state_dim, f.state_dim);
  EXPECT_EQ(back.environment, "room");
  ASSERT_EQ(back.transitions.size(), f.transitions.size());
  for (std::size_t i = 0; i < f.transitions.size(); ++i) ASSERT_EQ(back.transitions[i], f.transitions[i]) << i;
  ASSERT_EQ(back.provenance.size(), 1u);
  EXPECT_EQ(back.provenance[0].count, f.transitions.size());
}

TEST(Formats, TransitionsRejectBadRows) {
  TransitionsFile f;
  f.state_dim = 4;
  f.transitions.push_back({{{1, 0, 0, 0}}, {0.1, 0.0}, 0.0, {{1, 0, 0, 0}}, false, Source::demo});
  Json j = to_json(f);
  j["transitions"][0][5] = "teacher";
  EXPECT_THROW((void)transitions_from_json(j), Error);
  j = to_json(f);
  j["state_dim"] = 6;
  EXPECT_THROW((void)transitions_from_json(j), Error);
  j = to_json(f);
  j["transitions"][0].erase(2);
  EXPECT_THROW((void)transitions_from_json(j), Error);
}

TEST(Formats, TraceRoundTrip) {
  const SimEnv env(room_environment(), {}, {}, 20);
  const auto ep = env.start(anchor_scenes(room_environment())[1]);
  const auto trace = rollout(env, ep, [](const StateVector&) { return Action{0.2, 0.1}; });
  const RolloutTrace back = trace_from_json(Json::parse(to_json(trace).dump()));
  EXPECT_EQ(back.outcome, trace.outcome);
  EXPECT_EQ(back.ret, trace.ret);
  EXPECT_EQ(back.dt, trace.dt);
  ASSERT_EQ(back.rows.size(), trace.rows.size());
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].pose, trace.rows[i].pose);
    EXPECT_EQ(back.rows[i].action, trace.rows[i].action);
  }
  EXPECT_EQ(trace.rows.back().action, (Action{0.0, 0.0}));
  EXPECT_EQ(scene_id(back.scene), scene_id(trace.scene));
  Json bad = to_json(trace);
  bad["outcome"] = "teleported";
  EXPECT_THROW((void)trace_from_json(bad), Error);
}

TEST(Formats, TrainConfigRoundTripAndDefaults) {
  TrainConfig c = desk_scale(TrainConfig{});
  c.hidden = {64, 32};
  c.target_actor_in_targets = false;
  const TrainConfig back = train_config_from_json(Json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
  const TrainConfig partial = train_config_from_json(Json{{"epochs", 5}});
  EXPECT_EQ(partial.epochs, 5);
  EXPECT_EQ(partial.batch_demo, 64);
  EXPECT_DOUBLE_EQ(partial.lambda_bc, 20.0 / 3.0);
}

TEST(Formats, TrainConfigRejectsUnknownKey) {
  try {
    (void)train_config_from_json(Json{{"epochs", 5}, {"learning_rate", 0.1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::format);
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
  EXPECT_THROW((void)train_config_from_json(Json{{"epochs", "many"}}), Error);
  EXPECT_THROW((void)train_config_from_json(Json{{"tau", 2.0}}), Error);
  EXPECT_THROW((void)train_config_from_json(Json::array()), Error);
}

TEST(Formats, FileHelpers) {
  const fs::path dir = temp_dir();
  const std::string path = (dir / "x.json").string();
  write_json(path, Json{{"a", 1}});
  EXPECT_EQ(read_json(path).at("a").get<int>(), 1);
  write_text(path, "{ not json");
  try {
    (void)read_json(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::format);
  }
  try {
    (void)read_text((dir / "missing.json").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
  }
  fs::remove_all(dir);
}

TEST(Formats, EpochLogJson) {
  EpochLog l;
  l.epoch = 3;
  l.eval.episodes = 10;
  l.eval.success_rate = 0.5;
  const Json j = to_json(l);
  EXPECT_EQ(j.at("epoch"), 3);
  EXPECT_EQ(j.at("eval").at("success_rate"), 0.5);
  EXPECT_TRUE(j.contains("lambda_bc"));
}
