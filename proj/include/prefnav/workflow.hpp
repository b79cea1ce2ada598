#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "prefnav/checkpoint.hpp"
#include "prefnav/metrics.hpp"
#include "prefnav/scripted_demo.hpp"
#include "prefnav/workspace.hpp"

namespace prefnav {

using Logger = std::function<void(const std::string&)>;

inline Logger stderr_logger() {
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

/// Seed of the i-th scripted demo of a batch.
inline std::uint64_t demo_seed(std::uint64_t seed, int i) {
  return seed * 1000003ull + static_cast<std::uint64_t>(i);
}

/// Writes `count` scripted demos cycling over the environment's anchors.
inline std::vector<fs::path> synth_demos(const Workspace& ws, DemoStyle style, const EnvironmentSpec& env, int count,
                                         std::uint64_t seed, const ScriptedDemoOptions& opt = {}) {
  require(count >= 0, ErrorCode::usage, "demo-synth: count must be >= 0");
  ws.ensure();
  const auto scenes = anchor_scenes(env);
  std::vector<fs::path> out;
  for (int i = 0; i < count; ++i) {
    const Scene& s = scenes[static_cast<std::size_t>(i) % scenes.size()];
    const RawDemoTrajectory raw = scripted_demo(style, s, demo_seed(seed, i), opt);
    std::ostringstream name;
    name << scene_id(s) << '-' << to_string(style) << "-s" << seed << '-' << std::setw(3) << std::setfill('0') << i
         << ".json";
    const fs::path path = ws.demos() / name.str();
    write_json(path.string(), demo_to_json(raw, s));
    out.push_back(path);
  }
  return out;
}

struct ProcessOutcome {
  TransitionsFile file;
  std::vector<std::string> failures;
};

/// Processes every demo file in `demo_dir` into one transitions set. Demos that
/// fail validation are skipped with a warning; if none succeed the failures
/// are reported as an error.
inline ProcessOutcome process_demo_dir(const Workspace& ws, const fs::path& demo_dir, const Logger& log = {},
                                       const AugmentConfig& aug = {}) {
  const auto files = Workspace::json_files(demo_dir);
  require(!files.empty(), ErrorCode::usage, "process: no demo files in " + demo_dir.string());
  ProcessOutcome out;
  std::optional<SimEnv> env;
  for (const auto& path : files) {
    try {
      const DemoFile d = demo_from_json(read_json(path.string()), [&](const std::string& n) { return ws.environment(n); });
      if (!env) {
        env.emplace(d.scene.env);
        out.file.environment = d.scene.env.name;
        out.file.state_dim = env->state_dim();
      }
      require(d.scene.env == env->environment(), ErrorCode::invalid_argument,
              "demo environment '" + d.scene.env.name + "' differs from '" + out.file.environment + "'");
      const ProcessedDemo p = process_demo(d.raw, d.scene, *env, aug);
      TransitionProvenance prov;
      prov.demo = path.filename().string();
      prov.scene_id = scene_id(d.scene);
      prov.variants = static_cast<int>(p.augmented.variants.size());
      prov.skipped = p.augmented.skipped;
      prov.first = out.file.transitions.size();
      for (const auto& v : p.augmented.variants)
        out.file.transitions.insert(out.file.transitions.end(), v.begin(), v.end());
      prov.count = out.file.transitions.size() - prov.first;
      out.file.provenance.push_back(prov);
      if (log && !prov.skipped.empty())
        log("warning: " + prov.demo + ": " + std::to_string(prov.skipped.size()) + " augmentation variants skipped");
    } catch (const Error& e) {
      out.failures.push_back(path.filename().string() + ": " + e.what());
      if (log) log("warning: skipping " + path.filename().string() + ": " + e.what());
    }
  }
  if (out.file.provenance.empty()) {
    std::string msg = "process: every demo failed";
    for (const auto& f : out.failures) msg += "\n  " + f;
    throw Error(ErrorCode::invalid_argument, msg);
  }
  if (log)
    log("processed " + std::to_string(out.file.provenance.size()) + " demos into " +
        std::to_string(out.file.transitions.size()) + " transitions");
  return out;
}

/// Anchor scenes plus random robot starts drawn from the environment reset.
inline ResetConfig training_reset(const EnvironmentSpec& env, const TrainConfig& cfg) {
  ResetConfig rc;
  rc.anchors = anchor_scenes(env);
  rc.p_env = cfg.p_env;
  return rc;
}

/// Robot start drawn uniformly from free space; human and goal from a random anchor.
inline ResetConfig random_start_reset(const EnvironmentSpec& env) {
  ResetConfig rc;
  rc.anchors = anchor_scenes(env);
  rc.p_env = 0.0;
  rc.randomize_human = false;
  rc.randomize_goal = false;
  return rc;
}

inline ResetConfig anchor_reset(const EnvironmentSpec& env) {
  ResetConfig rc;
  rc.anchors = anchor_scenes(env);
  rc.p_env = 1.0;
  return rc;
}

inline std::vector<Scene> draw_scenes(const SimEnv& env, const ResetConfig& rc, int n, Rng& rng) {
  std::vector<Scene> out;
  for (int i = 0; i < n; ++i) out.push_back(env.reset(rc, rng).scene);
  return out;
}

struct TrainRun {
  TrainResult result;
  std::uint64_t demo_hash_before{0};
  std::uint64_t demo_hash_after{0};
  std::size_t demo_size{0};
};

/// Trains on a transitions set. With a workspace, writes checkpoints/ and a
/// JSON-lines log (one object per epoch).
inline TrainRun train_on(const TransitionsFile& tf, const EnvironmentSpec& env, const TrainConfig& cfg,
                         std::uint64_t seed, const Workspace* ws = nullptr, const Logger& log = {}) {
  const SimEnv sim(env, {}, {}, cfg.n_ep);
  require(tf.state_dim == sim.state_dim(), ErrorCode::dimension_mismatch,
          "train: transitions state_dim " + std::to_string(tf.state_dim) + " does not match environment '" +
              env.name + "'");
  std::vector<Transition> demo_rows;
  for (const auto& t : tf.transitions)
    if (t.source == Source::demo) demo_rows.push_back(t);
  const DemoBuffer demo(demo_rows, sim.normalizer(), sim.state_dim());
  TrainRun run;
  run.demo_size = demo.size();
  run.demo_hash_before = demo.construction_hash();

  std::ofstream log_file;
  if (ws) {
    ws->ensure();
    log_file.open(ws->checkpoints() / "train-log.jsonl", std::ios::trunc);
    if (!log_file) throw Error(ErrorCode::io, "cannot write training log");
  }
  auto meta_for = [&](int epoch, std::uint64_t interactions) {
    CheckpointMeta m;
    m.epoch = epoch;
    m.interactions = interactions;
    m.environment = env.name;
    m.config = to_json(cfg);
    return m;
  };
  TrainHooks hooks;
  hooks.on_log = [&](const EpochLog& l) {
    const std::string line = to_json(l).dump();
    if (log_file.is_open()) log_file << line << '\n' << std::flush;
    if (log) log(line);
  };
  if (ws) {
    hooks.on_epoch = [&](const Agent& ag, const EpochLog& l) {
      if (cfg.checkpoint_every > 0 && l.epoch % cfg.checkpoint_every == 0) {
        std::ostringstream name;
        name << "epoch-" << std::setw(4) << std::setfill('0') << l.epoch << ".ckpt";
        save_checkpoint((ws->checkpoints() / name.str()).string(), ag, meta_for(l.epoch, l.interactions));
      }
    };
    hooks.on_halt = [&](const Agent& ag, const Error&) {
      save_checkpoint((ws->checkpoints() / "halted.ckpt").string(), ag, meta_for(-1, 0));
    };
  }
  run.result = train_loop(cfg, sim, training_reset(env, cfg), demo, seed, hooks);
  run.demo_hash_after = demo.hash();
  if (ws)
    save_checkpoint((ws->checkpoints() / "final.ckpt").string(), run.result.agent,
                    meta_for(cfg.epochs, run.result.interactions));
  return run;
}

struct EvalReport {
  MetricsReport metrics;
  LabeledTraces traces;
};

/// Rolls out the agent (and optionally the greedy baseline) over `episodes`
/// anchor-reset scenes and `episodes` random-start scenes.
inline EvalReport evaluate_report(const Agent& ag, const EnvironmentSpec& env, int episodes, std::uint64_t seed,
                                  bool baseline, int n_ep = 300) {
  require(episodes > 0, ErrorCode::usage, "eval: episodes must be > 0");
  const SimEnv sim(env, {}, {}, n_ep);
  require(ag.state_dim() == sim.state_dim(), ErrorCode::format,
          "eval: checkpoint state dimension incompatible with environment '" + env.name + "'");
  Rng rng(seed);
  auto scenes = draw_scenes(sim, anchor_reset(env), episodes, rng);
  const auto random = draw_scenes(sim, random_start_reset(env), episodes, rng);
  scenes.insert(scenes.end(), random.begin(), random.end());
  EvalReport rep;
  rep.traces.push_back({"policy", evaluate_scenes(greedy_policy_of(ag), sim, scenes).traces});
  if (baseline) rep.traces.push_back({"greedy", evaluate_scenes(greedy_policy(sim.params()), sim, scenes).traces});
  rep.metrics = build_report(rep.traces);
  return rep;
}

inline void write_report(const fs::path& dir, const EnvironmentSpec& env, const EvalReport& rep) {
  fs::create_directories(dir);
  write_text((dir / "metrics.csv").string(), metrics_csv(rep.metrics));
  write_text((dir / "summary.csv").string(), summary_csv(rep.metrics));
  write_text((dir / "trajectories.svg").string(), render_svg(env, rep.traces));
  Json archive = Json::object();
  for (const auto& [label, traces] : rep.traces) {
    Json list = Json::array();
    for (const auto& t : traces) list.push_back(to_json(t));
    archive[label] = list;
  }
  write_json((dir / "traces.json").string(), archive);
}

}  // namespace prefnav
