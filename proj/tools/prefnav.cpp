#include <csignal>
#include <iostream>
#include <mutex>

#include "CLI11.hpp"
#include "prefnav/server.hpp"
#include "prefnav/workflow.hpp"

using namespace prefnav;

namespace {

struct Globals {
  std::string workspace{"."};
  std::uint64_t seed{1};
  std::string config;
};

TrainConfig load_config(const Globals& g) {
  if (g.config.empty()) return {};
  return train_config_from_json(read_json(g.config));
}

int cmd_env_list(const Globals& g) {
  const Workspace ws(g.workspace);
  for (const auto& env : ws.environments()) {
    std::cout << env.name << "  " << env.bounds.width() - 2 * kWallThickness << " x "
              << env.bounds.height() - 2 * kWallThickness << " m interior, " << env.obstacles.size()
              << " obstacles\n";
    std::cout << "  robot start (" << env.robot_start_anchor.x << ", " << env.robot_start_anchor.y << ", "
              << env.robot_start_anchor.heading << ")  goal (" << env.goal_anchor.x << ", " << env.goal_anchor.y
              << ")\n";
    for (std::size_t i = 0; i < env.human_anchors.size(); ++i) {
      const auto& h = env.human_anchors[i];
      std::cout << "  anchor " << i << ": human (" << h.x << ", " << h.y << ", " << h.heading << ")\n";
    }
  }
  return 0;
}

int cmd_demo_serve(const Globals& g, const std::string& env_name, int port, const std::string& ui_dir) {
  const Workspace ws(g.workspace);
  (void)ws.environment(env_name);
  ws.ensure();
  DemoService svc(ws);
  std::mutex mu;
  httplib::Server server;
  install_routes(server, svc, mu);
  if (!ui_dir.empty() && !server.set_mount_point("/", ui_dir))
    throw Error(ErrorCode::usage, "ui directory not found: " + ui_dir);
  if (!server.bind_to_port("127.0.0.1", port)) throw Error(ErrorCode::io, "port " + std::to_string(port) + " is busy");
  std::cerr << "serving " << env_name << " on http://127.0.0.1:" << port << "/\n";
  server.listen_after_bind();
  return 0;
}

int cmd_demo_synth(const Globals& g, const std::string& style_name, const std::string& env_name, int count) {
  const auto style = parse_demo_style(style_name);
  if (!style) throw Error(ErrorCode::usage, "unknown style '" + style_name + "' (wide_curve, wall_follow, speed_dip)");
  const Workspace ws(g.workspace);
  const auto files = synth_demos(ws, *style, ws.environment(env_name), count, g.seed);
  for (const auto& f : files) std::cout << f.string() << '\n';
  std::cerr << "wrote " << files.size() << " demo files\n";
  return 0;
}

int cmd_process(const Globals& g, std::string demo_dir, std::string out) {
  const Workspace ws(g.workspace);
  if (demo_dir.empty()) demo_dir = ws.demos().string();
  if (!fs::is_directory(demo_dir)) throw Error(ErrorCode::usage, "demo directory not found: " + demo_dir);
  const ProcessOutcome p = process_demo_dir(ws, demo_dir, stderr_logger());
  ws.ensure();
  if (out.empty()) out = (ws.transitions() / (p.file.environment + "-transitions.json")).string();
  write_json(out, to_json(p.file));
  std::cout << out << '\n';
  return 0;
}

int cmd_train(const Globals& g, const std::string& transitions, bool desk, int epochs, std::string env_name) {
  if (transitions.empty() || !fs::is_regular_file(transitions))
    throw Error(ErrorCode::usage, "transitions file not found: " + transitions);
  const Workspace ws(g.workspace);
  const TransitionsFile tf = transitions_from_json(read_json(transitions));
  if (env_name.empty()) env_name = tf.environment;
  TrainConfig cfg = load_config(g);
  if (desk) cfg = desk_scale(cfg);
  if (epochs > 0) cfg.epochs = epochs;
  cfg.validate();
  const TrainRun run = train_on(tf, ws.environment(env_name), cfg, g.seed, &ws, [](const std::string& line) {
    std::cout << line << '\n' << std::flush;
  });
  std::cerr << "trained " << cfg.epochs << " epochs, " << run.result.interactions << " interactions; checkpoint "
            << (ws.checkpoints() / "final.ckpt").string() << '\n';
  return 0;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, std::string env_name, int episodes, bool baseline,
             std::string out) {
  if (episodes <= 0) throw Error(ErrorCode::usage, "episodes must be > 0");
  const Workspace ws(g.workspace);
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (env_name.empty()) env_name = ck.meta.environment;
  const EnvironmentSpec env = ws.environment(env_name);
  const int n_ep = ck.meta.config.is_object() ? ck.meta.config.value("n_ep", 300) : 300;
  const EvalReport rep = evaluate_report(ck.agent, env, episodes, g.seed, baseline, n_ep);
  if (out.empty()) out = (ws.reports() / ("eval-" + env.name)).string();
  write_report(out, env, rep);
  std::cout << summary_csv(rep.metrics);
  std::cerr << "report written to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn personalized navigation policies from drawn demonstrations"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--workspace", g.workspace, "Workspace root directory");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--config", g.config, "Training configuration file (JSON)");

  auto* env_list = app.add_subcommand("env-list", "List environments and anchors");

  std::string serve_env, ui_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("demo-serve", "Serve the demonstration endpoints");
  serve->add_option("--env", serve_env, "Environment name")->required();
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--ui-dir", ui_dir, "Directory with UI assets to serve at /");

  std::string synth_style, synth_env;
  int synth_count = 16;
  auto* synth = app.add_subcommand("demo-synth", "Write scripted demonstrations");
  synth->add_option("--style", synth_style, "wide_curve | wall_follow | speed_dip")->required();
  synth->add_option("--env", synth_env, "Environment name")->required();
  synth->add_option("--count", synth_count, "Number of demos");

  std::string demo_dir, proc_out;
  auto* process = app.add_subcommand("process", "Turn demo files into a transitions file");
  process->add_option("--demos", demo_dir, "Demo directory (default: <workspace>/demos)");
  process->add_option("--out", proc_out, "Output file");

  std::string transitions, train_env;
  bool desk = false;
  int epochs = 0;
  auto* train = app.add_subcommand("train", "Train a policy");
  train->add_option("--transitions", transitions, "Transitions file")->required();
  train->add_option("--env", train_env, "Environment name (default: from transitions file)");
  train->add_flag("--desk-scale", desk, "Shrunken schedule: 60 epochs x 1000 interactions");
  train->add_option("--epochs", epochs, "Override the epoch count");

  std::string checkpoint, eval_env, eval_out;
  int episodes = 100;
  bool baseline = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write a metrics report");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--env", eval_env, "Environment name (default: from checkpoint)");
  eval->add_option("--episodes", episodes, "Episodes per scene set");
  eval->add_flag("--baseline", baseline, "Also evaluate the greedy reference controller");
  eval->add_option("--out", eval_out, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*env_list) return cmd_env_list(g);
    if (*serve) return cmd_demo_serve(g, serve_env, port, ui_dir);
    if (*synth) return cmd_demo_synth(g, synth_style, synth_env, synth_count);
    if (*process) return cmd_process(g, demo_dir, proc_out);
    if (*train) return cmd_train(g, transitions, desk, epochs, train_env);
    if (*eval) return cmd_eval(g, checkpoint, eval_env, episodes, baseline, eval_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::usage || e.code() == ErrorCode::not_found ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
