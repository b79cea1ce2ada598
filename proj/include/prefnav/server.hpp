#pragma once

#include <mutex>
#include <optional>
#include <string>

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "prefnav/demo_pipeline.hpp"
#include "prefnav/formats.hpp"
#include "prefnav/workspace.hpp"

#include "httplib.h"

namespace prefnav {

struct ApiResponse {
  int status{200};
  Json body;
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::io: return 500;
    case ErrorCode::collision:
    case ErrorCode::insufficient_points:
    case ErrorCode::degenerate_geometry:
    case ErrorCode::empty_sequence: return 422;
    default: return 400;
  }
}

inline ApiResponse error_response(ErrorCode code, const std::string& message, Json extra = Json::object()) {
  extra["error"] = {{"code", std::string(to_string(code))}, {"message", message}};
  return {http_status(code), extra};
}

/// Two-phase demonstration recording: a drawn trajectory is validated and held
/// as the single provisional demo until it is kept (written to demos/) or
/// discarded. A second submission while one is pending is refused.
class DemoService {
 public:
  DemoService(Workspace ws, RadiusConfig radii = {}, DiffDriveParams params = {})
      : ws_(std::move(ws)), radii_(radii), params_(params) {}

  [[nodiscard]] ApiResponse scenes() const {
    return guarded([&] {
      Json envs = Json::array();
      for (const auto& env : ws_.environments()) {
        Json e = to_json(env);
        e["diagonal"] = env.diagonal();
        Json scenes = Json::array();
        for (const auto& s : anchor_scenes(env)) scenes.push_back(scene_id(s));
        e["scenes"] = scenes;
        envs.push_back(e);
      }
      return ApiResponse{200, {{"environments", envs}, {"radii", radii_json()}, {"demo_speed", speed_json()}}};
    });
  }

  [[nodiscard]] ApiResponse scene(const std::string& env_name, const std::string& anchor) const {
    return guarded([&] {
      const Scene s = anchor_scene(env_name, anchor);
      Json body = to_json(s);
      body["radii"] = radii_json();
      body["demo_speed"] = speed_json();
      return ApiResponse{200, body};
    });
  }

  /// Body: {environment, anchor, points: [[x, y]...], speeds: [...], created_at?}
  ApiResponse submit(const Json& body) {
    return guarded([&]() -> ApiResponse {
      if (pending_)
        return error_response(ErrorCode::conflict,
                              "a provisional trajectory (" + pending_->id + ") is awaiting keep or discard",
                              {{"pending", pending_->id}});
      require(body.is_object() && body.contains("environment") && body.contains("anchor"), ErrorCode::format,
              "trajectory: environment and anchor are required");
      const Scene s = anchor_scene(body.at("environment").get<std::string>(), anchor_text(body.at("anchor")));
      RawDemoTrajectory raw = raw_from_json(body, scene_id(s));
      if (raw.created_at.empty()) raw.created_at = file_timestamp();
      validate_raw(raw, s.env, params_);
      SplineOptions opt;
      opt.v_min = params_.v_min_demo;
      opt.v_max = params_.v_max_demo;
      const SplineTrajectory spline = fit_spline(raw, opt);
      const DemoValidation v = validate_demo(spline, s, radii_);
      if (!v.ok())
        return error_response(ErrorCode::collision, "trajectory collides",
                              {{"validation",
                                {{"ok", false},
                                 {"collision_k", *v.collision_k},
                                 {"kind", collision_kind_name(v.kind)}}}});
      const ControlSequence controls = extract_controls(spline, params_);
      Json poses = Json::array();
      for (const auto& p : controls.poses()) poses.push_back(to_json(p));
      pending_ = Pending{"p" + std::to_string(++counter_), raw, s};
      return ApiResponse{200,
                         {{"id", pending_->id},
                          {"validation", {{"ok", true}}},
                          {"scene_id", scene_id(s)},
                          {"dt", params_.dt},
                          {"length", spline.total_length()},
                          {"clamped", controls.any_clamped()},
                          {"playback", poses}}};
    });
  }

  ApiResponse keep(const std::string& id) {
    return guarded([&]() -> ApiResponse {
      require(pending_ && pending_->id == id, ErrorCode::not_found, "no provisional trajectory '" + id + "'");
      ws_.ensure();
      const std::string name = scene_id(pending_->scene) + "-" + file_timestamp() + "-" + pending_->id + ".json";
      const fs::path path = ws_.demos() / name;
      write_json(path.string(), demo_to_json(pending_->raw, pending_->scene));
      pending_.reset();
      return ApiResponse{200, {{"kept", id}, {"file", path.filename().string()}}};
    });
  }

  ApiResponse discard(const std::string& id) {
    return guarded([&]() -> ApiResponse {
      require(pending_ && pending_->id == id, ErrorCode::not_found, "no provisional trajectory '" + id + "'");
      pending_.reset();
      return ApiResponse{200, {{"discarded", id}}};
    });
  }

  [[nodiscard]] ApiResponse demos() const {
    return guarded([&] {
      Json list = Json::array();
      for (const auto& p : Workspace::json_files(ws_.demos())) {
        const Json j = read_json(p.string());
        list.push_back({{"file", p.filename().string()},
                        {"scene_id", j.value("scene_id", "")},
                        {"environment", j.value("environment", "")},
                        {"points", j.contains("points") ? j.at("points").size() : 0},
                        {"created_at", j.value("created_at", "")}});
      }
      return ApiResponse{200, {{"demos", list}}};
    });
  }

  [[nodiscard]] std::optional<std::string> pending_id() const {
    return pending_ ? std::optional<std::string>(pending_->id) : std::nullopt;
  }

 private:
  struct Pending {
    std::string id;
    RawDemoTrajectory raw;
    Scene scene;
  };

  template <typename F>
  ApiResponse guarded(F&& f) const {
    try {
      return f();
    } catch (const Error& e) {
      return error_response(e.code(), e.what());
    } catch (const Json::exception& e) {
      return error_response(ErrorCode::format, e.what());
    }
  }

  static std::string anchor_text(const Json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

  [[nodiscard]] Scene anchor_scene(const std::string& env_name, const std::string& anchor) const {
    const EnvironmentSpec env = ws_.environment(env_name);
    int index = -1;
    try {
      std::size_t used = 0;
      index = std::stoi(anchor, &used);
      if (used != anchor.size()) index = -1;
    } catch (const std::exception&) {
      index = -1;
    }
    require(index >= 0 && index < static_cast<int>(env.human_anchors.size()), ErrorCode::not_found,
            "anchor '" + anchor + "' not in 0.." + std::to_string(env.human_anchors.size() - 1));
    return anchor_scenes(env)[static_cast<std::size_t>(index)];
  }

  [[nodiscard]] Json radii_json() const {
    return {{"robot", radii_.robot_radius}, {"human", radii_.human_radius}, {"goal", radii_.goal_radius}};
  }
  [[nodiscard]] Json speed_json() const { return {{"min", params_.v_min_demo}, {"max", params_.v_max_demo}}; }

  static std::string collision_kind_name(CollisionKind k) {
    switch (k) {
      case CollisionKind::obstacle: return "obstacle";
      case CollisionKind::human: return "human";
      case CollisionKind::out_of_bounds: return "out_of_bounds";
      case CollisionKind::none: break;
    }
    return "none";
  }

  Workspace ws_;
  RadiusConfig radii_;
  DiffDriveParams params_;
  std::optional<Pending> pending_;
  int counter_{0};
};

/// Registers the endpoint set on `server`. Requests are serialized through `mu`.
inline void install_routes(httplib::Server& server, DemoService& svc, std::mutex& mu) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/api/scenes", [&, reply](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mu);
    reply(res, svc.scenes());
  });
  server.Get("/api/scene/:env/:anchor", [&, reply](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    reply(res, svc.scene(req.path_params.at("env"), req.path_params.at("anchor")));
  });
  server.Post("/api/trajectory", [&, reply](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::exception& e) {
      reply(res, error_response(ErrorCode::format, e.what()));
      return;
    }
    reply(res, svc.submit(body));
  });
  server.Post("/api/trajectory/:id/keep", [&, reply](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    reply(res, svc.keep(req.path_params.at("id")));
  });
  server.Delete("/api/trajectory/:id", [&, reply](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    reply(res, svc.discard(req.path_params.at("id")));
  });
  server.Get("/api/demos", [&, reply](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mu);
    reply(res, svc.demos());
  });
}

}  // namespace prefnav
