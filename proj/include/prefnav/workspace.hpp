#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "prefnav/formats.hpp"

namespace prefnav {

namespace fs = std::filesystem;

/// Artifact directories under one root.
struct Workspace {
  fs::path root;

  explicit Workspace(fs::path r = ".") : root(std::move(r)) {}

  [[nodiscard]] fs::path demos() const { return root / "demos"; }
  [[nodiscard]] fs::path transitions() const { return root / "transitions"; }
  [[nodiscard]] fs::path checkpoints() const { return root / "checkpoints"; }
  [[nodiscard]] fs::path reports() const { return root / "reports"; }
  [[nodiscard]] fs::path configs() const { return root / "configs"; }

  void ensure() const {
    for (const auto& d : {demos(), transitions(), checkpoints(), reports(), configs()}) fs::create_directories(d);
  }

  /// Built-in environments followed by environment files found in configs/
  /// (any .json object with an "obstacles" key), sorted by file name.
  [[nodiscard]] std::vector<EnvironmentSpec> environments() const {
    std::vector<EnvironmentSpec> out = builtin_environments();
    for (const auto& p : json_files(configs())) {
      const Json j = read_json(p.string());
      if (!j.is_object() || !j.contains("obstacles")) continue;
      EnvironmentSpec env = environment_from_json(j);
      require(std::none_of(out.begin(), out.end(), [&](const auto& e) { return e.name == env.name; }),
              ErrorCode::conflict, "environment name '" + env.name + "' defined twice");
      out.push_back(std::move(env));
    }
    return out;
  }

  [[nodiscard]] EnvironmentSpec environment(const std::string& name) const {
    for (auto& env : environments())
      if (env.name == name) return env;
    throw Error(ErrorCode::not_found, "unknown environment '" + name + "'");
  }

  [[nodiscard]] static std::vector<fs::path> json_files(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// UTC timestamp usable in file names, e.g. 20261016T120304Z.
inline std::string file_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return os.str();
}

}  // namespace prefnav
