#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prefnav {

/// Machine-readable failure categories. The string forms are part of the
/// HTTP error payloads and must stay stable.
enum class ErrorCode {
  invalid_argument,
  degenerate_geometry,
  insufficient_points,
  degenerate_segment,
  empty_sequence,
  collision,
  lifecycle,
  placement,
  sampling,
  non_finite,
  dimension_mismatch,
  stale_cache,
  generation,
  format,
  io,
  not_found,
  conflict,
  usage,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::degenerate_geometry: return "degenerate_geometry";
    case ErrorCode::insufficient_points: return "insufficient_points";
    case ErrorCode::degenerate_segment: return "degenerate_segment";
    case ErrorCode::empty_sequence: return "empty_sequence";
    case ErrorCode::collision: return "collision";
    case ErrorCode::lifecycle: return "lifecycle";
    case ErrorCode::placement: return "placement";
    case ErrorCode::sampling: return "sampling";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::stale_cache: return "stale_cache";
    case ErrorCode::generation: return "generation";
    case ErrorCode::format: return "format";
    case ErrorCode::io: return "io";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace prefnav
