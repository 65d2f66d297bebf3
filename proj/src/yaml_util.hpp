#pragma once

// Shared YAML helpers for the sidecar, the raw manifest and config files.

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

#include "mp4bag/errors.hpp"
#include "mp4bag/stamp.hpp"

namespace mp4bag::detail {

inline std::string join_path(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

inline YAML::Node load_yaml(std::string_view text, const std::string& location) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(location, e.what());
  }
}

inline YAML::Node require(const YAML::Node& map, std::string_view key, const std::string& parent) {
  const std::string path = join_path(parent, key);
  if (!map.IsMap()) throw ValidationError("missing-field", path, "<absent>", "parent is not a mapping");
  YAML::Node child = map[std::string(key)];
  if (!child.IsDefined() || child.IsNull()) throw ValidationError("missing-field", path, "<absent>");
  return child;
}

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) throw ValidationError("type", path, "<non-scalar>");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError("type", path, node.Scalar());
  }
}

template <typename T>
T require_as(const YAML::Node& map, std::string_view key, const std::string& parent) {
  return scalar_as<T>(require(map, key, parent), join_path(parent, key));
}

inline FrameStamp read_stamp(const YAML::Node& node, const std::string& path) {
  FrameStamp s{require_as<std::int64_t>(node, "sec", path), require_as<std::int64_t>(node, "nsec", path)};
  if (s.sec < 0) throw ValidationError("invalid-stamp", path + ".sec", std::to_string(s.sec), "must be >= 0");
  if (s.nsec < 0 || s.nsec >= kNanosPerSecond)
    throw ValidationError("invalid-stamp", path + ".nsec", std::to_string(s.nsec), "must be in [0, 1e9)");
  return s;
}

// Shortest text that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline void emit_stamp(YAML::Emitter& out, const FrameStamp& s) {
  out << YAML::Flow << YAML::BeginMap << YAML::Key << "sec" << YAML::Value << s.sec << YAML::Key << "nsec"
      << YAML::Value << s.nsec << YAML::EndMap;
}

}  // namespace mp4bag::detail

namespace mp4bag {
struct CameraInfo;
namespace detail {
// Defined in sidecar.cpp; shared with the manifest reader/writer.
CameraInfo read_camera_info(const YAML::Node& node, const std::string& path);
void emit_camera_info(YAML::Emitter& out, const CameraInfo& ci);
}  // namespace detail
}  // namespace mp4bag

#include "mp4bag/process.hpp"

namespace mp4bag::detail {

inline CommandTemplate read_command_template(const YAML::Node& node, const std::string& path) {
  CommandTemplate t;
  t.executable = require_as<std::string>(node, "executable", path);
  const YAML::Node args = node["args"];
  if (args.IsDefined() && !args.IsNull()) {
    if (!args.IsSequence()) throw ValidationError("type", path + ".args", "<non-sequence>");
    for (std::size_t i = 0; i < args.size(); ++i)
      t.args.push_back(scalar_as<std::string>(args[i], path + ".args[" + std::to_string(i) + "]"));
  }
  return t;
}

}  // namespace mp4bag::detail
