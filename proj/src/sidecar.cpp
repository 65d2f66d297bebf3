#include "mp4bag/sidecar.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "yaml_util.hpp"

namespace mp4bag {

namespace {

using detail::format_double;
using detail::require;
using detail::require_as;

template <std::size_t N>
std::array<double, N> read_fixed_matrix(const YAML::Node& parent, std::string_view key, const std::string& path) {
  const std::string field = detail::join_path(path, key);
  const YAML::Node seq = require(parent, key, path);
  if (!seq.IsSequence() || seq.size() != N)
    throw ValidationError("intrinsics-shape", field, seq.IsSequence() ? fmt::format("{} entries", seq.size()) : "<non-sequence>",
                          fmt::format("expected {} entries", N));
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = detail::scalar_as<double>(seq[i], fmt::format("{}[{}]", field, i));
  return out;
}

std::vector<double> read_vector(const YAML::Node& parent, std::string_view key, const std::string& path) {
  const std::string field = detail::join_path(path, key);
  const YAML::Node seq = parent[std::string(key)];
  if (!seq.IsDefined() || seq.IsNull()) return {};
  if (!seq.IsSequence()) throw ValidationError("intrinsics-shape", field, "<non-sequence>");
  std::vector<double> out;
  out.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) out.push_back(detail::scalar_as<double>(seq[i], fmt::format("{}[{}]", field, i)));
  return out;
}

template <typename Range>
void emit_numbers(YAML::Emitter& out, const Range& values) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double v : values) out << format_double(v);
  out << YAML::EndSeq;
}

template <typename Range>
void check_finite(const Range& values, const std::string& field) {
  std::size_t i = 0;
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("non-finite", fmt::format("{}[{}]", field, i), format_double(v));
    ++i;
  }
}

double derived_fps(const std::vector<FrameEntry>& frames) {
  if (frames.size() < 2) return 0.0;
  const double span = static_cast<double>(frames.back().stamp.to_nanoseconds() - frames.front().stamp.to_nanoseconds()) * 1e-9;
  return span > 0.0 ? static_cast<double>(frames.size() - 1) / span : 0.0;
}

}  // namespace

namespace detail {

CameraInfo read_camera_info(const YAML::Node& ci, const std::string& path) {
  CameraInfo info;
  info.width = require_as<int>(ci, "width", path);
  info.height = require_as<int>(ci, "height", path);
  info.distortion_model = require_as<std::string>(ci, "distortion_model", path);
  info.D = read_vector(ci, "D", path);
  info.K = read_fixed_matrix<9>(ci, "K", path);
  info.R = read_fixed_matrix<9>(ci, "R", path);
  info.P = read_fixed_matrix<12>(ci, "P", path);
  return info;
}

void emit_camera_info(YAML::Emitter& out, const CameraInfo& ci) {
  out << YAML::BeginMap;
  out << YAML::Key << "width" << YAML::Value << ci.width;
  out << YAML::Key << "height" << YAML::Value << ci.height;
  out << YAML::Key << "distortion_model" << YAML::Value << ci.distortion_model;
  out << YAML::Key << "D" << YAML::Value;
  emit_numbers(out, ci.D);
  out << YAML::Key << "K" << YAML::Value;
  emit_numbers(out, ci.K);
  out << YAML::Key << "R" << YAML::Value;
  emit_numbers(out, ci.R);
  out << YAML::Key << "P" << YAML::Value;
  emit_numbers(out, ci.P);
  out << YAML::EndMap;
}

}  // namespace detail

void validate_sidecar(const SidecarDocument& doc) {
  if (doc.format_version != kSidecarFormatVersion)
    throw ValidationError("unsupported-version", "format_version", std::to_string(doc.format_version));
  if (doc.image_topic.empty()) throw ValidationError("missing-field", "image_topic", "");
  if (doc.camera_info_topic.empty()) throw ValidationError("missing-field", "camera_info_topic", "");
  if (doc.width <= 0) throw ValidationError("dimension", "width", std::to_string(doc.width), "must be positive");
  if (doc.height <= 0) throw ValidationError("dimension", "height", std::to_string(doc.height), "must be positive");
  if (!(std::isfinite(doc.fps_nominal) && doc.fps_nominal > 0.0))
    throw ValidationError("fps", "fps_nominal", format_double(doc.fps_nominal), "must be positive");
  if (doc.camera_info.width != doc.width)
    throw ValidationError("dimension-mismatch", "camera_info.width", std::to_string(doc.camera_info.width),
                          fmt::format("document width is {}", doc.width));
  if (doc.camera_info.height != doc.height)
    throw ValidationError("dimension-mismatch", "camera_info.height", std::to_string(doc.camera_info.height),
                          fmt::format("document height is {}", doc.height));
  check_finite(doc.camera_info.D, "camera_info.D");
  check_finite(doc.camera_info.K, "camera_info.K");
  check_finite(doc.camera_info.R, "camera_info.R");
  check_finite(doc.camera_info.P, "camera_info.P");

  if (doc.frames.empty()) throw ValidationError("empty-frames", "frames", "[]", "at least one frame is required");
  for (std::size_t i = 0; i < doc.frames.size(); ++i) {
    const auto& f = doc.frames[i];
    if (!f.stamp.valid()) throw ValidationError("invalid-stamp", fmt::format("frames[{}].stamp", i), to_string(f.stamp));
    if (i == 0) continue;
    const auto& prev = doc.frames[i - 1];
    if (f.seq <= prev.seq)
      throw ValidationError("non-monotonic-seq", fmt::format("frames[{}].seq", i), std::to_string(f.seq),
                            fmt::format("previous seq is {}", prev.seq));
    if (f.stamp <= prev.stamp)
      throw ValidationError("non-monotonic-stamps", fmt::format("frames[{}].stamp", i), to_string(f.stamp),
                            fmt::format("previous stamp is {}", to_string(prev.stamp)));
  }
}

SidecarDocument parse_sidecar(std::string_view text) {
  const YAML::Node root = detail::load_yaml(text, "sidecar");
  if (!root.IsMap()) throw ParseError("sidecar", "top level must be a mapping");

  SidecarDocument doc;
  doc.format_version = require_as<int>(root, "format_version", "");
  if (doc.format_version != kSidecarFormatVersion)
    throw ValidationError("unsupported-version", "format_version", std::to_string(doc.format_version));
  doc.image_topic = require_as<std::string>(root, "image_topic", "");
  doc.camera_info_topic = require_as<std::string>(root, "camera_info_topic", "");
  doc.frame_id = require_as<std::string>(root, "frame_id", "");
  doc.source_encoding = require_as<std::string>(root, "source_encoding", "");
  doc.width = require_as<int>(root, "width", "");
  doc.height = require_as<int>(root, "height", "");

  doc.camera_info = detail::read_camera_info(require(root, "camera_info", ""), "camera_info");

  const YAML::Node frames = require(root, "frames", "");
  if (!frames.IsSequence()) throw ValidationError("type", "frames", "<non-sequence>");
  doc.frames.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string path = fmt::format("frames[{}]", i);
    FrameEntry e;
    e.seq = require_as<std::int64_t>(frames[i], "seq", path);
    e.stamp = detail::read_stamp(require(frames[i], "stamp", path), path + ".stamp");
    doc.frames.push_back(e);
  }

  const YAML::Node fps = root["fps_nominal"];
  doc.fps_nominal = (fps.IsDefined() && !fps.IsNull()) ? detail::scalar_as<double>(fps, "fps_nominal") : derived_fps(doc.frames);
  if (doc.fps_nominal == 0.0 && doc.frames.size() < 2)
    throw ValidationError("missing-field", "fps_nominal", "<absent>", "cannot be derived from fewer than two stamps");

  validate_sidecar(doc);
  return doc;
}

std::string serialize_sidecar(const SidecarDocument& doc) {
  validate_sidecar(doc);

  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format_version" << YAML::Value << doc.format_version;
  out << YAML::Key << "image_topic" << YAML::Value << doc.image_topic;
  out << YAML::Key << "camera_info_topic" << YAML::Value << doc.camera_info_topic;
  out << YAML::Key << "frame_id" << YAML::Value << doc.frame_id;
  out << YAML::Key << "source_encoding" << YAML::Value << doc.source_encoding;
  out << YAML::Key << "width" << YAML::Value << doc.width;
  out << YAML::Key << "height" << YAML::Value << doc.height;
  out << YAML::Key << "fps_nominal" << YAML::Value << format_double(doc.fps_nominal);

  out << YAML::Key << "camera_info" << YAML::Value;
  detail::emit_camera_info(out, doc.camera_info);

  out << YAML::Key << "frames" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : doc.frames) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "seq" << YAML::Value << f.seq << YAML::Key << "stamp"
        << YAML::Value;
    detail::emit_stamp(out, f.stamp);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;

  std::string text = out.c_str();
  text += '\n';
  return text;
}

SidecarDocument load_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open sidecar");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_sidecar(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string(), e.what());
  }
}

void save_sidecar(const SidecarDocument& doc, const std::filesystem::path& path) {
  const std::string text = serialize_sidecar(doc);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot create sidecar");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& video_path) {
  auto p = video_path;
  p.replace_extension(".yaml");
  return p;
}

std::string BundleReport::summary() const {
  if (ok()) return "bundle valid";
  std::string s = "bundle invalid:";
  for (const auto& f : failures) s += "\n  - " + f;
  return s;
}

BundleReport validate_bundle(const SidecarDocument& doc, std::int64_t video_frame_count, int video_width,
                             int video_height) {
  BundleReport report;
  const auto stamps = static_cast<std::int64_t>(doc.frames.size());
  if (stamps != video_frame_count)
    report.failures.push_back(
        fmt::format("frame count mismatch: sidecar has {} stamps, video has {} frames", stamps, video_frame_count));
  if (doc.width != video_width || doc.height != video_height)
    report.failures.push_back(fmt::format("dimension mismatch: sidecar {}x{}, video {}x{}", doc.width, doc.height,
                                          video_width, video_height));
  return report;
}

FrameStamp FrameStamp::from_seconds(double seconds) {
  const auto ns = static_cast<std::int64_t>(std::llround(seconds * 1e9));
  return from_nanoseconds(ns);
}

std::string to_string(const FrameStamp& stamp) { return fmt::format("{}.{:09d}", stamp.sec, stamp.nsec); }

}  // namespace mp4bag
