#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mp4bag/stamp.hpp"

namespace mp4bag {

inline constexpr int kSidecarFormatVersion = 1;

// Static camera calibration, stored once per bundle.
struct CameraInfo {
  int width = 0;
  int height = 0;
  std::string distortion_model = "plumb_bob";
  std::vector<double> D;
  std::array<double, 9> K{};   // 3x3 intrinsics, row-major
  std::array<double, 9> R{};   // 3x3 rectification
  std::array<double, 12> P{};  // 3x4 projection

  friend bool operator==(const CameraInfo&, const CameraInfo&) = default;
};

struct FrameEntry {
  std::int64_t seq = 0;
  FrameStamp stamp;

  friend bool operator==(const FrameEntry&, const FrameEntry&) = default;
};

// Everything a bundle's video container cannot carry.
struct SidecarDocument {
  int format_version = kSidecarFormatVersion;
  std::string image_topic = "/camera/image_raw";
  std::string camera_info_topic = "/camera/camera_info";
  std::string frame_id = "camera";
  std::string source_encoding = "bayer_gbrg8";
  int width = 0;
  int height = 0;
  double fps_nominal = 0.0;
  CameraInfo camera_info;
  std::vector<FrameEntry> frames;

  FrameStamp first_stamp() const { return frames.front().stamp; }
  FrameStamp last_stamp() const { return frames.back().stamp; }

  friend bool operator==(const SidecarDocument&, const SidecarDocument&) = default;
};

// Throws ValidationError naming the offending field and value.
void validate_sidecar(const SidecarDocument& doc);

// Parses and validates. fps_nominal, when absent, is derived from the stamp span.
SidecarDocument parse_sidecar(std::string_view text);
// Deterministic key order; refuses invalid documents.
std::string serialize_sidecar(const SidecarDocument& doc);

SidecarDocument load_sidecar(const std::filesystem::path& path);
void save_sidecar(const SidecarDocument& doc, const std::filesystem::path& path);

// The video filename with its extension replaced by ".yaml".
std::filesystem::path sidecar_path_for(const std::filesystem::path& video_path);

struct BundleReport {
  std::vector<std::string> failures;
  bool ok() const noexcept { return failures.empty(); }
  std::string summary() const;
};

BundleReport validate_bundle(const SidecarDocument& doc, std::int64_t video_frame_count, int video_width,
                             int video_height);

}  // namespace mp4bag
