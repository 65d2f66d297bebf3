#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mp4bag/pixel.hpp"
#include "mp4bag/sidecar.hpp"
#include "mp4bag/stamp.hpp"

namespace mp4bag {

// Raw capture input: a YAML manifest plus either one packed file of
// concatenated W*H bayer frames, or a directory with one file per frame.
struct SequenceManifest {
  enum class Layout { kPacked, kDirectory };

  struct Entry {
    std::int64_t seq = 0;
    FrameStamp stamp;
    std::string file;  // directory layout only, relative to `source`
  };

  int width = 0;
  int height = 0;
  std::string pixel_format = "bayer_gbrg8";
  std::string frame_id = "camera";
  std::string image_topic = "/camera/image_raw";
  std::string camera_info_topic = "/camera/camera_info";
  double fps_nominal = 0.0;  // 0: derive from stamps
  std::optional<CameraInfo> camera_info;
  Layout layout = Layout::kPacked;
  std::filesystem::path source;  // packed file or frame directory, absolute after load
  std::vector<Entry> entries;
};

SequenceManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
SequenceManifest load_manifest(const std::filesystem::path& path);
// `source` and per-frame files are written relative to the manifest's directory when possible.
void save_manifest(const SequenceManifest& manifest, const std::filesystem::path& path);

// Sidecar carrying the manifest's stamps verbatim.
SidecarDocument sidecar_from_manifest(const SequenceManifest& manifest);

struct SequenceFrame {
  FrameMetadata meta;
  BayerFrame frame;
};

// Single-consumer reader yielding frames in stamp order.
class SequenceReader {
 public:
  explicit SequenceReader(SequenceManifest manifest);

  std::optional<SequenceFrame> next();
  std::size_t size() const noexcept { return manifest_.entries.size(); }
  const SequenceManifest& manifest() const noexcept { return manifest_; }

 private:
  SequenceManifest manifest_;
  std::size_t index_ = 0;
  std::ifstream packed_;
};

// Validates stamp order and that every frame locator resolves, then returns a reader.
SequenceReader open_sequence(const std::filesystem::path& manifest_path);
SequenceReader open_sequence(SequenceManifest manifest);

class Yuv444StreamWriter {
 public:
  Yuv444StreamWriter(const std::filesystem::path& path, int width, int height);

  void append(const Yuv444Frame& frame);
  std::uint64_t bytes_written() const noexcept { return bytes_; }
  std::uint64_t frames_written() const noexcept { return frames_; }
  void close();

 private:
  std::filesystem::path path_;
  int width_;
  int height_;
  std::ofstream out_;
  std::uint64_t bytes_ = 0;
  std::uint64_t frames_ = 0;
};

// Random access over a raw planar yuv444p file.
class Yuv444StreamReader {
 public:
  Yuv444StreamReader(const std::filesystem::path& path, int width, int height);

  std::size_t frame_count() const noexcept { return frames_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Yuv444Frame read(std::size_t index);

 private:
  std::filesystem::path path_;
  int width_;
  int height_;
  std::size_t frames_ = 0;
  std::ifstream in_;
};

std::uint64_t yuv444_frame_bytes(int width, int height) noexcept;

// Returns the number of bytes written: frames.size() * 3 * W * H.
std::uint64_t write_yuv444_stream(std::span<const Yuv444Frame> frames, const std::filesystem::path& path);
std::vector<Yuv444Frame> read_yuv444_stream(const std::filesystem::path& path, int width, int height);

}  // namespace mp4bag
