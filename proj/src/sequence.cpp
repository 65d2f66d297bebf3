#include "mp4bag/sequence.hpp"

#include <fmt/format.h>

#include <sstream>

#include "yaml_util.hpp"

namespace mp4bag {

namespace fs = std::filesystem;

namespace {

using detail::require;
using detail::require_as;

std::string optional_string(const YAML::Node& root, const char* key, std::string fallback) {
  const YAML::Node n = root[key];
  if (!n.IsDefined() || n.IsNull()) return fallback;
  return detail::scalar_as<std::string>(n, key);
}

fs::path relative_or_absolute(const fs::path& p, const fs::path& base) {
  std::error_code ec;
  auto rel = fs::relative(p, base, ec);
  return (ec || rel.empty()) ? p : rel;
}

void check_stamp_order(const SequenceManifest& m) {
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    if (m.entries[i].stamp <= m.entries[i - 1].stamp)
      throw ValidationError("non-monotonic-stamps", fmt::format("frames[{}].stamp", i), to_string(m.entries[i].stamp),
                            fmt::format("previous stamp is {}", to_string(m.entries[i - 1].stamp)));
  }
}

std::uintmax_t file_size_or_throw(const fs::path& p, const std::string& locator) {
  std::error_code ec;
  const auto size = fs::file_size(p, ec);
  if (ec) throw IoError(locator, "frame source not found: " + p.string());
  return size;
}

}  // namespace

SequenceManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
  const YAML::Node root = detail::load_yaml(text, "manifest");
  if (!root.IsMap()) throw ParseError("manifest", "top level must be a mapping");

  SequenceManifest m;
  const YAML::Node version = root["format_version"];
  if (version.IsDefined() && detail::scalar_as<int>(version, "format_version") != kSidecarFormatVersion)
    throw ValidationError("unsupported-version", "format_version", version.Scalar());
  m.pixel_format = require_as<std::string>(root, "pixel_format", "");
  if (m.pixel_format != "bayer_gbrg8")
    throw ValidationError("pixel-format", "pixel_format", m.pixel_format, "only bayer_gbrg8 is supported");
  m.width = require_as<int>(root, "width", "");
  m.height = require_as<int>(root, "height", "");
  if (m.width < 2 || m.width % 2 || m.height < 2 || m.height % 2)
    throw ValidationError("invalid-mosaic", "width/height", fmt::format("{}x{}", m.width, m.height),
                          "dimensions must be even and >= 2");
  m.frame_id = optional_string(root, "frame_id", m.frame_id);
  m.image_topic = optional_string(root, "image_topic", m.image_topic);
  m.camera_info_topic = optional_string(root, "camera_info_topic", m.camera_info_topic);
  if (const YAML::Node fps = root["fps_nominal"]; fps.IsDefined() && !fps.IsNull())
    m.fps_nominal = detail::scalar_as<double>(fps, "fps_nominal");

  if (const YAML::Node ci = root["camera_info"]; ci.IsDefined() && !ci.IsNull())
    m.camera_info = detail::read_camera_info(ci, "camera_info");

  const YAML::Node packed = root["packed"];
  const YAML::Node directory = root["directory"];
  const bool has_packed = packed.IsDefined() && !packed.IsNull();
  const bool has_dir = directory.IsDefined() && !directory.IsNull();
  if (has_packed == has_dir)
    throw ValidationError("missing-field", "packed|directory", has_packed ? "both" : "<absent>",
                          "exactly one frame source is required");
  m.layout = has_packed ? SequenceManifest::Layout::kPacked : SequenceManifest::Layout::kDirectory;
  const fs::path src = detail::scalar_as<std::string>(has_packed ? packed : directory, has_packed ? "packed" : "directory");
  m.source = src.is_absolute() ? src : base_dir / src;

  const YAML::Node frames = require(root, "frames", "");
  if (!frames.IsSequence() || frames.size() == 0)
    throw ValidationError("empty-frames", "frames", "[]", "at least one frame is required");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string path = fmt::format("frames[{}]", i);
    SequenceManifest::Entry e;
    const YAML::Node seq = frames[i]["seq"];
    e.seq = (seq.IsDefined() && !seq.IsNull()) ? detail::scalar_as<std::int64_t>(seq, path + ".seq")
                                               : static_cast<std::int64_t>(i);
    e.stamp = detail::read_stamp(require(frames[i], "stamp", path), path + ".stamp");
    if (m.layout == SequenceManifest::Layout::kDirectory) e.file = require_as<std::string>(frames[i], "file", path);
    m.entries.push_back(std::move(e));
  }
  return m;
}

SequenceManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open manifest");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), fs::absolute(path).parent_path());
}

void save_manifest(const SequenceManifest& m, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "format_version" << YAML::Value << kSidecarFormatVersion;
  out << YAML::Key << "pixel_format" << YAML::Value << m.pixel_format;
  out << YAML::Key << "width" << YAML::Value << m.width;
  out << YAML::Key << "height" << YAML::Value << m.height;
  out << YAML::Key << "frame_id" << YAML::Value << m.frame_id;
  out << YAML::Key << "image_topic" << YAML::Value << m.image_topic;
  out << YAML::Key << "camera_info_topic" << YAML::Value << m.camera_info_topic;
  if (m.fps_nominal > 0.0) out << YAML::Key << "fps_nominal" << YAML::Value << detail::format_double(m.fps_nominal);
  if (m.camera_info) {
    out << YAML::Key << "camera_info" << YAML::Value;
    detail::emit_camera_info(out, *m.camera_info);
  }
  out << YAML::Key << (m.layout == SequenceManifest::Layout::kPacked ? "packed" : "directory") << YAML::Value
      << relative_or_absolute(m.source, base).string();
  out << YAML::Key << "frames" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : m.entries) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "seq" << YAML::Value << e.seq << YAML::Key << "stamp"
        << YAML::Value;
    detail::emit_stamp(out, e.stamp);
    if (m.layout == SequenceManifest::Layout::kDirectory) out << YAML::Key << "file" << YAML::Value << e.file;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  const std::string text = out.c_str();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path.string(), "cannot create manifest");
  f << text << '\n';
}

SidecarDocument sidecar_from_manifest(const SequenceManifest& m) {
  SidecarDocument doc;
  doc.image_topic = m.image_topic;
  doc.camera_info_topic = m.camera_info_topic;
  doc.frame_id = m.frame_id;
  doc.source_encoding = m.pixel_format;
  doc.width = m.width;
  doc.height = m.height;
  if (m.camera_info) {
    doc.camera_info = *m.camera_info;
  } else {
    doc.camera_info.width = m.width;
    doc.camera_info.height = m.height;
    doc.camera_info.K = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    doc.camera_info.R = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    doc.camera_info.P = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  }
  for (const auto& e : m.entries) doc.frames.push_back({e.seq, e.stamp});
  doc.fps_nominal = m.fps_nominal;
  if (doc.fps_nominal <= 0.0 && doc.frames.size() >= 2) {
    const double span = static_cast<double>(doc.last_stamp().to_nanoseconds() - doc.first_stamp().to_nanoseconds()) * 1e-9;
    doc.fps_nominal = static_cast<double>(doc.frames.size() - 1) / span;
  }
  if (doc.fps_nominal <= 0.0) doc.fps_nominal = 1.0;
  return doc;
}

SequenceReader::SequenceReader(SequenceManifest manifest) : manifest_(std::move(manifest)) {
  if (manifest_.layout == SequenceManifest::Layout::kPacked) {
    packed_.open(manifest_.source, std::ios::binary);
    if (!packed_) throw IoError(manifest_.source.string(), "cannot open packed frame file");
  }
}

std::optional<SequenceFrame> SequenceReader::next() {
  if (index_ >= manifest_.entries.size()) return std::nullopt;
  const auto& e = manifest_.entries[index_];
  const std::size_t frame_bytes = static_cast<std::size_t>(manifest_.width) * manifest_.height;
  std::vector<std::uint8_t> data(frame_bytes);
  if (manifest_.layout == SequenceManifest::Layout::kPacked) {
    packed_.seekg(static_cast<std::streamoff>(index_ * frame_bytes));
    packed_.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(frame_bytes));
    if (!packed_) throw IoError(fmt::format("{}#{}", manifest_.source.string(), index_), "short read");
  } else {
    const fs::path p = manifest_.source / e.file;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError(e.file, "cannot open frame file " + p.string());
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(frame_bytes));
    if (!in) throw IoError(e.file, "short read from " + p.string());
  }
  ++index_;
  return SequenceFrame{{e.stamp, e.seq, manifest_.frame_id}, BayerFrame(manifest_.width, manifest_.height, std::move(data))};
}

SequenceReader open_sequence(SequenceManifest manifest) {
  check_stamp_order(manifest);
  const auto frame_bytes = static_cast<std::uintmax_t>(manifest.width) * manifest.height;
  if (manifest.layout == SequenceManifest::Layout::kPacked) {
    const auto size = file_size_or_throw(manifest.source, manifest.source.string());
    const auto needed = frame_bytes * manifest.entries.size();
    if (size < needed)
      throw IoError(fmt::format("{}#{}", manifest.source.string(), size / frame_bytes),
                    fmt::format("packed file holds {} bytes, manifest needs {}", size, needed));
  } else {
    for (const auto& e : manifest.entries) {
      const auto size = file_size_or_throw(manifest.source / e.file, e.file);
      if (size != frame_bytes) throw IoError(e.file, fmt::format("frame file has {} bytes, expected {}", size, frame_bytes));
    }
  }
  return SequenceReader(std::move(manifest));
}

SequenceReader open_sequence(const fs::path& manifest_path) { return open_sequence(load_manifest(manifest_path)); }

std::uint64_t yuv444_frame_bytes(int width, int height) noexcept {
  return 3ULL * static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
}

Yuv444StreamWriter::Yuv444StreamWriter(const fs::path& path, int width, int height)
    : path_(path), width_(width), height_(height), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError(path.string(), "cannot create yuv stream");
}

void Yuv444StreamWriter::append(const Yuv444Frame& frame) {
  if (frame.width() != width_ || frame.height() != height_)
    throw ValidationError("dimension-mismatch", fmt::format("frames[{}]", frames_),
                          fmt::format("{}x{}", frame.width(), frame.height()),
                          fmt::format("stream is {}x{}", width_, height_));
  const auto bytes = frame.bytes();
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw IoError(path_.string(), "write failed");
  bytes_ += bytes.size();
  ++frames_;
}

void Yuv444StreamWriter::close() {
  out_.close();
  if (!out_) throw IoError(path_.string(), "close failed");
}

Yuv444StreamReader::Yuv444StreamReader(const fs::path& path, int width, int height)
    : path_(path), width_(width), height_(height), in_(path, std::ios::binary) {
  if (!in_) throw IoError(path.string(), "cannot open yuv stream");
  const auto size = fs::file_size(path);
  const auto fb = yuv444_frame_bytes(width, height);
  if (fb == 0 || size % fb != 0)
    throw ValidationError("stream-length", path.string(), std::to_string(size),
                          fmt::format("not a multiple of the {}-byte frame size", fb));
  frames_ = static_cast<std::size_t>(size / fb);
}

Yuv444Frame Yuv444StreamReader::read(std::size_t index) {
  if (index >= frames_) throw IoError(fmt::format("{}#{}", path_.string(), index), "frame index out of range");
  Yuv444Frame frame(width_, height_);
  const auto fb = yuv444_frame_bytes(width_, height_);
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(index * fb));
  auto bytes = frame.bytes();
  in_.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in_) throw IoError(fmt::format("{}#{}", path_.string(), index), "short read");
  return frame;
}

std::uint64_t write_yuv444_stream(std::span<const Yuv444Frame> frames, const fs::path& path) {
  if (frames.empty()) {
    std::ofstream(path, std::ios::binary | std::ios::trunc);
    return 0;
  }
  Yuv444StreamWriter writer(path, frames.front().width(), frames.front().height());
  for (const auto& f : frames) writer.append(f);
  writer.close();
  return writer.bytes_written();
}

std::vector<Yuv444Frame> read_yuv444_stream(const fs::path& path, int width, int height) {
  Yuv444StreamReader reader(path, width, height);
  std::vector<Yuv444Frame> out;
  out.reserve(reader.frame_count());
  for (std::size_t i = 0; i < reader.frame_count(); ++i) out.push_back(reader.read(i));
  return out;
}

}  // namespace mp4bag
