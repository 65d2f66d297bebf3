#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mp4bag/encode.hpp"
#include "mp4bag/pixel.hpp"
#include "mp4bag/process.hpp"
#include "mp4bag/replay.hpp"
#include "mp4bag/sequence.hpp"
#include "mp4bag/sidecar.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline std::vector<std::uint8_t> random_bytes(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(d(rng));
  return v;
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes an executable /bin/sh script.
inline fs::path write_script(const fs::path& p, const std::string& body) {
  write_file(p, "#!/bin/sh\n" + body + "\n");
  fs::permissions(p, fs::perms::owner_all | fs::perms::group_read | fs::perms::group_exec, fs::perm_options::replace);
  return p;
}

// Lossless stand-in tools: the "video" is the raw yuv444p stream itself.
inline mp4bag::ToolSet stub_toolset(const fs::path& dir) {
  const auto enc = write_script(dir / "stub_encoder.sh", "cp \"$1\" \"$2\"");
  const auto dec = write_script(dir / "stub_decoder.sh", "cp \"$1\" \"$2\"");
  mp4bag::ToolSet t;
  for (auto c : {mp4bag::Codec::kX264, mp4bag::Codec::kX265, mp4bag::Codec::kSvtAv1})
    t.encoders[c] = {enc.string(), {"{input}", "{output}", "{crf}", "{preset}"}};
  t.decoder = {dec.string(), {"{input}", "{output}"}};
  return t;
}

// Stamps start at `t0_ns` and advance by 1/fps (rounded to whole ns).
inline std::vector<mp4bag::FrameStamp> regular_stamps(std::size_t n, double fps, std::int64_t t0_ns = 1'700'000'000'000'000'000) {
  std::vector<mp4bag::FrameStamp> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(mp4bag::FrameStamp::from_nanoseconds(t0_ns + std::llround(static_cast<double>(i) * 1e9 / fps)));
  return out;
}

// Packed raw sequence with seeded random mosaics; returns the manifest path.
inline fs::path make_sequence(const fs::path& dir, std::size_t n, int w, int h, double fps, std::uint32_t seed = 7) {
  std::mt19937 rng(seed);
  mp4bag::SequenceManifest m;
  m.width = w;
  m.height = h;
  m.fps_nominal = fps;
  m.frame_id = "cam0";
  m.layout = mp4bag::SequenceManifest::Layout::kPacked;
  m.source = dir / "frames.raw";
  std::ofstream raw(m.source, std::ios::binary);
  const auto stamps = regular_stamps(n, fps);
  for (std::size_t i = 0; i < n; ++i) {
    const auto bytes = random_bytes(rng, static_cast<std::size_t>(w) * h);
    raw.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    m.entries.push_back({static_cast<std::int64_t>(i), stamps[i], {}});
  }
  raw.close();
  const auto path = dir / "sequence.yaml";
  mp4bag::save_manifest(m, path);
  return path;
}

inline mp4bag::SidecarDocument make_sidecar(std::size_t n, int w, int h, double fps) {
  mp4bag::SidecarDocument doc;
  doc.width = w;
  doc.height = h;
  doc.fps_nominal = fps;
  doc.frame_id = "cam0";
  doc.camera_info.width = w;
  doc.camera_info.height = h;
  doc.camera_info.K = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  doc.camera_info.R = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  doc.camera_info.P = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  const auto stamps = regular_stamps(n, fps);
  for (std::size_t i = 0; i < n; ++i) doc.frames.push_back({static_cast<std::int64_t>(i), stamps[i]});
  return doc;
}

// In-memory frames whose bytes depend on the index; optional per-read delay.
class SyntheticSource : public mp4bag::FrameSource {
 public:
  SyntheticSource(std::size_t n, int w, int h, std::chrono::microseconds delay = {}) : n_(n), w_(w), h_(h), delay_(delay) {}

  std::size_t frame_count() const override { return n_; }
  int width() const override { return w_; }
  int height() const override { return h_; }
  mp4bag::RgbFrame read(std::size_t index) override {
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    mp4bag::RgbFrame f(w_, h_);
    auto d = f.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::uint8_t>((index * 31 + i) & 0xff);
    return f;
  }

 private:
  std::size_t n_;
  int w_, h_;
  std::chrono::microseconds delay_;
};

inline mp4bag::ReplaySession synthetic_session(std::size_t n, double fps, int w = 8, int h = 8,
                                               std::chrono::microseconds delay = {}) {
  return mp4bag::ReplaySession(make_sidecar(n, w, h, fps), std::make_unique<SyntheticSource>(n, w, h, delay));
}

}  // namespace testsupport
