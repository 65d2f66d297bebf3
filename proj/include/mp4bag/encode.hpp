#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mp4bag/process.hpp"
#include "mp4bag/sidecar.hpp"

namespace mp4bag {

enum class Codec { kX264, kX265, kSvtAv1 };

std::string_view to_string(Codec codec) noexcept;
// Accepts "x264", "x265", "svtav1" (also "libx264", "libx265", "libsvtav1", "av1").
Codec parse_codec(std::string_view name);

inline constexpr int kMinCrf = 0;
inline constexpr int kMaxCrf = 51;

// Named presets for x264/x265, fastest first.
std::span<const std::string_view> named_presets() noexcept;
inline constexpr int kSvtAv1MinPreset = 0;
inline constexpr int kSvtAv1MaxPreset = 13;

struct EncodeParams {
  Codec codec = Codec::kSvtAv1;
  int crf = 22;
  std::string preset = "6";

  friend bool operator==(const EncodeParams&, const EncodeParams&) = default;
};

// Throws ParameterError when crf is outside [0, 51] or the preset does not
// belong to the codec's scale.
void validate_params(const EncodeParams& params);

// Raw planar yuv444p input.
struct YuvStreamInfo {
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  double fps = 0.0;
};

struct EncodeJob {
  EncodeParams params;
  YuvStreamInfo input;
  std::filesystem::path output;
};

struct EncodeReport {
  double wall_time_s = 0.0;
  std::uint64_t output_size = 0;  // bytes
  double bitrate_kbps = 0.0;      // 1 kb = 1000 bits
  int exit_status = 0;
  std::uint64_t frame_count = 0;
  double duration_s = 0.0;
};

// Encoders and the decoder used to probe or unpack a produced video.
struct ToolSet {
  std::map<Codec, CommandTemplate> encoders;
  CommandTemplate decoder;

  const CommandTemplate& encoder(Codec codec) const;
};

// FFmpeg invocations for libx264, libx265 and libsvtav1 plus a rawvideo decoder.
ToolSet default_toolset();

// Reads `encoders:` and `decoder:` sections from a YAML config; missing
// entries keep the defaults from `base`.
ToolSet toolset_from_yaml(std::string_view text, ToolSet base = default_toolset());

std::vector<std::string> build_encoder_command(const EncodeJob& job, const CommandTemplate& tmpl);

// size_bytes * 8 / duration_s / 1000. Throws ParameterError for duration <= 0.
double compute_bitrate(std::uint64_t size_bytes, double duration_s);

constexpr double bytes_to_mib(double bytes) noexcept { return bytes / (1024.0 * 1024.0); }

// Runs the encoder on job.input. The input length must be a non-zero multiple
// of the 3*W*H frame size. Throws ToolFailure on non-zero exit and
// EnvironmentError when the executable is missing.
EncodeReport run_encode(const EncodeJob& job, const CommandTemplate& tmpl);

struct EncodeOutcome {
  std::optional<EncodeReport> report;
  std::string error;
};

// Runs jobs on up to `workers` threads; outcomes keep the order of `jobs`.
std::vector<EncodeOutcome> run_encode_batch(std::span<const EncodeJob> jobs, const ToolSet& tools, int workers);

// Decodes `video` into raw yuv444p at `out_yuv` and returns the frame count.
std::uint64_t decode_to_yuv444(const std::filesystem::path& video, const std::filesystem::path& out_yuv, int width,
                               int height, const CommandTemplate& decoder);

// Frame count of `video`, obtained by decoding into a scratch file.
std::uint64_t probe_frame_count(const std::filesystem::path& video, int width, int height,
                                const CommandTemplate& decoder);

struct ConvertOptions {
  // When set, the pre-encode yuv444p stream is kept at this path.
  std::optional<std::filesystem::path> keep_yuv;
  // Decode the result and run validate_bundle before reporting success.
  bool verify = true;
};

struct BundleResult {
  std::filesystem::path video;
  std::filesystem::path sidecar;
  EncodeReport encode;
  std::uint64_t video_frames = 0;
};

// Debayers a raw sequence into a yuv444p stream and returns its sidecar.
SidecarDocument write_ground_truth(const std::filesystem::path& manifest_path, const std::filesystem::path& out_yuv);

// Raw sequence -> debayer -> yuv444 -> encoder -> video + sidecar. The
// sidecar carries the manifest stamps verbatim. Partial outputs are removed
// when any step fails.
BundleResult convert_bundle(const std::filesystem::path& manifest_path, const EncodeParams& params,
                            const std::filesystem::path& video_out, const ToolSet& tools,
                            const ConvertOptions& options = {});

// Encodes an existing yuv444p stream and writes `doc` next to the video.
BundleResult encode_bundle(const YuvStreamInfo& input, const SidecarDocument& doc, const EncodeParams& params,
                           const std::filesystem::path& video_out, const ToolSet& tools, bool verify = true);

}  // namespace mp4bag
