#include "mp4bag/encode.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "mp4bag/errors.hpp"
#include "mp4bag/sequence.hpp"
#include "yaml_util.hpp"

namespace mp4bag {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 10> kNamedPresets = {
    "ultrafast", "superfast", "veryfast", "faster", "fast", "medium", "slow", "slower", "veryslow", "placebo"};

constexpr std::array<std::string_view, 2> kEncoderRequired = {"input", "output"};
constexpr std::array<std::string_view, 2> kDecoderRequired = {"input", "output"};

std::string render_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) return fmt::format("{}", static_cast<long long>(v));
  return detail::format_double(v);
}

CommandTemplate ffmpeg_encoder(std::string_view lib) {
  return {"ffmpeg",
          {"-nostdin", "-y", "-loglevel", "error", "-f", "rawvideo", "-pix_fmt", "{pix_fmt}", "-s", "{width}x{height}",
           "-r", "{fps}", "-i", "{input}", "-c:v", std::string(lib), "-crf", "{crf}", "-preset", "{preset}", "{output}"}};
}

void remove_quietly(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
}

}  // namespace

std::string_view to_string(Codec codec) noexcept {
  switch (codec) {
    case Codec::kX264:
      return "x264";
    case Codec::kX265:
      return "x265";
    case Codec::kSvtAv1:
      return "svtav1";
  }
  return "unknown";
}

Codec parse_codec(std::string_view name) {
  if (name == "x264" || name == "libx264" || name == "h264") return Codec::kX264;
  if (name == "x265" || name == "libx265" || name == "h265" || name == "hevc") return Codec::kX265;
  if (name == "svtav1" || name == "libsvtav1" || name == "av1") return Codec::kSvtAv1;
  throw ParameterError(fmt::format("unknown codec '{}' (expected x264, x265 or svtav1)", name));
}

std::span<const std::string_view> named_presets() noexcept { return kNamedPresets; }

void validate_params(const EncodeParams& params) {
  if (params.crf < kMinCrf || params.crf > kMaxCrf)
    throw ParameterError(fmt::format("crf {} outside [{}, {}]", params.crf, kMinCrf, kMaxCrf));
  if (params.codec == Codec::kSvtAv1) {
    int value = -1;
    const auto* b = params.preset.data();
    const auto* e = b + params.preset.size();
    const auto [ptr, ec] = std::from_chars(b, e, value);
    if (ec != std::errc{} || ptr != e || value < kSvtAv1MinPreset || value > kSvtAv1MaxPreset)
      throw ParameterError(fmt::format("preset '{}' invalid for svtav1 (expected an integer {}-{})", params.preset,
                                       kSvtAv1MinPreset, kSvtAv1MaxPreset));
  } else if (std::find(kNamedPresets.begin(), kNamedPresets.end(), params.preset) == kNamedPresets.end()) {
    throw ParameterError(fmt::format("preset '{}' invalid for {} (expected ultrafast ... placebo)", params.preset,
                                     to_string(params.codec)));
  }
}

const CommandTemplate& ToolSet::encoder(Codec codec) const {
  const auto it = encoders.find(codec);
  if (it == encoders.end()) throw ParameterError(fmt::format("no encoder template configured for {}", to_string(codec)));
  return it->second;
}

ToolSet default_toolset() {
  ToolSet t;
  t.encoders[Codec::kX264] = ffmpeg_encoder("libx264");
  t.encoders[Codec::kX265] = ffmpeg_encoder("libx265");
  t.encoders[Codec::kSvtAv1] = ffmpeg_encoder("libsvtav1");
  t.decoder = {"ffmpeg",
               {"-nostdin", "-y", "-loglevel", "error", "-i", "{input}", "-f", "rawvideo", "-pix_fmt", "{pix_fmt}",
                "{output}"}};
  return t;
}

ToolSet toolset_from_yaml(std::string_view text, ToolSet base) {
  const YAML::Node root = detail::load_yaml(text, "config");
  if (!root.IsMap()) return base;
  if (const YAML::Node enc = root["encoders"]; enc.IsDefined() && !enc.IsNull()) {
    if (!enc.IsMap()) throw ValidationError("type", "encoders", "<non-mapping>");
    for (const auto& kv : enc) {
      const auto name = kv.first.as<std::string>();
      base.encoders[parse_codec(name)] = detail::read_command_template(kv.second, "encoders." + name);
    }
  }
  if (const YAML::Node dec = root["decoder"]; dec.IsDefined() && !dec.IsNull())
    base.decoder = detail::read_command_template(dec, "decoder");
  return base;
}

std::vector<std::string> build_encoder_command(const EncodeJob& job, const CommandTemplate& tmpl) {
  validate_params(job.params);
  const std::map<std::string, std::string> values = {
      {"input", job.input.path.string()},
      {"output", job.output.string()},
      {"crf", std::to_string(job.params.crf)},
      {"preset", job.params.preset},
      {"fps", render_number(job.input.fps)},
      {"width", std::to_string(job.input.width)},
      {"height", std::to_string(job.input.height)},
      {"pix_fmt", "yuv444p"},
  };
  return expand_template(tmpl, values, kEncoderRequired);
}

double compute_bitrate(std::uint64_t size_bytes, double duration_s) {
  if (!(duration_s > 0.0)) throw ParameterError(fmt::format("duration must be positive, got {}", duration_s));
  return static_cast<double>(size_bytes) * 8.0 / duration_s / 1000.0;
}

EncodeReport run_encode(const EncodeJob& job, const CommandTemplate& tmpl) {
  const auto argv = build_encoder_command(job, tmpl);
  if (!(job.input.fps > 0.0)) throw ParameterError(fmt::format("input fps must be positive, got {}", job.input.fps));

  std::error_code ec;
  const auto in_size = fs::file_size(job.input.path, ec);
  if (ec) throw IoError(job.input.path.string(), "encoder input not found");
  const auto frame_bytes = yuv444_frame_bytes(job.input.width, job.input.height);
  if (frame_bytes == 0 || in_size == 0 || in_size % frame_bytes != 0)
    throw ValidationError("stream-length", "input", std::to_string(in_size),
                          fmt::format("not a non-zero multiple of the {}-byte frame size", frame_bytes));
  if (!executable_available(tmpl.executable))
    throw EnvironmentError(fmt::format("encoder executable '{}' not found", tmpl.executable));

  remove_quietly(job.output);
  const ProcessResult res = run_process(argv);
  if (res.exit_code != 0) {
    remove_quietly(job.output);
    throw ToolFailure(tmpl.executable, res.exit_code, res.output);
  }
  const auto out_size = fs::file_size(job.output, ec);
  if (ec) throw RuntimeFailure("missing-output", fmt::format("encoder produced no file at '{}'", job.output.string()));

  EncodeReport report;
  report.wall_time_s = res.wall_time.count();
  report.output_size = out_size;
  report.exit_status = res.exit_code;
  report.frame_count = in_size / frame_bytes;
  report.duration_s = static_cast<double>(report.frame_count) / job.input.fps;
  report.bitrate_kbps = compute_bitrate(out_size, report.duration_s);
  return report;
}

std::vector<EncodeOutcome> run_encode_batch(std::span<const EncodeJob> jobs, const ToolSet& tools, int workers) {
  std::vector<EncodeOutcome> outcomes(jobs.size());
  run_indexed(jobs.size(), workers, [&](std::size_t i) {
    try {
      outcomes[i].report = run_encode(jobs[i], tools.encoder(jobs[i].params.codec));
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });
  return outcomes;
}

std::uint64_t decode_to_yuv444(const fs::path& video, const fs::path& out_yuv, int width, int height,
                               const CommandTemplate& decoder) {
  if (!fs::exists(video)) throw IoError(video.string(), "video not found");
  if (!executable_available(decoder.executable))
    throw EnvironmentError(fmt::format("decoder executable '{}' not found", decoder.executable));
  const std::map<std::string, std::string> values = {
      {"input", video.string()},
      {"output", out_yuv.string()},
      {"pix_fmt", "yuv444p"},
      {"width", std::to_string(width)},
      {"height", std::to_string(height)},
  };
  const auto argv = expand_template(decoder, values, kDecoderRequired);
  remove_quietly(out_yuv);
  const ProcessResult res = run_process(argv);
  if (res.exit_code != 0) throw ToolFailure(decoder.executable, res.exit_code, res.output);
  std::error_code ec;
  const auto size = fs::file_size(out_yuv, ec);
  if (ec) throw RuntimeFailure("missing-output", fmt::format("decoder produced no file at '{}'", out_yuv.string()));
  const auto fb = yuv444_frame_bytes(width, height);
  if (size % fb != 0)
    throw ValidationError("dimension-mismatch", "video", video.string(),
                          fmt::format("decoded {} bytes, not a multiple of {}x{} yuv444 frames", size, width, height));
  return size / fb;
}

std::uint64_t probe_frame_count(const fs::path& video, int width, int height, const CommandTemplate& decoder) {
  TempDir scratch("mp4bag-probe");
  return decode_to_yuv444(video, scratch / "probe.yuv", width, height, decoder);
}

BundleResult encode_bundle(const YuvStreamInfo& input, const SidecarDocument& doc, const EncodeParams& params,
                           const fs::path& video_out, const ToolSet& tools, bool verify) {
  validate_sidecar(doc);
  BundleResult result;
  result.video = video_out;
  result.sidecar = sidecar_path_for(video_out);
  try {
    result.encode = run_encode({params, input, video_out}, tools.encoder(params.codec));
    result.video_frames = result.encode.frame_count;
    if (verify) result.video_frames = probe_frame_count(video_out, doc.width, doc.height, tools.decoder);
    const BundleReport report =
        validate_bundle(doc, static_cast<std::int64_t>(result.video_frames), input.width, input.height);
    if (!report.ok()) throw ValidationError("bundle-invalid", "video", video_out.string(), report.summary());
    save_sidecar(doc, result.sidecar);
  } catch (...) {
    remove_quietly(result.video);
    remove_quietly(result.sidecar);
    throw;
  }
  return result;
}

SidecarDocument write_ground_truth(const fs::path& manifest_path, const fs::path& out_yuv) {
  SequenceReader reader = open_sequence(manifest_path);
  SidecarDocument doc = sidecar_from_manifest(reader.manifest());
  validate_sidecar(doc);
  Yuv444StreamWriter writer(out_yuv, doc.width, doc.height);
  while (auto f = reader.next()) writer.append(rgb_to_yuv444(debayer_gbrg8(f->frame)));
  writer.close();
  return doc;
}

BundleResult convert_bundle(const fs::path& manifest_path, const EncodeParams& params, const fs::path& video_out,
                            const ToolSet& tools, const ConvertOptions& options) {
  validate_params(params);
  TempDir scratch("mp4bag-convert");
  const fs::path yuv = options.keep_yuv.value_or(scratch / "input.yuv");
  const SidecarDocument doc = write_ground_truth(manifest_path, yuv);
  return encode_bundle({yuv, doc.width, doc.height, doc.fps_nominal}, doc, params, video_out, tools, options.verify);
}

}  // namespace mp4bag
