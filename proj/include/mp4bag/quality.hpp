#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mp4bag/pixel.hpp"
#include "mp4bag/process.hpp"

namespace mp4bag {

inline constexpr double kPsnrCapDb = 100.0;

using FrameScores = std::vector<double>;

struct QualitySummary {
  std::string metric;
  FrameScores scores;
  double mean = 0.0;
  double min = 0.0;
};

// Mean and min of per-frame scores. Throws ParameterError on an empty list.
QualitySummary aggregate(std::span<const double> scores, std::string metric = "vmaf");

// The quality gate: mean >= floor.
inline bool meets_floor(const QualitySummary& q, double floor) noexcept { return q.mean >= floor; }

// 10*log10(255^2 / MSE) over all 3*W*H samples; zero error and anything above
// the cap report kPsnrCapDb.
double psnr_frame(const Yuv444Frame& reference, const Yuv444Frame& distorted);

QualitySummary psnr_sequence(std::span<const Yuv444Frame> reference, std::span<const Yuv444Frame> distorted);
// Streams both raw yuv444p files frame by frame.
QualitySummary psnr_sequence(const std::filesystem::path& reference, const std::filesystem::path& distorted, int width,
                             int height);

// External VMAF scorer. Placeholders: {reference} {distorted} {report}
// (required) and {width} {height} {pix_fmt} {bitdepth} (optional).
// Paths into the JSON report are dotted, e.g. "pooled_metrics.vmaf.mean".
struct VmafToolConfig {
  CommandTemplate command;
  std::string frames_path = "frames";        // array of per-frame objects
  std::string score_key = "metrics.vmaf";    // inside each frame object
  std::string pooled_mean_path = "pooled_metrics.vmaf.mean";
};

// Invocation of the open-source `vmaf` CLI on raw 8-bit 4:4:4 input.
VmafToolConfig default_vmaf_config();
VmafToolConfig vmaf_config_from_yaml(std::string_view text, VmafToolConfig base = default_vmaf_config());

// Extracts per-frame scores. Throws ParseError naming the configured path on
// malformed or empty reports.
FrameScores parse_vmaf_report(std::string_view json_text, const VmafToolConfig& config);

// Pooled mean as reported by the tool, when present at pooled_mean_path.
std::optional<double> parse_vmaf_pooled_mean(std::string_view json_text, const VmafToolConfig& config);

// Runs the tool on two raw yuv444p files. Throws EnvironmentError when the
// tool is absent so callers can fall back to PSNR.
FrameScores run_external_vmaf(const std::filesystem::path& reference, const std::filesystem::path& distorted,
                              int width, int height, const VmafToolConfig& config);

}  // namespace mp4bag
