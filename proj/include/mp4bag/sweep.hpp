#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mp4bag/encode.hpp"
#include "mp4bag/quality.hpp"
#include "mp4bag/sidecar.hpp"

namespace mp4bag {

// One (codec, crf, preset) measurement plus its full-dataset extrapolation.
struct SweepRecord {
  Codec codec = Codec::kSvtAv1;
  int crf = 0;
  std::string preset;
  double encode_time_s = 0.0;
  std::uint64_t size_bytes = 0;
  double bitrate_kbps = 0.0;
  double vmaf_mean = 0.0;
  double full_size_gb = 0.0;    // 1 GB = 1e9 bytes
  double full_time_days = 0.0;  // single serial worker

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

// The target dataset a clip measurement is scaled up to.
struct DatasetModel {
  double full_rate_streams = 11;
  double half_rate_streams = 6;
  double stream_duration_s = 7200;
  double clip_duration_s = 60;
};

struct SelectionPolicy {
  double vmaf_floor = 99.50;
  double time_budget_days = std::numeric_limits<double>::infinity();
  // Optional cap on the measured per-clip encode time.
  std::optional<double> clip_time_budget_s;
};

// full_rate + half_rate / 2
double effective_streams(const DatasetModel& model) noexcept;
// bitrate_kbps * 125 bytes/s per kbps * effective streams * stream duration, in GB.
double extrapolate_full_size(double bitrate_kbps, const DatasetModel& model) noexcept;
// Clip encode time scaled by the number of clip-equivalents in the dataset, in days.
double extrapolate_full_time(double clip_encode_time_s, const DatasetModel& model);

// Fills the derived fields from the measured ones.
SweepRecord make_record(const EncodeParams& params, double encode_time_s, std::uint64_t size_bytes,
                        double bitrate_kbps, double quality_mean, const DatasetModel& model);

// Records with vmaf_mean >= floor and within both time budgets, order preserved.
std::vector<SweepRecord> filter_candidates(std::span<const SweepRecord> records, const SelectionPolicy& policy);

// Smallest size among the candidates; ties go to smaller full_time, then larger crf.
// Throws RuntimeFailure("no-feasible-setting") when nothing passes the filter.
SweepRecord select_setting(std::span<const SweepRecord> records, const SelectionPolicy& policy);

// Grid in deterministic order: codec, then crf ascending, then presets as listed.
std::vector<EncodeParams> make_grid(std::span<const Codec> codecs, int crf_min, int crf_max,
                                    std::span<const std::string> presets);

// Scores a decoded distorted stream against the ground truth (both raw yuv444p).
using Scorer = std::function<QualitySummary(const std::filesystem::path& reference,
                                            const std::filesystem::path& distorted, int width, int height)>;

Scorer psnr_scorer();
Scorer vmaf_scorer(VmafToolConfig config);

struct SweepSetup {
  ToolSet tools = default_toolset();
  Scorer scorer = psnr_scorer();
  DatasetModel model;
  int workers = 1;
  // Encoded videos are written here when set, otherwise into a scratch dir.
  std::optional<std::filesystem::path> output_dir;
};

struct SweepFailure {
  EncodeParams params;
  std::string message;
};

struct SweepResult {
  std::vector<SweepRecord> records;  // grid order
  std::vector<SweepFailure> failures;
};

// Encodes, decodes and scores every grid point. A failing point is recorded
// and the sweep continues; if every point fails, throws RuntimeFailure.
SweepResult run_sweep(std::span<const EncodeParams> grid, const YuvStreamInfo& clip,
                      const std::filesystem::path& ground_truth, const SweepSetup& setup);

// Source indices 0, n, 2n, ... Throws ParameterError for n == 0.
std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t n);
// Keeps every n-th frame entry verbatim and divides fps_nominal by n.
SidecarDocument subsample_sidecar(const SidecarDocument& doc, std::size_t n);

// Decodes the bundle, keeps every n-th frame and re-encodes with `params`.
BundleResult subsample_bundle(const std::filesystem::path& video, const std::filesystem::path& sidecar, std::size_t n,
                              const EncodeParams& params, const std::filesystem::path& video_out, const ToolSet& tools);

// Encoded size per frame in kB (1000 bytes). Throws ParameterError for zero frames.
double avg_frame_size(std::uint64_t encoded_size_bytes, std::uint64_t frame_count);

// width * height * bytes_per_pixel * fps, in bytes per second.
double estimate_raw_rate(int width, int height, double bytes_per_pixel, double fps);

enum class ReportFormat { kCsv, kMarkdown };

inline constexpr std::string_view kReportColumns =
    "codec,crf,preset,encode_time_s,size_bytes,bitrate_kbps,vmaf_mean,full_size_gb,full_time_days";

std::string render_report(std::span<const SweepRecord> records, ReportFormat format);
// Inverse of the CSV rendering.
std::vector<SweepRecord> parse_report_csv(std::string_view text);

// Sweep configuration file (YAML, under a top-level `sweep:` key).
struct SweepConfig {
  std::filesystem::path clip_manifest;  // raw sequence; converted to yuv444 ground truth
  std::vector<Codec> codecs{Codec::kSvtAv1};
  int crf_min = 16;
  int crf_max = 25;
  std::vector<std::string> presets{"5", "6", "7", "8"};
  std::string metric = "vmaf";  // or "psnr"
  int workers = 1;
  DatasetModel model;
  SelectionPolicy policy;
  bool clip_duration_from_clip = true;  // false when the config pins clip_duration_s
};

SweepConfig parse_sweep_config(std::string_view text, const std::filesystem::path& base_dir);

// "16-25" -> {16, 25}; "22" -> {22, 22}.
std::pair<int, int> parse_int_range(std::string_view text);
// "5-8" -> {"5","6","7","8"}; "slow,medium" -> {"slow","medium"}.
std::vector<std::string> parse_preset_list(std::string_view text);

}  // namespace mp4bag
