#include "mp4bag/sweep.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mp4bag/errors.hpp"
#include "mp4bag/sequence.hpp"
#include "yaml_util.hpp"

namespace mp4bag {

namespace fs = std::filesystem;

namespace {

constexpr double kSecondsPerDay = 86400.0;
constexpr double kBytesPerSecondPerKbps = 125.0;

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, const std::string& field) {
  T value{};
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) throw ParseError(field, fmt::format("'{}' is not a number", text));
  return value;
}

std::string point_name(const EncodeParams& p) { return fmt::format("{}_crf{}_preset{}", to_string(p.codec), p.crf, p.preset); }

}  // namespace

double effective_streams(const DatasetModel& model) noexcept {
  return model.full_rate_streams + model.half_rate_streams / 2.0;
}

double extrapolate_full_size(double bitrate_kbps, const DatasetModel& model) noexcept {
  return bitrate_kbps * kBytesPerSecondPerKbps * effective_streams(model) * model.stream_duration_s / 1e9;
}

double extrapolate_full_time(double clip_encode_time_s, const DatasetModel& model) {
  if (!(model.clip_duration_s > 0.0))
    throw ParameterError(fmt::format("clip duration must be positive, got {}", model.clip_duration_s));
  const double clip_equivalents = effective_streams(model) * model.stream_duration_s / model.clip_duration_s;
  return clip_encode_time_s * clip_equivalents / kSecondsPerDay;
}

SweepRecord make_record(const EncodeParams& params, double encode_time_s, std::uint64_t size_bytes,
                        double bitrate_kbps, double quality_mean, const DatasetModel& model) {
  SweepRecord r;
  r.codec = params.codec;
  r.crf = params.crf;
  r.preset = params.preset;
  r.encode_time_s = encode_time_s;
  r.size_bytes = size_bytes;
  r.bitrate_kbps = bitrate_kbps;
  r.vmaf_mean = quality_mean;
  r.full_size_gb = extrapolate_full_size(bitrate_kbps, model);
  r.full_time_days = extrapolate_full_time(encode_time_s, model);
  return r;
}

std::vector<SweepRecord> filter_candidates(std::span<const SweepRecord> records, const SelectionPolicy& policy) {
  std::vector<SweepRecord> out;
  for (const auto& r : records) {
    if (r.vmaf_mean < policy.vmaf_floor) continue;
    if (r.full_time_days > policy.time_budget_days) continue;
    if (policy.clip_time_budget_s && r.encode_time_s > *policy.clip_time_budget_s) continue;
    out.push_back(r);
  }
  return out;
}

SweepRecord select_setting(std::span<const SweepRecord> records, const SelectionPolicy& policy) {
  const auto candidates = filter_candidates(records, policy);
  if (candidates.empty())
    throw RuntimeFailure("no-feasible-setting",
                         fmt::format("no setting reaches quality {} within {} days among {} records", policy.vmaf_floor,
                                     policy.time_budget_days, records.size()));
  const auto best = std::min_element(candidates.begin(), candidates.end(), [](const SweepRecord& a, const SweepRecord& b) {
    if (a.size_bytes != b.size_bytes) return a.size_bytes < b.size_bytes;
    if (a.full_time_days != b.full_time_days) return a.full_time_days < b.full_time_days;
    return a.crf > b.crf;
  });
  return *best;
}

std::vector<EncodeParams> make_grid(std::span<const Codec> codecs, int crf_min, int crf_max,
                                    std::span<const std::string> presets) {
  if (crf_min > crf_max) throw ParameterError(fmt::format("empty crf range {}-{}", crf_min, crf_max));
  std::vector<EncodeParams> grid;
  for (const Codec c : codecs) {
    for (int crf = crf_min; crf <= crf_max; ++crf) {
      for (const auto& p : presets) {
        EncodeParams params{c, crf, p};
        validate_params(params);
        grid.push_back(std::move(params));
      }
    }
  }
  return grid;
}

Scorer psnr_scorer() {
  return [](const fs::path& ref, const fs::path& dist, int w, int h) { return psnr_sequence(ref, dist, w, h); };
}

Scorer vmaf_scorer(VmafToolConfig config) {
  return [config = std::move(config)](const fs::path& ref, const fs::path& dist, int w, int h) {
    return aggregate(run_external_vmaf(ref, dist, w, h, config), "vmaf");
  };
}

SweepResult run_sweep(std::span<const EncodeParams> grid, const YuvStreamInfo& clip, const fs::path& ground_truth,
                      const SweepSetup& setup) {
  TempDir scratch("mp4bag-sweep");
  const fs::path video_dir = setup.output_dir.value_or(scratch.path());
  fs::create_directories(video_dir);

  struct Slot {
    std::optional<SweepRecord> record;
    std::string error;
  };
  std::vector<Slot> slots(grid.size());

  run_indexed(grid.size(), setup.workers, [&](std::size_t i) {
    const EncodeParams& params = grid[i];
    try {
      const fs::path video = video_dir / (point_name(params) + ".mp4");
      const fs::path decoded = scratch / (point_name(params) + ".yuv");
      const EncodeReport rep = run_encode({params, clip, video}, setup.tools.encoder(params.codec));
      decode_to_yuv444(video, decoded, clip.width, clip.height, setup.tools.decoder);
      const QualitySummary q = setup.scorer(ground_truth, decoded, clip.width, clip.height);
      std::error_code ec;
      fs::remove(decoded, ec);
      slots[i].record = make_record(params, rep.wall_time_s, rep.output_size, rep.bitrate_kbps, q.mean, setup.model);
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  });

  SweepResult result;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (slots[i].record)
      result.records.push_back(std::move(*slots[i].record));
    else
      result.failures.push_back({grid[i], std::move(slots[i].error)});
  }
  if (!grid.empty() && result.records.empty()) {
    std::string msg = fmt::format("all {} sweep points failed", grid.size());
    for (const auto& f : result.failures) msg += fmt::format("\n  {}: {}", point_name(f.params), f.message);
    throw RuntimeFailure("sweep-failed", msg);
  }
  return result;
}

std::vector<std::size_t> subsample_indices(std::size_t count, std::size_t n) {
  if (n == 0) throw ParameterError("subsample factor must be >= 1");
  std::vector<std::size_t> out;
  out.reserve((count + n - 1) / n);
  for (std::size_t i = 0; i < count; i += n) out.push_back(i);
  return out;
}

SidecarDocument subsample_sidecar(const SidecarDocument& doc, std::size_t n) {
  SidecarDocument out = doc;
  out.frames.clear();
  for (const auto i : subsample_indices(doc.frames.size(), n)) out.frames.push_back(doc.frames[i]);
  out.fps_nominal = doc.fps_nominal / static_cast<double>(n);
  return out;
}

BundleResult subsample_bundle(const fs::path& video, const fs::path& sidecar, std::size_t n, const EncodeParams& params,
                              const fs::path& video_out, const ToolSet& tools) {
  validate_params(params);
  const SidecarDocument doc = load_sidecar(sidecar);
  const SidecarDocument sub = subsample_sidecar(doc, n);

  TempDir scratch("mp4bag-subsample");
  const fs::path decoded = scratch / "decoded.yuv";
  const auto frames = decode_to_yuv444(video, decoded, doc.width, doc.height, tools.decoder);
  const BundleReport report = validate_bundle(doc, static_cast<std::int64_t>(frames), doc.width, doc.height);
  if (!report.ok()) throw ValidationError("bundle-invalid", "video", video.string(), report.summary());

  const fs::path kept = scratch / "subsampled.yuv";
  {
    Yuv444StreamReader reader(decoded, doc.width, doc.height);
    Yuv444StreamWriter writer(kept, doc.width, doc.height);
    for (const auto i : subsample_indices(reader.frame_count(), n)) writer.append(reader.read(i));
    writer.close();
  }
  return encode_bundle({kept, doc.width, doc.height, sub.fps_nominal}, sub, params, video_out, tools);
}

double avg_frame_size(std::uint64_t encoded_size_bytes, std::uint64_t frame_count) {
  if (frame_count == 0) throw ParameterError("frame count must be >= 1");
  return static_cast<double>(encoded_size_bytes) / static_cast<double>(frame_count) / 1000.0;
}

double estimate_raw_rate(int width, int height, double bytes_per_pixel, double fps) {
  if (width <= 0 || height <= 0 || !(bytes_per_pixel > 0.0) || !(fps > 0.0))
    throw ParameterError(fmt::format("raw rate needs positive arguments, got {}x{} x {} B x {} Hz", width, height,
                                     bytes_per_pixel, fps));
  return static_cast<double>(width) * static_cast<double>(height) * bytes_per_pixel * fps;
}

std::string render_report(std::span<const SweepRecord> records, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::kCsv) {
    out += kReportColumns;
    out += '\n';
    for (const auto& r : records) {
      out += fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(r.codec), r.crf, r.preset,
                         detail::format_double(r.encode_time_s), r.size_bytes, detail::format_double(r.bitrate_kbps),
                         detail::format_double(r.vmaf_mean), detail::format_double(r.full_size_gb),
                         detail::format_double(r.full_time_days));
    }
    return out;
  }
  out += "| Codec | CRF | Preset | Time (s) | Size (MiB) | Bitrate (kbps) | Quality | Full Size (GB) | Full Time (days) |\n";
  out += "|---|---:|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : records) {
    out += fmt::format("| {} | {} | {} | {:.2f} | {:.1f} | {:.0f} | {:.2f} | {:.0f} | {:.2f} |\n", to_string(r.codec), r.crf,
                       r.preset, r.encode_time_s, bytes_to_mib(static_cast<double>(r.size_bytes)), r.bitrate_kbps,
                       r.vmaf_mean, r.full_size_gb, r.full_time_days);
  }
  return out;
}

std::vector<SweepRecord> parse_report_csv(std::string_view text) {
  auto lines = split(text, '\n');
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty() || trim(lines.front()) != kReportColumns) throw ParseError("report:1", "unexpected CSV header");
  std::vector<SweepRecord> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string where = fmt::format("report:{}", li + 1);
    const auto f = split(trim(lines[li]), ',');
    if (f.size() != 9) throw ParseError(where, fmt::format("expected 9 fields, found {}", f.size()));
    SweepRecord r;
    r.codec = parse_codec(trim(f[0]));
    r.crf = parse_number<int>(f[1], where + ".crf");
    r.preset = std::string(trim(f[2]));
    r.encode_time_s = parse_number<double>(f[3], where + ".encode_time_s");
    r.size_bytes = parse_number<std::uint64_t>(f[4], where + ".size_bytes");
    r.bitrate_kbps = parse_number<double>(f[5], where + ".bitrate_kbps");
    r.vmaf_mean = parse_number<double>(f[6], where + ".vmaf_mean");
    r.full_size_gb = parse_number<double>(f[7], where + ".full_size_gb");
    r.full_time_days = parse_number<double>(f[8], where + ".full_time_days");
    out.push_back(std::move(r));
  }
  return out;
}

std::pair<int, int> parse_int_range(std::string_view text) {
  const auto t = trim(text);
  const auto dash = t.find('-', 1);
  if (dash == std::string_view::npos) {
    const int v = parse_number<int>(t, "range");
    return {v, v};
  }
  const int lo = parse_number<int>(t.substr(0, dash), "range");
  const int hi = parse_number<int>(t.substr(dash + 1), "range");
  if (lo > hi) throw ParameterError(fmt::format("range '{}' is empty", text));
  return {lo, hi};
}

std::vector<std::string> parse_preset_list(std::string_view text) {
  std::vector<std::string> out;
  for (auto part : split(text, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    const bool numeric_range =
        part.find('-', 1) != std::string_view::npos && std::isdigit(static_cast<unsigned char>(part.front()));
    if (numeric_range) {
      const auto [lo, hi] = parse_int_range(part);
      for (int v = lo; v <= hi; ++v) out.push_back(std::to_string(v));
    } else {
      out.emplace_back(part);
    }
  }
  if (out.empty()) throw ParameterError(fmt::format("no presets in '{}'", text));
  return out;
}

SweepConfig parse_sweep_config(std::string_view text, const fs::path& base_dir) {
  const YAML::Node root = detail::load_yaml(text, "sweep config");
  const YAML::Node s = detail::require(root, "sweep", "");
  SweepConfig c;
  if (const YAML::Node clip = s["clip"]; clip.IsDefined() && !clip.IsNull()) {
    const fs::path p = detail::scalar_as<std::string>(clip, "sweep.clip");
    c.clip_manifest = p.is_absolute() ? p : base_dir / p;
  }
  if (const YAML::Node codecs = s["codecs"]; codecs.IsDefined()) {
    c.codecs.clear();
    if (codecs.IsSequence()) {
      for (std::size_t i = 0; i < codecs.size(); ++i)
        c.codecs.push_back(parse_codec(detail::scalar_as<std::string>(codecs[i], fmt::format("sweep.codecs[{}]", i))));
    } else {
      c.codecs.push_back(parse_codec(detail::scalar_as<std::string>(codecs, "sweep.codecs")));
    }
  }
  if (const YAML::Node crf = s["crf"]; crf.IsDefined()) {
    if (crf.IsSequence() && crf.size() == 2) {
      c.crf_min = detail::scalar_as<int>(crf[0], "sweep.crf[0]");
      c.crf_max = detail::scalar_as<int>(crf[1], "sweep.crf[1]");
    } else {
      std::tie(c.crf_min, c.crf_max) = parse_int_range(detail::scalar_as<std::string>(crf, "sweep.crf"));
    }
  }
  if (const YAML::Node presets = s["presets"]; presets.IsDefined()) {
    c.presets.clear();
    if (presets.IsSequence()) {
      for (std::size_t i = 0; i < presets.size(); ++i)
        c.presets.push_back(detail::scalar_as<std::string>(presets[i], fmt::format("sweep.presets[{}]", i)));
    } else {
      c.presets = parse_preset_list(detail::scalar_as<std::string>(presets, "sweep.presets"));
    }
  }
  if (const YAML::Node m = s["metric"]; m.IsDefined()) c.metric = detail::scalar_as<std::string>(m, "sweep.metric");
  if (c.metric != "vmaf" && c.metric != "psnr") throw ValidationError("metric", "sweep.metric", c.metric, "expected vmaf or psnr");
  if (const YAML::Node w = s["workers"]; w.IsDefined()) c.workers = detail::scalar_as<int>(w, "sweep.workers");
  if (const YAML::Node d = s["dataset"]; d.IsDefined() && d.IsMap()) {
    if (d["full_rate_streams"]) c.model.full_rate_streams = detail::scalar_as<double>(d["full_rate_streams"], "sweep.dataset.full_rate_streams");
    if (d["half_rate_streams"]) c.model.half_rate_streams = detail::scalar_as<double>(d["half_rate_streams"], "sweep.dataset.half_rate_streams");
    if (d["stream_duration_s"]) c.model.stream_duration_s = detail::scalar_as<double>(d["stream_duration_s"], "sweep.dataset.stream_duration_s");
    if (d["clip_duration_s"]) {
      c.model.clip_duration_s = detail::scalar_as<double>(d["clip_duration_s"], "sweep.dataset.clip_duration_s");
      c.clip_duration_from_clip = false;
    }
  }
  if (const YAML::Node p = s["policy"]; p.IsDefined() && p.IsMap()) {
    if (p["vmaf_floor"]) c.policy.vmaf_floor = detail::scalar_as<double>(p["vmaf_floor"], "sweep.policy.vmaf_floor");
    if (p["time_budget_days"]) c.policy.time_budget_days = detail::scalar_as<double>(p["time_budget_days"], "sweep.policy.time_budget_days");
    if (p["clip_time_budget_s"]) c.policy.clip_time_budget_s = detail::scalar_as<double>(p["clip_time_budget_s"], "sweep.policy.clip_time_budget_s");
  }
  if (c.policy.vmaf_floor < 0.0 || c.policy.vmaf_floor > 100.0)
    throw ValidationError("policy", "sweep.policy.vmaf_floor", detail::format_double(c.policy.vmaf_floor), "must be in [0, 100]");
  return c;
}

}  // namespace mp4bag
