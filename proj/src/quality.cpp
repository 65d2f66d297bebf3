#include "mp4bag/quality.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mp4bag/errors.hpp"
#include "mp4bag/sequence.hpp"
#include "yaml_util.hpp"

namespace mp4bag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kVmafRequired = {"reference", "distorted", "report"};

const json* walk(const json& root, std::string_view dotted) {
  const json* node = &root;
  while (!dotted.empty()) {
    const auto dot = dotted.find('.');
    const std::string key(dotted.substr(0, dot));
    if (!node->is_object()) return nullptr;
    const auto it = node->find(key);
    if (it == node->end()) return nullptr;
    node = &*it;
    if (dot == std::string_view::npos) break;
    dotted.remove_prefix(dot + 1);
  }
  return node;
}

}  // namespace

QualitySummary aggregate(std::span<const double> scores, std::string metric) {
  if (scores.empty()) throw ParameterError("cannot aggregate an empty score list");
  // Neumaier compensated sum.
  double sum = 0.0;
  double comp = 0.0;
  double lo = scores.front();
  for (double s : scores) {
    const double t = sum + s;
    comp += std::fabs(sum) >= std::fabs(s) ? (sum - t) + s : (s - t) + sum;
    sum = t;
    lo = std::min(lo, s);
  }
  QualitySummary q;
  q.metric = std::move(metric);
  q.scores.assign(scores.begin(), scores.end());
  q.mean = (sum + comp) / static_cast<double>(scores.size());
  q.min = lo;
  return q;
}

double psnr_frame(const Yuv444Frame& reference, const Yuv444Frame& distorted) {
  if (reference.width() != distorted.width() || reference.height() != distorted.height())
    throw ValidationError("dimension-mismatch", "distorted", fmt::format("{}x{}", distorted.width(), distorted.height()),
                          fmt::format("reference is {}x{}", reference.width(), reference.height()));
  const auto a = reference.bytes();
  const auto b = distorted.bytes();
  std::uint64_t sse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int d = static_cast<int>(a[i]) - static_cast<int>(b[i]);
    sse += static_cast<std::uint64_t>(d * d);
  }
  if (sse == 0) return kPsnrCapDb;
  const double mse = static_cast<double>(sse) / static_cast<double>(a.size());
  return std::min(kPsnrCapDb, 10.0 * std::log10(255.0 * 255.0 / mse));
}

QualitySummary psnr_sequence(std::span<const Yuv444Frame> reference, std::span<const Yuv444Frame> distorted) {
  if (reference.size() != distorted.size())
    throw ValidationError("frame-count-mismatch", "distorted.frames", std::to_string(distorted.size()),
                          fmt::format("reference has {} frames", reference.size()));
  FrameScores scores;
  scores.reserve(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) scores.push_back(psnr_frame(reference[i], distorted[i]));
  return aggregate(scores, "psnr");
}

QualitySummary psnr_sequence(const fs::path& reference, const fs::path& distorted, int width, int height) {
  Yuv444StreamReader ref(reference, width, height);
  Yuv444StreamReader dist(distorted, width, height);
  if (ref.frame_count() != dist.frame_count())
    throw ValidationError("frame-count-mismatch", "distorted.frames", std::to_string(dist.frame_count()),
                          fmt::format("reference has {} frames", ref.frame_count()));
  FrameScores scores;
  scores.reserve(ref.frame_count());
  for (std::size_t i = 0; i < ref.frame_count(); ++i) scores.push_back(psnr_frame(ref.read(i), dist.read(i)));
  return aggregate(scores, "psnr");
}

VmafToolConfig default_vmaf_config() {
  VmafToolConfig c;
  c.command = {"vmaf",
               {"--reference", "{reference}", "--distorted", "{distorted}", "--width", "{width}", "--height", "{height}",
                "--pixel_format", "444", "--bitdepth", "{bitdepth}", "--json", "--output", "{report}", "--quiet"}};
  return c;
}

VmafToolConfig vmaf_config_from_yaml(std::string_view text, VmafToolConfig base) {
  const YAML::Node root = detail::load_yaml(text, "config");
  if (!root.IsMap()) return base;
  const YAML::Node v = root["vmaf"];
  if (!v.IsDefined() || v.IsNull()) return base;
  if (v["executable"].IsDefined()) base.command = detail::read_command_template(v, "vmaf");
  if (v["frames_path"].IsDefined()) base.frames_path = detail::scalar_as<std::string>(v["frames_path"], "vmaf.frames_path");
  if (v["score_key"].IsDefined()) base.score_key = detail::scalar_as<std::string>(v["score_key"], "vmaf.score_key");
  if (v["pooled_mean_path"].IsDefined())
    base.pooled_mean_path = detail::scalar_as<std::string>(v["pooled_mean_path"], "vmaf.pooled_mean_path");
  return base;
}

FrameScores parse_vmaf_report(std::string_view json_text, const VmafToolConfig& config) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError("vmaf report", e.what());
  }
  const json* frames = walk(root, config.frames_path);
  if (!frames || !frames->is_array()) throw ParseError(config.frames_path, "per-frame array missing from report");
  if (frames->empty()) throw ParseError(config.frames_path, "report contains no frames");
  FrameScores scores;
  scores.reserve(frames->size());
  for (std::size_t i = 0; i < frames->size(); ++i) {
    const json* score = walk((*frames)[i], config.score_key);
    if (!score || !score->is_number())
      throw ParseError(fmt::format("{}[{}].{}", config.frames_path, i, config.score_key), "score missing or not numeric");
    const double v = score->get<double>();
    if (!std::isfinite(v)) throw ParseError(fmt::format("{}[{}].{}", config.frames_path, i, config.score_key), "non-finite score");
    scores.push_back(v);
  }
  return scores;
}

std::optional<double> parse_vmaf_pooled_mean(std::string_view json_text, const VmafToolConfig& config) {
  const json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) throw ParseError("vmaf report", "invalid JSON");
  const json* mean = walk(root, config.pooled_mean_path);
  if (!mean || !mean->is_number()) return std::nullopt;
  return mean->get<double>();
}

FrameScores run_external_vmaf(const fs::path& reference, const fs::path& distorted, int width, int height,
                              const VmafToolConfig& config) {
  if (!executable_available(config.command.executable))
    throw EnvironmentError(fmt::format("VMAF tool '{}' not found", config.command.executable));
  TempDir scratch("mp4bag-vmaf");
  const fs::path report = scratch / "report.json";
  const std::map<std::string, std::string> values = {
      {"reference", reference.string()}, {"distorted", distorted.string()}, {"report", report.string()},
      {"width", std::to_string(width)},  {"height", std::to_string(height)}, {"pix_fmt", "yuv444p"},
      {"bitdepth", "8"},
  };
  const auto argv = expand_template(config.command, values, kVmafRequired);
  const ProcessResult res = run_process(argv);
  if (res.exit_code != 0) throw ToolFailure(config.command.executable, res.exit_code, res.output);
  std::ifstream in(report, std::ios::binary);
  if (!in) throw ParseError(report.string(), "VMAF tool wrote no report");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_vmaf_report(ss.str(), config);
}

}  // namespace mp4bag
