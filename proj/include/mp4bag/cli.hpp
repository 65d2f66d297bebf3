#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mp4bag/encode.hpp"
#include "mp4bag/errors.hpp"
#include "mp4bag/quality.hpp"
#include "mp4bag/replay.hpp"
#include "mp4bag/sweep.hpp"

namespace mp4bag {

enum class Subcommand { kConvert, kPlay, kSweep, kSubsample, kInspect, kEstimate };

std::string_view to_string(Subcommand cmd) noexcept;

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  int verbosity = 0;  // -v raises, -q lowers
  int workers = 1;
};

struct ConvertArgs {
  std::filesystem::path manifest;
  std::filesystem::path output;
  EncodeParams params;
  std::optional<std::filesystem::path> keep_yuv;
  bool verify = true;
};

enum class SinkKind { kNull, kDirectory, kTcp };

struct PlayArgs {
  std::filesystem::path video;
  std::optional<std::filesystem::path> sidecar;  // defaults to the video's .yaml sibling
  PlaybackOptions playback;
  SinkKind sink = SinkKind::kNull;
  std::filesystem::path sink_dir = "replay_out";
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 7400;
  std::size_t wait_clients = 0;
  std::optional<std::string> follow;  // host:port of a clock-master TCP sink
  std::optional<std::string> image_topic;  // rename of the recorded image topic
};

struct SweepArgs {
  SweepConfig config;
  std::optional<std::filesystem::path> output;
  ReportFormat format = ReportFormat::kCsv;
  std::optional<std::filesystem::path> keep_videos;
};

struct SubsampleArgs {
  std::filesystem::path video;
  std::optional<std::filesystem::path> sidecar;
  std::size_t n = 2;
  std::filesystem::path output;
  EncodeParams params;
};

struct InspectArgs {
  std::filesystem::path video;
  std::optional<std::filesystem::path> sidecar;
  bool probe = true;  // decode the video and validate the pair
};

struct EstimateArgs {
  int width = 2048;
  int height = 2448;
  double fps = 60.0;
  double bytes_per_pixel = 3.0;
  DatasetModel model;
  std::optional<double> bitrate_kbps;
  std::optional<double> clip_time_s;
};

// A fully resolved command line: defaults, then the config file, then flags.
struct CliInvocation {
  Subcommand subcommand = Subcommand::kInspect;
  GlobalOptions global;
  ToolSet tools = default_toolset();
  VmafToolConfig vmaf = default_vmaf_config();
  ConvertArgs convert;
  PlayArgs play;
  SweepArgs sweep;
  SubsampleArgs subsample;
  InspectArgs inspect;
  EstimateArgs estimate;
};

// Bad command line. Validation class, so the exit code is 1.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error(ErrorClass::kValidation, "usage", message) {}
};

// --help was given; what() holds the help text.
class HelpRequested : public std::runtime_error {
 public:
  explicit HelpRequested(const std::string& text) : std::runtime_error(text) {}
};

// args excludes the program name. Throws UsageError, HelpRequested, or the
// errors of reading the config file.
CliInvocation parse_cli_args(const std::vector<std::string>& args);

// Runs an invocation; returns the process exit code.
int run_invocation(const CliInvocation& inv, std::ostream& out, std::ostream& err);

// parse + run with every failure mapped to an exit code:
// 0 success, 1 validation or usage, 2 environment, 3 runtime.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int exit_code_for(ErrorClass cls) noexcept;

}  // namespace mp4bag
