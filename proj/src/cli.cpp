#include "mp4bag/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "yaml_util.hpp"

namespace mp4bag {

namespace fs = std::filesystem;

namespace {

// Raw flag values; unset optionals leave the config/default value in place.
struct RawFlags {
  std::optional<std::string> config;
  int verbose = 0;
  int quiet = 0;
  std::optional<int> workers;

  // shared by convert and subsample
  std::optional<std::string> codec;
  std::optional<int> crf;
  std::optional<std::string> preset;

  std::string input;
  std::string output;
  std::optional<std::string> yaml;
  std::optional<std::string> keep_yuv;
  bool no_verify = false;

  std::optional<double> rate;
  std::optional<double> start;
  bool loop = false;
  bool clock = false;
  std::optional<double> clock_hz;
  std::optional<double> duration;
  std::optional<std::string> sink;
  std::optional<std::string> out_dir;
  std::optional<int> port;
  std::optional<std::string> bind;
  std::optional<std::size_t> wait_clients;
  std::optional<std::string> follow;
  std::vector<std::string> topics;

  std::optional<std::string> clip;
  std::vector<std::string> codecs;
  std::optional<std::string> crf_range;
  std::optional<std::string> presets;
  std::optional<std::string> metric;
  std::optional<double> floor;
  std::optional<double> budget_days;
  std::optional<double> clip_budget;
  std::optional<std::string> format;
  std::optional<std::string> keep_videos;

  std::optional<std::size_t> n;

  bool no_probe = false;

  std::optional<int> width;
  std::optional<int> height;
  std::optional<double> fps;
  std::optional<double> bpp;
  std::optional<double> streams;
  std::optional<double> half_streams;
  std::optional<double> stream_duration;
  std::optional<double> clip_duration;
  std::optional<double> bitrate;
  std::optional<double> clip_time;
};

template <typename T>
void set_if(std::optional<T>& from, T& to) {
  if (from) to = *from;
}

template <typename T>
void read_if(const YAML::Node& map, std::string_view key, const std::string& parent, T& to) {
  if (const YAML::Node n = map[std::string(key)]; n.IsDefined() && !n.IsNull())
    to = detail::scalar_as<T>(n, detail::join_path(parent, key));
}

SinkKind parse_sink(std::string_view s) {
  if (s == "null") return SinkKind::kNull;
  if (s == "dir") return SinkKind::kDirectory;
  if (s == "tcp") return SinkKind::kTcp;
  throw UsageError(fmt::format("--sink: unknown sink '{}' (expected null, dir or tcp)", s));
}

// "from:=to" remaps a topic; a bare name renames the image topic.
void add_remap(PlayArgs& p, const std::string& spec) {
  const auto sep = spec.find(":=");
  if (sep == std::string::npos) {
    if (spec.empty()) throw UsageError("--topic: empty topic");
    p.image_topic = spec;
    return;
  }
  const auto from = spec.substr(0, sep);
  const auto to = spec.substr(sep + 2);
  if (from.empty() || to.empty()) throw UsageError(fmt::format("--topic: malformed remap '{}'", spec));
  p.playback.remap[from] = to;
}

void apply_encode_section(const YAML::Node& node, const std::string& path, EncodeParams& params) {
  if (!node.IsDefined() || !node.IsMap()) return;
  if (const YAML::Node c = node["codec"]; c.IsDefined()) params.codec = parse_codec(detail::scalar_as<std::string>(c, path + ".codec"));
  read_if(node, "crf", path, params.crf);
  read_if(node, "preset", path, params.preset);
}

void apply_config(const fs::path& config_path, CliInvocation& inv) {
  std::ifstream in(config_path);
  if (!in) throw ValidationError("missing-file", "config", config_path.string(), "cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const fs::path base = config_path.parent_path();
  const YAML::Node root = detail::load_yaml(text, config_path.string());
  if (!root.IsMap()) return;

  read_if(root, "workers", "", inv.global.workers);
  inv.tools = toolset_from_yaml(text, inv.tools);
  inv.vmaf = vmaf_config_from_yaml(text, inv.vmaf);

  apply_encode_section(root["convert"], "convert", inv.convert.params);
  apply_encode_section(root["subsample"], "subsample", inv.subsample.params);

  if (const YAML::Node p = root["play"]; p.IsDefined() && p.IsMap()) {
    auto& o = inv.play.playback;
    read_if(p, "rate", "play", o.rate);
    read_if(p, "start", "play", o.start_offset_s);
    read_if(p, "loop", "play", o.loop);
    read_if(p, "clock", "play", o.clock_master);
    read_if(p, "clock_hz", "play", o.clock_hz);
    if (const YAML::Node s = p["sink"]; s.IsDefined()) inv.play.sink = parse_sink(detail::scalar_as<std::string>(s, "play.sink"));
    std::string out_dir;
    read_if(p, "out_dir", "play", out_dir);
    if (!out_dir.empty()) inv.play.sink_dir = fs::path(out_dir).is_absolute() ? fs::path(out_dir) : base / out_dir;
    int port = inv.play.port;
    read_if(p, "port", "play", port);
    if (port < 0 || port > 65535) throw ValidationError("range", "play.port", std::to_string(port), "must be in [0, 65535]");
    inv.play.port = static_cast<std::uint16_t>(port);
    read_if(p, "bind", "play", inv.play.bind_address);
    if (const YAML::Node r = p["remap"]; r.IsDefined() && r.IsMap())
      for (const auto& kv : r) o.remap[kv.first.as<std::string>()] = detail::scalar_as<std::string>(kv.second, "play.remap");
  }

  if (root["sweep"].IsDefined()) {
    inv.sweep.config = parse_sweep_config(text, base);
    if (!root["sweep"]["workers"].IsDefined()) inv.sweep.config.workers = inv.global.workers;
  } else {
    inv.sweep.config.workers = inv.global.workers;
  }

  if (const YAML::Node e = root["estimate"]; e.IsDefined() && e.IsMap()) {
    auto& a = inv.estimate;
    read_if(e, "width", "estimate", a.width);
    read_if(e, "height", "estimate", a.height);
    read_if(e, "fps", "estimate", a.fps);
    read_if(e, "bytes_per_pixel", "estimate", a.bytes_per_pixel);
    read_if(e, "streams", "estimate", a.model.full_rate_streams);
    read_if(e, "half_streams", "estimate", a.model.half_rate_streams);
    read_if(e, "duration", "estimate", a.model.stream_duration_s);
    read_if(e, "clip_duration", "estimate", a.model.clip_duration_s);
  }
}

void apply_encode_flags(RawFlags& f, EncodeParams& params) {
  if (f.codec) params.codec = parse_codec(*f.codec);
  set_if(f.crf, params.crf);
  set_if(f.preset, params.preset);
  validate_params(params);
}

std::optional<fs::path> opt_path(const std::optional<std::string>& s) {
  return s ? std::optional<fs::path>(*s) : std::nullopt;
}

void add_global_options(CLI::App* app, RawFlags& f) {
  app->add_option("--config", f.config, "YAML config; its values override defaults, flags override it");
  app->add_flag("-v,--verbose", f.verbose, "More diagnostics (repeatable)");
  app->add_flag("-q,--quiet", f.quiet, "Fewer diagnostics");
  app->add_option("-j,--workers", f.workers, "Worker threads for encode batches")->check(CLI::Range(1, 1024));
}

void add_encode_options(CLI::App* cmd, RawFlags& f) {
  cmd->add_option("--codec", f.codec, "Encoder: x264, x265 or svtav1");
  cmd->add_option("--crf", f.crf, "Constant rate factor")->check(CLI::Range(kMinCrf, kMaxCrf));
  cmd->add_option("--preset", f.preset, "Encoder preset (0-13 for svtav1, named for x264/x265)");
}

}  // namespace

std::string_view to_string(Subcommand cmd) noexcept {
  switch (cmd) {
    case Subcommand::kConvert: return "convert";
    case Subcommand::kPlay: return "play";
    case Subcommand::kSweep: return "sweep";
    case Subcommand::kSubsample: return "subsample";
    case Subcommand::kInspect: return "inspect";
    case Subcommand::kEstimate: return "estimate";
  }
  return "?";
}

int exit_code_for(ErrorClass cls) noexcept {
  switch (cls) {
    case ErrorClass::kValidation: return 1;
    case ErrorClass::kEnvironment: return 2;
    case ErrorClass::kRuntime: return 3;
  }
  return 3;
}

CliInvocation parse_cli_args(const std::vector<std::string>& args) {
  RawFlags f;
  CLI::App app{"Compress timestamped raw camera sequences into video bundles, benchmark encoder settings and replay bundles.",
               "mp4bag"};
  app.require_subcommand(1, 1);
  add_global_options(&app, f);

  auto* convert = app.add_subcommand("convert", "Raw sequence manifest -> video + sidecar bundle");
  convert->add_option("manifest", f.input, "Raw sequence manifest (YAML)")->required();
  convert->add_option("-o,--output", f.output, "Output video path; the sidecar is written next to it")->required();
  add_encode_options(convert, f);
  convert->add_option("--keep-yuv", f.keep_yuv, "Keep the intermediate yuv444p stream at this path");
  convert->add_flag("--no-verify", f.no_verify, "Skip decoding the result to check the frame count");

  auto* play = app.add_subcommand("play", "Replay a bundle as timestamped messages");
  play->add_option("video", f.input, "Bundle video")->required();
  play->add_option("--yaml", f.yaml, "Sidecar path (default: the video's .yaml sibling)");
  play->add_option("-r,--rate", f.rate, "Playback rate multiplier")->check(CLI::PositiveNumber);
  play->add_option("-s,--start", f.start, "Seconds skipped from the head of the recording")->check(CLI::NonNegativeNumber);
  play->add_flag("-l,--loop", f.loop, "Restart at the end");
  play->add_flag("--clock", f.clock, "Publish simulated time on /clock");
  play->add_option("--clock-hz", f.clock_hz, "Simulated clock publication rate")->check(CLI::PositiveNumber);
  play->add_option("--duration", f.duration, "Stop after this many wall seconds")->check(CLI::PositiveNumber);
  play->add_option("--sink", f.sink, "Transport: null, dir or tcp")->check(CLI::IsMember({"null", "dir", "tcp"}));
  play->add_option("--out-dir", f.out_dir, "Directory for the dir sink");
  play->add_option("--port", f.port, "TCP sink port (0 = ephemeral)")->check(CLI::Range(0, 65535));
  play->add_option("--bind", f.bind, "TCP sink bind address");
  play->add_option("--wait-clients", f.wait_clients, "Wait for this many TCP clients before starting");
  play->add_option("--follow", f.follow, "Pace playback by the clock of another player at host:port");
  play->add_option("--topic", f.topics, "Topic remap from:=to, or a new image topic name (repeatable)");

  auto* sweep = app.add_subcommand("sweep", "Benchmark a codec/crf/preset grid on a clip");
  sweep->add_option("--clip", f.clip, "Raw sequence manifest of the benchmark clip");
  sweep->add_option("--codec", f.codecs, "Codecs to sweep (repeatable or comma separated)")->delimiter(',');
  sweep->add_option("--crf", f.crf_range, "CRF range, e.g. 16-25");
  sweep->add_option("--preset", f.presets, "Presets, e.g. 5-8 or slow,medium");
  sweep->add_option("--metric", f.metric, "Quality metric: vmaf or psnr")->check(CLI::IsMember({"vmaf", "psnr"}));
  sweep->add_option("--floor", f.floor, "Quality floor for selection")->check(CLI::Range(0.0, 100.0));
  sweep->add_option("--budget-days", f.budget_days, "Full-dataset encode time budget in days")->check(CLI::PositiveNumber);
  sweep->add_option("--clip-budget", f.clip_budget, "Per-clip encode time budget in seconds")->check(CLI::PositiveNumber);
  sweep->add_option("-o,--output", f.output, "Report path (.csv or .md)");
  sweep->add_option("--format", f.format, "Report format: csv or md")->check(CLI::IsMember({"csv", "md"}));
  sweep->add_option("--keep-videos", f.keep_videos, "Directory to keep the encoded clips in");

  auto* subsample = app.add_subcommand("subsample", "Keep every n-th frame of a bundle and re-encode");
  subsample->add_option("video", f.input, "Bundle video")->required();
  subsample->add_option("--yaml", f.yaml, "Sidecar path (default: the video's .yaml sibling)");
  subsample->add_option("-n", f.n, "Keep every n-th frame")->required()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 20));
  subsample->add_option("-o,--output", f.output, "Output video path")->required();
  add_encode_options(subsample, f);

  auto* inspect = app.add_subcommand("inspect", "Summarize and validate a bundle");
  inspect->add_option("video", f.input, "Bundle video")->required();
  inspect->add_option("--yaml", f.yaml, "Sidecar path (default: the video's .yaml sibling)");
  inspect->add_flag("--no-probe", f.no_probe, "Only read the sidecar; do not decode the video");

  auto* estimate = app.add_subcommand("estimate", "Raw data rate and full-dataset extrapolation");
  estimate->add_option("--width", f.width, "Frame width")->check(CLI::PositiveNumber);
  estimate->add_option("--height", f.height, "Frame height")->check(CLI::PositiveNumber);
  estimate->add_option("--fps", f.fps, "Frames per second")->check(CLI::PositiveNumber);
  estimate->add_option("--bytes-per-pixel", f.bpp, "Bytes per pixel")->check(CLI::PositiveNumber);
  estimate->add_option("--streams", f.streams, "Full-rate streams")->check(CLI::NonNegativeNumber);
  estimate->add_option("--half-streams", f.half_streams, "Half-rate streams")->check(CLI::NonNegativeNumber);
  estimate->add_option("--duration", f.stream_duration, "Stream duration in seconds")->check(CLI::PositiveNumber);
  estimate->add_option("--clip-duration", f.clip_duration, "Benchmark clip duration in seconds")->check(CLI::PositiveNumber);
  estimate->add_option("--bitrate", f.bitrate, "Measured clip bitrate in kbps")->check(CLI::NonNegativeNumber);
  estimate->add_option("--clip-time", f.clip_time, "Measured clip encode time in seconds")->check(CLI::NonNegativeNumber);

  // Global options are accepted before and after the subcommand, and show up in every --help.
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) add_global_options(sub, f);

  if (!args.empty() && !args.front().starts_with("-") && !app.get_subcommand_no_throw(args.front()))
    throw UsageError(fmt::format("unknown subcommand '{}'", args.front()));

  // CLI11 wants argv order reversed when given a vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    throw HelpRequested(subs.empty() ? app.help() : subs.front()->help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  CliInvocation inv;
  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  for (auto cmd : {Subcommand::kConvert, Subcommand::kPlay, Subcommand::kSweep, Subcommand::kSubsample,
                   Subcommand::kInspect, Subcommand::kEstimate})
    if (to_string(cmd) == name) inv.subcommand = cmd;

  inv.global.verbosity = f.verbose - f.quiet;
  if (f.config) {
    inv.global.config = fs::path(*f.config);
    apply_config(*inv.global.config, inv);
  }
  if (f.workers) {
    inv.global.workers = *f.workers;
    inv.sweep.config.workers = *f.workers;
  }

  switch (inv.subcommand) {
    case Subcommand::kConvert: {
      auto& c = inv.convert;
      c.manifest = f.input;
      c.output = f.output;
      apply_encode_flags(f, c.params);
      c.keep_yuv = opt_path(f.keep_yuv);
      c.verify = !f.no_verify;
      break;
    }
    case Subcommand::kPlay: {
      auto& p = inv.play;
      p.video = f.input;
      p.sidecar = opt_path(f.yaml);
      set_if(f.rate, p.playback.rate);
      set_if(f.start, p.playback.start_offset_s);
      if (f.loop) p.playback.loop = true;
      if (f.clock) p.playback.clock_master = true;
      set_if(f.clock_hz, p.playback.clock_hz);
      if (f.duration) p.playback.max_wall_duration_s = *f.duration;
      if (f.sink) p.sink = parse_sink(*f.sink);
      if (f.out_dir) p.sink_dir = *f.out_dir;
      if (f.port) p.port = static_cast<std::uint16_t>(*f.port);
      set_if(f.bind, p.bind_address);
      set_if(f.wait_clients, p.wait_clients);
      p.follow = f.follow;
      for (const auto& t : f.topics) add_remap(p, t);
      if (p.follow && p.playback.clock_master) throw UsageError("--follow and --clock are mutually exclusive");
      validate_options(p.playback);
      break;
    }
    case Subcommand::kSweep: {
      auto& s = inv.sweep;
      if (f.clip) s.config.clip_manifest = *f.clip;
      if (!f.codecs.empty()) {
        s.config.codecs.clear();
        for (const auto& c : f.codecs) s.config.codecs.push_back(parse_codec(c));
      }
      if (f.crf_range) std::tie(s.config.crf_min, s.config.crf_max) = parse_int_range(*f.crf_range);
      if (f.presets) s.config.presets = parse_preset_list(*f.presets);
      set_if(f.metric, s.config.metric);
      set_if(f.floor, s.config.policy.vmaf_floor);
      set_if(f.budget_days, s.config.policy.time_budget_days);
      if (f.clip_budget) s.config.policy.clip_time_budget_s = *f.clip_budget;
      if (!f.output.empty()) s.output = fs::path(f.output);
      if (f.format) {
        s.format = *f.format == "md" ? ReportFormat::kMarkdown : ReportFormat::kCsv;
      } else if (s.output && (s.output->extension() == ".md" || s.output->extension() == ".markdown")) {
        s.format = ReportFormat::kMarkdown;
      }
      s.keep_videos = opt_path(f.keep_videos);
      if (s.config.crf_min < kMinCrf || s.config.crf_max > kMaxCrf || s.config.crf_min > s.config.crf_max)
        throw UsageError(fmt::format("--crf: range {}-{} outside [{}, {}]", s.config.crf_min, s.config.crf_max, kMinCrf, kMaxCrf));
      for (Codec c : s.config.codecs)
        for (const auto& preset : s.config.presets) validate_params({c, s.config.crf_min, preset});
      break;
    }
    case Subcommand::kSubsample: {
      auto& s = inv.subsample;
      s.video = f.input;
      s.sidecar = opt_path(f.yaml);
      s.n = *f.n;
      s.output = f.output;
      apply_encode_flags(f, s.params);
      break;
    }
    case Subcommand::kInspect:
      inv.inspect.video = f.input;
      inv.inspect.sidecar = opt_path(f.yaml);
      inv.inspect.probe = !f.no_probe;
      break;
    case Subcommand::kEstimate: {
      auto& e = inv.estimate;
      set_if(f.width, e.width);
      set_if(f.height, e.height);
      set_if(f.fps, e.fps);
      set_if(f.bpp, e.bytes_per_pixel);
      set_if(f.streams, e.model.full_rate_streams);
      set_if(f.half_streams, e.model.half_rate_streams);
      set_if(f.stream_duration, e.model.stream_duration_s);
      set_if(f.clip_duration, e.model.clip_duration_s);
      e.bitrate_kbps = f.bitrate;
      e.clip_time_s = f.clip_time;
      break;
    }
  }
  return inv;
}

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted = true; }

void require_file(const fs::path& p, std::string_view field) {
  if (!fs::is_regular_file(p)) throw ValidationError("missing-file", std::string(field), p.string(), "no such file");
}

fs::path sidecar_for(const fs::path& video, const std::optional<fs::path>& explicit_path) {
  auto p = explicit_path.value_or(sidecar_path_for(video));
  require_file(p, "sidecar");
  return p;
}

void require_tool(const CommandTemplate& tmpl, std::string_view role) {
  if (!executable_available(tmpl.executable))
    throw EnvironmentError(fmt::format("{} '{}' not found on PATH", role, tmpl.executable));
}

void print_bundle(std::ostream& out, const BundleResult& r) {
  fmt::print(out, "video: {}\nsidecar: {}\nframes: {}\nsize: {} bytes ({:.2f} MiB)\nbitrate: {:.1f} kbps\nencode time: {:.2f} s\n",
             r.video.string(), r.sidecar.string(), r.video_frames, r.encode.output_size,
             bytes_to_mib(static_cast<double>(r.encode.output_size)), r.encode.bitrate_kbps, r.encode.wall_time_s);
}

int do_convert(const CliInvocation& inv, std::ostream& out) {
  const auto& c = inv.convert;
  require_file(c.manifest, "manifest");
  require_tool(inv.tools.encoder(c.params.codec), "encoder");
  if (c.verify) require_tool(inv.tools.decoder, "decoder");
  print_bundle(out, convert_bundle(c.manifest, c.params, c.output, inv.tools, {c.keep_yuv, c.verify}));
  return 0;
}

int do_play(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const auto& p = inv.play;
  require_file(p.video, "video");
  require_tool(inv.tools.decoder, "decoder");
  ReplaySession session = load_bundle(p.video, sidecar_for(p.video, p.sidecar), inv.tools.decoder);

  PlaybackOptions options = p.playback;
  if (p.image_topic) options.remap[session.sidecar().image_topic] = *p.image_topic;

  std::unique_ptr<Sink> sink;
  TcpSink* tcp = nullptr;
  switch (p.sink) {
    case SinkKind::kNull: sink = std::make_unique<NullSink>(); break;
    case SinkKind::kDirectory: sink = std::make_unique<DirectorySink>(p.sink_dir); break;
    case SinkKind::kTcp: {
      auto t = std::make_unique<TcpSink>(p.port, p.bind_address);
      tcp = t.get();
      sink = std::move(t);
      break;
    }
  }
  if (tcp) {
    fmt::print(err, "tcp sink listening on {}:{}\n", p.bind_address, tcp->port());
    if (p.wait_clients > 0 && !tcp->wait_for_clients(p.wait_clients, std::chrono::seconds(60)))
      throw RuntimeFailure("no-clients", fmt::format("fewer than {} clients connected within 60 s", p.wait_clients));
  }

  std::unique_ptr<TcpClockFollower> follower;
  if (p.follow) {
    const auto colon = p.follow->rfind(':');
    if (colon == std::string::npos) throw UsageError(fmt::format("--follow: expected host:port, got '{}'", *p.follow));
    int port = 0;
    try {
      port = std::stoi(p.follow->substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError(fmt::format("--follow: bad port in '{}'", *p.follow));
    }
    follower = std::make_unique<TcpClockFollower>(p.follow->substr(0, colon), static_cast<std::uint16_t>(port));
  }

  g_interrupted = false;
  auto previous = std::signal(SIGINT, on_interrupt);
  Sink* sinks[] = {sink.get()};
  const auto summary = run_playback(session, options, sinks, follower.get(), &g_interrupted);
  std::signal(SIGINT, previous);

  fmt::print(out,
             "frames published: {}\nframes dropped: {}\ncamera_info published: {}\nclock ticks: {}\npasses: {}\n"
             "wall duration: {:.3f} s\njitter median/p95/max: {:.3f}/{:.3f}/{:.3f} ms\n",
             summary.frames_published, summary.frames_dropped, summary.camera_infos_published,
             summary.clock_ticks_published, summary.passes_completed, summary.wall_duration_s, summary.jitter_median_ms,
             summary.jitter_p95_ms, summary.jitter_max_ms);
  if (summary.abort_reason) {
    fmt::print(err, "playback aborted: {}\n", *summary.abort_reason);
    return exit_code_for(ErrorClass::kRuntime);
  }
  return 0;
}

int do_sweep(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const auto& s = inv.sweep;
  const auto& cfg = s.config;
  for (Codec c : cfg.codecs) require_tool(inv.tools.encoder(c), "encoder");
  require_tool(inv.tools.decoder, "decoder");
  if (cfg.metric == "vmaf") require_tool(inv.vmaf.command, "vmaf scorer");

  if (cfg.clip_manifest.empty()) throw UsageError("sweep: no clip given (--clip, or sweep.clip in --config)");
  require_file(cfg.clip_manifest, "clip");
  TempDir scratch("mp4bag-sweep");
  const fs::path truth = scratch / "clip.yuv";
  const SidecarDocument doc = write_ground_truth(cfg.clip_manifest, truth);

  SweepSetup setup;
  setup.tools = inv.tools;
  setup.scorer = cfg.metric == "vmaf" ? vmaf_scorer(inv.vmaf) : psnr_scorer();
  setup.model = cfg.model;
  if (cfg.clip_duration_from_clip) setup.model.clip_duration_s = static_cast<double>(doc.frames.size()) / doc.fps_nominal;
  setup.workers = cfg.workers;
  setup.output_dir = s.keep_videos;

  const auto grid = make_grid(cfg.codecs, cfg.crf_min, cfg.crf_max, cfg.presets);
  if (inv.global.verbosity > 0)
    fmt::print(err, "sweeping {} settings over {} frames ({:.2f} s)\n", grid.size(), doc.frames.size(),
               setup.model.clip_duration_s);
  const SweepResult result = run_sweep(grid, {truth, doc.width, doc.height, doc.fps_nominal}, truth, setup);
  for (const auto& f : result.failures)
    fmt::print(err, "failed: {} crf {} preset {}: {}\n", to_string(f.params.codec), f.params.crf, f.params.preset, f.message);

  const std::string report = render_report(result.records, s.format);
  if (s.output) {
    std::ofstream file(*s.output, std::ios::trunc);
    file << report;
    if (!file) throw IoError(s.output->string(), "cannot write report");
  } else {
    out << report;
  }

  try {
    const SweepRecord best = select_setting(result.records, cfg.policy);
    fmt::print(out, "selected: {} crf {} preset {} ({:.2f} MiB, {} {:.3f}, {:.2f} days, {:.1f} GB)\n",
               to_string(best.codec), best.crf, best.preset, bytes_to_mib(static_cast<double>(best.size_bytes)),
               cfg.metric, best.vmaf_mean, best.full_time_days, best.full_size_gb);
  } catch (const RuntimeFailure& e) {
    fmt::print(out, "selected: none ({})\n", e.what());
  }
  return result.failures.empty() ? 0 : exit_code_for(ErrorClass::kRuntime);
}

int do_subsample(const CliInvocation& inv, std::ostream& out) {
  const auto& s = inv.subsample;
  require_file(s.video, "video");
  require_tool(inv.tools.decoder, "decoder");
  require_tool(inv.tools.encoder(s.params.codec), "encoder");
  const auto r = subsample_bundle(s.video, sidecar_for(s.video, s.sidecar), s.n, s.params, s.output, inv.tools);
  print_bundle(out, r);
  fmt::print(out, "avg frame size: {:.2f} kB\n", avg_frame_size(r.encode.output_size, r.video_frames));
  return 0;
}

int do_inspect(const CliInvocation& inv, std::ostream& out) {
  const auto& a = inv.inspect;
  const SidecarDocument doc = load_sidecar(sidecar_for(a.video, a.sidecar));
  const double span = doc.last_stamp().to_seconds() - doc.first_stamp().to_seconds();
  fmt::print(out,
             "image topic: {}\ncamera_info topic: {}\nframe_id: {}\nsource encoding: {}\nsize: {}x{}\n"
             "fps nominal: {:.3f}\nframes: {}\nfirst stamp: {}\nlast stamp: {}\nspan: {:.3f} s\n",
             doc.image_topic, doc.camera_info_topic, doc.frame_id, doc.source_encoding, doc.width, doc.height,
             doc.fps_nominal, doc.frames.size(), to_string(doc.first_stamp()), to_string(doc.last_stamp()), span);
  if (fs::is_regular_file(a.video)) {
    const auto size = fs::file_size(a.video);
    const double duration = static_cast<double>(doc.frames.size()) / doc.fps_nominal;
    fmt::print(out, "video size: {} bytes ({:.2f} MiB)\nbitrate: {:.1f} kbps\navg frame size: {:.2f} kB\n", size,
               bytes_to_mib(static_cast<double>(size)), compute_bitrate(size, duration),
               avg_frame_size(size, doc.frames.size()));
  }
  if (!a.probe) return 0;
  require_tool(inv.tools.decoder, "decoder");
  const auto frames = probe_frame_count(a.video, doc.width, doc.height, inv.tools.decoder);
  const BundleReport report = validate_bundle(doc, static_cast<std::int64_t>(frames), doc.width, doc.height);
  fmt::print(out, "video frames: {}\nbundle: {}\n", frames, report.ok() ? "ok" : report.summary());
  return report.ok() ? 0 : exit_code_for(ErrorClass::kValidation);
}

int do_estimate(const CliInvocation& inv, std::ostream& out) {
  const auto& e = inv.estimate;
  const double rate = estimate_raw_rate(e.width, e.height, e.bytes_per_pixel, e.fps);
  fmt::print(out, "raw rate: {:.1f} MB/s\nraw per hour: {:.3f} TB\neffective streams: {:g}\n", rate / 1e6,
             rate * 3600 / 1e12, effective_streams(e.model));
  if (e.bitrate_kbps)
    fmt::print(out, "full size: {:.1f} GB\n", extrapolate_full_size(*e.bitrate_kbps, e.model));
  if (e.clip_time_s)
    fmt::print(out, "full encode time: {:.2f} days\n", extrapolate_full_time(*e.clip_time_s, e.model));
  return 0;
}

}  // namespace

int run_invocation(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  switch (inv.subcommand) {
    case Subcommand::kConvert: return do_convert(inv, out);
    case Subcommand::kPlay: return do_play(inv, out, err);
    case Subcommand::kSweep: return do_sweep(inv, out, err);
    case Subcommand::kSubsample: return do_subsample(inv, out);
    case Subcommand::kInspect: return do_inspect(inv, out);
    case Subcommand::kEstimate: return do_estimate(inv, out);
  }
  return exit_code_for(ErrorClass::kValidation);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_invocation(parse_cli_args(args), out, err);
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const UsageError& e) {
    fmt::print(err, "usage error: {}\nRun with --help for the accepted flags.\n", e.what());
    return exit_code_for(ErrorClass::kValidation);
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code_for(ErrorClass::kRuntime);
  }
}

}  // namespace mp4bag
