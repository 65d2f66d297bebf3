#include <doctest.h>

#include <sstream>

#include "mp4bag/cli.hpp"
#include "mp4bag/sweep.hpp"
#include "support.hpp"

using namespace mp4bag;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Config pointing every external tool at the stub scripts.
fs::path stub_config(const fs::path& dir, const std::string& extra = "") {
  const auto tools = testsupport::stub_toolset(dir);
  const auto enc = tools.encoder(Codec::kSvtAv1).executable;
  std::string yaml = "encoders:\n";
  for (const char* c : {"x264", "x265", "svtav1"})
    yaml += std::string("  ") + c + ":\n    executable: " + enc + "\n    args: ['{input}', '{output}', '{crf}', '{preset}']\n";
  yaml += "decoder:\n  executable: " + tools.decoder.executable + "\n  args: ['{input}', '{output}']\n" + extra;
  const auto p = dir / "config.yaml";
  testsupport::write_file(p, yaml);
  return p;
}

}  // namespace

TEST_CASE("play invocation parses rosbag-style flags") {
  const auto inv = parse_cli_args({"play", "bundle.mp4", "--rate", "2.0", "--clock"});
  CHECK(inv.subcommand == Subcommand::kPlay);
  CHECK(inv.play.video == "bundle.mp4");
  CHECK(inv.play.playback.rate == 2.0);
  CHECK(inv.play.playback.clock_master);
  CHECK_FALSE(inv.play.playback.loop);

  const auto more = parse_cli_args({"play", "b.mp4", "-s", "1.5", "-l", "--sink", "tcp", "--port", "0", "--topic",
                                    "/camera/camera_info:=/cam0/info", "--topic", "/cam0/image"});
  CHECK(more.play.playback.start_offset_s == 1.5);
  CHECK(more.play.playback.loop);
  CHECK(more.play.sink == SinkKind::kTcp);
  CHECK(more.play.port == 0);
  CHECK(more.play.playback.remap.at("/camera/camera_info") == "/cam0/info");
  CHECK(more.play.image_topic == "/cam0/image");
}

TEST_CASE("sweep grid flags") {
  const auto inv = parse_cli_args({"sweep", "--crf", "16-25", "--preset", "5-8", "--codec", "svtav1"});
  REQUIRE(inv.subcommand == Subcommand::kSweep);
  const auto& c = inv.sweep.config;
  CHECK(c.crf_min == 16);
  CHECK(c.crf_max == 25);
  CHECK(c.presets == std::vector<std::string>{"5", "6", "7", "8"});
  const auto grid = make_grid(c.codecs, c.crf_min, c.crf_max, c.presets);
  CHECK(grid.size() == 40);
  CHECK(grid.front() == EncodeParams{Codec::kSvtAv1, 16, "5"});
  CHECK(grid.back() == EncodeParams{Codec::kSvtAv1, 25, "8"});

  CHECK(parse_cli_args({"sweep", "-o", "r.md"}).sweep.format == ReportFormat::kMarkdown);
  CHECK(parse_cli_args({"sweep", "-o", "r.csv"}).sweep.format == ReportFormat::kCsv);
  CHECK_THROWS_AS(parse_cli_args({"sweep", "--crf", "40-60"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"sweep", "--codec", "svtav1", "--preset", "slow"}), Error);
}

TEST_CASE("usage errors") {
  CHECK_THROWS_AS(parse_cli_args({"frobnicate"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"play", "b.mp4", "--bogus"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"play", "b.mp4", "--rate", "0"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"play", "b.mp4", "--rate", "fast"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"play"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"convert", "m.yaml", "-o", "x.mp4", "--crf", "52"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"convert", "m.yaml"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"play", "b.mp4", "--follow", "h:1", "--clock"}), UsageError);
  CHECK_THROWS_AS(parse_cli_args({"play", "b.mp4", "--sink", "pigeon"}), UsageError);

  const auto r = cli({"frobnicate"});
  CHECK(r.code == 1);
  CHECK(r.err.find("frobnicate") != std::string::npos);
}

TEST_CASE("help lists every flag") {
  try {
    parse_cli_args({"play", "--help"});
    FAIL("expected help");
  } catch (const HelpRequested& h) {
    const std::string text = h.what();
    for (const char* flag : {"--rate", "--start", "--loop", "--clock", "--clock-hz", "--sink", "--topic", "--yaml",
                             "--duration", "--follow", "--config", "--workers"})
      CHECK_MESSAGE(text.find(flag) != std::string::npos, flag);
  }
  const auto r = cli({"estimate", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--half-streams") != std::string::npos);
}

TEST_CASE("config file sits between defaults and flags") {
  TempDir dir("cliconfig");
  const auto cfg = dir / "c.yaml";
  testsupport::write_file(cfg, "workers: 3\nplay:\n  rate: 4\n  loop: true\n  sink: dir\n  out_dir: out\nconvert:\n  codec: x265\n  crf: 30\n  preset: slow\n");

  auto inv = parse_cli_args({"play", "b.mp4", "--config", cfg.string()});
  CHECK(inv.global.workers == 3);
  CHECK(inv.play.playback.rate == 4.0);
  CHECK(inv.play.playback.loop);
  CHECK(inv.play.sink == SinkKind::kDirectory);
  CHECK(inv.play.sink_dir == dir / "out");

  inv = parse_cli_args({"play", "b.mp4", "--config", cfg.string(), "--rate", "0.5", "-j", "2"});
  CHECK(inv.play.playback.rate == 0.5);
  CHECK(inv.global.workers == 2);

  inv = parse_cli_args({"convert", "m.yaml", "-o", "x.mp4", "--config", cfg.string(), "--crf", "20"});
  CHECK(inv.convert.params == EncodeParams{Codec::kX265, 20, "slow"});

  inv = parse_cli_args({"convert", "m.yaml", "-o", "x.mp4"});
  CHECK(inv.convert.params == EncodeParams{});

  testsupport::write_file(dir / "bad.yaml", "play:\n  rate: [\n");
  CHECK_THROWS_AS(parse_cli_args({"play", "b.mp4", "--config", (dir / "bad.yaml").string()}), ParseError);
  CHECK(cli({"play", "b.mp4", "--config", (dir / "bad.yaml").string()}).code == 1);
}

TEST_CASE("estimate prints the raw rate and extrapolations") {
  const auto r = cli({"estimate", "--bitrate", "1000", "--clip-time", "60"});
  CHECK(r.code == 0);
  CHECK(r.out.find("raw rate: 902.4 MB/s") != std::string::npos);
  CHECK(r.out.find("effective streams: 14") != std::string::npos);
  CHECK(r.out.find("full size: 12.6 GB") != std::string::npos);  // 1000 kbps * 125 B/s * 14 * 7200 s
  CHECK(r.out.find("full encode time: 1.17 days") != std::string::npos);  // 60 s * 1680 / 86400
}

TEST_CASE("exit codes") {
  TempDir dir("cliexit");
  CHECK(cli({"inspect", (dir / "none.mp4").string()}).code == 1);

  // Missing external tool is an environment failure.
  const auto cfg = dir / "c.yaml";
  testsupport::write_file(cfg, "decoder:\n  executable: /nonexistent/decoder\n  args: ['{input}', '{output}']\n");
  const auto manifest = testsupport::make_sequence(dir.path(), 4, 4, 2, 10.0);
  const auto r = cli({"convert", manifest.string(), "-o", (dir / "x.mp4").string(), "--config", cfg.string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(dir / "x.mp4"));

  // Encoder that runs but fails is a runtime failure.
  const auto bad = testsupport::write_script(dir / "bad.sh", "exit 9");
  testsupport::write_file(cfg, "encoders:\n  svtav1:\n    executable: " + bad.string() +
                                   "\n    args: ['{input}', '{output}', '{crf}', '{preset}']\n");
  CHECK(cli({"convert", manifest.string(), "-o", (dir / "x.mp4").string(), "--config", cfg.string(), "--no-verify"}).code == 3);
  CHECK_FALSE(fs::exists(dir / "x.mp4"));
}

TEST_CASE("convert, inspect, subsample and play through stub tools") {
  TempDir dir("cliflow");
  const auto cfg = stub_config(dir.path());
  const auto manifest = testsupport::make_sequence(dir.path(), 12, 4, 2, 30.0);
  const auto video = dir / "b.mp4";

  auto r = cli({"convert", manifest.string(), "-o", video.string(), "--config", cfg.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(video));
  CHECK(fs::exists(dir / "b.yaml"));
  CHECK(r.out.find("frames: 12") != std::string::npos);

  r = cli({"inspect", video.string(), "--config", cfg.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("bundle: ok") != std::string::npos);
  CHECK(r.out.find("frame_id: cam0") != std::string::npos);

  r = cli({"subsample", video.string(), "-n", "3", "-o", (dir / "s.mp4").string(), "--config", cfg.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(load_sidecar(dir / "s.yaml").frames.size() == 4);

  r = cli({"play", video.string(), "--rate", "10", "--sink", "dir", "--out-dir", (dir / "replay").string(), "--config",
           cfg.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("frames published: 12") != std::string::npos);
  CHECK(fs::exists(dir / "replay" / "frames" / "000011.ppm"));

  // Pair mismatch: a video one frame short of its sidecar.
  auto raw = testsupport::read_file(video);
  testsupport::write_file(dir / "short.mp4", raw.substr(0, raw.size() - 24));
  r = cli({"inspect", (dir / "short.mp4").string(), "--yaml", (dir / "b.yaml").string(), "--config", cfg.string()});
  CHECK(r.code == 1);
  CHECK(r.out.find("frame count mismatch") != std::string::npos);
}

TEST_CASE("psnr sweep through stub tools") {
  TempDir dir("clisweep");
  const auto cfg = stub_config(dir.path());
  const auto manifest = testsupport::make_sequence(dir.path(), 6, 4, 2, 30.0);
  const auto report = dir / "r.csv";
  const auto r = cli({"sweep", "--clip", manifest.string(), "--codec", "x264", "--crf", "20-21", "--preset",
                      "fast,slow", "--metric", "psnr", "--floor", "50", "-o", report.string(), "--config", cfg.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto text = testsupport::read_file(report);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);  // header + 4 points
  CHECK(r.out.find("selected: x264 crf 2") != std::string::npos);
}
