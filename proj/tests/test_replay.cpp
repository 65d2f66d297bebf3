#include <doctest.h>

#include <algorithm>
#include <thread>

#include "mp4bag/errors.hpp"
#include "mp4bag/replay.hpp"
#include "mp4bag/sinks.hpp"
#include "support.hpp"

using namespace mp4bag;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

SidecarDocument three_frames() {
  auto doc = testsupport::make_sidecar(3, 4, 4, 10.0);
  for (int i = 0; i < 3; ++i) doc.frames[i].stamp = FrameStamp::from_nanoseconds(100'000'000LL * i);
  return doc;
}

std::vector<std::int64_t> frame_deadlines_ms(const Schedule& s) {
  std::vector<std::int64_t> out;
  for (const auto& e : s.events)
    if (e.kind == EventKind::kFrame) out.push_back(std::chrono::duration_cast<std::chrono::milliseconds>(e.wall_deadline).count());
  return out;
}

class FailingSink : public Sink {
 public:
  void publish(const ImageMessage&) override {
    if (++n_ == 3) throw IoError("sink", "disk full");
  }
  void publish(const CameraInfoMessage&) override {}
  void publish(const ClockMessage&) override {}

 private:
  int n_ = 0;
};

}  // namespace

TEST_CASE("schedule deadlines follow rate and offset") {
  const auto doc = three_frames();
  PlaybackOptions o;
  CHECK(frame_deadlines_ms(plan_schedule(doc, o)) == std::vector<std::int64_t>{0, 100, 200});
  o.rate = 2.0;
  CHECK(frame_deadlines_ms(plan_schedule(doc, o)) == std::vector<std::int64_t>{0, 50, 100});
  o.rate = 1.0;
  o.start_offset_s = 0.15;
  const auto s = plan_schedule(doc, o);
  REQUIRE(s.frame_events() == 1);
  CHECK(s.events.front().index == 2);
  CHECK(s.events.front().wall_deadline == 50ms);
  CHECK(s.window_start == FrameStamp{0, 150'000'000});

  o.start_offset_s = 0.25;
  try {
    plan_schedule(doc, o);
    FAIL("expected empty-schedule");
  } catch (const ValidationError& e) {
    CHECK(e.kind() == "empty-schedule");
  }
}

TEST_CASE("schedule pairs camera_info with frames and orders clock ticks first") {
  const auto doc = three_frames();
  PlaybackOptions o;
  o.clock_master = true;
  const auto s = plan_schedule(doc, o);
  std::size_t ticks = 0;
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& e = s.events[i];
    if (i > 0) {
      CHECK(s.events[i - 1].sim_time <= e.sim_time);
      CHECK(s.events[i - 1].wall_deadline <= e.wall_deadline);
    }
    if (e.kind == EventKind::kClockTick) {
      ++ticks;
      CHECK(e.sim_time >= s.window_start);
      CHECK(e.sim_time <= doc.last_stamp());
    }
    if (e.kind == EventKind::kFrame) {
      REQUIRE(i + 1 < s.events.size());
      CHECK(s.events[i + 1].kind == EventKind::kCameraInfo);
      CHECK(s.events[i + 1].sim_time == e.sim_time);
      CHECK(s.events[i - 1].kind == EventKind::kClockTick);  // tick at the same instant goes first
    }
  }
  CHECK(ticks == 21);  // 0 .. 200 ms at 100 Hz
  CHECK(s.pass_duration == 300ms);
  CHECK(plan_schedule(doc, o).events == s.events);
}

TEST_CASE("playback options are validated") {
  const auto doc = three_frames();
  PlaybackOptions o;
  o.rate = 0;
  CHECK_THROWS_AS(plan_schedule(doc, o), ValidationError);
  o = {};
  o.clock_master = true;
  o.clock_hz = -1;
  CHECK_THROWS_AS(plan_schedule(doc, o), ValidationError);
  o = {};
  o.start_offset_s = -1;
  CHECK_THROWS_AS(plan_schedule(doc, o), ValidationError);
  o = {};
  o.decode_ahead = 0;
  CHECK_THROWS_AS(plan_schedule(doc, o), ValidationError);
  o = {};
  o.clock_hz = 0;  // irrelevant without the clock
  CHECK_NOTHROW(plan_schedule(doc, o));
}

TEST_CASE("playback delivers recorded stamps independent of rate") {
  auto session = testsupport::synthetic_session(30, 30.0);
  NullSink a, b;
  Sink* sa[] = {&a};
  Sink* sb[] = {&b};
  PlaybackOptions o;
  o.rate = 4.0;
  const auto s1 = run_playback(session, o, sa);
  o.rate = 8.0;
  const auto s2 = run_playback(session, o, sb);
  CHECK(s1.frames_published == 30);
  CHECK(s1.camera_infos_published == 30);
  CHECK(s1.frames_dropped == 0);
  CHECK(s1.wall_duration_s == doctest::Approx(0.25).epsilon(0.2));
  CHECK(s2.wall_duration_s == doctest::Approx(0.125).epsilon(0.3));
  CHECK(a.image_stamps() == b.image_stamps());
  CHECK(a.payload_hashes() == b.payload_hashes());
  for (std::size_t i = 0; i < 30; ++i) CHECK(a.image_stamps()[i] == session.sidecar().frames[i].stamp);
  CHECK_FALSE(s1.abort_reason);
}

TEST_CASE("loop mode repeats identical passes") {
  auto session = testsupport::synthetic_session(5, 10.0);  // 0.5 s per pass
  NullSink sink;
  Sink* sinks[] = {&sink};
  PlaybackOptions o;
  o.loop = true;
  o.rate = 2.0;
  o.max_wall_duration_s = 0.75;
  const auto s = run_playback(session, o, sinks);
  CHECK(s.passes_completed == 3);
  REQUIRE(sink.images() == 15);
  for (std::size_t i = 0; i < 15; ++i) CHECK(sink.image_stamps()[i] == session.sidecar().frames[i % 5].stamp);
  CHECK(s.wall_duration_s == doctest::Approx(0.75).epsilon(0.15));
}

TEST_CASE("clock master publishes bounded nondecreasing sim time") {
  auto session = testsupport::synthetic_session(5, 10.0);
  NullSink sink;
  Sink* sinks[] = {&sink};
  PlaybackOptions o;
  o.clock_master = true;
  o.rate = 4.0;
  run_playback(session, o, sinks);
  REQUIRE(sink.clocks() == 41);
  CHECK(std::is_sorted(sink.clock_stamps().begin(), sink.clock_stamps().end()));
  CHECK(sink.clock_stamps().front() == session.first_stamp());
  CHECK(sink.clock_stamps().back() == session.last_stamp());
}

TEST_CASE("slow decoding counts drops and keeps going") {
  auto session = testsupport::synthetic_session(20, 100.0, 8, 8, 40ms);
  NullSink sink;
  Sink* sinks[] = {&sink};
  const auto s = run_playback(session, {}, sinks);
  CHECK(s.frames_dropped > 0);
  CHECK(s.frames_published + s.frames_dropped == 20);
  CHECK(s.camera_infos_published == 20);
  CHECK(std::is_sorted(sink.image_stamps().begin(), sink.image_stamps().end()));
}

TEST_CASE("a failing sink aborts with a summary") {
  auto session = testsupport::synthetic_session(10, 100.0);
  FailingSink bad;
  Sink* sinks[] = {&bad};
  const auto s = run_playback(session, {}, sinks);
  REQUIRE(s.abort_reason);
  CHECK(s.abort_reason->find("disk full") != std::string::npos);
  CHECK(s.frames_published == 2);
}

TEST_CASE("cancellation stops playback") {
  auto session = testsupport::synthetic_session(100, 10.0);
  NullSink sink;
  Sink* sinks[] = {&sink};
  std::atomic<bool> cancel{false};
  std::jthread stopper([&] {
    std::this_thread::sleep_for(150ms);
    cancel = true;
  });
  const auto s = run_playback(session, {}, sinks, nullptr, &cancel);
  CHECK(s.wall_duration_s < 1.0);
  CHECK(s.frames_published < 100);
}

TEST_CASE("follower playback is paced by an external clock") {
  auto session = testsupport::synthetic_session(5, 10.0);
  NullSink sink;
  Sink* sinks[] = {&sink};
  ManualClock clock;
  const auto t0 = session.first_stamp().to_nanoseconds();
  std::jthread driver([&] {
    for (int i = 0; i <= 2; ++i) {
      clock.set(FrameStamp::from_nanoseconds(t0 + 100'000'000LL * i));
      std::this_thread::sleep_for(20ms);
    }
    clock.finish();
  });
  const auto s = run_playback(session, {}, sinks, &clock);
  CHECK(s.frames_published == 3);  // the clock stopped at the third stamp
  CHECK(sink.image_stamps().back() == session.sidecar().frames[2].stamp);
}

TEST_CASE("directory sink layout") {
  TempDir dir("dirsink");
  auto session = testsupport::synthetic_session(3, 50.0, 4, 2);
  DirectorySink sink(dir / "out");
  Sink* sinks[] = {&sink};
  run_playback(session, {}, sinks);
  CHECK(fs::exists(dir / "out" / "frames" / "000002.ppm"));
  const auto ppm = testsupport::read_file(dir / "out" / "frames" / "000000.ppm");
  CHECK(ppm.rfind("P6\n4 2\n255\n", 0) == 0);
  CHECK(ppm.size() == 11 + 24);
  const auto csv = testsupport::read_file(dir / "out" / "stamps.csv");
  const auto s0 = session.sidecar().frames[0].stamp;
  CHECK(csv.find("0," + std::to_string(s0.sec) + "," + std::to_string(s0.nsec) + ",cam0\n") != std::string::npos);
}

TEST_CASE("tcp sink streams records to subscribers") {
  TcpSink sink(0);
  REQUIRE(sink.port() != 0);
  TcpSubscriber sub("127.0.0.1", sink.port());
  REQUIRE(sink.wait_for_clients(1, 2s));
  auto session = testsupport::synthetic_session(4, 100.0, 2, 2);
  Sink* sinks[] = {&sink};
  PlaybackOptions o;
  o.remap["/camera/image_raw"] = "/cam0/image";
  run_playback(session, o, sinks);
  std::vector<ImageMessage> images;
  while (auto m = sub.receive(500ms)) {
    if (auto* img = std::get_if<ImageMessage>(&*m)) images.push_back(*img);
    if (images.size() == 4) break;
  }
  REQUIRE(images.size() == 4);
  CHECK(images[0].topic == "/cam0/image");
  CHECK(images[3].stamp == session.sidecar().frames[3].stamp);
  const auto f1 = session.source().read(1);
  CHECK(std::equal(images[1].data.begin(), images[1].data.end(), f1.data().begin(), f1.data().end()));
}

TEST_CASE("tcp clock follower tracks a master") {
  TcpSink master(0);
  TcpClockFollower follower("127.0.0.1", master.port());
  REQUIRE(master.wait_for_clients(1, 2s));
  CHECK_FALSE(follower.now());
  master.publish(ClockMessage{{7, 5}});
  for (int i = 0; i < 200 && !follower.now(); ++i) std::this_thread::sleep_for(5ms);
  REQUIRE(follower.now());
  CHECK(*follower.now() == FrameStamp{7, 5});
}

TEST_CASE("load_bundle checks the pair") {
  TempDir dir("load");
  const auto tools = testsupport::stub_toolset(dir.path());
  const auto manifest = testsupport::make_sequence(dir.path(), 30, 4, 2, 30.0);
  const auto b = convert_bundle(manifest, {}, dir / "b.mp4", tools);

  auto session = load_bundle(b.video, b.sidecar, tools.decoder);
  CHECK(session.frame_count() == 30);

  // Sidecar with 30 stamps against a 29-frame video.
  const auto frame = 3 * 4 * 2;
  const auto raw = testsupport::read_file(b.video);
  testsupport::write_file(dir / "short.mp4", raw.substr(0, raw.size() - frame));
  try {
    load_bundle(dir / "short.mp4", b.sidecar, tools.decoder);
    FAIL("expected a bundle error");
  } catch (const ValidationError& e) {
    CHECK(e.kind() == "bundle-invalid");
  }

  testsupport::write_file(dir / "bad.yaml", "format_version: [1\n");
  CHECK_THROWS_AS(load_bundle(b.video, dir / "bad.yaml", tools.decoder), ParseError);
  CHECK_THROWS_AS(load_bundle(dir / "missing.mp4", b.sidecar, tools.decoder), ValidationError);
}
