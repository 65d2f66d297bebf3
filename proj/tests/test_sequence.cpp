#include <doctest.h>

#include "mp4bag/errors.hpp"
#include "mp4bag/sequence.hpp"
#include "support.hpp"

using namespace mp4bag;
namespace fs = std::filesystem;

TEST_CASE("packed sequence reads back in order with its stamps") {
  TempDir dir("seq-test");
  const auto manifest = testsupport::make_sequence(dir.path(), 5, 4, 2, 15.0);
  auto reader = open_sequence(manifest);
  REQUIRE(reader.size() == 5);
  const auto stamps = testsupport::regular_stamps(5, 15.0);
  std::ifstream raw(dir / "frames.raw", std::ios::binary);
  for (std::size_t i = 0; i < 5; ++i) {
    auto f = reader.next();
    REQUIRE(f);
    CHECK(f->meta.stamp == stamps[i]);
    CHECK(f->meta.seq == static_cast<std::int64_t>(i));
    CHECK(f->meta.frame_id == "cam0");
    std::vector<std::uint8_t> expect(8);
    raw.read(reinterpret_cast<char*>(expect.data()), 8);
    CHECK(std::equal(expect.begin(), expect.end(), f->frame.data().begin()));
  }
  CHECK_FALSE(reader.next());
}

TEST_CASE("directory layout resolves per-frame files") {
  TempDir dir("seq-dir");
  fs::create_directories(dir / "raw");
  testsupport::write_file(dir / "raw" / "a.bin", std::string(4, '\x05'));
  testsupport::write_file(dir / "raw" / "b.bin", std::string(4, '\x09'));
  testsupport::write_file(dir / "m.yaml",
                          "pixel_format: bayer_gbrg8\nwidth: 2\nheight: 2\ndirectory: raw\nframes:\n"
                          "  - {stamp: {sec: 1, nsec: 0}, file: a.bin}\n"
                          "  - {stamp: {sec: 1, nsec: 500000000}, file: b.bin}\n");
  auto reader = open_sequence(dir / "m.yaml");
  CHECK(reader.next()->frame.at(0, 0) == 5);
  CHECK(reader.next()->frame.at(1, 1) == 9);
  const auto doc = sidecar_from_manifest(reader.manifest());
  CHECK(doc.fps_nominal == doctest::Approx(2.0));
  CHECK(doc.frames[1].seq == 1);
}

TEST_CASE("sequence errors") {
  TempDir dir("seq-err");
  const std::string head = "pixel_format: bayer_gbrg8\nwidth: 2\nheight: 2\npacked: f.raw\n";
  testsupport::write_file(dir / "f.raw", std::string(4, '\0'));

  testsupport::write_file(dir / "order.yaml", head + "frames:\n  - {stamp: {sec: 2, nsec: 0}}\n  - {stamp: {sec: 1, nsec: 0}}\n");
  CHECK_THROWS_AS(open_sequence(dir / "order.yaml"), ValidationError);

  // Two frames declared, one frame of data.
  testsupport::write_file(dir / "short.yaml", head + "frames:\n  - {stamp: {sec: 1, nsec: 0}}\n  - {stamp: {sec: 2, nsec: 0}}\n");
  try {
    open_sequence(dir / "short.yaml");
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.locator()).find("#1") != std::string::npos);
  }

  testsupport::write_file(dir / "fmt.yaml", "pixel_format: rgb8\nwidth: 2\nheight: 2\npacked: f.raw\nframes: [{stamp: {sec: 1, nsec: 0}}]\n");
  CHECK_THROWS_AS(load_manifest(dir / "fmt.yaml"), ValidationError);

  testsupport::write_file(dir / "odd.yaml", "pixel_format: bayer_gbrg8\nwidth: 3\nheight: 2\npacked: f.raw\nframes: [{stamp: {sec: 1, nsec: 0}}]\n");
  CHECK_THROWS_AS(load_manifest(dir / "odd.yaml"), ValidationError);
}

TEST_CASE("manifest save and load round trip") {
  TempDir dir("seq-rt");
  const auto path = testsupport::make_sequence(dir.path(), 3, 2, 2, 10.0);
  const auto m = load_manifest(path);
  save_manifest(m, dir / "copy.yaml");
  const auto again = load_manifest(dir / "copy.yaml");
  CHECK(again.source == m.source);
  REQUIRE(again.entries.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.entries[i].stamp == m.entries[i].stamp);
}

TEST_CASE("yuv444 stream writer and reader agree") {
  TempDir dir("yuv");
  std::mt19937 rng(3);
  std::vector<Yuv444Frame> frames;
  for (int i = 0; i < 4; ++i) frames.emplace_back(6, 2, testsupport::random_bytes(rng, 36));
  CHECK(write_yuv444_stream(frames, dir / "s.yuv") == 4 * 36);
  CHECK(yuv444_frame_bytes(6, 2) == 36);
  Yuv444StreamReader reader(dir / "s.yuv", 6, 2);
  CHECK(reader.frame_count() == 4);
  CHECK(reader.read(2) == frames[2]);
  CHECK(read_yuv444_stream(dir / "s.yuv", 6, 2) == frames);
}
