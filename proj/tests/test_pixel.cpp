#include <doctest.h>

#include <random>

#include "mp4bag/errors.hpp"
#include "mp4bag/pixel.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mp4bag;

TEST_CASE("debayer matches the brute-force oracle on seeded frames") {
  std::mt19937 rng(2024);
  const std::pair<int, int> sizes[] = {{2, 2}, {4, 4}, {6, 6}, {8, 10}};
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const auto [w, h] = sizes[i % 4];
    BayerFrame f(w, h, testsupport::random_bytes(rng, static_cast<std::size_t>(w) * h));
    REQUIRE(debayer_gbrg8(f) == oracle::debayer(f));
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("debayer of a constant mosaic is constant") {
  for (int v = 0; v < 256; v += 17) {
    BayerFrame f(6, 4, std::vector<std::uint8_t>(24, static_cast<std::uint8_t>(v)));
    const auto rgb = debayer_gbrg8(f);
    for (auto b : rgb.data()) REQUIRE(b == v);
  }
}

TEST_CASE("debayer keeps native samples and averages neighbours") {
  // 2x2: G=10 B=20 / R=30 G=40
  BayerFrame f(2, 2, {10, 20, 30, 40});
  const auto rgb = debayer_gbrg8(f);
  const auto* p = rgb.pixel(0, 0);
  CHECK(p[1] == 10);
  CHECK(p[0] == 30);  // reflected rows give two copies of R
  CHECK(p[2] == 20);
  const auto* q = rgb.pixel(1, 1);
  CHECK(q[1] == 40);
  CHECK(rgb.pixel(0, 1)[1] == 25);  // (10 + 40 + 10 + 40 + 2) / 4
}

TEST_CASE("invalid mosaics are rejected") {
  CHECK_THROWS_AS(BayerFrame(3, 2, std::vector<std::uint8_t>(6)), ValidationError);
  CHECK_THROWS_AS(BayerFrame(2, 2, std::vector<std::uint8_t>(3)), ValidationError);
  CHECK_THROWS_AS(BayerFrame(0, 0, {}), ValidationError);
  try {
    BayerFrame(5, 4, std::vector<std::uint8_t>(20));
  } catch (const ValidationError& e) {
    CHECK(e.kind() == "invalid-mosaic");
  }
}

TEST_CASE("colour conversion analytic values") {
  CHECK(rgb_to_yuv({255, 255, 255}) == Yuv{255, 128, 128});
  CHECK(rgb_to_yuv({0, 0, 0}) == Yuv{0, 128, 128});
  CHECK(rgb_to_yuv({255, 0, 0}) == Yuv{76, 85, 255});
  CHECK(yuv_to_rgb({255, 128, 128}) == Rgb{255, 255, 255});
  CHECK(yuv_to_rgb({0, 128, 128}) == Rgb{0, 0, 0});
}

TEST_CASE("forward then inverse stays within 2 per channel") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> d(0, 255);
  int worst = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const Rgb in{static_cast<std::uint8_t>(d(rng)), static_cast<std::uint8_t>(d(rng)), static_cast<std::uint8_t>(d(rng))};
    const Rgb out = yuv_to_rgb(rgb_to_yuv(in));
    worst = std::max({worst, std::abs(in.r - out.r), std::abs(in.g - out.g), std::abs(in.b - out.b)});
  }
  CHECK(worst <= 2);
}

TEST_CASE("frame conversion is planar and invertible within tolerance") {
  std::mt19937 rng(5);
  RgbFrame f(4, 2, testsupport::random_bytes(rng, 24));
  const auto yuv = rgb_to_yuv444(f);
  REQUIRE(yuv.bytes().size() == 24);
  const Yuv px = rgb_to_yuv({f.pixel(1, 1)[0], f.pixel(1, 1)[1], f.pixel(1, 1)[2]});
  CHECK(yuv.y()[5] == px.y);
  CHECK(yuv.u()[5] == px.u);
  CHECK(yuv.v()[5] == px.v);
  const auto back = yuv444_to_rgb(yuv);
  for (std::size_t i = 0; i < 24; ++i) CHECK(std::abs(int(back.data()[i]) - int(f.data()[i])) <= 2);
}
