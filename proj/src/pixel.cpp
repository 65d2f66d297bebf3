#include "mp4bag/pixel.hpp"

#include <array>
#include <cmath>
#include <string>

#include "mp4bag/errors.hpp"

namespace mp4bag {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

constexpr Mat3 kRgbToYuv = {{
    {0.299, 0.587, 0.114},
    {-0.168736, -0.331264, 0.5},
    {0.5, -0.418688, -0.081312},
}};

constexpr Mat3 invert(const Mat3& m) {
  const double c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  const double c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  const double det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
  Mat3 inv{};
  inv[0][0] = c00 / det;
  inv[1][0] = c01 / det;
  inv[2][0] = c02 / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

constexpr Mat3 kYuvToRgb = invert(kRgbToYuv);

std::uint8_t round_clamp(double x) noexcept {
  const double r = std::floor(x + 0.5);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

// Reflect about the border sample; valid for one step outside [0, n).
int reflect(int i, int n) noexcept {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

void check_mosaic(int width, int height, std::size_t size) {
  if (width < 2 || width % 2 != 0) throw ValidationError("invalid-mosaic", "width", std::to_string(width), "must be even and >= 2");
  if (height < 2 || height % 2 != 0)
    throw ValidationError("invalid-mosaic", "height", std::to_string(height), "must be even and >= 2");
  const auto expected = static_cast<std::size_t>(width) * height;
  if (size != expected)
    throw ValidationError("invalid-mosaic", "data.length", std::to_string(size), "expected " + std::to_string(expected));
}

}  // namespace

BayerFrame::BayerFrame(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_mosaic(width_, height_, data_.size());
}

RgbFrame::RgbFrame(int width, int height)
    : width_(width), height_(height), data_(3 * static_cast<std::size_t>(width) * height) {}

RgbFrame::RgbFrame(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != 3 * static_cast<std::size_t>(width) * height)
    throw ValidationError("frame-size", "data.length", std::to_string(data_.size()),
                          "expected 3 x " + std::to_string(width) + " x " + std::to_string(height));
}

Yuv444Frame::Yuv444Frame(int width, int height)
    : width_(width), height_(height), data_(3 * static_cast<std::size_t>(width) * height) {}

Yuv444Frame::Yuv444Frame(int width, int height, std::vector<std::uint8_t> planes)
    : width_(width), height_(height), data_(std::move(planes)) {
  if (data_.size() != 3 * static_cast<std::size_t>(width) * height)
    throw ValidationError("frame-size", "planes.length", std::to_string(data_.size()),
                          "expected 3 x " + std::to_string(width) + " x " + std::to_string(height));
}

RgbFrame debayer_gbrg8(const BayerFrame& frame) {
  const int w = frame.width();
  const int h = frame.height();
  check_mosaic(w, h, frame.data().size());

  auto s = [&](int x, int y) -> unsigned { return frame.at(reflect(x, w), reflect(y, h)); };
  auto avg2 = [](unsigned a, unsigned b) { return static_cast<std::uint8_t>((a + b + 1) / 2); };
  auto avg4 = [](unsigned a, unsigned b, unsigned c, unsigned d) {
    return static_cast<std::uint8_t>((a + b + c + d + 2) / 4);
  };

  RgbFrame out(w, h);
  for (int y = 0; y < h; ++y) {
    const bool even_row = (y % 2) == 0;
    for (int x = 0; x < w; ++x) {
      const bool even_col = (x % 2) == 0;
      std::uint8_t* px = out.pixel(x, y);
      const auto here = static_cast<std::uint8_t>(s(x, y));
      if (even_row && even_col) {
        // G on a G/B row: R above/below, B left/right.
        px[0] = avg2(s(x, y - 1), s(x, y + 1));
        px[1] = here;
        px[2] = avg2(s(x - 1, y), s(x + 1, y));
      } else if (even_row) {
        // B site.
        px[0] = avg4(s(x - 1, y - 1), s(x + 1, y - 1), s(x - 1, y + 1), s(x + 1, y + 1));
        px[1] = avg4(s(x, y - 1), s(x, y + 1), s(x - 1, y), s(x + 1, y));
        px[2] = here;
      } else if (even_col) {
        // R site.
        px[0] = here;
        px[1] = avg4(s(x, y - 1), s(x, y + 1), s(x - 1, y), s(x + 1, y));
        px[2] = avg4(s(x - 1, y - 1), s(x + 1, y - 1), s(x - 1, y + 1), s(x + 1, y + 1));
      } else {
        // G on an R/G row: R left/right, B above/below.
        px[0] = avg2(s(x - 1, y), s(x + 1, y));
        px[1] = here;
        px[2] = avg2(s(x, y - 1), s(x, y + 1));
      }
    }
  }
  return out;
}

Yuv rgb_to_yuv(Rgb px) noexcept {
  const double r = px.r, g = px.g, b = px.b;
  const auto& m = kRgbToYuv;
  return {round_clamp(m[0][0] * r + m[0][1] * g + m[0][2] * b),
          round_clamp(128.0 + m[1][0] * r + m[1][1] * g + m[1][2] * b),
          round_clamp(128.0 + m[2][0] * r + m[2][1] * g + m[2][2] * b)};
}

Rgb yuv_to_rgb(Yuv px) noexcept {
  const double y = px.y, u = px.u - 128.0, v = px.v - 128.0;
  const auto& m = kYuvToRgb;
  return {round_clamp(m[0][0] * y + m[0][1] * u + m[0][2] * v),
          round_clamp(m[1][0] * y + m[1][1] * u + m[1][2] * v),
          round_clamp(m[2][0] * y + m[2][1] * u + m[2][2] * v)};
}

Yuv444Frame rgb_to_yuv444(const RgbFrame& frame) {
  Yuv444Frame out(frame.width(), frame.height());
  auto yp = out.y();
  auto up = out.u();
  auto vp = out.v();
  const auto src = frame.data();
  for (std::size_t i = 0; i < out.plane_size(); ++i) {
    const Yuv c = rgb_to_yuv({src[3 * i], src[3 * i + 1], src[3 * i + 2]});
    yp[i] = c.y;
    up[i] = c.u;
    vp[i] = c.v;
  }
  return out;
}

RgbFrame yuv444_to_rgb(const Yuv444Frame& frame) {
  RgbFrame out(frame.width(), frame.height());
  auto dst = out.data();
  const auto yp = frame.y();
  const auto up = frame.u();
  const auto vp = frame.v();
  for (std::size_t i = 0; i < frame.plane_size(); ++i) {
    const Rgb c = yuv_to_rgb({yp[i], up[i], vp[i]});
    dst[3 * i] = c.r;
    dst[3 * i + 1] = c.g;
    dst[3 * i + 2] = c.b;
  }
  return out;
}

}  // namespace mp4bag
