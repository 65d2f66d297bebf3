#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mp4bag {

// Single-channel 8-bit GBRG mosaic, row-major.
// Even rows: G B G B ...   Odd rows: R G R G ...
class BayerFrame {
 public:
  BayerFrame() = default;
  // Throws ValidationError("invalid-mosaic") on odd or < 2 dimensions, or a size mismatch.
  BayerFrame(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Interleaved R,G,B, 8 bits per channel.
class RgbFrame {
 public:
  RgbFrame() = default;
  RgbFrame(int width, int height);
  RgbFrame(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }
  std::uint8_t* pixel(int x, int y) { return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return data_.data() + 3 * (static_cast<std::size_t>(y) * width_ + x);
  }

  friend bool operator==(const RgbFrame&, const RgbFrame&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Planar 4:4:4, stored contiguously as Y plane, U plane, V plane.
class Yuv444Frame {
 public:
  Yuv444Frame() = default;
  Yuv444Frame(int width, int height);
  Yuv444Frame(int width, int height, std::vector<std::uint8_t> planes);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  std::span<const std::uint8_t> y() const noexcept { return plane(0); }
  std::span<const std::uint8_t> u() const noexcept { return plane(1); }
  std::span<const std::uint8_t> v() const noexcept { return plane(2); }
  std::span<std::uint8_t> y() noexcept { return plane(0); }
  std::span<std::uint8_t> u() noexcept { return plane(1); }
  std::span<std::uint8_t> v() noexcept { return plane(2); }

  // All three planes back to back, as written to a raw yuv444p stream.
  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  friend bool operator==(const Yuv444Frame&, const Yuv444Frame&) = default;

 private:
  std::span<const std::uint8_t> plane(int i) const noexcept {
    return std::span<const std::uint8_t>(data_).subspan(i * plane_size(), plane_size());
  }
  std::span<std::uint8_t> plane(int i) noexcept { return std::span<std::uint8_t>(data_).subspan(i * plane_size(), plane_size()); }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Yuv {
  std::uint8_t y, u, v;
  friend bool operator==(const Yuv&, const Yuv&) = default;
};

/// Bilinear demosaic of a GBRG mosaic.
///
/// The native channel at every site is copied. Each missing channel is the
/// round-half-up average of the nearest same-color samples: 2 taps for R/B at
/// green sites, 4 taps (cross or diagonal) at red and blue sites. Coordinates
/// outside the frame reflect about the border sample (-1 -> 1, W -> W-2),
/// which preserves the mosaic color parity.
RgbFrame debayer_gbrg8(const BayerFrame& frame);

// Full-range BT.601, rounded half up, clamped to [0, 255].
Yuv rgb_to_yuv(Rgb px) noexcept;
// Exact inverse of the forward matrix, rounded half up and clamped.
Rgb yuv_to_rgb(Yuv px) noexcept;

Yuv444Frame rgb_to_yuv444(const RgbFrame& frame);
RgbFrame yuv444_to_rgb(const Yuv444Frame& frame);

}  // namespace mp4bag
