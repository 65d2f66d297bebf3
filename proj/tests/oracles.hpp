#pragma once

// Independent reference implementations, written from the definitions rather
// than from the library code.

#include <cmath>
#include <cstdint>
#include <vector>

#include "mp4bag/pixel.hpp"

namespace oracle {

// 0 = R, 1 = G, 2 = B for a GBRG mosaic.
inline int mosaic_color(int x, int y) {
  if (y % 2 == 0) return x % 2 == 0 ? 1 : 2;
  return x % 2 == 0 ? 0 : 1;
}

inline int reflect(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

// Each missing channel averages the same-colored samples of the 3x3
// neighbourhood that sit closest to the centre, rounding half up.
inline mp4bag::RgbFrame debayer(const mp4bag::BayerFrame& f) {
  const int w = f.width(), h = f.height();
  mp4bag::RgbFrame out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        if (mosaic_color(x, y) == c) {
          out.pixel(x, y)[c] = f.at(x, y);
          continue;
        }
        int best = 100, sum = 0, count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int sx = reflect(x + dx, w), sy = reflect(y + dy, h);
            if (mosaic_color(sx, sy) != c) continue;
            const int d = dx * dx + dy * dy;
            if (d < best) {
              best = d;
              sum = 0;
              count = 0;
            }
            if (d == best) {
              sum += f.at(sx, sy);
              ++count;
            }
          }
        }
        out.pixel(x, y)[c] = static_cast<std::uint8_t>((sum + count / 2) / count);
      }
    }
  }
  return out;
}

// Mean squared error over every sample, then 10*log10(255^2 / mse).
inline double psnr(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  double se = 0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  const double mse = se / static_cast<double>(a.size());
  return mse == 0 ? 100.0 : 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace oracle
