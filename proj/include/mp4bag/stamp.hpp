#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace mp4bag {

inline constexpr std::int64_t kNanosPerSecond = 1'000'000'000;

// Recorded capture time. Totally ordered by (sec, nsec).
struct FrameStamp {
  std::int64_t sec = 0;
  std::int64_t nsec = 0;

  static constexpr FrameStamp from_nanoseconds(std::int64_t ns) noexcept {
    return {ns / kNanosPerSecond, ns % kNanosPerSecond};
  }
  static FrameStamp from_seconds(double seconds);

  constexpr std::int64_t to_nanoseconds() const noexcept { return sec * kNanosPerSecond + nsec; }
  constexpr double to_seconds() const noexcept { return static_cast<double>(sec) + static_cast<double>(nsec) * 1e-9; }
  constexpr bool valid() const noexcept { return sec >= 0 && nsec >= 0 && nsec < kNanosPerSecond; }

  friend constexpr auto operator<=>(const FrameStamp&, const FrameStamp&) = default;
};

std::string to_string(const FrameStamp& stamp);

struct FrameMetadata {
  FrameStamp stamp;
  std::int64_t seq = 0;
  std::string frame_id;

  friend bool operator==(const FrameMetadata&, const FrameMetadata&) = default;
};

}  // namespace mp4bag
