#pragma once

// Transport-neutral record format for replayed messages.
//
// Every record is little-endian:
//
//   u32 magic        0x4741424D ("MBAG" as bytes on the wire)
//   u8  version      1
//   u8  kind         1 image, 2 camera_info, 3 clock
//   u16 reserved     0
//   u32 body_length  bytes that follow
//
// image body:        u8 topic_len, topic, u64 sec, u32 nsec, u8 frame_id_len,
//                    frame_id, u8 encoding (1 = rgb8), u32 width, u32 height,
//                    u32 step, u32 payload_len, payload
// camera_info body:  u8 topic_len, topic, u64 sec, u32 nsec, u8 frame_id_len,
//                    frame_id, u32 width, u32 height, u8 model_len, model,
//                    u32 d_count, f64 D[d_count], f64 K[9], f64 R[9], f64 P[12]
// clock body:        u64 sec, u32 nsec

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mp4bag/pixel.hpp"
#include "mp4bag/sidecar.hpp"
#include "mp4bag/stamp.hpp"

namespace mp4bag {

inline constexpr std::uint32_t kWireMagic = 0x4741424D;
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kWireHeaderSize = 12;
// Image record size excluding topic, frame_id and payload bytes.
inline constexpr std::size_t kImageRecordOverhead = 43;
inline constexpr std::size_t kClockRecordSize = 24;
inline constexpr std::size_t kMaxWireString = 255;

enum class MessageKind : std::uint8_t { kImage = 1, kCameraInfo = 2, kClock = 3 };
enum class ImageEncoding : std::uint8_t { kRgb8 = 1 };

struct ImageMessage {
  std::string topic;
  FrameStamp stamp;
  std::string frame_id;
  ImageEncoding encoding = ImageEncoding::kRgb8;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t step = 0;
  std::vector<std::uint8_t> data;

  friend bool operator==(const ImageMessage&, const ImageMessage&) = default;
};

struct CameraInfoMessage {
  std::string topic;
  FrameStamp stamp;
  std::string frame_id;
  CameraInfo info;

  friend bool operator==(const CameraInfoMessage&, const CameraInfoMessage&) = default;
};

struct ClockMessage {
  FrameStamp stamp;

  friend bool operator==(const ClockMessage&, const ClockMessage&) = default;
};

using WireMessage = std::variant<ImageMessage, CameraInfoMessage, ClockMessage>;

// Throws ValidationError when topic or frame_id exceed 255 bytes.
std::vector<std::uint8_t> serialize(const WireMessage& message);

std::vector<std::uint8_t> frame_to_wire(const RgbFrame& frame, const FrameMetadata& meta, std::string_view topic);
std::vector<std::uint8_t> camera_info_to_wire(const CameraInfo& info, const FrameMetadata& meta, std::string_view topic);
std::vector<std::uint8_t> clock_to_wire(const FrameStamp& stamp);

// Parses exactly one record. Throws ParseError on any malformed or trailing byte.
WireMessage parse_wire(std::span<const std::uint8_t> bytes);

// Total record length announced by a header, once at least kWireHeaderSize
// bytes are available; nullopt before that. Throws ParseError on a bad magic.
std::optional<std::size_t> wire_record_length(std::span<const std::uint8_t> prefix);

}  // namespace mp4bag
