#include "mp4bag/wire.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>

#include "mp4bag/errors.hpp"

namespace mp4bag {

namespace {

static_assert(std::endian::native == std::endian::little, "wire encoding assumes a little-endian host");

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }

  void put_string(std::string_view s, const char* field) {
    if (s.size() > kMaxWireString)
      throw ValidationError("string-too-long", field, fmt::format("{} bytes", s.size()),
                            fmt::format("limit is {} bytes", kMaxWireString));
    put<std::uint8_t>(static_cast<std::uint8_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }

  void put_bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  void put_stamp(const FrameStamp& s) {
    put<std::uint64_t>(static_cast<std::uint64_t>(s.sec));
    put<std::uint32_t>(static_cast<std::uint32_t>(s.nsec));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get(const char* field) {
    need(sizeof(T), field);
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string(const char* field) {
    const auto n = get<std::uint8_t>(field);
    need(n, field);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::vector<std::uint8_t> get_bytes(std::size_t n, const char* field) {
    need(n, field);
    std::vector<std::uint8_t> v(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return v;
  }

  FrameStamp get_stamp() {
    const auto sec = get<std::uint64_t>("sec");
    const auto nsec = get<std::uint32_t>("nsec");
    if (nsec >= kNanosPerSecond) throw ParseError("nsec", fmt::format("{} out of range", nsec));
    if (sec > static_cast<std::uint64_t>(INT64_MAX / kNanosPerSecond)) throw ParseError("sec", "out of range");
    return {static_cast<std::int64_t>(sec), static_cast<std::int64_t>(nsec)};
  }

  bool done() const noexcept { return pos_ == in_.size(); }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n, const char* field) const {
    if (in_.size() - pos_ < n) throw ParseError(field, fmt::format("truncated record at byte {}", pos_));
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void check_stamp(const FrameStamp& s) {
  if (!s.valid()) throw ValidationError("invalid-stamp", "stamp", to_string(s));
}

MessageKind kind_of(const WireMessage& m) {
  if (std::holds_alternative<ImageMessage>(m)) return MessageKind::kImage;
  if (std::holds_alternative<CameraInfoMessage>(m)) return MessageKind::kCameraInfo;
  return MessageKind::kClock;
}

void write_body(Writer& w, const ImageMessage& m) {
  check_stamp(m.stamp);
  w.put_string(m.topic, "topic");
  w.put_stamp(m.stamp);
  w.put_string(m.frame_id, "frame_id");
  w.put<std::uint8_t>(static_cast<std::uint8_t>(m.encoding));
  w.put<std::uint32_t>(m.width);
  w.put<std::uint32_t>(m.height);
  w.put<std::uint32_t>(m.step);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.data.size()));
  w.put_bytes(m.data);
}

void write_body(Writer& w, const CameraInfoMessage& m) {
  check_stamp(m.stamp);
  w.put_string(m.topic, "topic");
  w.put_stamp(m.stamp);
  w.put_string(m.frame_id, "frame_id");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.info.width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.info.height));
  w.put_string(m.info.distortion_model, "distortion_model");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.info.D.size()));
  for (double v : m.info.D) w.put<double>(v);
  for (double v : m.info.K) w.put<double>(v);
  for (double v : m.info.R) w.put<double>(v);
  for (double v : m.info.P) w.put<double>(v);
}

void write_body(Writer& w, const ClockMessage& m) {
  check_stamp(m.stamp);
  w.put_stamp(m.stamp);
}

ImageMessage read_image(Reader& r) {
  ImageMessage m;
  m.topic = r.get_string("topic");
  m.stamp = r.get_stamp();
  m.frame_id = r.get_string("frame_id");
  const auto enc = r.get<std::uint8_t>("encoding");
  if (enc != static_cast<std::uint8_t>(ImageEncoding::kRgb8)) throw ParseError("encoding", fmt::format("unknown code {}", enc));
  m.encoding = ImageEncoding::kRgb8;
  m.width = r.get<std::uint32_t>("width");
  m.height = r.get<std::uint32_t>("height");
  m.step = r.get<std::uint32_t>("step");
  const auto n = r.get<std::uint32_t>("payload_len");
  m.data = r.get_bytes(n, "payload");
  return m;
}

CameraInfoMessage read_camera_info(Reader& r) {
  CameraInfoMessage m;
  m.topic = r.get_string("topic");
  m.stamp = r.get_stamp();
  m.frame_id = r.get_string("frame_id");
  m.info.width = static_cast<int>(r.get<std::uint32_t>("width"));
  m.info.height = static_cast<int>(r.get<std::uint32_t>("height"));
  m.info.distortion_model = r.get_string("distortion_model");
  const auto d = r.get<std::uint32_t>("d_count");
  if (d > 64) throw ParseError("d_count", fmt::format("{} distortion coefficients", d));
  m.info.D.resize(d);
  for (auto& v : m.info.D) v = r.get<double>("D");
  for (auto& v : m.info.K) v = r.get<double>("K");
  for (auto& v : m.info.R) v = r.get<double>("R");
  for (auto& v : m.info.P) v = r.get<double>("P");
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize(const WireMessage& message) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  w.put<std::uint32_t>(kWireMagic);
  w.put<std::uint8_t>(kWireVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(kind_of(message)));
  w.put<std::uint16_t>(0);
  w.put<std::uint32_t>(0);  // patched below
  std::visit([&](const auto& m) { write_body(w, m); }, message);
  const auto body = static_cast<std::uint32_t>(out.size() - kWireHeaderSize);
  std::memcpy(out.data() + 8, &body, sizeof body);
  return out;
}

std::vector<std::uint8_t> frame_to_wire(const RgbFrame& frame, const FrameMetadata& meta, std::string_view topic) {
  ImageMessage m;
  m.topic = topic;
  m.stamp = meta.stamp;
  m.frame_id = meta.frame_id;
  m.width = static_cast<std::uint32_t>(frame.width());
  m.height = static_cast<std::uint32_t>(frame.height());
  m.step = 3 * m.width;
  m.data.assign(frame.data().begin(), frame.data().end());
  return serialize(m);
}

std::vector<std::uint8_t> camera_info_to_wire(const CameraInfo& info, const FrameMetadata& meta, std::string_view topic) {
  return serialize(CameraInfoMessage{std::string(topic), meta.stamp, meta.frame_id, info});
}

std::vector<std::uint8_t> clock_to_wire(const FrameStamp& stamp) { return serialize(ClockMessage{stamp}); }

std::optional<std::size_t> wire_record_length(std::span<const std::uint8_t> prefix) {
  if (prefix.size() < kWireHeaderSize) return std::nullopt;
  Reader r(prefix.first(kWireHeaderSize));
  if (r.get<std::uint32_t>("magic") != kWireMagic) throw ParseError("magic", "not a record header");
  r.get<std::uint8_t>("version");
  r.get<std::uint8_t>("kind");
  r.get<std::uint16_t>("reserved");
  return kWireHeaderSize + r.get<std::uint32_t>("body_length");
}

WireMessage parse_wire(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.get<std::uint32_t>("magic");
  if (magic != kWireMagic) throw ParseError("magic", fmt::format("0x{:08x}", magic));
  const auto version = r.get<std::uint8_t>("version");
  if (version != kWireVersion) throw ParseError("version", std::to_string(version));
  const auto kind = r.get<std::uint8_t>("kind");
  if (r.get<std::uint16_t>("reserved") != 0) throw ParseError("reserved", "must be zero");
  const auto body = r.get<std::uint32_t>("body_length");
  if (bytes.size() != kWireHeaderSize + body)
    throw ParseError("body_length", fmt::format("header announces {} bytes, record has {}", body, bytes.size() - kWireHeaderSize));

  WireMessage out;
  switch (static_cast<MessageKind>(kind)) {
    case MessageKind::kImage:
      out = read_image(r);
      break;
    case MessageKind::kCameraInfo:
      out = read_camera_info(r);
      break;
    case MessageKind::kClock:
      out = ClockMessage{r.get_stamp()};
      break;
    default:
      throw ParseError("kind", fmt::format("unknown message kind {}", kind));
  }
  if (!r.done()) throw ParseError("body", fmt::format("{} trailing bytes", bytes.size() - r.position()));
  return out;
}

}  // namespace mp4bag
