#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mp4bag/pixel.hpp"
#include "mp4bag/process.hpp"
#include "mp4bag/sequence.hpp"
#include "mp4bag/sidecar.hpp"
#include "mp4bag/sinks.hpp"

namespace mp4bag {

inline constexpr std::string_view kClockTopic = "/clock";

struct PlaybackOptions {
  double rate = 1.0;            // wall speed multiplier
  double start_offset_s = 0.0;  // skipped from the head of the recording
  bool loop = false;
  bool clock_master = false;  // publish simulated time
  double clock_hz = 100.0;
  std::map<std::string, std::string> remap;  // original topic -> published topic
  std::optional<double> max_wall_duration_s;  // stop after this much wall time
  std::size_t decode_ahead = 64;

  std::string topic_for(const std::string& original) const;
};

// Throws ValidationError for rate <= 0, clock_hz <= 0 with clock_master,
// negative start offset or decode_ahead == 0.
void validate_options(const PlaybackOptions& options);

// Random-access decoded frames of a bundle.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t frame_count() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual RgbFrame read(std::size_t index) = 0;
};

// Frames from a raw yuv444p file, converted to RGB on read.
class YuvFileFrameSource : public FrameSource {
 public:
  YuvFileFrameSource(const std::filesystem::path& path, int width, int height);

  std::size_t frame_count() const override { return reader_.frame_count(); }
  int width() const override { return reader_.width(); }
  int height() const override { return reader_.height(); }
  RgbFrame read(std::size_t index) override;

 private:
  Yuv444StreamReader reader_;
};

class ReplaySession {
 public:
  // Throws ValidationError("bundle-invalid") when the source disagrees with
  // the sidecar in frame count or dimensions.
  ReplaySession(SidecarDocument doc, std::unique_ptr<FrameSource> source);

  const SidecarDocument& sidecar() const noexcept { return doc_; }
  FrameSource& source() noexcept { return *source_; }
  std::size_t frame_count() const noexcept { return doc_.frames.size(); }
  FrameStamp first_stamp() const { return doc_.first_stamp(); }
  FrameStamp last_stamp() const { return doc_.last_stamp(); }

  // Keeps a scratch directory (the decoded stream) alive with the session.
  void adopt(TempDir dir) { scratch_ = std::move(dir); }

 private:
  SidecarDocument doc_;
  std::unique_ptr<FrameSource> source_;
  std::optional<TempDir> scratch_;
};

// Parses the sidecar, decodes the video to a scratch yuv444p stream and checks
// the pair with validate_bundle.
ReplaySession load_bundle(const std::filesystem::path& video, const std::filesystem::path& sidecar,
                          const CommandTemplate& decoder);

enum class EventKind { kClockTick = 0, kFrame = 1, kCameraInfo = 2 };

struct ScheduleEvent {
  FrameStamp sim_time;
  EventKind kind = EventKind::kFrame;
  std::size_t index = 0;  // frame index; unused for clock ticks
  std::chrono::nanoseconds wall_deadline{0};  // from the start of a pass

  friend bool operator==(const ScheduleEvent&, const ScheduleEvent&) = default;
};

struct Schedule {
  std::vector<ScheduleEvent> events;  // sorted by sim_time, clock < frame < camera_info on ties
  FrameStamp window_start;
  FrameStamp window_end;
  // Wall length of one pass including one trailing frame period; loop passes are this far apart.
  std::chrono::nanoseconds pass_duration{0};

  std::size_t frame_events() const;
};

// Pure. Frame events at every stamp >= first + start_offset, each followed by
// a camera_info event at the same stamp; clock ticks every 1/clock_hz of sim
// time across [window_start, last stamp] when clock_master. Wall deadline =
// (sim_time - window_start) / rate. Throws ValidationError("empty-schedule")
// when the offset skips every frame.
Schedule plan_schedule(const SidecarDocument& doc, const PlaybackOptions& options);

// External simulated time for follower playback.
class ClockSource {
 public:
  virtual ~ClockSource() = default;
  // Latest simulated time seen, nullopt before the first tick.
  virtual std::optional<FrameStamp> now() = 0;
  // No further ticks will arrive.
  virtual bool finished() = 0;
};

// Test/driver clock set by hand.
class ManualClock : public ClockSource {
 public:
  void set(FrameStamp t);
  void finish();
  std::optional<FrameStamp> now() override;
  bool finished() override;

 private:
  std::mutex mutex_;
  std::optional<FrameStamp> now_;
  bool finished_ = false;
};

// Follows clock records from a TcpSink served by a clock-master player.
class TcpClockFollower : public ClockSource {
 public:
  TcpClockFollower(const std::string& host, std::uint16_t port);
  ~TcpClockFollower() override;

  std::optional<FrameStamp> now() override;
  bool finished() override;

 private:
  TcpSubscriber subscriber_;
  std::mutex mutex_;
  std::optional<FrameStamp> now_;
  std::atomic<bool> finished_{false};
  std::atomic<bool> stop_{false};
  std::thread reader_;
};

struct PlaybackSummary {
  std::size_t frames_published = 0;
  std::size_t camera_infos_published = 0;
  std::size_t clock_ticks_published = 0;
  std::size_t frames_dropped = 0;
  std::size_t passes_completed = 0;
  double wall_duration_s = 0.0;
  // Delivery error (dispatch time minus deadline) over frame events, in ms.
  double jitter_median_ms = 0.0;
  double jitter_p95_ms = 0.0;
  double jitter_max_ms = 0.0;
  std::optional<std::string> abort_reason;  // set when a sink failed
};

// Dispatches the schedule to the sinks in real time (or paced by `follower`).
// One producer thread decodes ahead into a bounded queue; a frame not decoded
// by the following event's deadline is counted dropped. Messages carry the
// recorded stamps regardless of rate. Setting `*cancel` stops playback at the
// next event.
PlaybackSummary run_playback(ReplaySession& session, const PlaybackOptions& options, std::span<Sink* const> sinks,
                             ClockSource* follower = nullptr, const std::atomic<bool>* cancel = nullptr);

}  // namespace mp4bag
