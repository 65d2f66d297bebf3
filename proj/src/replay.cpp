#include "mp4bag/replay.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <limits>

#include "mp4bag/encode.hpp"
#include "mp4bag/errors.hpp"

namespace mp4bag {

namespace {

using Clock = std::chrono::steady_clock;
using std::chrono::nanoseconds;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

std::int64_t seconds_to_ns(double s) { return std::llround(s * 1e9); }

}  // namespace

std::string PlaybackOptions::topic_for(const std::string& original) const {
  const auto it = remap.find(original);
  return it == remap.end() ? original : it->second;
}

void validate_options(const PlaybackOptions& o) {
  if (!positive_finite(o.rate)) throw ValidationError("rate", "rate", fmt::format("{}", o.rate), "must be > 0");
  if (o.clock_master && !positive_finite(o.clock_hz))
    throw ValidationError("clock-hz", "clock_hz", fmt::format("{}", o.clock_hz), "must be > 0");
  if (!std::isfinite(o.start_offset_s) || o.start_offset_s < 0.0)
    throw ValidationError("start-offset", "start_offset", fmt::format("{}", o.start_offset_s), "must be >= 0");
  if (o.decode_ahead == 0) throw ValidationError("decode-ahead", "decode_ahead", "0", "must be >= 1");
  if (o.max_wall_duration_s && !positive_finite(*o.max_wall_duration_s))
    throw ValidationError("duration", "duration", fmt::format("{}", *o.max_wall_duration_s), "must be > 0");
}

YuvFileFrameSource::YuvFileFrameSource(const std::filesystem::path& path, int width, int height)
    : reader_(path, width, height) {}

RgbFrame YuvFileFrameSource::read(std::size_t index) { return yuv444_to_rgb(reader_.read(index)); }

ReplaySession::ReplaySession(SidecarDocument doc, std::unique_ptr<FrameSource> source)
    : doc_(std::move(doc)), source_(std::move(source)) {
  validate_sidecar(doc_);
  if (!source_) throw ValidationError("bundle-invalid", "source", "null");
  const auto report = validate_bundle(doc_, static_cast<std::int64_t>(source_->frame_count()), source_->width(),
                                      source_->height());
  if (!report.ok()) throw ValidationError("bundle-invalid", "video", "decoded frames", report.summary());
}

ReplaySession load_bundle(const std::filesystem::path& video, const std::filesystem::path& sidecar,
                          const CommandTemplate& decoder) {
  for (const auto& p : {video, sidecar})
    if (!std::filesystem::is_regular_file(p)) throw ValidationError("missing-file", "path", p.string(), "no such file");
  auto doc = load_sidecar(sidecar);
  TempDir scratch("mp4bag-play");
  const auto yuv = scratch / "decoded.yuv";
  decode_to_yuv444(video, yuv, doc.width, doc.height, decoder);
  auto source = std::make_unique<YuvFileFrameSource>(yuv, doc.width, doc.height);
  ReplaySession session(std::move(doc), std::move(source));
  session.adopt(std::move(scratch));
  return session;
}

std::size_t Schedule::frame_events() const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [](const auto& e) { return e.kind == EventKind::kFrame; }));
}

Schedule plan_schedule(const SidecarDocument& doc, const PlaybackOptions& options) {
  validate_options(options);
  if (doc.frames.empty()) throw ValidationError("empty-frames", "frames", "0");

  const std::int64_t first = doc.first_stamp().to_nanoseconds();
  const std::int64_t last = doc.last_stamp().to_nanoseconds();
  const std::int64_t start = first + seconds_to_ns(options.start_offset_s);
  if (start > last)
    throw ValidationError("empty-schedule", "start_offset", fmt::format("{}", options.start_offset_s),
                          fmt::format("recording spans {:.9f} s", (last - first) * 1e-9));

  const auto deadline = [&](std::int64_t sim) {
    return nanoseconds(std::llround(static_cast<double>(sim - start) / options.rate));
  };

  Schedule s;
  s.window_start = FrameStamp::from_nanoseconds(start);
  s.window_end = doc.last_stamp();
  for (std::size_t i = 0; i < doc.frames.size(); ++i) {
    const auto t = doc.frames[i].stamp;
    if (t.to_nanoseconds() < start) continue;
    s.events.push_back({t, EventKind::kFrame, i, deadline(t.to_nanoseconds())});
    s.events.push_back({t, EventKind::kCameraInfo, i, deadline(t.to_nanoseconds())});
  }
  if (options.clock_master) {
    const auto period = std::max<std::int64_t>(1, std::llround(1e9 / options.clock_hz));
    for (std::int64_t t = start; t <= last; t += period)
      s.events.push_back({FrameStamp::from_nanoseconds(t), EventKind::kClockTick, 0, deadline(t)});
  }
  std::stable_sort(s.events.begin(), s.events.end(), [](const ScheduleEvent& a, const ScheduleEvent& b) {
    if (a.sim_time != b.sim_time) return a.sim_time < b.sim_time;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });

  const double frame_period = doc.fps_nominal > 0 ? 1.0 / doc.fps_nominal : 0.0;
  s.pass_duration =
      nanoseconds(std::llround((static_cast<double>(last - start) + frame_period * 1e9) / options.rate));
  return s;
}

void ManualClock::set(FrameStamp t) {
  std::lock_guard lock(mutex_);
  now_ = t;
}

void ManualClock::finish() {
  std::lock_guard lock(mutex_);
  finished_ = true;
}

std::optional<FrameStamp> ManualClock::now() {
  std::lock_guard lock(mutex_);
  return now_;
}

bool ManualClock::finished() {
  std::lock_guard lock(mutex_);
  return finished_;
}

TcpClockFollower::TcpClockFollower(const std::string& host, std::uint16_t port) : subscriber_(host, port) {
  reader_ = std::thread([this] {
    while (!stop_) {
      std::optional<WireMessage> msg;
      try {
        msg = subscriber_.receive(std::chrono::milliseconds(50));
      } catch (const Error&) {
        break;
      }
      if (!msg) {
        if (subscriber_.closed()) break;
        continue;
      }
      if (const auto* c = std::get_if<ClockMessage>(&*msg)) {
        std::lock_guard lock(mutex_);
        now_ = c->stamp;
      }
    }
    finished_ = true;
  });
}

TcpClockFollower::~TcpClockFollower() {
  stop_ = true;
  if (reader_.joinable()) reader_.join();
}

std::optional<FrameStamp> TcpClockFollower::now() {
  std::lock_guard lock(mutex_);
  return now_;
}

bool TcpClockFollower::finished() { return finished_; }

namespace {

// Bounded single-producer single-consumer buffer of decoded frames, keyed by
// the global frame-event sequence number.
class DecodeAhead {
 public:
  DecodeAhead(FrameSource& source, std::vector<std::size_t> order, bool loop, std::size_t capacity)
      : source_(source), order_(std::move(order)), loop_(loop), capacity_(capacity) {
    worker_ = std::thread([this] { produce(); });
  }

  ~DecodeAhead() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  void wait_ready(Clock::time_point until) {
    std::unique_lock lock(mutex_);
    cv_.wait_until(lock, until, [&] { return !queue_.empty() || error_ || done_; });
  }

  // Frame for sequence `seq`, waiting at most until `until`. nullopt means underrun.
  std::optional<RgbFrame> take(std::size_t seq, Clock::time_point until) {
    std::unique_lock lock(mutex_);
    wanted_ = std::max(wanted_, seq);
    cv_.notify_all();
    for (;;) {
      while (!queue_.empty() && queue_.front().first < seq) queue_.pop_front();
      if (!queue_.empty() && queue_.front().first == seq) {
        auto frame = std::move(queue_.front().second);
        queue_.pop_front();
        wanted_ = seq + 1;
        cv_.notify_all();
        return frame;
      }
      if (error_) std::rethrow_exception(error_);
      if (cv_.wait_until(lock, until) == std::cv_status::timeout) {
        // A late arrival of this frame is discarded on the next take.
        wanted_ = seq + 1;
        cv_.notify_all();
        return std::nullopt;
      }
    }
  }

 private:
  void produce() {
    std::size_t next = 0;
    for (;;) {
      std::size_t index;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return stop_ || queue_.size() < capacity_; });
        if (stop_) return;
        next = std::max(next, wanted_);  // skip frames the scheduler already gave up on
        if (!loop_ && next >= order_.size()) {
          done_ = true;
          cv_.notify_all();
          return;
        }
        index = order_[next % order_.size()];
      }
      try {
        auto frame = source_.read(index);
        std::lock_guard lock(mutex_);
        queue_.emplace_back(next, std::move(frame));
      } catch (...) {
        std::lock_guard lock(mutex_);
        error_ = std::current_exception();
        cv_.notify_all();
        return;
      }
      cv_.notify_all();
      ++next;
    }
  }

  FrameSource& source_;
  std::vector<std::size_t> order_;
  bool loop_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::pair<std::size_t, RgbFrame>> queue_;
  std::size_t wanted_ = 0;
  bool stop_ = false;
  bool done_ = false;
  std::exception_ptr error_;
  std::thread worker_;
};

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

bool cancelled(const std::atomic<bool>* cancel) { return cancel && cancel->load(); }

// Sleeps in short slices so cancellation stays responsive.
void sleep_until(Clock::time_point t, const std::atomic<bool>* cancel) {
  constexpr auto kSlice = std::chrono::milliseconds(50);
  while (!cancelled(cancel)) {
    const auto now = Clock::now();
    if (now >= t) return;
    std::this_thread::sleep_until(t - now > kSlice * 2 ? now + kSlice : t);
  }
}

}  // namespace

PlaybackSummary run_playback(ReplaySession& session, const PlaybackOptions& options, std::span<Sink* const> sinks,
                             ClockSource* follower, const std::atomic<bool>* cancel) {
  const auto& doc = session.sidecar();
  const Schedule schedule = plan_schedule(doc, options);

  std::vector<std::size_t> order;
  for (const auto& e : schedule.events)
    if (e.kind == EventKind::kFrame) order.push_back(e.index);

  const std::string image_topic = options.topic_for(doc.image_topic);
  const std::string info_topic = options.topic_for(doc.camera_info_topic);
  const auto max_wall = options.max_wall_duration_s
                            ? std::optional<nanoseconds>(nanoseconds(seconds_to_ns(*options.max_wall_duration_s)))
                            : std::nullopt;

  PlaybackSummary summary;
  std::vector<double> jitter_ms;
  DecodeAhead decoder(session.source(), order, options.loop, options.decode_ahead);
  // The clock starts once the first frame is decoded, so startup cost is not counted as drops.
  decoder.wait_ready(Clock::now() + std::chrono::seconds(5));

  const auto start = Clock::now();
  std::size_t seq = 0;
  bool stopped = false;

  const auto publish = [&](const auto& msg) {
    for (Sink* sink : sinks) sink->publish(msg);
  };

  // Follower mode: wait until the external clock reaches `t`. False when it ended first.
  const auto await_sim = [&](const FrameStamp& t) {
    for (;;) {
      if (cancelled(cancel)) return false;
      if (const auto now = follower->now(); now && *now >= t) return true;
      if (follower->finished()) return false;
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
  };

  try {
    for (std::size_t pass = 0; !stopped; ++pass) {
      const auto pass_offset = schedule.pass_duration * static_cast<std::int64_t>(pass);
      for (std::size_t i = 0; i < schedule.events.size(); ++i) {
        const auto& ev = schedule.events[i];
        const auto offset = pass_offset + ev.wall_deadline;
        if ((max_wall && offset >= *max_wall) || cancelled(cancel)) {
          stopped = true;
          break;
        }
        const auto deadline = start + offset;
        if (follower) {
          if (!await_sim(ev.sim_time)) {
            stopped = true;
            break;
          }
        } else {
          sleep_until(deadline, cancel);
          if (cancelled(cancel)) {
            stopped = true;
            break;
          }
        }

        const auto& entry = doc.frames[ev.index];
        switch (ev.kind) {
          case EventKind::kClockTick:
            publish(ClockMessage{ev.sim_time});
            ++summary.clock_ticks_published;
            break;
          case EventKind::kFrame: {
            // Never wait on decode past the next later event's deadline.
            auto next_offset = pass_offset + schedule.pass_duration;
            for (std::size_t j = i + 1; j < schedule.events.size(); ++j)
              if (schedule.events[j].wall_deadline > ev.wall_deadline) {
                next_offset = pass_offset + schedule.events[j].wall_deadline;
                break;
              }
            auto limit = start + std::max(next_offset, offset);
            if (follower) limit = Clock::now() + std::chrono::seconds(5);
            auto frame = decoder.take(seq++, limit);
            if (!frame) {
              ++summary.frames_dropped;
              break;
            }
            ImageMessage msg;
            msg.topic = image_topic;
            msg.stamp = entry.stamp;
            msg.frame_id = doc.frame_id;
            msg.width = static_cast<std::uint32_t>(frame->width());
            msg.height = static_cast<std::uint32_t>(frame->height());
            msg.step = 3 * msg.width;
            msg.data.assign(frame->data().begin(), frame->data().end());
            if (!follower)
              jitter_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - deadline).count());
            publish(msg);
            ++summary.frames_published;
            break;
          }
          case EventKind::kCameraInfo:
            publish(CameraInfoMessage{info_topic, entry.stamp, doc.frame_id, doc.camera_info});
            ++summary.camera_infos_published;
            break;
        }
      }
      if (stopped) break;
      // Hold the trailing frame period so a pass lasts exactly pass_duration.
      if (!follower) {
        auto pass_end = start + pass_offset + schedule.pass_duration;
        if (max_wall) pass_end = std::min(pass_end, start + *max_wall);
        sleep_until(pass_end, cancel);
      }
      if (cancelled(cancel)) break;
      ++summary.passes_completed;
      if (!options.loop) break;
    }
    for (Sink* sink : sinks) sink->flush();
  } catch (const std::exception& e) {
    summary.abort_reason = e.what();
  }

  summary.wall_duration_s = std::chrono::duration<double>(Clock::now() - start).count();
  summary.jitter_median_ms = percentile(jitter_ms, 0.5);
  summary.jitter_p95_ms = percentile(jitter_ms, 0.95);
  summary.jitter_max_ms = jitter_ms.empty() ? 0.0 : *std::max_element(jitter_ms.begin(), jitter_ms.end());
  return summary;
}

}  // namespace mp4bag
