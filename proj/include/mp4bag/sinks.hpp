#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mp4bag/wire.hpp"

namespace mp4bag {

// Receives replayed messages. Invoked serially from the playback scheduler;
// an exception aborts playback.
class Sink {
 public:
  virtual ~Sink() = default;
  virtual void publish(const ImageMessage& msg) = 0;
  virtual void publish(const CameraInfoMessage& msg) = 0;
  virtual void publish(const ClockMessage& msg) = 0;
  virtual void flush() {}
};

// Discards payloads; keeps counts and the delivered stamps for inspection.
class NullSink : public Sink {
 public:
  void publish(const ImageMessage& msg) override;
  void publish(const CameraInfoMessage& msg) override;
  void publish(const ClockMessage& msg) override;

  std::size_t images() const noexcept { return image_stamps_.size(); }
  std::size_t camera_infos() const noexcept { return camera_info_count_; }
  std::size_t clocks() const noexcept { return clock_stamps_.size(); }
  const std::vector<FrameStamp>& image_stamps() const noexcept { return image_stamps_; }
  const std::vector<FrameStamp>& clock_stamps() const noexcept { return clock_stamps_; }
  // Checksum of every image payload, in delivery order.
  const std::vector<std::uint64_t>& payload_hashes() const noexcept { return payload_hashes_; }

 private:
  std::vector<FrameStamp> image_stamps_;
  std::vector<FrameStamp> clock_stamps_;
  std::vector<std::uint64_t> payload_hashes_;
  std::size_t camera_info_count_ = 0;
};

// Writes `frames/NNNNNN.ppm` (binary P6) and `stamps.csv` under a directory.
class DirectorySink : public Sink {
 public:
  explicit DirectorySink(const std::filesystem::path& root);

  void publish(const ImageMessage& msg) override;
  void publish(const CameraInfoMessage&) override {}
  void publish(const ClockMessage&) override {}
  void flush() override;

 private:
  std::filesystem::path root_;
  std::ofstream stamps_;
  std::size_t index_ = 0;
};

// Serves the record stream to every connected TCP client. Clients that fail
// a write are dropped; publishing never blocks on accept.
class TcpSink : public Sink {
 public:
  // Port 0 picks an ephemeral port; see port().
  explicit TcpSink(std::uint16_t port, const std::string& bind_address = "127.0.0.1");
  ~TcpSink() override;
  TcpSink(const TcpSink&) = delete;
  TcpSink& operator=(const TcpSink&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::size_t client_count() const;
  // Blocks until `n` clients are connected or the timeout expires.
  bool wait_for_clients(std::size_t n, std::chrono::milliseconds timeout) const;

  void publish(const ImageMessage& msg) override;
  void publish(const CameraInfoMessage& msg) override;
  void publish(const ClockMessage& msg) override;

 private:
  void send_record(const std::vector<std::uint8_t>& record);
  void accept_loop();

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  mutable std::mutex mutex_;
  std::vector<int> clients_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
};

// Client side of TcpSink: reads length-prefixed records off one connection.
class TcpSubscriber {
 public:
  TcpSubscriber(const std::string& host, std::uint16_t port);
  ~TcpSubscriber();
  TcpSubscriber(const TcpSubscriber&) = delete;
  TcpSubscriber& operator=(const TcpSubscriber&) = delete;

  // Next record, or nullopt on timeout or when the publisher closed.
  std::optional<WireMessage> receive(std::chrono::milliseconds timeout);
  bool closed() const noexcept { return closed_; }

 private:
  int fd_ = -1;
  bool closed_ = false;
  std::vector<std::uint8_t> buffer_;
};

}  // namespace mp4bag
