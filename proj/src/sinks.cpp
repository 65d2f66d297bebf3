#include "mp4bag/sinks.hpp"

#include <arpa/inet.h>
#include <fmt/format.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "mp4bag/errors.hpp"

namespace mp4bag {

namespace {

// FNV-1a, enough to compare payloads across runs.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string errno_text() { return std::strerror(errno); }

bool send_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const auto sent = ::send(fd, data, n, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += sent;
    n -= static_cast<std::size_t>(sent);
  }
  return true;
}

}  // namespace

void NullSink::publish(const ImageMessage& msg) {
  image_stamps_.push_back(msg.stamp);
  payload_hashes_.push_back(fnv1a(msg.data));
}

void NullSink::publish(const CameraInfoMessage&) { ++camera_info_count_; }

void NullSink::publish(const ClockMessage& msg) { clock_stamps_.push_back(msg.stamp); }

DirectorySink::DirectorySink(const std::filesystem::path& root) : root_(root) {
  std::error_code ec;
  std::filesystem::create_directories(root_ / "frames", ec);
  if (ec) throw IoError(root_.string(), ec.message());
  stamps_.open(root_ / "stamps.csv", std::ios::trunc);
  if (!stamps_) throw IoError((root_ / "stamps.csv").string(), "cannot open for writing");
  stamps_ << "index,sec,nsec,frame_id\n";
}

void DirectorySink::publish(const ImageMessage& msg) {
  const auto path = root_ / "frames" / fmt::format("{:06d}.ppm", index_);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "P6\n" << msg.width << ' ' << msg.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(msg.data.data()), static_cast<std::streamsize>(msg.data.size()));
  if (!out) throw IoError(path.string(), "write failed");
  stamps_ << index_ << ',' << msg.stamp.sec << ',' << msg.stamp.nsec << ',' << msg.frame_id << '\n';
  if (!stamps_) throw IoError((root_ / "stamps.csv").string(), "write failed");
  ++index_;
}

void DirectorySink::flush() { stamps_.flush(); }

TcpSink::TcpSink(std::uint16_t port, const std::string& bind_address) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw IoError("tcp", "socket: " + errno_text());
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ValidationError("bind-address", "bind_address", bind_address, "not an IPv4 address");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
    const auto why = errno_text();
    ::close(listen_fd_);
    throw IoError(fmt::format("tcp://{}:{}", bind_address, port), why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpSink::~TcpSink() {
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  std::lock_guard lock(mutex_);
  for (int fd : clients_) ::close(fd);
}

void TcpSink::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(mutex_);
    clients_.push_back(fd);
  }
}

std::size_t TcpSink::client_count() const {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

bool TcpSink::wait_for_clients(std::size_t n, std::chrono::milliseconds timeout) const {
  const auto until = std::chrono::steady_clock::now() + timeout;
  while (client_count() < n) {
    if (std::chrono::steady_clock::now() >= until) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return true;
}

void TcpSink::send_record(const std::vector<std::uint8_t>& record) {
  std::lock_guard lock(mutex_);
  std::erase_if(clients_, [&](int fd) {
    if (send_all(fd, record.data(), record.size())) return false;
    ::close(fd);
    return true;
  });
}

void TcpSink::publish(const ImageMessage& msg) { send_record(serialize(msg)); }
void TcpSink::publish(const CameraInfoMessage& msg) { send_record(serialize(msg)); }
void TcpSink::publish(const ClockMessage& msg) { send_record(serialize(msg)); }

TcpSubscriber::TcpSubscriber(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto locator = fmt::format("tcp://{}:{}", host, port);
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    throw IoError(locator, ::gai_strerror(rc));
  std::string why = "no address";
  for (auto* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    why = errno_text();
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw IoError(locator, why);
}

TcpSubscriber::~TcpSubscriber() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<WireMessage> TcpSubscriber::receive(std::chrono::milliseconds timeout) {
  const auto until = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (const auto len = wire_record_length(buffer_); len && buffer_.size() >= *len) {
      auto msg = parse_wire(std::span(buffer_).first(*len));
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(*len));
      return msg;
    }
    if (closed_) return std::nullopt;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(until - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno != EINTR) throw IoError("tcp", "poll: " + errno_text());
    if (rc <= 0) continue;
    std::uint8_t chunk[65536];
    const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("tcp", "recv: " + errno_text());
    }
    if (n == 0) {
      closed_ = true;
      continue;
    }
    buffer_.insert(buffer_.end(), chunk, chunk + n);
  }
}

}  // namespace mp4bag
