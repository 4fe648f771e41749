#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ppgd/errors.hpp"

namespace ppgd {

/// Ordered, reliable, blocking duplex byte stream. One reader and one writer
/// per direction.
class Transport {
public:
  virtual ~Transport() = default;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
  virtual void read_exact(std::span<std::uint8_t> out) = 0;
  virtual void close() = 0;
};

namespace detail {

class ByteQueue {
public:
  void write(std::span<const std::uint8_t> data) {
    std::lock_guard lock(mutex_);
    if (closed_) throw TransportError("transport: channel closed");
    bytes_.insert(bytes_.end(), data.begin(), data.end());
    cv_.notify_all();
  }

  void read_exact(std::span<std::uint8_t> out) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return bytes_.size() >= out.size() || closed_; });
    if (bytes_.size() < out.size())
      throw TransportError("transport: channel closed by peer");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = bytes_[i];
    bytes_.erase(bytes_.begin(), bytes_.begin() + static_cast<std::ptrdiff_t>(out.size()));
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    cv_.notify_all();
  }

private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::uint8_t> bytes_;
  bool closed_ = false;
};

}  // namespace detail

/// One endpoint of an in-process channel pair.
class InProcessTransport final : public Transport {
public:
  InProcessTransport(std::shared_ptr<detail::ByteQueue> incoming,
                     std::shared_ptr<detail::ByteQueue> outgoing)
      : incoming_(std::move(incoming)), outgoing_(std::move(outgoing)) {}

  ~InProcessTransport() override { close(); }

  void write_all(std::span<const std::uint8_t> data) override { outgoing_->write(data); }
  void read_exact(std::span<std::uint8_t> out) override { incoming_->read_exact(out); }

  void close() override {
    incoming_->close();
    outgoing_->close();
  }

private:
  std::shared_ptr<detail::ByteQueue> incoming_;
  std::shared_ptr<detail::ByteQueue> outgoing_;
};

inline std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>>
make_in_process_pair() {
  auto a_to_b = std::make_shared<detail::ByteQueue>();
  auto b_to_a = std::make_shared<detail::ByteQueue>();
  return {std::make_unique<InProcessTransport>(b_to_a, a_to_b),
          std::make_unique<InProcessTransport>(a_to_b, b_to_a)};
}

/// Connected TCP stream over 127.0.0.1.
class SocketTransport final : public Transport {
public:
  explicit SocketTransport(int fd) : fd_(fd) {}
  ~SocketTransport() override { close(); }

  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  void write_all(std::span<const std::uint8_t> data) override {
    std::size_t sent = 0;
    while (sent < data.size()) {
      ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("socket send: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  void read_exact(std::span<std::uint8_t> out) override {
    std::size_t got = 0;
    while (got < out.size()) {
      ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("socket recv: ") + std::strerror(errno));
      }
      if (n == 0) throw TransportError("socket: connection closed by peer");
      got += static_cast<std::size_t>(n);
    }
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

private:
  int fd_ = -1;
};

/// Listening side of a loopback connection (the responder binds and waits).
class SocketListener {
public:
  explicit SocketListener(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
      auto err = std::string("bind 127.0.0.1:") + std::to_string(port) + ": " +
                 std::strerror(errno);
      ::close(fd_);
      fd_ = -1;
      throw TransportError(err);
    }
    if (::listen(fd_, 1) < 0) {
      auto err = std::string("listen: ") + std::strerror(errno);
      ::close(fd_);
      fd_ = -1;
      throw TransportError(err);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len) < 0)
      throw TransportError(std::string("getsockname: ") + std::strerror(errno));
    port_ = ntohs(bound.sin_port);
  }

  ~SocketListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  SocketListener(const SocketListener&) = delete;
  SocketListener& operator=(const SocketListener&) = delete;

  std::uint16_t port() const { return port_; }

  std::unique_ptr<Transport> accept_one() {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw TransportError(std::string("accept: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<SocketTransport>(fd);
  }

private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

inline std::unique_ptr<Transport> connect_loopback(
    std::uint16_t port, std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_unique<SocketTransport>(fd);
    }
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw TransportError("connect 127.0.0.1:" + std::to_string(port) +
                           ": timed out waiting for listener");
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

/// Decorator that records raw bytes crossing an endpoint; used by wire-level
/// audits and replay.
class CaptureTransport final : public Transport {
public:
  explicit CaptureTransport(Transport& inner) : inner_(inner) {}

  void write_all(std::span<const std::uint8_t> data) override {
    inner_.write_all(data);
    written_.insert(written_.end(), data.begin(), data.end());
  }

  void read_exact(std::span<std::uint8_t> out) override {
    inner_.read_exact(out);
    read_.insert(read_.end(), out.begin(), out.end());
  }

  void close() override { inner_.close(); }

  const std::vector<std::uint8_t>& written() const { return written_; }
  const std::vector<std::uint8_t>& read() const { return read_; }

private:
  Transport& inner_;
  std::vector<std::uint8_t> written_;
  std::vector<std::uint8_t> read_;
};

/// Serves a recorded inbound byte stream and checks outbound bytes against
/// the recorded ones; lets a captured session be replayed without a peer.
class ReplayTransport final : public Transport {
public:
  ReplayTransport(std::vector<std::uint8_t> inbound, std::vector<std::uint8_t> outbound)
      : inbound_(std::move(inbound)), outbound_(std::move(outbound)) {}

  void write_all(std::span<const std::uint8_t> data) override {
    for (std::uint8_t b : data) {
      if (out_pos_ >= outbound_.size() || outbound_[out_pos_] != b)
        throw TransportError("replay: outbound bytes diverge from the recording");
      ++out_pos_;
    }
  }

  void read_exact(std::span<std::uint8_t> out) override {
    if (in_pos_ + out.size() > inbound_.size())
      throw TransportError("replay: recording exhausted");
    std::copy_n(inbound_.begin() + static_cast<std::ptrdiff_t>(in_pos_), out.size(),
                out.begin());
    in_pos_ += out.size();
  }

  void close() override {}

private:
  std::vector<std::uint8_t> inbound_;
  std::vector<std::uint8_t> outbound_;
  std::size_t in_pos_ = 0;
  std::size_t out_pos_ = 0;
};

}  // namespace ppgd
