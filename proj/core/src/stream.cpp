#include "dme/stream.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace dme {

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw std::invalid_argument("endpoint must look like host:port, got '" + text + "'");
  Endpoint e;
  e.host = text.substr(0, colon);
  if (e.host.size() > 2 && e.host.front() == '[' && e.host.back() == ']')
    e.host = e.host.substr(1, e.host.size() - 2);
  const std::string port = text.substr(colon + 1);
  std::size_t used = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || value == 0 || value > 65535)
    throw std::invalid_argument("invalid port in endpoint '" + text + "'");
  e.port = static_cast<std::uint16_t>(value);
  return e;
}

FrameQueue::FrameQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw std::invalid_argument("FrameQueue: capacity must be >= 1");
}

void FrameQueue::push(IqFrame frame) {
  {
    std::lock_guard lock(mu_);
    if (frames_.size() >= capacity_) {
      frames_.pop_front();
      ++dropped_;
    }
    frames_.push_back(std::move(frame));
  }
  ready_.notify_one();
}

std::optional<IqFrame> FrameQueue::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  ready_.wait_for(lock, timeout, [&] { return !frames_.empty() || closed_; });
  if (frames_.empty()) return std::nullopt;
  IqFrame f = std::move(frames_.front());
  frames_.pop_front();
  return f;
}

void FrameQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  ready_.notify_all();
}

std::size_t FrameQueue::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

std::size_t FrameQueue::size() const {
  std::lock_guard lock(mu_);
  return frames_.size();
}

FrameStream::FrameStream(const Endpoint& endpoint, const StreamOptions& options)
    : options_(options), queue_(options.queue_capacity) {
  if (options_.frame_len < 1) throw std::invalid_argument("FrameStream: frame_len must be >= 1");
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(endpoint.port);
  const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0 || res == nullptr)
    throw IoError("cannot resolve " + endpoint.host + ":" + port + ": " + ::gai_strerror(rc));
  family_ = res->ai_family;
  const auto* raw = reinterpret_cast<const std::uint8_t*>(res->ai_addr);
  address_.assign(raw, raw + res->ai_addrlen);
  ::freeaddrinfo(res);
  worker_ = std::thread(&FrameStream::run, this);
}

FrameStream::~FrameStream() { stop(); }

void FrameStream::stop() {
  stop_.store(true);
  wait_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  queue_.close();
}

bool FrameStream::wait_or_stop(std::chrono::milliseconds delay) {
  std::unique_lock lock(wait_mu_);
  return !wait_cv_.wait_for(lock, delay, [&] { return stop_.load(); });
}

void FrameStream::run() {
  auto backoff = options_.initial_backoff;
  while (!stop_.load()) {
    const int fd = ::socket(family_, SOCK_STREAM, 0);
    if (fd >= 0 && ::connect(fd, reinterpret_cast<const sockaddr*>(address_.data()),
                             static_cast<socklen_t>(address_.size())) == 0) {
      ++connections_;
      backoff = options_.initial_backoff;
      const bool keep_going = pump(fd);
      ::close(fd);
      if (!keep_going) break;
    } else if (fd >= 0) {
      ::close(fd);
    }
    if (!wait_or_stop(backoff)) break;
    backoff = std::min(backoff * 2, options_.max_backoff);
  }
}

bool FrameStream::pump(int fd) {
  const std::size_t frame_len = options_.frame_len;
  IqFrame frame;
  frame.i.reserve(frame_len);
  frame.q.reserve(frame_len);
  std::uint8_t carry[8];
  std::size_t carry_len = 0;
  std::vector<std::uint8_t> buf(64 * 1024);

  while (!stop_.load()) {
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(options_.poll_interval.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (ready == 0) continue;
    const ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;

    std::size_t at = 0;
    const auto got = static_cast<std::size_t>(n);
    while (at < got) {
      const std::size_t take = std::min<std::size_t>(8 - carry_len, got - at);
      std::memcpy(carry + carry_len, buf.data() + at, take);
      carry_len += take;
      at += take;
      if (carry_len < 8) break;
      float iq[2];
      std::memcpy(iq, carry, 8);
      carry_len = 0;
      frame.i.push_back(iq[0]);
      frame.q.push_back(iq[1]);
      if (frame.i.size() == frame_len) {
        queue_.push(std::move(frame));
        ++delivered_;
        frame = IqFrame{};
        frame.i.reserve(frame_len);
        frame.q.reserve(frame_len);
      }
    }
    buffered_.store(frame.i.size());
  }
  // Partial frame at disconnect is discarded.
  buffered_.store(0);
  return !stop_.load();
}

}  // namespace dme
