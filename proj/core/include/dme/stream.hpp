#pragma once

#include "dme/signal_gen.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace dme {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// Parses "host:port"; throws std::invalid_argument on malformed input.
  static Endpoint parse(const std::string& text);
};

/// Bounded FIFO shared by the socket reader and a consumer. When full, push
/// discards the oldest frame and counts the drop.
class FrameQueue {
 public:
  explicit FrameQueue(std::size_t capacity);

  void push(IqFrame frame);
  /// Waits up to `timeout` for a frame; nullopt on timeout or after close() once drained.
  std::optional<IqFrame> pop(std::chrono::milliseconds timeout);
  void close();

  std::size_t dropped() const;
  std::size_t size() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable ready_;
  std::deque<IqFrame> frames_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

struct StreamOptions {
  std::size_t frame_len = 125;
  std::size_t queue_capacity = 16;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::milliseconds poll_interval{50};
};

/// TCP client for a raw cf32 sample stream. A reader thread connects, frames
/// the byte stream by count and feeds a FrameQueue. On disconnect the partial
/// frame is discarded and the client reconnects with exponential backoff until
/// stop() or destruction.
class FrameStream {
 public:
  /// Resolves the endpoint immediately (throws IoError if it cannot be resolved)
  /// and starts the reader thread.
  FrameStream(const Endpoint& endpoint, const StreamOptions& options);
  ~FrameStream();

  FrameStream(const FrameStream&) = delete;
  FrameStream& operator=(const FrameStream&) = delete;

  std::optional<IqFrame> next(std::chrono::milliseconds timeout) { return queue_.pop(timeout); }
  void stop();

  std::size_t dropped() const { return queue_.dropped(); }
  std::size_t delivered() const { return delivered_.load(); }
  /// Complete samples received but not yet part of a delivered frame.
  std::size_t buffered_samples() const { return buffered_.load(); }
  std::size_t connections() const { return connections_.load(); }

 private:
  void run();
  /// Reads until disconnect or stop; returns false when stopping.
  bool pump(int fd);
  bool wait_or_stop(std::chrono::milliseconds delay);

  StreamOptions options_;
  std::vector<std::uint8_t> address_;  // resolved sockaddr storage
  int family_ = 0;
  FrameQueue queue_;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> delivered_{0};
  std::atomic<std::size_t> buffered_{0};
  std::atomic<std::size_t> connections_{0};
  std::mutex wait_mu_;
  std::condition_variable wait_cv_;
  std::thread worker_;
};

/// Convenience wrapper matching the pipeline description.
inline std::unique_ptr<FrameStream> stream_frames(const Endpoint& endpoint, std::size_t frame_len,
                                                  std::size_t queue_capacity) {
  StreamOptions o;
  o.frame_len = frame_len;
  o.queue_capacity = queue_capacity;
  return std::make_unique<FrameStream>(endpoint, o);
}

}  // namespace dme
