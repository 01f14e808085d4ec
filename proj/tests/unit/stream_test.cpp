#include "dme/stream.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "support/loopback_server.hpp"

namespace dme {
namespace {

using namespace std::chrono_literals;

Endpoint local(std::uint16_t port) { return Endpoint{"127.0.0.1", port}; }

// Polls until pred holds or the deadline passes.
template <typename Pred>
bool eventually(Pred pred, std::chrono::milliseconds limit = 5000ms) {
  const auto end = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < end) {
    if (pred()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return pred();
}

TEST(Endpoint, Parse) {
  const Endpoint e = Endpoint::parse("127.0.0.1:5000");
  EXPECT_EQ(e.host, "127.0.0.1");
  EXPECT_EQ(e.port, 5000);
  EXPECT_THROW(Endpoint::parse("nohost"), std::invalid_argument);
  EXPECT_THROW(Endpoint::parse("h:"), std::invalid_argument);
  EXPECT_THROW(Endpoint::parse("h:70000"), std::invalid_argument);
  EXPECT_THROW(Endpoint::parse("h:12x"), std::invalid_argument);
}

TEST(FrameQueue, DropsOldestWhenFull) {
  FrameQueue q(2);
  for (int k = 0; k < 5; ++k) {
    IqFrame f;
    f.i = {static_cast<double>(k)};
    f.q = {0.0};
    q.push(f);
  }
  EXPECT_EQ(q.dropped(), 3u);
  EXPECT_EQ(q.pop(0ms)->i[0], 3.0);
  EXPECT_EQ(q.pop(0ms)->i[0], 4.0);
  EXPECT_FALSE(q.pop(1ms).has_value());
  q.close();
  EXPECT_FALSE(q.pop(1000ms).has_value());
}

TEST(StreamFrames, TwoHundredFiftySamplesGiveTwoFrames) {
  LoopbackServer server([&](int fd, std::size_t conn) {
    if (conn == 0) LoopbackServer::send_all(fd, counting_samples(250));
    hold_open(server);
  });
  auto stream = stream_frames(local(server.port()), 125, 8);
  const auto a = stream->next(5000ms);
  const auto b = stream->next(5000ms);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->i.front(), 0.0);
  EXPECT_EQ(a->i.back(), 124.0);
  EXPECT_EQ(b->i.front(), 125.0);
  EXPECT_EQ(b->q.back(), -249.0);
  EXPECT_FALSE(stream->next(200ms).has_value());
  EXPECT_EQ(stream->delivered(), 2u);
  EXPECT_EQ(stream->buffered_samples(), 0u);
}

TEST(StreamFrames, OneHundredThirtySamplesLeaveFiveBuffered) {
  LoopbackServer server([&](int fd, std::size_t conn) {
    if (conn == 0) LoopbackServer::send_all(fd, counting_samples(130));
    hold_open(server);
  });
  auto stream = stream_frames(local(server.port()), 125, 8);
  ASSERT_TRUE(stream->next(5000ms).has_value());
  EXPECT_TRUE(eventually([&] { return stream->buffered_samples() == 5; }));
  EXPECT_FALSE(stream->next(200ms).has_value());
  EXPECT_EQ(stream->delivered(), 1u);
}

TEST(StreamFrames, SlowConsumerDropsButFramesStayContiguous) {
  LoopbackServer server([&](int fd, std::size_t conn) {
    if (conn == 0) LoopbackServer::send_all(fd, counting_samples(125 * 400));
    hold_open(server);
  });
  StreamOptions opt;
  opt.frame_len = 125;
  opt.queue_capacity = 1;
  FrameStream stream(local(server.port()), opt);
  ASSERT_TRUE(eventually([&] { return stream.delivered() == 400; }, 10000ms));
  std::size_t consumed = 0;
  while (auto f = stream.next(100ms)) {
    ++consumed;
    const double first = f->i.front();
    EXPECT_EQ(std::fmod(first, 125.0), 0.0);
    for (std::size_t k = 0; k < f->size(); ++k) {
      EXPECT_EQ(f->i[k], first + static_cast<double>(k));
      EXPECT_EQ(f->q[k], -f->i[k]);
    }
    std::this_thread::sleep_for(2ms);
  }
  EXPECT_GT(stream.dropped(), 0u);
  EXPECT_EQ(consumed + stream.dropped(), 400u);
}

TEST(StreamFrames, PartialFrameDiscardedOnDisconnectAndReconnects) {
  LoopbackServer server([&](int fd, std::size_t conn) {
    if (conn == 0) {
      LoopbackServer::send_all(fd, counting_samples(100));  // closed mid-frame
      return;
    }
    LoopbackServer::send_all(fd, counting_samples(125, 1000));
    hold_open(server);
  });
  StreamOptions opt;
  opt.frame_len = 125;
  opt.initial_backoff = 20ms;
  FrameStream stream(local(server.port()), opt);
  const auto f = stream.next(5000ms);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->i.front(), 1000.0);
  EXPECT_EQ(f->i.back(), 1124.0);
  EXPECT_GE(stream.connections(), 2u);
}

TEST(StreamFrames, UnresolvableEndpointFailsImmediately) {
  StreamOptions opt;
  EXPECT_THROW(FrameStream(Endpoint{"no-such-host.invalid", 5000}, opt), IoError);
}

TEST(StreamFrames, StopIsPromptWhileRetrying) {
  // Nothing listens on the port once the server is gone: the client keeps retrying.
  std::uint16_t port = 0;
  {
    LoopbackServer s([](int, std::size_t) {});
    port = s.port();
  }
  StreamOptions opt;
  opt.initial_backoff = 5000ms;
  auto stream = std::make_unique<FrameStream>(local(port), opt);
  std::this_thread::sleep_for(50ms);
  const auto t0 = std::chrono::steady_clock::now();
  stream->stop();
  stream.reset();
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 1000ms);
}

}  // namespace
}  // namespace dme
