#include <doctest.h>

#include <future>
#include <sstream>
#include <thread>

#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/stream.hpp"
#include "gaitkit/synth.hpp"
#include "support.hpp"

using namespace gaitkit;

namespace {

struct Captured {
  std::vector<CommandResult> reports;
  std::vector<StreamStats> stats;
  std::string rows;
  std::size_t count = 0;
};

/// Runs a receiver on an ephemeral loopback port, hands the port to `send`,
/// and returns what the receiver produced once its session times out.
Captured receive(RunConfig config, const std::function<void(std::uint16_t)>& send) {
  config.stream.listen = "127.0.0.1:0";
  config.stream.idle_timeout_s = 0.5;
  std::promise<std::uint16_t> port;
  Captured out;
  std::ostringstream rows;
  StreamHooks hooks;
  hooks.on_ready = [&](std::uint16_t p) { port.set_value(p); };
  hooks.on_report = [&](const CommandResult& r, const StreamStats& s) {
    out.reports.push_back(r);
    out.stats.push_back(s);
  };
  std::thread receiver([&] { out.count = run_stream(config, rows, hooks); });
  send(port.get_future().get());
  receiver.join();
  out.rows = rows.str();
  return out;
}

std::string synth_stream(int strides = 4) {
  SynthParams p;
  p.n_strides = strides;
  return serialize_json(generate(p).sequence);
}

}  // namespace

TEST_CASE("endpoint parsing") {
  const auto ep = Endpoint::parse("10.0.0.2:9870");
  CHECK(ep.host == "10.0.0.2");
  CHECK(ep.port == 9870);
  CHECK_THROWS_AS(Endpoint::parse("localhost"), Error);
  CHECK_THROWS_AS(Endpoint::parse("localhost:99999"), Error);
  CHECK_THROWS_AS(Endpoint::parse("localhost:x"), Error);
}

TEST_CASE("session bookkeeping") {
  const auto config = testing::exact_config();
  StreamSession s(config);
  CHECK(s.feed("{\"format\":\"gaitkit-keypoints/1\",\"dims\":3,\"frame_rate\":30}").empty());
  const std::string joints = R"("joints":{"left_knee":[0.1,0.5,0,1],"left_ankle":[0.1,0.08,0,1],"left_toe":[0.1,0.08,0.2,1]})";
  CHECK_FALSE(s.feed(fmt::format(R"({{"frame":0,"t":0,{}}})", joints)).empty());
  CHECK_FALSE(s.feed(fmt::format(R"({{"frame":3,"t":0.1,{}}})", joints)).empty());
  CHECK(s.feed("{garbage").empty());
  CHECK(s.feed(fmt::format(R"({{"frame":2,"t":0.0667,{}}})", joints)).empty());
  CHECK(s.feed("   ").empty());
  CHECK(s.stats().received == 5);
  CHECK(s.stats().frames == 2);
  CHECK(s.stats().dropped == 2);
  CHECK(s.stats().malformed == 1);
  CHECK(s.stats().out_of_order == 1);
  CHECK(s.sequence().frames.size() == 2);
  CHECK(StreamSession(config).empty());
  CHECK_THROWS_AS(StreamSession(config).finish("x"), Error);
}

TEST_CASE("drop selection") {
  const auto drops = choose_drops(1000, 0.01, 5);
  CHECK(drops.size() == 10);
  CHECK(std::is_sorted(drops.begin(), drops.end()));
  CHECK(drops.front() > 0);
  CHECK(drops.back() < 999);
  CHECK(choose_drops(1000, 0.01, 5) == drops);
  CHECK(choose_drops(1000, 0.0, 5).empty());
  const std::string text = "{\"format\":\"gaitkit-keypoints/1\"}\n{\"frame\":0}\n{\"frame\":1}\n{\"frame\":2}\n";
  CHECK(without_frames(text, {1}) == "{\"format\":\"gaitkit-keypoints/1\"}\n{\"frame\":0}\n{\"frame\":2}\n");
}

TEST_CASE("streamed sessions match batch analysis") {
  const std::string text = synth_stream();
  const auto config = testing::exact_config();
  const auto batch = run_analyze(config, parse_keypoint_json(text), ordered_json::object());

  for (const char* transport : {"udp", "tcp"}) {
    auto c = config;
    c.stream.transport = transport;
    const auto got = receive(c, [&](std::uint16_t port) {
      ReplayOptions o;
      o.target = Endpoint{"127.0.0.1", port};
      o.transport = transport;
      replay(text, o);
    });
    REQUIRE(got.reports.size() == 1);
    CHECK(got.count == 1);
    CHECK(got.stats[0].dropped == 0);
    CHECK(got.stats[0].malformed == 0);
    const auto& report = got.reports[0].report;
    CHECK(testing::max_numeric_difference(report["analysis"], batch.report["analysis"]) <= 1e-9);
    auto streamed_config = report["config"];
    auto batch_config = batch.report["config"];
    streamed_config.erase("stream");
    batch_config.erase("stream");
    CHECK(streamed_config == batch_config);
    CHECK(report["input"]["stream"]["dropped"] == 0);
    CHECK(got.rows.rfind("frame,t,side,inv_ev_deg,dorsi_plantar_deg,ankle_deg\n", 0) == 0);
  }
}

TEST_CASE("dropped frames are counted and the rest analyzed") {
  const std::string text = synth_stream(10);
  const auto config = testing::exact_config();
  std::vector<std::size_t> dropped;
  const auto got = receive(config, [&](std::uint16_t port) {
    ReplayOptions o;
    o.target = Endpoint{"127.0.0.1", port};
    o.drop_fraction = 0.01;
    o.seed = 3;
    dropped = replay(text, o).dropped;
  });
  REQUIRE(got.reports.size() == 1);
  CHECK(!dropped.empty());
  CHECK(got.stats[0].dropped == dropped.size());
  const auto batch = run_analyze(config, parse_keypoint_json(without_frames(text, dropped)), ordered_json::object());
  CHECK(testing::max_numeric_difference(got.reports[0].report["analysis"], batch.report["analysis"]) <= 1e-9);
}

TEST_CASE("silence produces no report") {
  const auto got = receive(testing::exact_config(), [](std::uint16_t) {});
  CHECK(got.count == 0);
  CHECK(got.reports.empty());
  CHECK(got.rows.empty());
}

TEST_CASE("binding a busy port fails") {
  auto config = testing::exact_config();
  config.stream.transport = "tcp";
  config.stream.listen = "127.0.0.1:0";
  config.stream.idle_timeout_s = 0.3;
  std::promise<std::uint16_t> port;
  std::ostringstream rows;
  StreamHooks hooks;
  hooks.on_ready = [&](std::uint16_t p) { port.set_value(p); };
  std::thread first([&] { run_stream(config, rows, hooks); });
  auto second = config;
  second.stream.listen = fmt::format("127.0.0.1:{}", port.get_future().get());
  std::ostringstream other;
  try {
    run_stream(second, other);
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
  first.join();
}
