#include <doctest.h>

#include <filesystem>
#include <set>

#include <json.hpp>

#include "gaitkit/ingest.hpp"
#include "support.hpp"

using namespace gaitkit;
namespace fs = std::filesystem;

namespace {

const std::string kCli = GAITKIT_CLI;

std::string cli(const std::string& args) { return kCli + " " + args; }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("synth, analyze and validate from the command line") {
  const auto dir = testing::scratch_dir("cli");
  REQUIRE(testing::run(cli("--out " + q(dir / "s") + " --seed 4 synth --class limp --with-reference --ref-offset 1.5")) == 0);
  for (const char* f : {"session.json", "session.truth.json", "session.ref.json", "session.ref.truth.json", "manifest.json"}) {
    CHECK(fs::exists(dir / "s" / f));
  }
  const auto truth = nlohmann::json::parse(read_file((dir / "s" / "session.truth.json").string()));
  CHECK(truth["label"] == "limp");
  CHECK_NOTHROW(parse_keypoint_json(read_file((dir / "s" / "session.json").string())));

  REQUIRE(testing::run(cli("--input " + q(dir / "s" / "session.json") + " --out " + q(dir / "a") + " analyze")) == 0);
  const auto report = nlohmann::json::parse(read_file((dir / "a" / "report.json").string()));
  CHECK(report["analysis"]["classification"]["label"] == "limp");
  for (const char* f : {"angles.csv", "events.csv", "fpa.csv", "box_stats.csv"}) CHECK(fs::exists(dir / "a" / f));

  REQUIRE(testing::run(cli("--input " + q(dir / "s" / "session.json") + " --reference " + q(dir / "s" / "session.ref.json") +
                           " --out " + q(dir / "v") + " --bin-width 0.5 validate")) == 0);
  const auto validation = nlohmann::json::parse(read_file((dir / "v" / "report.json").string()));
  CHECK(validation["config"]["validation"]["bin_width"] == 0.5);
  CHECK(std::abs(validation["analysis"]["sessions"][0]["mapping"]["offset"].get<double>() - 1.5) <= 1.0 / 30.0);
}

TEST_CASE("reruns are byte-identical, including from an embedded config") {
  const auto dir = testing::scratch_dir("cli");
  REQUIRE(testing::run(cli("--out " + q(dir) + " synth --noise 0.005")) == 0);
  const auto input = q(dir / "session.json");
  REQUIRE(testing::run(cli("--input " + input + " --out " + q(dir / "r1") + " --smoothing 3 analyze")) == 0);
  const auto first = read_file((dir / "r1" / "report.json").string());
  const auto angles = read_file((dir / "r1" / "angles.csv").string());
  REQUIRE(testing::run(cli("--input " + input + " --out " + q(dir / "r1") + " --smoothing 3 analyze")) == 0);
  CHECK(first == read_file((dir / "r1" / "report.json").string()));
  CHECK(angles == read_file((dir / "r1" / "angles.csv").string()));

  // The embedded config names r1 as the output; the flag moves it.
  REQUIRE(testing::run(cli("--config " + q(dir / "r1" / "report.json") + " --out " + q(dir / "r3") + " analyze")) == 0);
  auto a = nlohmann::json::parse(first);
  auto b = nlohmann::json::parse(read_file((dir / "r3" / "report.json").string()));
  a["config"].erase("out");
  b["config"].erase("out");
  CHECK(a == b);

  REQUIRE(testing::run(cli("--out " + q(dir / "again") + " synth --noise 0.005")) == 0);
  CHECK(read_file((dir / "again" / "session.json").string()) == read_file((dir / "session.json").string()));
}

TEST_CASE("batch synth covers every class") {
  const auto dir = testing::scratch_dir("cli");
  REQUIRE(testing::run(cli("--out " + q(dir) + " --seed 7 synth --batch 2")) == 0);
  const auto manifest = nlohmann::json::parse(read_file((dir / "manifest.json").string()));
  REQUIRE(manifest["sessions"].size() == 8);
  std::set<std::string> labels;
  for (const auto& s : manifest["sessions"]) {
    labels.insert(s["label"].get<std::string>());
    CHECK(fs::exists(dir / s["keypoints"].get<std::string>()));
  }
  CHECK(labels.size() == 4);
}

TEST_CASE("exit codes") {
  const auto dir = testing::scratch_dir("cli");
  REQUIRE(testing::run(cli("--out " + q(dir) + " synth")) == 0);
  const auto good = q(dir / "session.json");

  write_file_atomic((dir / "bad.json").string(), R"({"smoothing_windoww": 3})");
  CHECK(testing::run(cli("--config " + q(dir / "bad.json") + " --input " + good + " --out " + q(dir / "x") + " analyze")) == 2);
  CHECK(testing::run(cli("--smoothing 4 --input " + good + " --out " + q(dir / "x") + " analyze")) == 2);
  CHECK(testing::run(cli("analyze")) == 2);
  CHECK(testing::run(cli("--no-such-flag analyze")) == 2);

  write_file_atomic((dir / "broken.json").string(), "{\"t\":0,\"joints\":{\n");
  CHECK(testing::run(cli("--input " + q(dir / "broken.json") + " --out " + q(dir / "x") + " analyze")) == 3);

  write_file_atomic((dir / "empty.json").string(), "");
  CHECK(testing::run(cli("--input " + q(dir / "empty.json") + " --out " + q(dir / "empty_out") + " analyze")) == 4);
  CHECK_FALSE(fs::exists(dir / "empty_out" / "report.json"));

  REQUIRE(testing::run(cli("--out " + q(dir / "flat") + " synth --params " + q(dir / "flat.json"))) == 2);
  write_file_atomic((dir / "flat.json").string(), R"({"jump_height": 0.0001})");
  REQUIRE(testing::run(cli("--out " + q(dir / "flat") + " synth --params " + q(dir / "flat.json"))) == 0);
  const auto flat = q(dir / "flat" / "session.json");
  CHECK(testing::run(cli("--input " + flat + " --reference " + flat + " --out " + q(dir / "y") + " validate")) == 5);

  REQUIRE(testing::run(cli("--out " + q(dir / "two") + " synth --dims 2")) == 0);
  CHECK(testing::run(cli("--input " + good + " --reference " + q(dir / "two" / "session.json") + " --out " + q(dir / "z") + " validate")) == 3);
}

TEST_CASE("errors are reported as JSON on stderr") {
  const auto dir = testing::scratch_dir("cli");
  const auto err = dir / "err.txt";
  const int status = std::system((cli("--input " + q(dir / "missing.json") + " analyze") + " 2>" + q(err) + " >/dev/null").c_str());
  CHECK(WEXITSTATUS(status) == 2);
  const auto text = read_file(err.string());
  const auto line = text.substr(text.rfind('{', text.find("\"error\"")));
  const auto j = nlohmann::json::parse(line.substr(0, line.find('\n')));
  CHECK(j["error"]["exit_code"] == 2);
  CHECK(j["error"]["category"].get<std::string>() == "io");
}

TEST_CASE("convert writes canonical files") {
  const auto dir = testing::scratch_dir("cli");
  REQUIRE(testing::run(cli("--out " + q(dir) + " synth")) == 0);
  REQUIRE(testing::run(cli("--input " + q(dir / "session.json") + " --format csv --out " + q(dir / "c") + " convert")) == 0);
  const auto csv = parse_keypoint_csv(read_file((dir / "c" / "session.csv").string()));
  const auto json = parse_keypoint_json(read_file((dir / "session.json").string()));
  CHECK(csv.frames.size() == json.frames.size());
  REQUIRE(testing::run(cli("--input " + q(dir / "c" / "session.csv") + " --format json --out " + q(dir / "j") + " convert")) == 0);
  CHECK(fs::exists(dir / "j" / "session.json"));
}

TEST_CASE("stream and replay executables") {
  const auto dir = testing::scratch_dir("cli");
  REQUIRE(testing::run(cli("--out " + q(dir) + " --seed 2 synth")) == 0);
  // A fixed port could collide; probe a few.
  for (int port = 39871; port < 39881; ++port) {
    const std::string listen = fmt::format("127.0.0.1:{}", port);
    const auto out = dir / fmt::format("stream{}", port);
    const std::string receiver = cli("--listen " + listen + " --out " + q(out) + " stream --transport tcp --idle-timeout 1");
    const std::string sender = std::string(GAITKIT_REPLAY) + " " + q(dir / "session.json") + " --target " + listen + " --transport tcp";
    const int status = testing::run("(" + receiver + " > " + q(dir / "rows.csv") + " & sleep 0.5; " + sender + "; wait $!)");
    if (status != 0 || !fs::exists(out / "report.json")) continue;
    REQUIRE(testing::run(cli("--input " + q(dir / "session.json") + " --out " + q(dir / "batch") + " analyze")) == 0);
    const auto streamed = nlohmann::ordered_json::parse(read_file((out / "report.json").string()));
    const auto batch = nlohmann::ordered_json::parse(read_file((dir / "batch" / "report.json").string()));
    CHECK(testing::max_numeric_difference(streamed["analysis"], batch["analysis"]) <= 1e-9);
    CHECK(read_file((dir / "rows.csv").string()).rfind("frame,t,side", 0) == 0);
    return;
  }
  FAIL("no stream session completed");
}
