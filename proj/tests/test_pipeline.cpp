#include <doctest.h>

#include <filesystem>

#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/synth.hpp"
#include "support.hpp"

using namespace gaitkit;
namespace fs = std::filesystem;

namespace {

std::string write_session(const fs::path& dir, const std::string& name, const SkeletonSequence& seq) {
  const auto path = (dir / name).string();
  write_file_atomic(path, serialize_json(seq));
  return path;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("analyze a noiseless normal walk") {
  const auto dir = testing::scratch_dir("pipeline");
  auto p = class_preset(GaitClass::Normal, 21);
  const auto session = generate(p);
  auto config = testing::exact_config();
  config.input = write_session(dir, "walk.json", session.sequence);
  const auto result = run_analyze(config);
  const auto& a = result.report["analysis"];
  CHECK(result.report["schema"] == "gaitkit-report/1");
  CHECK(a["classification"]["label"] == "normal");
  CHECK(a["frames"] == session.sequence.frames.size());

  std::vector<double> truth;
  for (const auto& s : session.truth.fpa) truth.push_back(s.angle);
  const double median = a["fpa"]["box"]["normal"]["median"].get<double>();
  CHECK(std::abs(median - box_stats(truth).median) <= 0.5);

  std::vector<std::string> names;
  for (const auto& f : result.files) names.push_back(f.name);
  CHECK(names == std::vector<std::string>{"angles.csv", "events.csv", "fpa.csv", "box_stats.csv"});

  const auto out = (dir / "out").string();
  write_outputs(out, result);
  CHECK(fs::exists(fs::path(out) / "report.json"));
  CHECK(read_file((fs::path(out) / "report.json").string()) == dump_report(result.report));
  CHECK(dump_report(run_analyze(config).report) == dump_report(result.report));

  const auto again = parse_config(dump_report(result.report));
  CHECK(dump_report(run_analyze(again).report) == dump_report(result.report));
}

TEST_CASE("analysis with an axis convention matches the canonical run") {
  const auto dir = testing::scratch_dir("pipeline");
  SynthParams p;
  const auto session = generate(p);
  auto config = testing::exact_config();
  config.input = write_session(dir, "canon.json", session.sequence);
  const auto canon = run_analyze(config).report["analysis"];

  auto image = session.sequence;
  for (auto& f : image.frames) {
    for (auto& j : f.joints) if (j) j->position.y() = -j->position.y();
  }
  config.input = write_session(dir, "image.json", image);
  config.axes = "x,-y,z";
  const auto flipped = run_analyze(config).report["analysis"];
  CHECK(flipped["events"] == canon["events"]);
  CHECK(flipped["classification"]["label"] == canon["classification"]["label"]);
}

TEST_CASE("analyze errors") {
  const auto dir = testing::scratch_dir("pipeline");
  auto config = testing::exact_config();
  config.input = (dir / "empty.json").string();
  write_file_atomic(config.input, "");
  CHECK(code_of([&] { run_analyze(config); }) == ErrorCode::EmptyInput);
  config.input = (dir / "missing.json").string();
  CHECK(code_of([&] { run_analyze(config); }) == ErrorCode::Io);
  config.input.clear();
  CHECK(code_of([&] { run_analyze(config); }) == ErrorCode::Config);
}

TEST_CASE("short walks still report, without a label") {
  const auto dir = testing::scratch_dir("pipeline");
  SynthParams p;
  p.n_strides = 2;
  auto config = testing::exact_config();
  config.input = write_session(dir, "short.json", generate(p).sequence);
  const auto report = run_analyze(config).report;
  CHECK(report["analysis"]["classification"].is_null());
  CHECK(report["analysis"].contains("classification_note"));
  CHECK(code_of([&] { run_classify(config); }) == ErrorCode::InsufficientData);
}

TEST_CASE("validate") {
  const auto dir = testing::scratch_dir("pipeline");
  SynthParams p;
  p.n_strides = 6;
  const auto session = generate(p);
  auto config = testing::exact_config();

  SUBCASE("estimate equal to reference") {
    config.input = write_session(dir, "a.json", session.sequence);
    config.reference = config.input;
    const auto r = run_validate(config);
    const auto& h = r.report["analysis"]["histograms"];
    for (const auto& [param, by_condition] : h.items()) {
      for (const auto& [condition, hist] : by_condition.items()) {
        CHECK(hist["bins"].size() == 1);
        CHECK(hist["bins"][0]["percentage"] == 100.0);
      }
    }
    CHECK(r.report["analysis"]["sessions"][0]["mapping"]["rate"].get<double>() == doctest::Approx(1.0));
    CHECK(r.report["analysis"]["total_aligned_frames"] == 2 * session.sequence.frames.size());
  }
  SUBCASE("reference on another clock") {
    ReferenceClock clock;
    clock.offset = 2.0;
    clock.rate = 1.01;
    config.input = write_session(dir, "est.json", session.sequence);
    config.reference = write_session(dir, "ref.json", generate_reference(p, clock).sequence);
    const auto r = run_validate(config);
    const auto& m = r.report["analysis"]["sessions"][0]["mapping"];
    CHECK(std::abs(m["offset"].get<double>() - 2.0) <= 1.0 / 30.0);
    CHECK(std::abs(m["rate"].get<double>() - 1.01) <= 1e-3);
    CHECK(r.report["analysis"]["cycle_curves"]["ankle"]["points"].size() == 101);
    CHECK(r.files.size() == 3);
  }
  SUBCASE("dimension mismatch") {
    auto flat = p;
    flat.dims = 2;
    config.input = write_session(dir, "three.json", session.sequence);
    config.reference = write_session(dir, "two.json", generate(flat).sequence);
    CHECK(code_of([&] { run_validate(config); }) == ErrorCode::Dimension);
  }
  SUBCASE("no jumps") {
    auto still = p;
    still.jump_height = 0.0;
    config.input = write_session(dir, "nojump.json", generate(still).sequence);
    config.reference = config.input;
    CHECK(code_of([&] { run_validate(config); }) == ErrorCode::InsufficientLandmarks);
    config.sync.method = "none";
    CHECK_NOTHROW(run_validate(config));
  }
}

TEST_CASE("classify several sessions") {
  const auto dir = testing::scratch_dir("pipeline");
  auto config = testing::exact_config();
  for (const auto& p : class_suite(1, 61)) {
    config.sessions.push_back({write_session(dir, std::string(class_name(p.label)) + ".json", generate(p).sequence), "", ""});
  }
  const auto out = run_classify(config);
  REQUIRE(out.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out[i]["label"] == class_name(kGaitClasses[i]));
    CHECK(out[i]["condition"] == class_name(kGaitClasses[i]));
  }
}
