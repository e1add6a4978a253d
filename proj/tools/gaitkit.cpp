// gaitkit: keypoint gait analysis from the command line.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "gaitkit/config.hpp"
#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/stream.hpp"
#include "gaitkit/synth.hpp"

namespace fs = std::filesystem;
using namespace gaitkit;

namespace {

struct Flags {
  std::string config;
  std::string input;
  std::string reference;
  std::string out;
  double bin_width = 1.0;
  std::string listen;
  std::string format;
  std::uint64_t seed = 1;
  std::string condition;
  std::string axes;
  int smoothing = 1;
  std::string log_level;

  // synth
  std::string params;
  int batch = 0;
  std::string gait_class;
  double noise = 0.0;
  int dims = 3;
  std::string name = "session";
  bool with_reference = false;
  double ref_offset = 0.0;
  double ref_rate = 1.0;
  double ref_fps = 100.0;
  double ref_noise = 0.0;

  // stream
  std::string transport;
  double idle_timeout = 5.0;
  bool continuous = false;
};

void setup_logging(const std::string& level) {
  auto logger = spdlog::stderr_color_mt("gaitkit");
  spdlog::set_default_logger(logger);
  std::string effective = level;
  if (const char* env = std::getenv("GAITKIT_LOG"); env && *env) effective = env;
  spdlog::set_level(spdlog::level::from_str(effective));
}

bool given(const CLI::App& app, const char* name) {
  if (const auto* opt = app.get_option_no_throw(name)) {
    if (opt->count() > 0) return true;
  }
  for (const auto* sub : app.get_subcommands()) {
    if (given(*sub, name)) return true;
  }
  return false;
}

RunConfig effective_config(const Flags& f, const CLI::App& app) {
  RunConfig c = f.config.empty() ? RunConfig{} : parse_config(read_file(f.config));
  auto given = [&](const char* name) { return ::given(app, name); };
  if (given("--input")) c.input = f.input;
  if (given("--reference")) c.reference = f.reference;
  if (given("--out")) c.out = f.out;
  if (given("--bin-width")) c.validation.bin_width = f.bin_width;
  if (given("--listen")) c.stream.listen = f.listen;
  if (given("--format")) c.format = f.format;
  if (given("--condition")) c.condition = f.condition;
  if (given("--axes")) c.axes = f.axes;
  if (given("--smoothing")) c.smoothing_window = f.smoothing;
  if (given("--log-level")) c.log_level = f.log_level;
  if (given("--transport")) c.stream.transport = f.transport;
  if (given("--idle-timeout")) c.stream.idle_timeout_s = f.idle_timeout;
  if (given("--continuous")) c.stream.once = !f.continuous;
  validate(c);
  return c;
}

void write_session(const fs::path& dir, const std::string& name, const SynthParams& p, const Flags& f,
                   const std::string& format, nlohmann::ordered_json& manifest) {
  const SynthSession s = generate(p);
  const std::string ext = format == "csv" ? ".csv" : ".json";
  const fs::path keypoints = dir / (name + ext);
  const fs::path truth = dir / (name + ".truth.json");
  write_file_atomic(keypoints.string(), format == "csv" ? serialize_csv(s.sequence) : serialize_json(s.sequence));
  write_file_atomic(truth.string(), truth_json(s.truth, p));
  nlohmann::ordered_json entry{{"name", name},
                               {"label", class_name(p.label)},
                               {"condition", p.condition},
                               {"seed", p.seed},
                               {"keypoints", keypoints.filename().string()},
                               {"truth", truth.filename().string()}};
  if (f.with_reference) {
    const ReferenceClock clock{f.ref_fps, f.ref_offset, f.ref_rate, f.ref_noise};
    const SynthSession r = generate_reference(p, clock);
    const fs::path ref = dir / (name + ".ref" + ext);
    const fs::path ref_truth = dir / (name + ".ref.truth.json");
    write_file_atomic(ref.string(), format == "csv" ? serialize_csv(r.sequence) : serialize_json(r.sequence));
    write_file_atomic(ref_truth.string(), truth_json(r.truth, p));
    entry["reference"] = ref.filename().string();
    entry["reference_truth"] = ref_truth.filename().string();
  }
  manifest["sessions"].push_back(entry);
}

void cmd_synth(const Flags& f, const CLI::App& app, const RunConfig& config) {
  auto given = [&](const char* name) { return ::given(app, name); };
  SynthParams base;
  if (!f.params.empty()) base = parse_synth_params(read_file(f.params));
  if (given("--seed")) base.seed = f.seed;
  if (given("--noise")) base.noise_sigma = f.noise;
  if (given("--dims")) base.dims = f.dims;
  if (given("--class")) {
    const GaitClass c = class_from_name(f.gait_class);
    base = class_preset(c, base.seed, base);
  }
  validate(base);

  const fs::path dir(config.out);
  nlohmann::ordered_json manifest{{"format", "gaitkit-synth/1"}, {"sessions", nlohmann::ordered_json::array()}};
  if (f.batch > 0) {
    const auto suite = class_suite(f.batch, base.seed, base);
    for (std::size_t i = 0; i < suite.size(); ++i) {
      const std::string name = fmt::format("{}_{:02}", class_name(suite[i].label), i % static_cast<std::size_t>(f.batch));
      write_session(dir, name, suite[i], f, config.format, manifest);
    }
  } else {
    write_session(dir, f.name, base, f, config.format, manifest);
  }
  write_file_atomic((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

void cmd_convert(const RunConfig& config) {
  const SkeletonSequence raw = load_input(config, config.input);
  if (raw.frames.empty()) throw Error(ErrorCode::EmptyInput, "input contains no frames");
  const SkeletonSequence seq = normalize_axes(raw, AxisConvention::parse(config.axes));
  const std::string body = config.format == "csv" ? serialize_csv(seq) : serialize_json(seq);
  fs::path target(config.out);
  const auto ext = target.extension().string();
  if (ext != ".json" && ext != ".csv") {
    target /= fs::path(config.input).stem().string() + (config.format == "csv" ? ".csv" : ".json");
  }
  write_file_atomic(target.string(), body);
}

void cmd_classify(const RunConfig& config) {
  std::string lines;
  for (const auto& j : run_classify(config)) lines += j.dump() + "\n";
  write_file_atomic((fs::path(config.out) / "classify.jsonl").string(), lines);
  std::cout << lines << std::flush;
}

void cmd_stream(const RunConfig& config) {
  StreamHooks hooks;
  std::size_t n = 0;
  hooks.on_report = [&](const CommandResult& result, const StreamStats&) {
    ++n;
    const fs::path dir = config.stream.once ? fs::path(config.out) : fs::path(config.out) / fmt::format("session_{:03}", n);
    write_outputs(dir.string(), result);
  };
  run_stream(config, std::cout, hooks);
}

void report_error(std::string_view category, std::string_view message, int code) {
  nlohmann::ordered_json j{{"error", {{"category", category}, {"message", message}, {"exit_code", code}}}};
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait analysis from skeletal keypoints"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "Run config (JSON) or a report embedding one");
  app.add_option("--input", f.input, "Keypoint file");
  app.add_option("--reference", f.reference, "Reference keypoint file");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--bin-width", f.bin_width, "Histogram bin width (degrees)");
  app.add_option("--listen", f.listen, "Stream endpoint HOST:PORT");
  app.add_option("--format", f.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", f.seed, "Synth seed");
  app.add_option("--condition", f.condition, "Condition label");
  app.add_option("--axes", f.axes, "Axis convention, e.g. x,-y,z");
  app.add_option("--smoothing", f.smoothing, "Angle smoothing window (frames, odd)");
  app.add_option("--log-level", f.log_level, "trace|debug|info|warn|error|off");

  auto* convert = app.add_subcommand("convert", "Normalize keypoints to the canonical JSON or CSV");
  auto* analyze = app.add_subcommand("analyze", "Angles, events, FPA and gait class of one recording");
  auto* validate_cmd = app.add_subcommand("validate", "Compare an estimate against a reference recording");
  auto* classify_cmd = app.add_subcommand("classify", "Gait class per session as JSON lines");
  auto* synth = app.add_subcommand("synth", "Generate synthetic sessions with ground truth");
  synth->add_option("--params", f.params, "Synth parameter file (JSON)");
  synth->add_option("--batch", f.batch, "Sessions per class for a four-class suite");
  synth->add_option("--class", f.gait_class, "Apply a class preset")
      ->check(CLI::IsMember({"normal", "supination", "pronation", "limp"}));
  synth->add_option("--noise", f.noise, "Keypoint noise sigma (m)");
  synth->add_option("--dims", f.dims, "2 or 3")->check(CLI::IsMember({2, 3}));
  synth->add_option("--name", f.name, "Session file stem");
  synth->add_flag("--with-reference", f.with_reference, "Also write a reference recording");
  synth->add_option("--ref-offset", f.ref_offset, "Reference clock offset (s)");
  synth->add_option("--ref-rate", f.ref_rate, "Reference clock rate");
  synth->add_option("--ref-fps", f.ref_fps, "Reference frame rate");
  synth->add_option("--ref-noise", f.ref_noise, "Reference keypoint noise sigma (m)");
  auto* stream = app.add_subcommand("stream", "Receive frames over UDP or TCP and report per session");
  stream->add_option("--transport", f.transport, "udp|tcp")->check(CLI::IsMember({"udp", "tcp"}));
  stream->add_option("--idle-timeout", f.idle_timeout, "Seconds of silence that close a session");
  stream->add_flag("--continuous", f.continuous, "Keep listening after a session closes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error("config", e.what(), 2);
    return 2;
  }

  try {
    const RunConfig config = effective_config(f, app);
    setup_logging(config.log_level);
    if (*convert) {
      cmd_convert(config);
    } else if (*analyze) {
      write_outputs(config.out, run_analyze(config));
    } else if (*validate_cmd) {
      write_outputs(config.out, run_validate(config));
    } else if (*classify_cmd) {
      cmd_classify(config);
    } else if (*synth) {
      cmd_synth(f, app, config);
    } else if (*stream) {
      cmd_stream(config);
    }
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what(), exit_code(e.code()));
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    report_error("io", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    report_error("internal", e.what(), 6);
    return 6;
  }
  return 0;
}
