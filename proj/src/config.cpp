#include "gaitkit/config.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gaitkit/error.hpp"

namespace gaitkit {

namespace {

template <typename T>
void read(const ordered_json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void check_keys(const ordered_json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw Error(ErrorCode::Config, fmt::format("config: '{}' must be an object", where));
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto k : allowed) known = known || it.key() == k;
    if (!known) throw Error(ErrorCode::Config, fmt::format("config: unknown key '{}' in {}", it.key(), where));
  }
}

Eigen::Vector3d vec3(const ordered_json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Config, "config: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

ordered_json vec3_json(const Eigen::Vector3d& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

}  // namespace

RunConfig parse_config(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::Config, fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (j.is_object() && j.contains("schema") && j.contains("config")) {
    if (j.at("schema") != kReportSchema) throw Error(ErrorCode::Config, "config: unsupported report schema");
    return config_from_json(j.at("config"));
  }
  return config_from_json(j);
}

RunConfig config_from_json(const ordered_json& j) {
  RunConfig c;
  try {
    check_keys(j,
               {"input", "reference", "out", "sessions", "condition", "ingest", "axes", "reference_axes",
                "fill_gaps", "smoothing_window", "events", "sync", "progression", "validation", "classifier",
                "stream", "log_level", "format"},
               "config");
    read(j, "input", c.input);
    read(j, "reference", c.reference);
    read(j, "out", c.out);
    read(j, "condition", c.condition);
    read(j, "axes", c.axes);
    read(j, "reference_axes", c.reference_axes);
    read(j, "fill_gaps", c.fill_gaps);
    read(j, "smoothing_window", c.smoothing_window);
    read(j, "log_level", c.log_level);
    read(j, "format", c.format);
    if (j.contains("sessions")) {
      for (const auto& s : j.at("sessions")) {
        check_keys(s, {"estimate", "reference", "condition"}, "sessions");
        SessionSpec spec;
        read(s, "estimate", spec.estimate);
        read(s, "reference", spec.reference);
        read(s, "condition", spec.condition);
        c.sessions.push_back(spec);
      }
    }
    if (j.contains("ingest")) {
      const auto& g = j.at("ingest");
      check_keys(g, {"confidence_floor", "frame_rate", "format", "joint_ordering", "column_map"}, "ingest");
      read(g, "confidence_floor", c.ingest.confidence_floor);
      if (g.contains("frame_rate") && !g.at("frame_rate").is_null()) c.ingest.frame_rate = g.at("frame_rate").get<double>();
      read(g, "format", c.ingest.format);
      read(g, "joint_ordering", c.ingest.joint_ordering);
      if (g.contains("column_map")) {
        for (auto it = g.at("column_map").begin(); it != g.at("column_map").end(); ++it) {
          const auto& v = it.value();
          if (!v.is_array() || v.size() != 2) {
            throw Error(ErrorCode::Config, fmt::format("column_map '{}' must be [joint, axis]", it.key()));
          }
          c.ingest.column_map.push_back({it.key(), {v[0].get<std::string>(), v[1].get<std::string>()}});
        }
      }
    }
    if (j.contains("events")) {
      const auto& e = j.at("events");
      check_keys(e, {"v_stop", "v_lift", "refractory_s", "smoothing_window"}, "events");
      read(e, "v_stop", c.events.v_stop);
      read(e, "v_lift", c.events.v_lift);
      read(e, "refractory_s", c.events.refractory_s);
      read(e, "smoothing_window", c.events.smoothing_window);
    }
    if (j.contains("sync")) {
      const auto& s = j.at("sync");
      check_keys(s, {"method", "jump_height", "min_jump_gap", "offset", "rate"}, "sync");
      read(s, "method", c.sync.method);
      read(s, "jump_height", c.sync.jump_height);
      read(s, "min_jump_gap", c.sync.min_jump_gap);
      read(s, "offset", c.sync.offset);
      read(s, "rate", c.sync.rate);
    }
    if (j.contains("progression")) {
      const auto& p = j.at("progression");
      check_keys(p, {"direction", "heel_to_toe", "projected", "fallback"}, "progression");
      if (p.contains("direction") && !p.at("direction").is_null() && p.at("direction") != "auto") {
        c.progression.direction = vec3(p.at("direction"));
      }
      read(p, "heel_to_toe", c.progression.heel_to_toe);
      read(p, "projected", c.progression.projected);
      read(p, "fallback", c.progression.fallback);
    }
    if (j.contains("validation")) {
      const auto& v = j.at("validation");
      check_keys(v, {"bin_width", "n_points", "signed"}, "validation");
      read(v, "bin_width", c.validation.bin_width);
      read(v, "n_points", c.validation.n_points);
      read(v, "signed", c.validation.signed_errors);
    }
    if (j.contains("classifier")) {
      const auto& t = j.at("classifier");
      check_keys(t, {"limp", "inv_ev", "toe_out", "toe_in", "fpa_baseline", "gain"}, "classifier");
      read(t, "limp", c.classifier.limp);
      read(t, "inv_ev", c.classifier.inv_ev);
      read(t, "toe_out", c.classifier.toe_out);
      read(t, "toe_in", c.classifier.toe_in);
      read(t, "fpa_baseline", c.classifier.fpa_baseline);
      read(t, "gain", c.classifier.gain);
    }
    if (j.contains("stream")) {
      const auto& s = j.at("stream");
      check_keys(s, {"listen", "transport", "idle_timeout_s", "once", "window_s"}, "stream");
      read(s, "listen", c.stream.listen);
      read(s, "transport", c.stream.transport);
      read(s, "idle_timeout_s", c.stream.idle_timeout_s);
      read(s, "once", c.stream.once);
      read(s, "window_s", c.stream.window_s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, fmt::format("config: {}", e.what()));
  }
  validate(c);
  return c;
}

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["input"] = c.input;
  j["reference"] = c.reference;
  j["out"] = c.out;
  ordered_json sessions = ordered_json::array();
  for (const auto& s : c.sessions) {
    sessions.push_back({{"estimate", s.estimate}, {"reference", s.reference}, {"condition", s.condition}});
  }
  j["sessions"] = sessions;
  j["condition"] = c.condition;
  ordered_json column_map = ordered_json::object();
  for (const auto& [column, binding] : c.ingest.column_map) column_map[column] = {binding.first, binding.second};
  j["ingest"] = {{"confidence_floor", c.ingest.confidence_floor},
                 {"frame_rate", c.ingest.frame_rate ? ordered_json(*c.ingest.frame_rate) : ordered_json(nullptr)},
                 {"format", c.ingest.format},
                 {"joint_ordering", c.ingest.joint_ordering},
                 {"column_map", column_map}};
  j["axes"] = c.axes;
  j["reference_axes"] = c.reference_axes;
  j["fill_gaps"] = c.fill_gaps;
  j["smoothing_window"] = c.smoothing_window;
  j["events"] = {{"v_stop", c.events.v_stop},
                 {"v_lift", c.events.v_lift},
                 {"refractory_s", c.events.refractory_s},
                 {"smoothing_window", c.events.smoothing_window}};
  j["sync"] = {{"method", c.sync.method},
               {"jump_height", c.sync.jump_height},
               {"min_jump_gap", c.sync.min_jump_gap},
               {"offset", c.sync.offset},
               {"rate", c.sync.rate}};
  j["progression"] = {{"direction", c.progression.direction ? vec3_json(*c.progression.direction) : ordered_json("auto")},
                      {"heel_to_toe", c.progression.heel_to_toe},
                      {"projected", c.progression.projected},
                      {"fallback", c.progression.fallback}};
  j["validation"] = {{"bin_width", c.validation.bin_width},
                     {"n_points", c.validation.n_points},
                     {"signed", c.validation.signed_errors}};
  j["classifier"] = {{"limp", c.classifier.limp},
                     {"inv_ev", c.classifier.inv_ev},
                     {"toe_out", c.classifier.toe_out},
                     {"toe_in", c.classifier.toe_in},
                     {"fpa_baseline", c.classifier.fpa_baseline},
                     {"gain", c.classifier.gain}};
  j["stream"] = {{"listen", c.stream.listen},
                 {"transport", c.stream.transport},
                 {"idle_timeout_s", c.stream.idle_timeout_s},
                 {"once", c.stream.once},
                 {"window_s", c.stream.window_s}};
  j["log_level"] = c.log_level;
  j["format"] = c.format;
  return j;
}

void validate(const RunConfig& c) {
  auto fail = [](std::string_view what) { throw Error(ErrorCode::Config, fmt::format("config: {}", what)); };
  if (c.fill_gaps < 0) fail("fill_gaps must be >= 0");
  if (c.smoothing_window < 1 || c.smoothing_window % 2 == 0) fail("smoothing_window must be odd and >= 1");
  if (c.events.smoothing_window < 1 || c.events.smoothing_window % 2 == 0) {
    fail("events.smoothing_window must be odd and >= 1");
  }
  if (!(c.events.v_stop > 0.0) || !(c.events.v_lift > 0.0) || !(c.events.refractory_s >= 0.0)) {
    fail("event thresholds must be positive");
  }
  if (c.sync.method != "jumps" && c.sync.method != "none") fail("sync.method must be 'jumps' or 'none'");
  if (!(c.sync.jump_height > 0.0) || !(c.sync.min_jump_gap >= 0.0) || !(c.sync.rate > 0.0)) {
    fail("sync parameters out of range");
  }
  if (!(c.validation.bin_width > 0.0) || !std::isfinite(c.validation.bin_width)) fail("bin_width must be positive");
  if (c.validation.n_points < 2) fail("validation.n_points must be >= 2");
  if (!(c.classifier.limp > 0.0) || !(c.classifier.inv_ev > 0.0) || !(c.classifier.toe_in < 0.0) ||
      !(c.classifier.gain > 0.0)) {
    fail("classifier thresholds out of range");
  }
  if (c.ingest.format != "auto" && c.ingest.format != "json" && c.ingest.format != "csv") {
    fail("ingest.format must be auto, json or csv");
  }
  if (c.format != "json" && c.format != "csv") fail("format must be json or csv");
  if (c.stream.transport != "udp" && c.stream.transport != "tcp") fail("stream.transport must be udp or tcp");
  if (!(c.stream.idle_timeout_s > 0.0)) fail("stream.idle_timeout_s must be positive");
  if (c.progression.direction && !(c.progression.direction->norm() > 0.0)) fail("progression.direction is zero");
  AxisConvention::parse(c.axes);
  AxisConvention::parse(c.reference_axes);
}

ParseOptions json_options(const RunConfig& c) {
  ParseOptions o;
  o.confidence_floor = c.ingest.confidence_floor;
  o.frame_rate = c.ingest.frame_rate;
  if (!c.ingest.joint_ordering.empty()) o.ordering = JointOrdering::from_names(c.ingest.joint_ordering);
  return o;
}

CsvOptions csv_options(const RunConfig& c) {
  CsvOptions o;
  o.confidence_floor = c.ingest.confidence_floor;
  o.frame_rate = c.ingest.frame_rate;
  static constexpr std::array<std::string_view, 4> kAxes{"x", "y", "z", "conf"};
  for (const auto& [column, binding] : c.ingest.column_map) {
    const auto joint = joint_from_name(binding.first);
    if (!joint) throw Error(ErrorCode::Config, fmt::format("column_map: unknown joint '{}'", binding.first));
    const auto it = std::find(kAxes.begin(), kAxes.end(), binding.second);
    if (it == kAxes.end()) throw Error(ErrorCode::Config, fmt::format("column_map: unknown axis '{}'", binding.second));
    o.column_map[column] = {*joint, static_cast<int>(it - kAxes.begin())};
  }
  return o;
}

InputFormat input_format(const RunConfig& c) {
  if (c.ingest.format == "json") return InputFormat::Json;
  if (c.ingest.format == "csv") return InputFormat::Csv;
  return InputFormat::Auto;
}

JumpParams jump_params(const RunConfig& c) {
  JumpParams p;
  p.jump_height = c.sync.jump_height;
  p.min_jump_gap = c.sync.min_jump_gap;
  return p;
}

ProgressionOptions progression_options(const RunConfig& c) {
  ProgressionOptions o;
  o.heel_to_toe = c.progression.heel_to_toe;
  o.projected = c.progression.projected;
  o.fallback_to_displacement = c.progression.fallback;
  return o;
}

}  // namespace gaitkit
