#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gaitkit/classify.hpp"
#include "gaitkit/gait_events.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/progression.hpp"
#include "gaitkit/sync.hpp"

namespace gaitkit {

using ordered_json = nlohmann::ordered_json;

inline constexpr std::string_view kReportSchema = "gaitkit-report/1";

struct SessionSpec {
  std::string estimate;
  std::string reference;
  std::string condition;
};

struct IngestConfig {
  double confidence_floor = 0.1;
  std::optional<double> frame_rate;
  std::string format = "auto";  // auto | json | csv
  /// Positional slot names; empty means BODY_25.
  std::vector<std::string> joint_ordering;
  /// CSV column -> [joint, axis] with axis one of x, y, z, conf.
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> column_map;
};

struct SyncConfig {
  std::string method = "jumps";  // jumps | none
  double jump_height = 0.10;
  double min_jump_gap = 1.0;
  /// Used when method is "none".
  double offset = 0.0;
  double rate = 1.0;
};

struct ProgressionConfig {
  /// Walking direction for dorsiflexion; empty estimates it per session.
  std::optional<Eigen::Vector3d> direction;
  bool heel_to_toe = false;
  bool projected = true;
  bool fallback = false;
};

struct ValidationConfig {
  double bin_width = 1.0;
  int n_points = 101;
  bool signed_errors = false;
};

struct StreamConfig {
  std::string listen = "127.0.0.1:9870";
  std::string transport = "udp";  // udp | tcp
  double idle_timeout_s = 5.0;
  bool once = true;
  /// Sliding window (seconds) for incremental angle rows.
  double window_s = 2.0;
};

struct RunConfig {
  std::string input;
  std::string reference;
  std::string out = "gaitkit-out";
  std::vector<SessionSpec> sessions;
  std::string condition;
  IngestConfig ingest;
  std::string axes = "x,y,z";
  std::string reference_axes = "x,y,z";
  int fill_gaps = 5;
  int smoothing_window = 1;
  EventParams events;
  SyncConfig sync;
  ProgressionConfig progression;
  ValidationConfig validation;
  ClassifierThresholds classifier;
  StreamConfig stream;
  std::string log_level = "warn";
  std::string format = "json";  // json | csv for convert output
};

/// Accepts a bare config object or a report carrying one under "config".
/// Unknown keys are configuration errors.
RunConfig parse_config(std::string_view text);
RunConfig config_from_json(const ordered_json& j);
ordered_json config_to_json(const RunConfig& config);

/// Throws ErrorCode::Config on out-of-range values.
void validate(const RunConfig& config);

ParseOptions json_options(const RunConfig& config);
CsvOptions csv_options(const RunConfig& config);
InputFormat input_format(const RunConfig& config);
JumpParams jump_params(const RunConfig& config);
ProgressionOptions progression_options(const RunConfig& config);

}  // namespace gaitkit
