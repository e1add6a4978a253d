#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gaitkit/classify.hpp"
#include "gaitkit/config.hpp"
#include "gaitkit/gait_events.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/progression.hpp"
#include "gaitkit/skeleton.hpp"
#include "gaitkit/validation.hpp"

namespace gaitkit {

struct SessionAnalysis {
  SkeletonSequence cleaned;   // canonical axes, short gaps filled
  SkeletonSequence smoothed;  // cleaned after the angle smoothing window
  std::string condition;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  AngleSeries angles;
  std::vector<GaitEvent> events;
  std::vector<GaitCycle> cycles;
  std::vector<FootProgressionSample> fpa;
  std::optional<GaitFeatures> features;
  std::optional<ClassLabel> label;
  std::string classification_note;
};

/// Normalizes, fills, smooths and runs angles, events, progression and the
/// classifier. Throws ErrorCode::EmptyInput for a sequence without frames;
/// classification failures are fatal only when `require_label` is set.
SessionAnalysis analyze_sequence(const SkeletonSequence& raw, const RunConfig& config, const std::string& axes,
                                 bool require_label);

struct Artifact {
  std::string name;
  std::string contents;
};

struct CommandResult {
  ordered_json report;
  std::vector<Artifact> files;  // plot data, written before the report
};

ordered_json box_json(const BoxStats& b);
ordered_json analysis_json(const SessionAnalysis& a);

/// Report for one already-loaded sequence. `input` describes its source.
CommandResult run_analyze(const RunConfig& config, const SkeletonSequence& raw, ordered_json input);
CommandResult run_analyze(const RunConfig& config);
CommandResult run_validate(const RunConfig& config);

/// One JSON object per session, in session order.
std::vector<ordered_json> run_classify(const RunConfig& config);

SkeletonSequence load_input(const RunConfig& config, const std::string& path);

/// Writes plot files then "report.json" into `out_dir`, each atomically.
void write_outputs(const std::string& out_dir, const CommandResult& result);

std::string dump_report(const ordered_json& report);

}  // namespace gaitkit
