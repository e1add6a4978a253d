#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gaitkit/skeleton.hpp"

namespace gaitkit {

/// Maps positional keypoint slots (OpenPose-style flattened triples) onto
/// joints. Slots that are not tracked hold nullopt.
struct JointOrdering {
  std::vector<std::optional<JointId>> slots;

  /// OpenPose BODY_25 layout.
  static JointOrdering body25();
  /// Names are joint names ("left_knee") or empty strings for untracked slots.
  static JointOrdering from_names(const std::vector<std::string>& names);
};

struct ParseOptions {
  enum class Mode { Auto, Canonical, Positional };

  Mode mode = Mode::Auto;
  /// Joints with confidence strictly below the floor are recorded as missing.
  double confidence_floor = 0.1;
  std::optional<double> frame_rate;
  /// Required for positional 3D input; inferred otherwise.
  std::optional<int> dims;
  JointOrdering ordering = JointOrdering::body25();
  /// Key of the flattened array; empty picks pose_keypoints_3d,
  /// pose_keypoints_2d or keypoints, whichever is present.
  std::string positional_key;
};

/// column name -> (joint, axis) where axis 0..2 is x/y/z and 3 is confidence.
using ColumnMap = std::map<std::string, std::pair<JointId, int>>;

inline constexpr int kConfidenceAxis = 3;

struct CsvOptions {
  /// Empty means derive from "<joint>_<axis>" header names.
  ColumnMap column_map;
  double confidence_floor = 0.1;
  std::optional<double> frame_rate;
};

/// Header metadata carried by the canonical keypoint JSON.
struct StreamHeader {
  std::optional<int> dims;
  std::optional<double> frame_rate;
  std::string axes;
  std::string condition;
};

inline constexpr std::string_view kKeypointFormat = "gaitkit-keypoints/1";

SkeletonSequence parse_keypoint_json(std::string_view bytes, const ParseOptions& options = {});
SkeletonSequence parse_keypoint_csv(std::string_view bytes, const CsvOptions& options = {});

/// One line of a keypoint stream: either the optional header object or a frame.
using StreamLine = std::variant<StreamHeader, SkeletonFrame>;

/// Parses a single canonical line. `fallback_index` numbers frames without an
/// explicit "frame" field; `fallback_rate` synthesizes their timestamps.
/// Throws ErrorCode::Parse / ErrorCode::Schema; never checks ordering.
StreamLine parse_frame_line(std::string_view line, int* dims, const ParseOptions& options,
                            std::int64_t fallback_index, double fallback_rate);

/// Settles the frame rate (forced, then header, then the median frame period,
/// then 30 Hz), synthesizes missing timestamps and checks ordering.
void finalize_sequence(SkeletonSequence& seq, const std::optional<double>& forced_rate,
                       const std::optional<double>& header_rate);

/// Canonical frame-per-line JSON. Parse then serialize is byte-identical on
/// output of this function.
std::string serialize_json(const SkeletonSequence& seq);
std::string serialize_frame_json(const SkeletonFrame& frame, int dims);
std::string serialize_header_json(const SkeletonSequence& seq);

/// Canonical CSV: "frame,t,<joint>_<axis>,...,<joint>_conf".
std::string serialize_csv(const SkeletonSequence& seq);

SkeletonSequence normalize_axes(const SkeletonSequence& seq, const AxisConvention& convention);

/// Linear interpolation (in time) over missing runs of at most max_gap_frames
/// bounded by observations on both sides.
SkeletonSequence fill_gaps(const SkeletonSequence& seq, int max_gap_frames);

/// Centered moving average over present samples; window must be odd and >= 1.
SkeletonSequence smooth(const SkeletonSequence& seq, int window_frames);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view contents);

enum class InputFormat { Auto, Json, Csv };

/// Loads by extension (.csv vs anything else) unless a format is forced.
SkeletonSequence load_sequence(const std::string& path, const ParseOptions& json_options,
                               const CsvOptions& csv_options, InputFormat format = InputFormat::Auto);

}  // namespace gaitkit
