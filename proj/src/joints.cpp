#include "gaitkit/joints.hpp"

#include "gaitkit/error.hpp"

namespace gaitkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config: return "config";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Schema: return "schema_mismatch";
    case ErrorCode::Ordering: return "ordering";
    case ErrorCode::Dimension: return "dimensionality";
    case ErrorCode::MissingJoint: return "missing_joint";
    case ErrorCode::DegenerateGeometry: return "degenerate_geometry";
    case ErrorCode::DegenerateFit: return "degenerate_fit";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::InsufficientData: return "insufficient_data";
    case ErrorCode::Sequencing: return "sequencing";
    case ErrorCode::Range: return "range";
    case ErrorCode::InvalidFeature: return "invalid_feature";
    case ErrorCode::InsufficientLandmarks: return "insufficient_landmarks";
    case ErrorCode::InconsistentLandmarks: return "inconsistent_landmarks";
    case ErrorCode::EmptyOverlap: return "empty_overlap";
    case ErrorCode::Io: return "io";
    case ErrorCode::Internal: return "internal";
  }
  return "internal";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Io:
      return 2;
    case ErrorCode::Parse:
    case ErrorCode::Schema:
    case ErrorCode::Ordering:
    case ErrorCode::Dimension:
      return 3;
    case ErrorCode::MissingJoint:
    case ErrorCode::DegenerateGeometry:
    case ErrorCode::DegenerateFit:
    case ErrorCode::EmptyInput:
    case ErrorCode::InsufficientData:
    case ErrorCode::Sequencing:
    case ErrorCode::Range:
    case ErrorCode::InvalidFeature:
    case ErrorCode::EmptyOverlap:
      return 4;
    case ErrorCode::InsufficientLandmarks:
    case ErrorCode::InconsistentLandmarks:
      return 5;
    case ErrorCode::Internal:
      return 6;
  }
  return 6;
}

namespace {

struct JointEntry {
  JointId id;
  std::string_view name;
};

constexpr std::array<JointEntry, 10> kJointNames{{
    {JointId::LeftKnee, "left_knee"},
    {JointId::RightKnee, "right_knee"},
    {JointId::LeftAnkle, "left_ankle"},
    {JointId::RightAnkle, "right_ankle"},
    {JointId::LeftToe, "left_toe"},
    {JointId::RightToe, "right_toe"},
    {JointId::LeftHeel, "left_heel"},
    {JointId::RightHeel, "right_heel"},
    {JointId::LeftHip, "left_hip"},
    {JointId::RightHip, "right_hip"},
}};

}  // namespace

std::string_view side_name(Side s) { return s == Side::Left ? "left" : "right"; }

std::optional<Side> side_from_name(std::string_view name) {
  if (name == "left" || name == "L") return Side::Left;
  if (name == "right" || name == "R") return Side::Right;
  return std::nullopt;
}

std::string_view joint_name(JointId j) {
  return kJointNames[static_cast<std::size_t>(j)].name;
}

std::optional<JointId> joint_from_name(std::string_view name) {
  for (const auto& e : kJointNames) {
    if (e.name == name) return e.id;
  }
  return std::nullopt;
}

Side side_of(JointId j) {
  return static_cast<int>(j) % 2 == 0 ? Side::Left : Side::Right;
}

JointId mirror(JointId j) {
  const int v = static_cast<int>(j);
  return static_cast<JointId>(v % 2 == 0 ? v + 1 : v - 1);
}

JointId knee(Side s) { return s == Side::Left ? JointId::LeftKnee : JointId::RightKnee; }
JointId ankle(Side s) { return s == Side::Left ? JointId::LeftAnkle : JointId::RightAnkle; }
JointId toe(Side s) { return s == Side::Left ? JointId::LeftToe : JointId::RightToe; }
JointId heel(Side s) { return s == Side::Left ? JointId::LeftHeel : JointId::RightHeel; }
JointId hip(Side s) { return s == Side::Left ? JointId::LeftHip : JointId::RightHip; }

}  // namespace gaitkit
