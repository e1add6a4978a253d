#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace gaitkit {

enum class Side { Left, Right };

inline constexpr std::array<Side, 2> kSides{Side::Left, Side::Right};

constexpr Side mirror(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

std::string_view side_name(Side s);
std::optional<Side> side_from_name(std::string_view name);

/// Anatomical landmarks tracked by the toolkit. The six gait joints come
/// first; heel and hip are optional extras.
enum class JointId {
  LeftKnee,
  RightKnee,
  LeftAnkle,
  RightAnkle,
  LeftToe,
  RightToe,
  LeftHeel,
  RightHeel,
  LeftHip,
  RightHip,
};

inline constexpr std::array<JointId, 10> kAllJoints{
    JointId::LeftKnee,  JointId::RightKnee, JointId::LeftAnkle, JointId::RightAnkle,
    JointId::LeftToe,   JointId::RightToe,  JointId::LeftHeel,  JointId::RightHeel,
    JointId::LeftHip,   JointId::RightHip};

inline constexpr std::array<JointId, 6> kGaitJoints{
    JointId::LeftKnee, JointId::RightKnee, JointId::LeftAnkle,
    JointId::RightAnkle, JointId::LeftToe, JointId::RightToe};

std::string_view joint_name(JointId j);
std::optional<JointId> joint_from_name(std::string_view name);

Side side_of(JointId j);
JointId mirror(JointId j);

JointId knee(Side s);
JointId ankle(Side s);
JointId toe(Side s);
JointId heel(Side s);
JointId hip(Side s);

}  // namespace gaitkit
