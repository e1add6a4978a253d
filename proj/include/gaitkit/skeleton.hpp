#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaitkit/joints.hpp"

namespace gaitkit {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

/// A tracked landmark. 2D data keeps z == 0.
struct Keypoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double confidence = 1.0;
  bool filled = false;  // produced by gap interpolation, not observed
};

struct SkeletonFrame {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  std::array<std::optional<Keypoint>, kAllJoints.size()> joints{};

  bool has(JointId j) const { return joints[static_cast<std::size_t>(j)].has_value(); }
  const Keypoint& keypoint(JointId j) const { return *joints[static_cast<std::size_t>(j)]; }
  const Eigen::Vector3d& at(JointId j) const { return keypoint(j).position; }
  void set(JointId j, const Eigen::Vector3d& p, double confidence = 1.0) {
    joints[static_cast<std::size_t>(j)] = Keypoint{p, confidence, false};
  }
  void erase(JointId j) { joints[static_cast<std::size_t>(j)].reset(); }
  std::size_t joint_count() const;
};

/// Signed permutation taking raw coordinates to (lateral, vertical, depth).
///
/// Written as three comma-separated signed source axes, e.g. "x,-y,z" for
/// image coordinates with y pointing down. The default is the identity
/// "x,y,z": +x lateral, +y up, +z away from the camera.
class AxisConvention {
 public:
  AxisConvention() : matrix_(Eigen::Matrix3d::Identity()) {}

  /// Throws ErrorCode::Config unless the string names a signed permutation.
  static AxisConvention parse(const std::string& spec);
  static AxisConvention from_matrix(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return matrix_; }
  double determinant() const { return matrix_.determinant(); }
  bool is_identity() const { return matrix_.isIdentity(0.0); }
  AxisConvention inverse() const { return AxisConvention(matrix_.transpose()); }
  AxisConvention then(const AxisConvention& next) const {
    return AxisConvention(next.matrix_ * matrix_);
  }
  std::string to_string() const;

  friend bool operator==(const AxisConvention& a, const AxisConvention& b) {
    return a.matrix_ == b.matrix_;
  }

 private:
  explicit AxisConvention(const Eigen::Matrix3d& m) : matrix_(m) {}
  Eigen::Matrix3d matrix_;
};

struct SkeletonSequence {
  std::vector<SkeletonFrame> frames;
  int dims = 3;
  double frame_rate = 30.0;
  /// Convention of the stored coordinates relative to the canonical axes;
  /// identity once normalized.
  AxisConvention axes;
  std::string condition;

  bool empty() const { return frames.empty(); }
  std::size_t size() const { return frames.size(); }
};

/// Throws ErrorCode::Ordering when timestamps are not strictly increasing and
/// ErrorCode::Config when frame_rate <= 0 or dims is not 2 or 3.
void check_sequence(const SkeletonSequence& seq);

/// Mirror the walker: negate the lateral axis and swap left/right labels.
SkeletonSequence mirror_sequence(const SkeletonSequence& seq);

/// Play the sequence backwards, keeping the original timestamp grid.
SkeletonSequence reverse_in_time(const SkeletonSequence& seq);

/// Add `dt` seconds to every timestamp.
SkeletonSequence shift_time(const SkeletonSequence& seq, double dt);

}  // namespace gaitkit
