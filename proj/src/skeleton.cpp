#include "gaitkit/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "gaitkit/error.hpp"

namespace gaitkit {

std::size_t SkeletonFrame::joint_count() const {
  return static_cast<std::size_t>(
      std::count_if(joints.begin(), joints.end(), [](const auto& k) { return k.has_value(); }));
}

AxisConvention AxisConvention::parse(const std::string& spec) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  std::stringstream ss(spec);
  std::string token;
  int row = 0;
  while (std::getline(ss, token, ',')) {
    token.erase(std::remove_if(token.begin(), token.end(), ::isspace), token.end());
    if (row >= 3 || token.empty()) {
      throw Error(ErrorCode::Config, fmt::format("axis convention '{}': expected three axes", spec));
    }
    double sign = 1.0;
    if (token.front() == '-' || token.front() == '+') {
      sign = token.front() == '-' ? -1.0 : 1.0;
      token.erase(0, 1);
    }
    int col = -1;
    if (token == "x") col = 0;
    else if (token == "y") col = 1;
    else if (token == "z") col = 2;
    if (col < 0) {
      throw Error(ErrorCode::Config, fmt::format("axis convention '{}': unknown axis '{}'", spec, token));
    }
    m(row, col) = sign;
    ++row;
  }
  if (row == 2) {
    // 2D shorthand: depth stays on z.
    m(2, 2) = 1.0;
    row = 3;
  }
  if (row != 3) {
    throw Error(ErrorCode::Config, fmt::format("axis convention '{}': expected three axes", spec));
  }
  return from_matrix(m);
}

AxisConvention AxisConvention::from_matrix(const Eigen::Matrix3d& m) {
  for (int i = 0; i < 3; ++i) {
    int row_nonzero = 0;
    int col_nonzero = 0;
    for (int j = 0; j < 3; ++j) {
      if (m(i, j) != 0.0) {
        ++row_nonzero;
        if (std::abs(m(i, j)) != 1.0) {
          throw Error(ErrorCode::Config, "axis convention entries must be 0 or +/-1");
        }
      }
      if (m(j, i) != 0.0) ++col_nonzero;
    }
    if (row_nonzero != 1 || col_nonzero != 1) {
      throw Error(ErrorCode::Config, "axis convention is not invertible (not a signed permutation)");
    }
  }
  return AxisConvention(m);
}

std::string AxisConvention::to_string() const {
  std::string out;
  constexpr char names[3] = {'x', 'y', 'z'};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (matrix_(i, j) != 0.0) {
        if (i > 0) out += ',';
        if (matrix_(i, j) < 0) out += '-';
        out += names[j];
      }
    }
  }
  return out;
}

void check_sequence(const SkeletonSequence& seq) {
  if (seq.dims != 2 && seq.dims != 3) {
    throw Error(ErrorCode::Config, fmt::format("dims must be 2 or 3, got {}", seq.dims));
  }
  if (!(seq.frame_rate > 0.0) || !std::isfinite(seq.frame_rate)) {
    throw Error(ErrorCode::Config, "frame_rate must be positive");
  }
  for (std::size_t i = 1; i < seq.frames.size(); ++i) {
    if (!(seq.frames[i].timestamp > seq.frames[i - 1].timestamp)) {
      throw Error(ErrorCode::Ordering,
                  fmt::format("timestamps not strictly increasing at frame {} ({} after {})",
                              seq.frames[i].frame_index, seq.frames[i].timestamp,
                              seq.frames[i - 1].timestamp));
    }
  }
}

SkeletonSequence mirror_sequence(const SkeletonSequence& seq) {
  SkeletonSequence out = seq;
  for (auto& frame : out.frames) {
    SkeletonFrame mirrored = frame;
    for (JointId j : kAllJoints) {
      const auto& src = frame.joints[static_cast<std::size_t>(j)];
      auto& dst = mirrored.joints[static_cast<std::size_t>(mirror(j))];
      dst = src;
      if (dst) dst->position.x() = -dst->position.x();
    }
    frame = mirrored;
  }
  return out;
}

SkeletonSequence reverse_in_time(const SkeletonSequence& seq) {
  SkeletonSequence out = seq;
  const std::size_t n = seq.frames.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.frames[i].joints = seq.frames[n - 1 - i].joints;
  }
  return out;
}

SkeletonSequence shift_time(const SkeletonSequence& seq, double dt) {
  SkeletonSequence out = seq;
  for (auto& f : out.frames) f.timestamp += dt;
  return out;
}

}  // namespace gaitkit
