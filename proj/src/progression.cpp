#include "gaitkit/progression.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace gaitkit {

namespace {

Eigen::Vector3d horizontal(const Eigen::Vector3d& v, const Eigen::Vector3d& up) {
  return v - v.dot(up) * up;
}

}  // namespace

double signed_foot_angle(const Eigen::Vector3d& foot_axis, const Eigen::Vector3d& direction,
                         Side side, const Eigen::Vector3d& up, bool projected) {
  const double mirror_sign = side == Side::Left ? 1.0 : -1.0;
  const Eigen::Vector3d d = projected ? horizontal(direction, up) : direction;
  const Eigen::Vector3d f = projected ? horizontal(foot_axis, up) : foot_axis;
  const double turn = up.dot(d.cross(f));
  if (projected) {
    return mirror_sign * rad_to_deg(std::atan2(turn, d.dot(f)));
  }
  const double magnitude = angle_between(f, d);
  return mirror_sign * (turn < 0.0 ? -magnitude : magnitude);
}

FootAngleResult foot_progression_angle(const Eigen::Matrix3Xd& foot_axes,
                                       const ProgressionLine<double>& line, Side side,
                                       const Eigen::Vector3d& up, bool projected) {
  const Eigen::Vector3d u = up.normalized();
  const Eigen::Vector3d direction = line.direction();
  FootAngleResult result;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < foot_axes.cols(); ++i) {
    const Eigen::Vector3d f = foot_axes.col(i);
    if (horizontal(f, u).norm() < kMinLinkLength) continue;
    sum += signed_foot_angle(f, direction, side, u, projected);
    ++result.frames_used;
  }
  if (result.frames_used == 0) {
    throw Error(ErrorCode::EmptyInput, "foot progression angle: no usable stance frames");
  }
  result.mean_deg = sum / static_cast<double>(result.frames_used);
  return result;
}

std::vector<FootProgressionSample> session_progression(const SkeletonSequence& seq,
                                                       const std::vector<GaitCycle>& cycles,
                                                       const ProgressionOptions& options) {
  std::vector<FootProgressionSample> out;
  if (seq.dims != 3) {
    if (!cycles.empty()) spdlog::info("progression: foot progression angle needs 3D keypoints; skipped");
    return out;
  }
  const Eigen::Vector3d up = options.up.normalized();
  auto frame_pos = [&](std::int64_t frame_index) -> std::optional<std::size_t> {
    auto it = std::lower_bound(seq.frames.begin(), seq.frames.end(), frame_index,
                               [](const SkeletonFrame& f, std::int64_t idx) { return f.frame_index < idx; });
    if (it == seq.frames.end() || it->frame_index != frame_index) return std::nullopt;
    return static_cast<std::size_t>(it - seq.frames.begin());
  };

  for (const auto& cycle : cycles) {
    const Side side = cycle.side;
    const JointId a = ankle(side);
    const JointId t = toe(side);
    const JointId h = heel(side);
    const auto first = frame_pos(cycle.start.frame_index);
    const auto last_stance = frame_pos(cycle.toe_off.frame_index);
    const auto closing = frame_pos(cycle.end.frame_index);
    if (!first || !last_stance || !closing) continue;

    std::vector<Eigen::Vector3d> ankles;
    std::vector<Eigen::Vector3d> feet;
    for (std::size_t i = *first; i <= *last_stance; ++i) {
      const auto& f = seq.frames[i];
      if (!f.has(a)) continue;
      ankles.push_back(f.at(a));
      if (f.has(t)) {
        const bool use_heel = options.heel_to_toe && f.has(h);
        feet.push_back(f.at(t) - (use_heel ? f.at(h) : f.at(a)));
      }
    }
    if (seq.frames[*closing].has(a)) ankles.push_back(seq.frames[*closing].at(a));
    if (ankles.size() < 2 || feet.empty()) {
      spdlog::info("progression: cycle at frame {} ({}) lacks stance keypoints; skipped",
                   cycle.start.frame_index, side_name(side));
      continue;
    }

    Eigen::Matrix3Xd points(3, static_cast<Eigen::Index>(ankles.size()));
    for (std::size_t i = 0; i < ankles.size(); ++i) points.col(static_cast<Eigen::Index>(i)) = ankles[i];
    const Eigen::Vector3d displacement = ankles.back() - ankles.front();

    ProgressionLine<double> line;
    try {
      line = fit_progression_line(points);
      line.sense = displacement.dot(Eigen::Vector3d(line.m, line.n, 1.0)) < 0.0 ? -1.0 : 1.0;
    } catch (const Error& e) {
      const Eigen::Vector3d dh = horizontal(displacement, up);
      if (!options.fallback_to_displacement || dh.norm() < kMinLinkLength || std::abs(dh.z()) < kMinDepthSpread) {
        spdlog::info("progression: cycle at frame {} ({}) skipped: {}", cycle.start.frame_index,
                     side_name(side), e.what());
        continue;
      }
      line.m = dh.x() / dh.z();
      line.n = dh.y() / dh.z();
      line.sense = dh.z() < 0.0 ? -1.0 : 1.0;
      line.x0 = ankles.front().x() - line.m * ankles.front().z();
      line.y0 = ankles.front().y() - line.n * ankles.front().z();
    }

    Eigen::Matrix3Xd foot_axes(3, static_cast<Eigen::Index>(feet.size()));
    for (std::size_t i = 0; i < feet.size(); ++i) foot_axes.col(static_cast<Eigen::Index>(i)) = feet[i];
    try {
      const auto fpa = foot_progression_angle(foot_axes, line, side, up, options.projected);
      out.push_back(FootProgressionSample{cycle, side, fpa.mean_deg, line});
    } catch (const Error& e) {
      spdlog::info("progression: cycle at frame {} ({}) skipped: {}", cycle.start.frame_index,
                   side_name(side), e.what());
    }
  }
  return out;
}

Eigen::Vector3d estimate_walking_direction(const SkeletonSequence& seq, const Eigen::Vector3d& up_in) {
  const Eigen::Vector3d up = up_in.normalized();
  std::vector<Eigen::Vector3d> mids;
  for (const auto& f : seq.frames) {
    if (f.has(JointId::LeftAnkle) && f.has(JointId::RightAnkle)) {
      mids.push_back(0.5 * (f.at(JointId::LeftAnkle) + f.at(JointId::RightAnkle)));
    }
  }
  if (seq.dims == 2) {
    const double dx = mids.size() >= 2 ? mids.back().x() - mids.front().x() : 0.0;
    return dx < 0.0 ? Eigen::Vector3d(-1, 0, 0) : Eigen::Vector3d(1, 0, 0);
  }
  if (mids.size() >= 2) {
    Eigen::Matrix3Xd points(3, static_cast<Eigen::Index>(mids.size()));
    for (std::size_t i = 0; i < mids.size(); ++i) points.col(static_cast<Eigen::Index>(i)) = mids[i];
    try {
      auto line = fit_progression_line(points);
      Eigen::Vector3d d = horizontal(Eigen::Vector3d(line.m, line.n, 1.0), up);
      if (d.norm() > kMinLinkLength) {
        d.normalize();
        if ((mids.back() - mids.front()).dot(d) < 0.0) d = -d;
        return d;
      }
    } catch (const Error& e) {
      spdlog::debug("walking direction: {}", e.what());
    }
  }
  spdlog::info("walking direction: trajectory has no usable spread, assuming +z");
  return Eigen::Vector3d::UnitZ();
}

std::string progression_csv(const std::vector<FootProgressionSample>& samples) {
  std::string out = "cycle_start_frame,side,fpa_deg\n";
  for (const auto& s : samples) {
    out += fmt::format("{},{},{}\n", s.cycle.start.frame_index, side_name(s.side), s.angle);
  }
  return out;
}

}  // namespace gaitkit
