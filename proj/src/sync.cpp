#include "gaitkit/sync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gaitkit/error.hpp"

namespace gaitkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Peak {
  double time = 0.0;
  double height = 0.0;
};

}  // namespace

std::vector<double> detect_jumps(const SkeletonSequence& seq, const JumpParams& params) {
  const Eigen::Vector3d up = params.up.normalized();
  std::vector<double> times;
  std::vector<double> elevation;
  for (const auto& f : seq.frames) {
    if (!f.has(JointId::LeftAnkle) || !f.has(JointId::RightAnkle)) continue;
    times.push_back(f.timestamp);
    elevation.push_back(0.5 * up.dot(f.at(JointId::LeftAnkle) + f.at(JointId::RightAnkle)));
  }
  if (elevation.size() < 3) return {};

  std::vector<double> sorted = elevation;
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  double median = sorted[mid];
  if (sorted.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  const double threshold = median + params.jump_height;

  std::vector<Peak> peaks;
  const std::size_t n = elevation.size();
  std::size_t i = 0;
  while (i < n) {
    if (!(elevation[i] > threshold)) {
      ++i;
      continue;
    }
    std::size_t apex = i;
    std::size_t j = i;
    while (j < n && elevation[j] > threshold) {
      if (elevation[j] > elevation[apex]) apex = j;
      ++j;
    }
    Peak peak{times[apex], elevation[apex]};
    if (apex > 0 && apex + 1 < n) {
      const double ym = elevation[apex - 1];
      const double y0 = elevation[apex];
      const double yp = elevation[apex + 1];
      const double curvature = ym - 2.0 * y0 + yp;
      if (curvature < 0.0) {
        const double delta = 0.5 * (ym - yp) / curvature;
        const double step = 0.5 * (times[apex + 1] - times[apex - 1]);
        peak.time = times[apex] + delta * step;
        peak.height = y0 - 0.25 * (ym - yp) * delta;
      }
    }
    peaks.push_back(peak);
    i = j;
  }

  std::vector<Peak> merged;
  for (const auto& p : peaks) {
    if (!merged.empty() && p.time - merged.back().time < params.min_jump_gap) {
      if (p.height > merged.back().height) merged.back() = p;
      continue;
    }
    merged.push_back(p);
  }
  std::vector<double> out;
  out.reserve(merged.size());
  for (const auto& p : merged) out.push_back(p.time);
  return out;
}

TimeMapping align(const std::vector<double>& source_jumps, const std::vector<double>& reference_jumps) {
  if (source_jumps.size() < 2 || reference_jumps.size() < 2) {
    throw Error(ErrorCode::InsufficientLandmarks,
                fmt::format("synchronization needs two jumps per stream (found {} and {})",
                            source_jumps.size(), reference_jumps.size()));
  }
  std::vector<double> s;
  std::vector<double> r;
  if (source_jumps.size() == reference_jumps.size()) {
    s = source_jumps;
    r = reference_jumps;
  } else {
    s = {source_jumps.front(), source_jumps.back()};
    r = {reference_jumps.front(), reference_jumps.back()};
  }
  const auto count = static_cast<double>(s.size());
  double ms = 0.0;
  double mr = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i];
    mr += r[i];
  }
  ms /= count;
  mr /= count;
  double ss = 0.0;
  double rr = 0.0;
  double sr = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ss += (s[i] - ms) * (s[i] - ms);
    rr += (r[i] - mr) * (r[i] - mr);
    sr += (s[i] - ms) * (r[i] - mr);
  }
  if (!(ss > 0.0) || !(rr > 0.0) || !(sr > 0.0)) {
    throw Error(ErrorCode::InconsistentLandmarks, "jump landmarks imply a non-positive clock rate");
  }
  TimeMapping m;
  m.rate = std::sqrt(rr / ss);
  m.offset = mr - m.rate * ms;
  if (!std::isfinite(m.rate) || !std::isfinite(m.offset)) {
    throw Error(ErrorCode::InconsistentLandmarks, "jump landmarks imply a non-finite mapping");
  }
  return m;
}

SampledSeries resample_to(const SampledSeries& source, const TimeMapping& mapping,
                          const std::vector<double>& target_timestamps, double tolerance) {
  SampledSeries out;
  out.t = target_timestamps;
  out.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(target_timestamps.size()),
                                         source.channels(), kNaN);
  if (source.t.empty()) return out;
  const double lo = source.t.front();
  const double hi = source.t.back();
  for (std::size_t i = 0; i < target_timestamps.size(); ++i) {
    double ts = mapping.to_source(target_timestamps[i]);
    if (ts < lo - tolerance || ts > hi + tolerance) continue;
    ts = std::clamp(ts, lo, hi);
    for (Eigen::Index c = 0; c < source.channels(); ++c) {
      out.values(static_cast<Eigen::Index>(i), c) = interpolate_strict(source, c, ts);
    }
  }
  return out;
}

SampledSeries skeleton_series(const SkeletonSequence& seq) {
  SampledSeries out;
  const auto joints = static_cast<Eigen::Index>(kAllJoints.size());
  out.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(seq.frames.size()), 3 * joints, kNaN);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto& f = seq.frames[i];
    out.t.push_back(f.timestamp);
    for (JointId j : kAllJoints) {
      if (!f.has(j)) continue;
      out.values.block<1, 3>(static_cast<Eigen::Index>(i), 3 * static_cast<Eigen::Index>(j)) = f.at(j).transpose();
    }
  }
  return out;
}

}  // namespace gaitkit
