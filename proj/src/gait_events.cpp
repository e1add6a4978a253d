#include "gaitkit/gait_events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include <fmt/format.h>

#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"

namespace gaitkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Candidate {
  GaitEvent event;
  double strength = 0.0;
};

// Backward differences: v[i] is the velocity over (i - 1, i).
std::vector<std::optional<Eigen::Vector3d>> step_velocities(const SkeletonSequence& seq, JointId j) {
  const std::size_t n = seq.frames.size();
  std::vector<std::optional<Eigen::Vector3d>> v(n);
  for (std::size_t i = 1; i < n; ++i) {
    const auto& a = seq.frames[i - 1];
    const auto& b = seq.frames[i];
    if (!a.has(j) || !b.has(j)) continue;
    v[i] = (b.at(j) - a.at(j)) / (b.timestamp - a.timestamp);
  }
  return v;
}

void fill_short_runs(std::vector<bool>& state, bool value, std::size_t min_len, bool keep_edges) {
  const std::size_t n = state.size();
  std::size_t i = 0;
  while (i < n) {
    if (state[i] != value) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && state[j] == value) ++j;
    const bool touches_edge = i == 0 || j == n;
    if (j - i < min_len && !(keep_edges && touches_edge)) {
      for (std::size_t k = i; k < j; ++k) state[k] = !value;
    }
    i = j;
  }
}

void enforce_alternation(std::vector<Candidate>& events) {
  std::vector<Candidate> out;
  for (auto& c : events) {
    if (!out.empty() && out.back().event.kind == c.event.kind) {
      if (c.strength > out.back().strength) out.back() = c;
      continue;
    }
    out.push_back(c);
  }
  events = std::move(out);
}

}  // namespace

std::string_view event_kind_name(EventKind k) { return k == EventKind::HeelStrike ? "HS" : "TO"; }

std::vector<GaitEvent> detect_events(const SkeletonSequence& seq, Side side, const EventParams& params) {
  const JointId ankle_id = ankle(side);
  const JointId toe_id = toe(side);
  const bool any_ankle = std::any_of(seq.frames.begin(), seq.frames.end(), [&](const auto& f) { return f.has(ankle_id); });
  const bool any_toe = std::any_of(seq.frames.begin(), seq.frames.end(), [&](const auto& f) { return f.has(toe_id); });
  if (!seq.frames.empty() && (!any_ankle || !any_toe)) {
    throw Error(ErrorCode::MissingJoint,
                fmt::format("event detection: joint {} absent from every frame",
                            joint_name(any_ankle ? toe_id : ankle_id)));
  }
  const std::size_t n = seq.frames.size();
  if (n < 3) return {};

  const SkeletonSequence smoothed = smooth(seq, params.smoothing_window);
  const auto half = static_cast<std::int64_t>(params.smoothing_window / 2);
  const Eigen::Vector3d up = params.up.normalized();
  const Eigen::Matrix3d horizontal = Eigen::Matrix3d::Identity() - up * up.transpose();

  const auto ankle_v = step_velocities(smoothed, ankle_id);
  const auto toe_v = step_velocities(smoothed, toe_id);

  // A frame is planted when the ankle is still over either adjacent step.
  std::vector<double> toe_vy(n, kNaN);
  std::vector<bool> planted(n, false);
  bool previous = false;
  auto still = [&](std::size_t i) -> std::optional<bool> {
    if (i >= n || !ankle_v[i]) return std::nullopt;
    return (horizontal * *ankle_v[i]).norm() < params.v_stop;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto before = still(i);
    const auto after = still(i + 1);
    if (before || after) previous = before.value_or(false) || after.value_or(false);
    planted[i] = previous;
    if (toe_v[i]) toe_vy[i] = up.dot(*toe_v[i]);
  }

  const auto refractory = static_cast<std::size_t>(
      std::max(1.0, std::round(params.refractory_s * seq.frame_rate)));
  fill_short_runs(planted, false, refractory, true);
  fill_short_runs(planted, true, refractory, true);

  auto lifting = [&](std::size_t i) { return std::isfinite(toe_vy[i]) && toe_vy[i] > params.v_lift; };
  auto make = [&](EventKind kind, std::int64_t i) {
    i = std::clamp<std::int64_t>(i, 0, static_cast<std::int64_t>(n) - 1);
    const auto& f = seq.frames[static_cast<std::size_t>(i)];
    return GaitEvent{kind, side, f.frame_index, f.timestamp};
  };

  std::vector<Candidate> candidates;
  std::size_t i = 0;
  while (i < n) {
    if (!planted[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && planted[j]) ++j;
    const std::size_t first = i;
    if (first > 0) {
      candidates.push_back({make(EventKind::HeelStrike, static_cast<std::int64_t>(first) - half),
                            static_cast<double>(j - i)});
    }
    if (j < n) {
      std::size_t onset = j;
      if (lifting(j)) {
        while (onset > first && lifting(onset - 1)) --onset;
      } else {
        for (std::size_t k = j; k < std::min(n, j + refractory); ++k) {
          if (lifting(k)) {
            onset = k;
            break;
          }
        }
      }
      const double strength = std::isfinite(toe_vy[onset]) ? toe_vy[onset] : 0.0;
      candidates.push_back({make(EventKind::ToeOff, static_cast<std::int64_t>(onset) + half), strength});
    }
    i = j;
  }

  enforce_alternation(candidates);
  std::vector<GaitEvent> events;
  for (const auto& c : candidates) {
    if (!events.empty() && c.event.frame_index <= events.back().frame_index) continue;
    events.push_back(c.event);
  }
  return events;
}

std::vector<GaitCycle> segment_cycles(const std::vector<GaitEvent>& events) {
  std::vector<GaitCycle> cycles;
  for (Side side : kSides) {
    std::vector<GaitEvent> own;
    for (const auto& e : events) {
      if (e.side == side) own.push_back(e);
    }
    for (std::size_t k = 1; k < own.size(); ++k) {
      if (own[k].kind == own[k - 1].kind) {
        throw Error(ErrorCode::Sequencing,
                    fmt::format("{} events do not alternate at frame {}", side_name(side), own[k].frame_index));
      }
      if (!(own[k].timestamp > own[k - 1].timestamp)) {
        throw Error(ErrorCode::Sequencing,
                    fmt::format("{} events not increasing in time at frame {}", side_name(side), own[k].frame_index));
      }
    }
    for (std::size_t k = 0; k + 2 < own.size(); ++k) {
      if (own[k].kind != EventKind::HeelStrike) continue;
      cycles.push_back(GaitCycle{side, own[k], own[k + 1], own[k + 2]});
    }
  }
  return cycles;
}

Eigen::MatrixXd normalize_cycle(const SampledSeries& series, const GaitCycle& cycle, int n_points) {
  if (n_points < 2) throw Error(ErrorCode::Config, "normalize_cycle: n_points must be >= 2");
  const double t0 = cycle.start.timestamp;
  const double t1 = cycle.end.timestamp;
  if (series.t.empty() || t0 < series.t.front() || t1 > series.t.back() || !(t1 > t0)) {
    throw Error(ErrorCode::Range, fmt::format("cycle [{}, {}] s outside series range", t0, t1));
  }
  Eigen::MatrixXd out(n_points, series.channels());
  for (int p = 0; p < n_points; ++p) {
    const double fraction = static_cast<double>(p) / static_cast<double>(n_points - 1);
    const double query = p == n_points - 1 ? t1 : t0 + fraction * (t1 - t0);
    for (Eigen::Index c = 0; c < series.channels(); ++c) out(p, c) = interpolate_channel(series, c, query);
  }
  return out;
}

std::string events_csv(const std::vector<GaitEvent>& events) {
  std::string out = "kind,side,frame,t\n";
  for (const auto& e : events) {
    out += fmt::format("{},{},{},{}\n", event_kind_name(e.kind), side_name(e.side), e.frame_index, e.timestamp);
  }
  return out;
}

}  // namespace gaitkit
