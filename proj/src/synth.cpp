#include "gaitkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <fmt/format.h>
#include <json.hpp>

#include "gaitkit/error.hpp"

namespace gaitkit {

namespace {

using json = nlohmann::ordered_json;

constexpr double kPi = EIGEN_PI;

std::size_t index_of(Side s) { return s == Side::Left ? 0 : 1; }

struct FootState {
  Eigen::Vector3d ankle;
  double elevation = 0.0;  // foot axis above horizontal, radians
  double knee = 0.0;       // shank lean towards the walking direction, radians
};

// Closed-form walker shared by the estimate and reference streams.
class Walker {
 public:
  explicit Walker(const SynthParams& p) : p_(p) {
    up_ = Eigen::Vector3d::UnitY();
    d_ = p.direction - p.direction.dot(up_) * up_;
    d_.normalize();
    left_ = up_.cross(d_);
    period_ = p.cycle_period();
    jumps_ = p.effective_jump_times();
  }

  const Eigen::Vector3d& direction() const { return d_; }
  const Eigen::Vector3d& lateral_left() const { return left_; }

  double toe_off(Side s, int k) const { return start(s) + (k - 1) * period_; }
  double heel_strike(Side s, int k) const {
    return toe_off(s, k) + (1.0 - p_.stance_fraction[index_of(s)]) * period_;
  }

  FootState foot(Side s, double t) const {
    const std::size_t k_side = index_of(s);
    const double stance = p_.stance_fraction[k_side] * period_;
    const double swing = period_ - stance;
    const double a = deg_to_rad(p_.knee_amplitude);
    const double bias = -deg_to_rad(p_.inversion_bias[k_side]);

    double along = 0.0;
    double height = p_.ankle_height;
    double pitch = 0.0;
    double knee = 0.0;
    auto stance_knee = [&](double since_strike) {
      if (since_strike < 0.0) return -a;
      if (since_strike >= stance) return a;
      return -a * std::cos(kPi * since_strike / stance);
    };

    const int n = p_.n_strides;
    if (t < toe_off(s, 1)) {
      along = 0.0;
      knee = stance_knee(t - (toe_off(s, 1) - stance));
    } else {
      int k = static_cast<int>(std::floor((t - start(s)) / period_)) + 1;
      k = std::clamp(k, 1, n);
      if (t < toe_off(s, k)) --k;
      if (k >= 1 && t < heel_strike(s, k)) {
        const double tau = (t - toe_off(s, k)) / swing;
        along = (k - 1) * p_.stride_length + p_.stride_length * 0.5 * (1.0 - std::cos(kPi * tau));
        height += p_.swing_lift * std::sin(kPi * tau);
        pitch = deg_to_rad(p_.swing_pitch) * std::sin(kPi * tau);
        knee = a * std::cos(kPi * tau);
      } else {
        along = k * p_.stride_length;
        knee = stance_knee(t - heel_strike(s, k));
      }
    }
    if (s == Side::Right) along += 0.5 * p_.stride_length;
    const double lateral = (s == Side::Left ? 0.5 : -0.5) * p_.step_width;

    FootState out;
    out.ankle = p_.origin + along * d_ + lateral * left_ + (height + jump_offset(t)) * up_;
    out.elevation = bias + pitch;
    out.knee = knee;
    return out;
  }

  Eigen::Vector3d foot_axis(Side s, double elevation) const {
    const double psi = deg_to_rad(p_.toe_out[index_of(s)]);
    const Eigen::Vector3d outward = s == Side::Left ? left_ : Eigen::Vector3d(-left_);
    return std::cos(elevation) * (std::cos(psi) * d_ + std::sin(psi) * outward) + std::sin(elevation) * up_;
  }

  void pose(double t, SkeletonFrame& frame) const {
    for (Side s : kSides) {
      const FootState f = foot(s, t);
      const Eigen::Vector3d u = foot_axis(s, f.elevation);
      const Eigen::Vector3d shank_dir = std::cos(f.knee) * up_ + std::sin(f.knee) * d_;
      frame.set(ankle(s), f.ankle);
      frame.set(knee(s), f.ankle + p_.shank_length * shank_dir);
      frame.set(toe(s), f.ankle + p_.foot_length * u);
      frame.set(heel(s), f.ankle - 0.25 * p_.foot_length * u);
    }
  }

  // Closed-form angles of one side at time t.
  AngleSample angles(Side s, double t, int dims) const {
    const FootState f = foot(s, t);
    const double e = f.elevation;
    const double psi = deg_to_rad(p_.toe_out[index_of(s)]);
    const double phi = f.knee;
    AngleSample a;
    a.side = s;
    a.timestamp = t;
    if (dims == 3) {
      a.inversion_eversion = -rad_to_deg(e);
      a.dorsiflexion_plantarflexion = -rad_to_deg(std::asin(std::cos(e) * std::cos(psi)));
      a.ankle = rad_to_deg(std::acos(std::sin(e) * std::cos(phi) + std::cos(e) * std::cos(psi) * std::sin(phi)));
    } else {
      const double planar = std::hypot(std::cos(e) * std::cos(psi), std::sin(e));
      a.inversion_eversion = -rad_to_deg(std::asin(std::sin(e) / planar));
      a.dorsiflexion_plantarflexion = -rad_to_deg(std::asin(std::cos(e) * std::cos(psi) / planar));
      a.ankle = rad_to_deg(std::acos(
          (std::sin(e) * std::cos(phi) + std::cos(e) * std::cos(psi) * std::sin(phi)) / planar));
    }
    return a;
  }

 private:
  double start(Side s) const { return p_.lead_in + (s == Side::Right ? 0.5 * period_ : 0.0); }

  double jump_offset(double t) const {
    const double half = 0.5 * p_.jump_duration;
    double offset = 0.0;
    for (double apex : jumps_) {
      const double x = (t - apex) / half;
      if (std::abs(x) < 1.0) offset += p_.jump_height * (1.0 - x * x);
    }
    return offset;
  }

  const SynthParams& p_;
  Eigen::Vector3d up_;
  Eigen::Vector3d d_;
  Eigen::Vector3d left_;
  double period_ = 1.0;
  std::vector<double> jumps_;
};

std::int64_t first_frame_at_or_after(double t, double fps) {
  return static_cast<std::int64_t>(std::ceil(t * fps - 1e-9));
}

// Orthographic view from the walker's left: x along the walk, y up.
Eigen::Vector3d sagittal(const Eigen::Vector3d& p, const Eigen::Vector3d& origin, const Eigen::Vector3d& d) {
  const Eigen::Vector3d r = p - origin;
  return {r.dot(d), r.y() + origin.y(), 0.0};
}

SynthSession render(const SynthParams& p, const ReferenceClock& clock, double noise_sigma, std::uint64_t seed) {
  validate(p);
  if (!(clock.frame_rate > 0.0) || !(clock.rate > 0.0) || !std::isfinite(clock.offset)) {
    throw Error(ErrorCode::Config, "reference clock needs a positive frame rate and rate");
  }
  const Walker walker(p);
  SynthSession out;
  auto& seq = out.sequence;
  seq.dims = p.dims;
  seq.frame_rate = clock.frame_rate;
  seq.condition = p.condition;

  const double fps = clock.frame_rate;
  const double ref_start = clock.offset;
  const double ref_end = clock.rate * p.duration() + clock.offset;
  const auto j0 = first_frame_at_or_after(ref_start, fps);
  const auto j1 = static_cast<std::int64_t>(std::floor(ref_end * fps + 1e-9));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);

  auto& truth = out.truth;
  truth.label = p.label;
  truth.clock = TimeMapping{clock.offset, clock.rate};
  truth.angles.dims = p.dims;
  truth.angles.up = Eigen::Vector3d::UnitY();
  truth.angles.progression = p.dims == 3 ? walker.direction() : Eigen::Vector3d::UnitX();

  for (std::int64_t j = j0; j <= j1; ++j) {
    const double t_ref = static_cast<double>(j) / fps;
    const double t = clock.rate == 1.0 ? t_ref - clock.offset : (t_ref - clock.offset) / clock.rate;
    SkeletonFrame frame;
    frame.frame_index = j - j0;
    frame.timestamp = t_ref;
    walker.pose(t, frame);
    for (JointId id : kAllJoints) {
      if (!frame.has(id)) continue;
      Eigen::Vector3d pos = frame.at(id);
      if (p.dims == 2) pos = sagittal(pos, p.origin, walker.direction());
      if (noise_sigma > 0.0) {
        for (int c = 0; c < p.dims; ++c) pos(c) += noise(rng);
      }
      frame.set(id, pos);
    }
    seq.frames.push_back(frame);

    truth.angles.frame_indices.push_back(frame.frame_index);
    truth.angles.frame_times.push_back(t_ref);
    for (Side s : kSides) {
      AngleSample a = walker.angles(s, t, p.dims);
      a.frame_index = frame.frame_index;
      a.timestamp = t_ref;
      truth.angles.samples.push_back(a);
    }
  }

  for (int k = 1; k <= p.n_strides; ++k) {
    for (Side s : kSides) {
      for (auto [kind, t] : {std::pair{EventKind::ToeOff, walker.toe_off(s, k)},
                             std::pair{EventKind::HeelStrike, walker.heel_strike(s, k)}}) {
        const double t_ref = truth.clock.to_reference(t);
        truth.events.push_back(GaitEvent{kind, s, first_frame_at_or_after(t_ref, fps) - j0, t_ref});
      }
    }
  }
  std::sort(truth.events.begin(), truth.events.end(),
            [](const GaitEvent& a, const GaitEvent& b) { return a.timestamp < b.timestamp; });
  truth.cycles = segment_cycles(truth.events);

  const Eigen::Vector3d d = walker.direction();
  if (p.dims == 3) {
    truth.line.m = d.x() / d.z();
    truth.line.n = 0.0;
    truth.line.x0 = p.origin.x() - truth.line.m * p.origin.z();
    truth.line.y0 = p.origin.y() + p.ankle_height;
    truth.line.sense = d.z() < 0.0 ? -1.0 : 1.0;
    for (const auto& c : truth.cycles) {
      truth.fpa.push_back(FootProgressionSample{c, c.side, p.toe_out[index_of(c.side)], truth.line});
    }
  }
  for (double apex : p.effective_jump_times()) truth.jump_times.push_back(truth.clock.to_reference(apex));
  return out;
}

Eigen::Vector3d vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Config, "synth: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::array<double, 2> pair_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), j.get<double>()};
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::Config, "synth: expected a number or [left, right]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

double SynthParams::walk_end() const {
  const double period = cycle_period();
  const double last_left = lead_in + (n_strides - 1) * period + (1.0 - stance_fraction[0]) * period;
  const double last_right = lead_in + 0.5 * period + (n_strides - 1) * period + (1.0 - stance_fraction[1]) * period;
  return std::max(last_left, last_right);
}

std::vector<double> SynthParams::effective_jump_times() const {
  if (!jump_times.empty()) return jump_times;
  return {0.5 * lead_in, walk_end() + 0.5 * tail};
}

void validate(const SynthParams& p) {
  auto positive = [](double v, std::string_view name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::Config, fmt::format("synth: {} must be positive", name));
  };
  positive(p.frame_rate, "frame_rate");
  positive(p.stride_length, "stride_length");
  positive(p.cadence, "cadence");
  positive(p.shank_length, "shank_length");
  positive(p.foot_length, "foot_length");
  positive(p.ankle_height, "ankle_height");
  positive(p.jump_duration, "jump_duration");
  if (p.n_strides < 1) throw Error(ErrorCode::Config, "synth: n_strides must be at least 1");
  if (p.dims != 2 && p.dims != 3) throw Error(ErrorCode::Config, "synth: dims must be 2 or 3");
  if (!(p.noise_sigma >= 0.0)) throw Error(ErrorCode::Config, "synth: noise_sigma must be >= 0");
  if (!(p.lead_in >= 0.0) || !(p.tail >= 0.0) || p.step_width < 0.0 || p.swing_lift < 0.0 || p.jump_height < 0.0) {
    throw Error(ErrorCode::Config, "synth: lead_in, tail, step_width, swing_lift and jump_height must be >= 0");
  }
  for (double s : p.stance_fraction) {
    if (!(s > 0.0 && s < 1.0)) throw Error(ErrorCode::Config, "synth: stance_fraction must lie in (0, 1)");
  }
  for (double v : {p.toe_out[0], p.toe_out[1], p.inversion_bias[0], p.inversion_bias[1], p.swing_pitch, p.knee_amplitude}) {
    if (!(std::abs(v) < 80.0)) throw Error(ErrorCode::Config, "synth: angles must lie within (-80, 80) degrees");
  }
  const Eigen::Vector3d h(p.direction.x(), 0.0, p.direction.z());
  if (!(h.norm() > 1e-9)) throw Error(ErrorCode::Config, "synth: direction must have a horizontal component");
  if (p.dims == 3 && std::abs(p.direction.z()) < 1e-3 * h.norm()) {
    throw Error(ErrorCode::Config, "synth: 3D walks must advance along the depth axis");
  }
  const double half = 0.5 * p.jump_duration;
  for (double apex : p.effective_jump_times()) {
    if (apex + half > p.walk_start() && apex - half < p.walk_end()) {
      throw Error(ErrorCode::Config, fmt::format("synth: jump at {} s overlaps the walk", apex));
    }
    if (apex - half < 0.0 || apex + half > p.duration()) {
      throw Error(ErrorCode::Config, fmt::format("synth: jump at {} s leaves the recording", apex));
    }
  }
}

SynthSession generate(const SynthParams& params) {
  return render(params, ReferenceClock{params.frame_rate, 0.0, 1.0, params.noise_sigma}, params.noise_sigma,
                params.seed);
}

SynthSession generate_reference(const SynthParams& params, const ReferenceClock& clock) {
  return render(params, clock, clock.noise_sigma, params.seed ^ 0x9e3779b97f4a7c15ULL);
}

SynthParams class_preset(GaitClass c, std::uint64_t seed, const SynthParams& base) {
  std::mt19937_64 rng(seed);
  auto jitter = [&](double spread) { return std::uniform_real_distribution<double>(-spread, spread)(rng); };
  SynthParams p = base;
  p.seed = seed;
  p.label = c;
  p.condition = std::string(class_name(c));
  p.cadence = base.cadence + jitter(8.0);
  p.stride_length = base.stride_length + jitter(0.1);
  double toe_out = 7.0;
  double bias = 0.0;
  std::array<double, 2> stance{0.6, 0.6};
  switch (c) {
    case GaitClass::Normal: break;
    case GaitClass::Supination:
      toe_out = -2.0;
      bias = 10.0;
      break;
    case GaitClass::Pronation:
      toe_out = 20.0;
      bias = -10.0;
      break;
    case GaitClass::Limp: stance = {0.70, 0.55}; break;
  }
  const double shared_stance = jitter(0.03);
  for (std::size_t k = 0; k < 2; ++k) {
    p.toe_out[k] = toe_out + jitter(1.5);
    p.inversion_bias[k] = bias + jitter(1.5);
    p.stance_fraction[k] = stance[k] + (c == GaitClass::Limp ? jitter(0.01) : shared_stance + jitter(0.003));
  }
  return p;
}

std::vector<SynthParams> class_suite(int per_class, std::uint64_t seed, const SynthParams& base) {
  std::vector<SynthParams> out;
  std::uint64_t s = seed;
  for (GaitClass c : kGaitClasses) {
    for (int i = 0; i < per_class; ++i) out.push_back(class_preset(c, s++, base));
  }
  return out;
}

SynthParams parse_synth_params(std::string_view text, const SynthParams& defaults) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, fmt::format("synth params: {}", e.what()));
  }
  if (!j.is_object()) throw Error(ErrorCode::Config, "synth params must be a JSON object");
  SynthParams p = defaults;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const json& v = it.value();
      if (key == "frame_rate") p.frame_rate = v.get<double>();
      else if (key == "n_strides") p.n_strides = v.get<int>();
      else if (key == "stride_length") p.stride_length = v.get<double>();
      else if (key == "cadence") p.cadence = v.get<double>();
      else if (key == "shank_length") p.shank_length = v.get<double>();
      else if (key == "foot_length") p.foot_length = v.get<double>();
      else if (key == "ankle_height") p.ankle_height = v.get<double>();
      else if (key == "step_width") p.step_width = v.get<double>();
      else if (key == "swing_lift") p.swing_lift = v.get<double>();
      else if (key == "swing_pitch") p.swing_pitch = v.get<double>();
      else if (key == "knee_amplitude") p.knee_amplitude = v.get<double>();
      else if (key == "toe_out") p.toe_out = pair_from_json(v);
      else if (key == "inversion_bias") p.inversion_bias = pair_from_json(v);
      else if (key == "stance_fraction") p.stance_fraction = pair_from_json(v);
      else if (key == "noise_sigma") p.noise_sigma = v.get<double>();
      else if (key == "lead_in") p.lead_in = v.get<double>();
      else if (key == "tail") p.tail = v.get<double>();
      else if (key == "jump_times") p.jump_times = v.get<std::vector<double>>();
      else if (key == "jump_height") p.jump_height = v.get<double>();
      else if (key == "jump_duration") p.jump_duration = v.get<double>();
      else if (key == "direction") p.direction = vec_from_json(v);
      else if (key == "origin") p.origin = vec_from_json(v);
      else if (key == "dims") p.dims = v.get<int>();
      else if (key == "seed") p.seed = v.get<std::uint64_t>();
      else if (key == "label") p.label = class_from_name(v.get<std::string>());
      else if (key == "condition") p.condition = v.get<std::string>();
      else throw Error(ErrorCode::Config, fmt::format("synth params: unknown key '{}'", key));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, fmt::format("synth params: {}", e.what()));
  }
  if (!j.contains("condition") && j.contains("label")) p.condition = std::string(class_name(p.label));
  validate(p);
  return p;
}

namespace {

json params_to_json(const SynthParams& p) {
  json j;
  j["frame_rate"] = p.frame_rate;
  j["n_strides"] = p.n_strides;
  j["stride_length"] = p.stride_length;
  j["cadence"] = p.cadence;
  j["shank_length"] = p.shank_length;
  j["foot_length"] = p.foot_length;
  j["ankle_height"] = p.ankle_height;
  j["step_width"] = p.step_width;
  j["swing_lift"] = p.swing_lift;
  j["swing_pitch"] = p.swing_pitch;
  j["knee_amplitude"] = p.knee_amplitude;
  j["toe_out"] = p.toe_out;
  j["inversion_bias"] = p.inversion_bias;
  j["stance_fraction"] = p.stance_fraction;
  j["noise_sigma"] = p.noise_sigma;
  j["lead_in"] = p.lead_in;
  j["tail"] = p.tail;
  j["jump_times"] = p.jump_times;
  j["jump_height"] = p.jump_height;
  j["jump_duration"] = p.jump_duration;
  j["direction"] = {p.direction.x(), p.direction.y(), p.direction.z()};
  j["origin"] = {p.origin.x(), p.origin.y(), p.origin.z()};
  j["dims"] = p.dims;
  j["seed"] = p.seed;
  j["label"] = class_name(p.label);
  j["condition"] = p.condition;
  return j;
}

}  // namespace

std::string synth_params_json(const SynthParams& params) { return params_to_json(params).dump(2) + "\n"; }

std::string truth_json(const SynthTruth& truth, const SynthParams& params) {
  json j;
  j["format"] = "gaitkit-truth/1";
  j["label"] = class_name(truth.label);
  j["params"] = params_to_json(params);
  j["clock"] = {{"offset", truth.clock.offset}, {"rate", truth.clock.rate}};
  j["jump_times"] = truth.jump_times;
  json events = json::array();
  for (const auto& e : truth.events) {
    events.push_back({{"kind", event_kind_name(e.kind)}, {"side", side_name(e.side)},
                      {"frame", e.frame_index}, {"t", e.timestamp}});
  }
  j["events"] = events;
  if (params.dims == 3) {
    j["progression_line"] = {{"m", truth.line.m}, {"n", truth.line.n}, {"x0", truth.line.x0},
                             {"y0", truth.line.y0}, {"sense", truth.line.sense}};
  }
  json fpa = json::array();
  for (const auto& s : truth.fpa) {
    fpa.push_back({{"cycle_start_frame", s.cycle.start.frame_index}, {"side", side_name(s.side)}, {"fpa_deg", s.angle}});
  }
  j["fpa"] = fpa;
  json angles = json::array();
  for (const auto& a : truth.angles.samples) {
    angles.push_back({a.frame_index, side_name(a.side), a.inversion_eversion, a.dorsiflexion_plantarflexion, a.ankle});
  }
  j["angles_columns"] = {"frame", "side", "inv_ev_deg", "dorsi_plantar_deg", "ankle_deg"};
  j["angles"] = angles;
  return j.dump() + "\n";
}

}  // namespace gaitkit
