#include "gaitkit/classify.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gaitkit/error.hpp"

namespace gaitkit {

namespace {

std::size_t index_of(Side s) { return s == Side::Left ? 0 : 1; }

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_finite(double v, std::string_view name) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidFeature, fmt::format("feature {} is not finite", name));
}

}  // namespace

std::string_view class_name(GaitClass c) {
  switch (c) {
    case GaitClass::Normal: return "normal";
    case GaitClass::Supination: return "supination";
    case GaitClass::Pronation: return "pronation";
    case GaitClass::Limp: return "limp";
  }
  return "normal";
}

GaitClass class_from_name(std::string_view name) {
  for (GaitClass c : kGaitClasses) {
    if (class_name(c) == name) return c;
  }
  throw Error(ErrorCode::Config, fmt::format("unknown gait class '{}'", name));
}

double GaitFeatures::mean_inversion_eversion() const {
  return 0.5 * (median_inversion_eversion[0] + median_inversion_eversion[1]);
}

double GaitFeatures::mean_fpa() const { return 0.5 * (median_fpa[0] + median_fpa[1]); }

GaitFeatures extract_features(const AngleSeries& angles, const std::vector<GaitCycle>& cycles,
                              const std::vector<FootProgressionSample>& fpa) {
  GaitFeatures f;
  std::array<std::vector<double>, 2> stance;
  std::array<std::vector<double>, 2> ie;
  std::array<std::vector<double>, 2> fp;
  double total_duration = 0.0;
  for (const auto& c : cycles) {
    stance[index_of(c.side)].push_back(c.stance_fraction());
    total_duration += c.duration();
  }
  for (Side s : kSides) {
    const auto n = stance[index_of(s)].size();
    if (n < 2) {
      throw Error(ErrorCode::InsufficientData,
                  fmt::format("gait features need two cycles per side; {} has {}", side_name(s), n));
    }
  }
  for (const auto& s : angles.samples) ie[index_of(s.side)].push_back(s.inversion_eversion);
  for (const auto& s : fpa) fp[index_of(s.side)].push_back(s.angle);

  f.has_fpa = !fp[0].empty() && !fp[1].empty();
  for (Side s : kSides) {
    const std::size_t k = index_of(s);
    if (ie[k].empty()) {
      throw Error(ErrorCode::InsufficientData, fmt::format("no {} angle samples", side_name(s)));
    }
    f.median_inversion_eversion[k] = median(ie[k]);
    f.median_fpa[k] = f.has_fpa ? median(fp[k]) : 0.0;
    double sum = 0.0;
    for (double v : stance[k]) sum += v;
    f.stance_fraction[k] = sum / static_cast<double>(stance[k].size());
  }
  f.stance_asymmetry = std::abs(f.stance_fraction[0] - f.stance_fraction[1]);
  f.cadence = 120.0 * static_cast<double>(cycles.size()) / total_duration;
  return f;
}

ClassLabel RuleClassifier::classify(const GaitFeatures& f) const {
  require_finite(f.stance_asymmetry, "stance_asymmetry");
  require_finite(f.cadence, "cadence");
  for (std::size_t k = 0; k < 2; ++k) {
    require_finite(f.median_inversion_eversion[k], "median_inversion_eversion");
    require_finite(f.stance_fraction[k], "stance_fraction");
    if (f.has_fpa) require_finite(f.median_fpa[k], "median_fpa");
  }
  const auto& t = thresholds_;
  const double ie = f.mean_inversion_eversion();
  const double fpa = f.mean_fpa();
  const double fpa_scale = std::max(std::abs(t.toe_out - t.fpa_baseline), 1e-9);

  const double limp = (f.stance_asymmetry - t.limp) / t.limp;
  double pronation = (-ie - t.inv_ev) / t.inv_ev;
  double supination = (ie - t.inv_ev) / t.inv_ev;
  if (f.has_fpa) {
    pronation = std::max(pronation, (fpa - t.toe_out) / fpa_scale);
    supination = std::max(supination, (t.toe_in - fpa) / std::abs(t.toe_in));
  }
  const double normal = -std::max({limp, pronation, supination});

  ClassLabel out;
  GaitClass winner = GaitClass::Normal;
  if (f.stance_asymmetry > t.limp) {
    winner = GaitClass::Limp;
  } else if (ie < -t.inv_ev || (f.has_fpa && fpa > t.toe_out)) {
    winner = GaitClass::Pronation;
  } else if (ie > t.inv_ev || (f.has_fpa && fpa < t.toe_in)) {
    winner = GaitClass::Supination;
  }
  out.label = winner;

  std::array<double, 4> margin{};
  margin[static_cast<std::size_t>(GaitClass::Normal)] = normal;
  margin[static_cast<std::size_t>(GaitClass::Supination)] = supination;
  margin[static_cast<std::size_t>(GaitClass::Pronation)] = pronation;
  margin[static_cast<std::size_t>(GaitClass::Limp)] = limp;

  const auto w = static_cast<std::size_t>(winner);
  const double top = std::max(logistic(t.gain * std::abs(margin[w])), 0.5);
  double rest = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (k != w) rest += logistic(t.gain * margin[k]);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    out.scores[k] = k == w ? top : (1.0 - top) * logistic(t.gain * margin[k]) / rest;
  }
  return out;
}

ClassLabel classify(const GaitFeatures& features, const ClassifierThresholds& thresholds) {
  return RuleClassifier(thresholds).classify(features);
}

}  // namespace gaitkit
