#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "gaitkit/gait_events.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/progression.hpp"

namespace gaitkit {

enum class GaitClass { Normal, Supination, Pronation, Limp };

inline constexpr std::array<GaitClass, 4> kGaitClasses{GaitClass::Normal, GaitClass::Supination,
                                                       GaitClass::Pronation, GaitClass::Limp};

std::string_view class_name(GaitClass c);
GaitClass class_from_name(std::string_view name);

struct GaitFeatures {
  std::array<double, 2> median_inversion_eversion{};  // left, right
  std::array<double, 2> median_fpa{};
  bool has_fpa = false;
  std::array<double, 2> stance_fraction{};
  double stance_asymmetry = 0.0;
  double cadence = 0.0;  // steps per minute

  double mean_inversion_eversion() const;
  double mean_fpa() const;
};

/// Medians over every sampled frame (inversion/eversion) and every cycle
/// (FPA). FPA features are absent when no sample exists, as for 2D input.
/// Throws ErrorCode::InsufficientData with fewer than two cycles on a side.
GaitFeatures extract_features(const AngleSeries& angles, const std::vector<GaitCycle>& cycles,
                              const std::vector<FootProgressionSample>& fpa);

struct ClassifierThresholds {
  double limp = 0.08;        // stance-fraction gap
  double inv_ev = 5.0;       // degrees
  double toe_out = 15.0;     // degrees, absolute FPA
  double toe_in = -5.0;      // degrees, absolute FPA
  double fpa_baseline = 7.0; // degrees, scales the toe-out margin
  double gain = 1.0;         // logistic gain on normalized margins
};

struct ClassLabel {
  GaitClass label = GaitClass::Normal;
  std::array<double, 4> scores{};  // indexed like kGaitClasses

  double score(GaitClass c) const { return scores[static_cast<std::size_t>(c)]; }
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassLabel classify(const GaitFeatures& features) const = 0;
};

/// Limp > Pronation > Supination > Normal. Each rule's margin is normalized by
/// its threshold scale; the winner scores logistic(gain * margin) and the rest
/// share the remainder in proportion to their own logistic activations.
class RuleClassifier final : public Classifier {
 public:
  explicit RuleClassifier(ClassifierThresholds thresholds = {}) : thresholds_(thresholds) {}
  ClassLabel classify(const GaitFeatures& features) const override;
  const ClassifierThresholds& thresholds() const { return thresholds_; }

 private:
  ClassifierThresholds thresholds_;
};

/// Throws ErrorCode::InvalidFeature on a non-finite feature.
ClassLabel classify(const GaitFeatures& features, const ClassifierThresholds& thresholds = {});

}  // namespace gaitkit
