#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gaitkit/classify.hpp"
#include "gaitkit/error.hpp"
#include "gaitkit/gait_events.hpp"
#include "gaitkit/progression.hpp"
#include "gaitkit/synth.hpp"

using namespace gaitkit;

namespace {

GaitFeatures zeros() {
  GaitFeatures f;
  f.has_fpa = true;
  f.stance_fraction = {0.6, 0.6};
  f.cadence = 110.0;
  return f;
}

GaitFeatures features_of(const SkeletonSequence& seq, Eigen::Vector3d direction) {
  AngleConfig config;
  config.progression = direction;
  const auto angles = angle_series(seq, config);
  auto events = detect_events(seq, Side::Left);
  const auto right = detect_events(seq, Side::Right);
  events.insert(events.end(), right.begin(), right.end());
  const auto cycles = segment_cycles(events);
  return extract_features(angles, cycles, session_progression(seq, cycles));
}

void check_scores(const ClassLabel& l) {
  const double sum = std::accumulate(l.scores.begin(), l.scores.end(), 0.0);
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  for (GaitClass c : kGaitClasses) {
    CHECK(l.score(c) >= 0.0);
    CHECK(l.score(c) <= 1.0);
    if (c != l.label) CHECK(l.score(c) <= l.score(l.label));
  }
}

}  // namespace

TEST_CASE("class names") {
  for (GaitClass c : kGaitClasses) CHECK(class_from_name(class_name(c)) == c);
  CHECK(class_name(GaitClass::Limp) == "limp");
  CHECK_THROWS_AS(class_from_name("hopping"), Error);
}

TEST_CASE("single rules") {
  const ClassifierThresholds t;
  CHECK(classify(zeros()).label == GaitClass::Normal);

  auto limp = zeros();
  limp.stance_asymmetry = 2.0 * t.limp;
  CHECK(classify(limp).label == GaitClass::Limp);

  auto pron = zeros();
  pron.median_inversion_eversion = {-8.0, -8.0};
  CHECK(classify(pron).label == GaitClass::Pronation);
  auto toe_out = zeros();
  toe_out.median_fpa = {20.0, 20.0};
  CHECK(classify(toe_out).label == GaitClass::Pronation);

  auto sup = zeros();
  sup.median_inversion_eversion = {8.0, 8.0};
  CHECK(classify(sup).label == GaitClass::Supination);
  auto toe_in = zeros();
  toe_in.median_fpa = {-6.0, -6.0};
  CHECK(classify(toe_in).label == GaitClass::Supination);

  auto both = pron;
  both.stance_asymmetry = 0.2;
  CHECK(classify(both).label == GaitClass::Limp);
  auto conflict = pron;
  conflict.median_fpa = {-10.0, -10.0};
  CHECK(classify(conflict).label == GaitClass::Pronation);

  for (const auto& f : {zeros(), limp, pron, toe_out, sup, toe_in, both, conflict}) check_scores(classify(f));
}

TEST_CASE("non-finite features are rejected") {
  auto f = zeros();
  f.median_fpa[1] = std::nan("");
  try {
    classify(f);
    FAIL("expected invalid feature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidFeature);
  }
}

TEST_CASE("missing FPA relies on the other features") {
  auto f = zeros();
  f.has_fpa = false;
  f.median_fpa = {std::nan(""), std::nan("")};
  CHECK(classify(f).label == GaitClass::Normal);
  f.median_inversion_eversion = {9.0, 9.0};
  CHECK(classify(f).label == GaitClass::Supination);
}

TEST_CASE("determinism and monotonicity") {
  auto f = zeros();
  f.median_inversion_eversion = {-3.0, 1.0};
  f.median_fpa = {9.0, 12.0};
  const auto a = classify(f);
  const auto b = RuleClassifier{}.classify(f);
  CHECK(a.label == b.label);
  CHECK(a.scores == b.scores);

  f.median_inversion_eversion = {-9.0, -9.0};
  bool limp = false;
  for (double asym = 0.0; asym <= 0.5; asym += 0.005) {
    f.stance_asymmetry = asym;
    const auto l = classify(f);
    if (limp) CHECK(l.label == GaitClass::Limp);
    limp = l.label == GaitClass::Limp;
    check_scores(l);
  }
  CHECK(limp);
}

TEST_CASE("feature extraction on synthetic walks") {
  SUBCASE("symmetric normal gait") {
    const auto p = class_preset(GaitClass::Normal, 2);
    const auto f = features_of(generate(p).sequence, p.direction);
    CHECK(f.stance_asymmetry < 0.02);
    CHECK(f.has_fpa);
    CHECK(std::abs(f.cadence - p.cadence) < 0.05 * p.cadence);
  }
  SUBCASE("limp asymmetry") {
    SynthParams p;
    p.stance_fraction = {0.70, 0.55};
    const auto f = features_of(generate(p).sequence, p.direction);
    CHECK(std::abs(f.stance_asymmetry - 0.15) <= 0.02);
  }
  SUBCASE("mirroring swaps the sides") {
    auto p = class_preset(GaitClass::Pronation, 5);
    p.toe_out = {12.0, 22.0};
    p.inversion_bias = {-4.0, -12.0};
    const auto seq = generate(p).sequence;
    const auto a = features_of(seq, p.direction);
    const auto b = features_of(mirror_sequence(seq), p.direction);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(b.median_fpa[1 - k] == doctest::Approx(a.median_fpa[k]).epsilon(1e-9));
      CHECK(b.median_inversion_eversion[1 - k] == doctest::Approx(a.median_inversion_eversion[k]).epsilon(1e-9));
      CHECK(b.stance_fraction[1 - k] == doctest::Approx(a.stance_fraction[k]).epsilon(1e-9));
    }
    CHECK(classify(a).label == classify(b).label);
  }
  SUBCASE("too few cycles") {
    SynthParams p;
    p.n_strides = 2;
    try {
      features_of(generate(p).sequence, p.direction);
      FAIL("expected insufficient data");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientData);
    }
  }
}

TEST_CASE("forty noiseless sessions classify correctly") {
  int correct = 0;
  for (const auto& p : class_suite(10, 100)) {
    const auto label = classify(features_of(generate(p).sequence, p.direction));
    correct += label.label == p.label;
    CHECK_MESSAGE(label.label == p.label, "seed ", p.seed, " ", class_name(p.label), " got ", class_name(label.label));
  }
  CHECK(correct == 40);
}
