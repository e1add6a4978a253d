#include <doctest.h>

#include <cmath>
#include <random>

#include "gaitkit/error.hpp"
#include "gaitkit/sync.hpp"
#include "gaitkit/synth.hpp"

using namespace gaitkit;

namespace {

SynthParams jumping_walk() {
  SynthParams p;
  p.n_strides = 8;
  p.jump_times = {1.0, 12.0};
  return p;
}

void check_mapping(const TimeMapping& m, double offset, double rate, double tol) {
  CHECK(std::abs(m.offset - offset) <= tol);
  CHECK(std::abs(m.rate - rate) <= tol);
}

}  // namespace

TEST_CASE("no jumps in flat walking") {
  SynthParams p;
  p.jump_height = 0.0;
  p.jump_times = {1.0};
  p.n_strides = 4;
  CHECK(detect_jumps(generate(p).sequence).empty());
}

TEST_CASE("jump apexes are found within a frame") {
  const auto seq = generate(jumping_walk()).sequence;
  const auto jumps = detect_jumps(seq);
  REQUIRE(jumps.size() == 2);
  CHECK(std::abs(jumps[0] - 1.0) <= 1.0 / 30.0);
  CHECK(std::abs(jumps[1] - 12.0) <= 1.0 / 30.0);

  const auto shifted = detect_jumps(shift_time(seq, 2.0));
  REQUIRE(shifted.size() == 2);
  CHECK(std::abs(shifted[0] - 3.0) <= 1.0 / 30.0);
  CHECK(std::abs(shifted[1] - 14.0) <= 1.0 / 30.0);
  CHECK(std::abs(shifted[0] - jumps[0] - 2.0) <= 1e-9);

  auto raised = seq;
  for (auto& f : raised.frames) {
    for (auto& j : f.joints) if (j) j->position.y() += 0.7;
  }
  const auto lifted = detect_jumps(raised);
  REQUIRE(lifted.size() == 2);
  CHECK(std::abs(lifted[1] - jumps[1]) <= 1e-9);
}

TEST_CASE("close peaks merge") {
  auto p = jumping_walk();
  JumpParams params;
  params.min_jump_gap = 20.0;
  CHECK(detect_jumps(generate(p).sequence, params).size() == 1);
}

TEST_CASE("align") {
  check_mapping(align({1.0, 12.0}, {1.0, 12.0}), 0.0, 1.0, 1e-12);
  check_mapping(align({1.0, 12.0}, {2.0, 13.0}), 1.0, 1.0, 1e-12);
  check_mapping(align({1.0, 5.0, 12.0}, {2.0 * 1.0 + 0.5, 2.0 * 5.0 + 0.5, 2.0 * 12.0 + 0.5}), 0.5, 2.0, 1e-12);
  check_mapping(align({1.0, 4.0, 12.0}, {1.5, 12.5}), 0.5, 1.0, 1e-12);

  try {
    align({1.0}, {1.0, 2.0});
    FAIL("expected insufficient landmarks");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientLandmarks);
  }
  try {
    align({1.0, 12.0}, {12.0, 1.0});
    FAIL("expected inconsistent landmarks");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InconsistentLandmarks);
  }

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  std::normal_distribution<double> g(0.0, 0.05);
  for (int trial = 0; trial < 100; ++trial) {
    const double rate = 0.9 + 0.2 * u(rng) / 30.0;
    const double offset = u(rng) - 15.0;
    std::vector<double> src, ref;
    for (int k = 0; k < 2 + trial % 3; ++k) src.push_back(u(rng) + 40.0 * k);
    std::sort(src.begin(), src.end());
    for (double s : src) ref.push_back(rate * s + offset);
    check_mapping(align(src, ref), offset, rate, 1e-9);

    for (double& r : ref) r += g(rng);
    const auto forward = align(src, ref);
    const auto backward = align(ref, src);
    CHECK(std::abs(forward.rate * backward.rate - 1.0) <= 1e-9);
    CHECK(std::abs(backward.to_reference(forward.to_reference(7.3)) - 7.3) <= 1e-9);
  }
}

TEST_CASE("clock rate mismatch on synthetic data") {
  const auto p = jumping_walk();
  for (double rate : {0.98, 1.02}) {
    ReferenceClock clock;
    clock.rate = rate;
    clock.offset = -1.5;
    const auto source = detect_jumps(generate(p).sequence);
    const auto reference = detect_jumps(generate_reference(p, clock).sequence);
    const auto m = align(source, reference);
    CHECK(std::abs(m.rate - rate) <= 1e-3);
    CHECK(std::abs(m.offset - clock.offset) <= 1.0 / 30.0);
  }
}

TEST_CASE("resample_to") {
  SampledSeries s;
  s.t = {0.0, 0.1, 0.2, 0.3};
  s.values.resize(4, 2);
  s.values << 1, 7, 2, 7, 4, 7, 8, 7;

  const auto same = resample_to(s, {}, s.t, 0.1);
  CHECK((same.values - s.values).cwiseAbs().maxCoeff() == 0.0);

  const TimeMapping m{3.0, 0.5};
  const auto shifted = resample_to(s, m, {3.0, 3.025, 3.15, 3.5}, 0.01);
  CHECK(shifted.values(0, 0) == doctest::Approx(1.0));
  CHECK(shifted.values(1, 0) == doctest::Approx(1.5));
  CHECK(shifted.values(2, 0) == doctest::Approx(8.0));
  CHECK(std::isnan(shifted.values(3, 0)));
  for (int i = 0; i < 3; ++i) CHECK(shifted.values(i, 1) == doctest::Approx(7.0));

  s.values(1, 0) = std::nan("");
  const auto gap = resample_to(s, {}, {0.05, 0.25}, 0.1);
  CHECK(std::isnan(gap.values(0, 0)));
  CHECK(gap.values(1, 0) == doctest::Approx(6.0));
}

TEST_CASE("known mapping round trip on synthetic angles") {
  auto p = jumping_walk();
  const auto session = generate(p);
  const TimeMapping mapping{2.25, 1.01};
  SampledSeries src = angle_table(session.truth.angles, Side::Left);
  std::vector<double> targets;
  for (double t : src.t) targets.push_back(mapping.to_reference(t));
  const auto there = resample_to(src, mapping, targets, 1.0 / 30.0);
  SampledSeries mapped{targets, there.values};
  const auto back = resample_to(mapped, mapping.inverse(), src.t, 1.0 / 30.0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < src.size(); ++i) {
    for (Eigen::Index c = 0; c < src.channels(); ++c) {
      if (std::isnan(src.values(i, c))) continue;
      worst = std::max(worst, std::abs(back.values(i, c) - src.values(i, c)));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("skeleton series channels") {
  SynthParams p;
  p.n_strides = 2;
  const auto seq = generate(p).sequence;
  const auto s = skeleton_series(seq);
  CHECK(s.size() == static_cast<Eigen::Index>(seq.frames.size()));
  CHECK(s.channels() == static_cast<Eigen::Index>(3 * kAllJoints.size()));
}
