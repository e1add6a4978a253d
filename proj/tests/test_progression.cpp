#include <doctest.h>

#include <Eigen/QR>

#include <cmath>
#include <random>

#include "gaitkit/error.hpp"
#include "gaitkit/progression.hpp"
#include "gaitkit/synth.hpp"

using namespace gaitkit;

namespace {

Eigen::Matrix3Xd line_points(const std::vector<double>& zs, double m, double x0, double n, double y0) {
  Eigen::Matrix3Xd p(3, static_cast<Eigen::Index>(zs.size()));
  for (std::size_t i = 0; i < zs.size(); ++i) p.col(static_cast<Eigen::Index>(i)) << m * zs[i] + x0, n * zs[i] + y0, zs[i];
  return p;
}

/// (m, x0, n, y0) by column-pivoting QR on the design matrix [z 1].
Eigen::Vector4d qr_fit(const Eigen::Matrix3Xd& p) {
  Eigen::MatrixXd a(p.cols(), 2);
  a.col(0) = p.row(2).transpose();
  a.col(1).setOnes();
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Vector2d sx = qr.solve(Eigen::VectorXd(p.row(0).transpose()));
  const Eigen::Vector2d sy = qr.solve(Eigen::VectorXd(p.row(1).transpose()));
  return {sx[0], sx[1], sy[0], sy[1]};
}

double rss(const Eigen::Matrix3Xd& p, double m, double x0, double n, double y0) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    total += std::pow(p(0, i) - (m * p(2, i) + x0), 2) + std::pow(p(1, i) - (n * p(2, i) + y0), 2);
  }
  return total;
}

double relative(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Eigen::Matrix3Xd rotated_feet(double deg, Side side, int count, double length = 0.2) {
  const double r = deg_to_rad(deg);
  const double lateral = side == Side::Left ? 1.0 : -1.0;
  Eigen::Matrix3Xd f(3, count);
  for (int i = 0; i < count; ++i) f.col(i) << lateral * std::sin(r) * length, 0.01 * i, std::cos(r) * length;
  return f;
}

}  // namespace

TEST_CASE("exact collinear points") {
  const auto line = fit_progression_line(line_points({0, 1, 2, 3, 4}, 2, 1, -1, 3));
  CHECK(line.m == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(line.n == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(line.x0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(line.y0 == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(line.direction().norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two points define the line through both") {
  Eigen::Matrix3Xd p(3, 2);
  p << 0.3, -1.2, 0.1, 0.7, 2.0, 4.5;
  const auto line = fit_progression_line(p);
  CHECK((line.at(2.0) - p.col(0)).norm() < 1e-12);
  CHECK((line.at(4.5) - p.col(1)).norm() < 1e-12);
}

TEST_CASE("degenerate fits") {
  Eigen::Matrix3Xd one(3, 1);
  one << 1, 2, 3;
  CHECK_THROWS_AS(fit_progression_line(one), Error);
  Eigen::Matrix3Xd flat(3, 4);
  flat << 0, 1, 2, 3, 0, 0, 0, 0, 5, 5, 5, 5;
  try {
    fit_progression_line(flat);
    FAIL("expected a degenerate fit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateFit);
  }
}

TEST_CASE("noisy fits agree with an orthogonal-factorization oracle") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> zs;
    for (int i = 0; i < 50; ++i) zs.push_back(u(rng) * 2.0);
    auto p = line_points(zs, u(rng), u(rng), u(rng) * 0.1, u(rng));
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
      p(0, i) += 0.05 * g(rng);
      p(1, i) += 0.05 * g(rng);
    }
    const auto line = fit_progression_line(p);
    const auto want = qr_fit(p);
    CHECK(relative(line.m, want[0]) <= 1e-8);
    CHECK(relative(line.x0, want[1]) <= 1e-8);
    CHECK(relative(line.n, want[2]) <= 1e-8);
    CHECK(relative(line.y0, want[3]) <= 1e-8);

    Eigen::VectorXd rx(p.cols()), ry(p.cols());
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
      rx[i] = p(0, i) - (line.m * p(2, i) + line.x0);
      ry[i] = p(1, i) - (line.n * p(2, i) + line.y0);
    }
    const Eigen::VectorXd z = p.row(2).transpose();
    const double scale = rx.norm() * z.norm() + 1e-300;
    CHECK(std::abs(rx.dot(z)) / scale <= 1e-8);
    CHECK(std::abs(ry.dot(z)) / scale <= 1e-8);
    CHECK(std::abs(rx.sum()) / (rx.norm() * std::sqrt(double(p.cols()))) <= 1e-8);
  }
}

TEST_CASE("translation equivariance") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Matrix3Xd p(3, 20);
    for (int i = 0; i < 20; ++i) p.col(i) << u(rng), u(rng), u(rng) + i;
    const Eigen::Vector3d d(u(rng), u(rng), u(rng));
    const auto a = fit_progression_line(p);
    const auto b = fit_progression_line(Eigen::Matrix3Xd(p.colwise() + d));
    CHECK(std::abs(b.m - a.m) <= 1e-9);
    CHECK(std::abs(b.n - a.n) <= 1e-9);
    CHECK(std::abs(b.x0 - (a.x0 + d.x() - a.m * d.z())) <= 1e-9);
    CHECK(std::abs(b.y0 - (a.y0 + d.y() - a.n * d.z())) <= 1e-9);
  }
}

TEST_CASE("no grid line beats the fit") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Matrix3Xd p(3, 20);
    for (int i = 0; i < 20; ++i) p.col(i) << 0.3 * i * 0.1 + 0.2 * u(rng), -0.1 * i * 0.1 + 0.2 * u(rng), 0.1 * i;
    const auto line = fit_progression_line(p);
    const double best = rss(p, line.m, line.x0, line.n, line.y0);
    const double am = std::atan(line.m), an = std::atan(line.n);
    for (int i = -5; i <= 5; ++i) {
      for (int j = -5; j <= 5; ++j) {
        const double m = std::tan(am + deg_to_rad(double(i)));
        const double n = std::tan(an + deg_to_rad(double(j)));
        // Optimal intercepts for the candidate slopes.
        const double x0 = (p.row(0).sum() - m * p.row(2).sum()) / 20.0;
        const double y0 = (p.row(1).sum() - n * p.row(2).sum()) / 20.0;
        CHECK(best <= rss(p, m, x0, n, y0) + 1e-12);
      }
    }
  }
}

TEST_CASE("foot progression angle") {
  ProgressionLine<double> line;  // along +z
  for (Side s : kSides) {
    CHECK(foot_progression_angle(rotated_feet(0.0, s, 12), line, s).mean_deg == doctest::Approx(0.0));
    const auto r = foot_progression_angle(rotated_feet(10.0, s, 12), line, s);
    CHECK(r.mean_deg == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(r.frames_used == 12);
    CHECK(std::abs(foot_progression_angle(rotated_feet(-6.0, s, 5, 3.7), line, s).mean_deg + 6.0) <= 1e-9);

    ProgressionLine<double> back = line;
    back.sense = -1;
    Eigen::Matrix3Xd flipped = rotated_feet(12.0, s, 6);
    flipped.row(2) *= -1.0;
    flipped.row(0) *= -1.0;
    CHECK(std::abs(foot_progression_angle(flipped, back, s).mean_deg - 12.0) <= 1e-9);
    Eigen::Matrix3Xd reversed_z = rotated_feet(12.0, s, 6);
    reversed_z.row(2) *= -1.0;
    CHECK(std::abs(foot_progression_angle(reversed_z, back, s).mean_deg + 12.0) <= 1e-9);
  }
  Eigen::Matrix3Xd vertical(3, 2);
  vertical << 0, 0.1, 0.3, 0.2, 0, 1e-8;
  const auto skip = foot_progression_angle(vertical, line, Side::Left);
  CHECK(skip.frames_used == 1);
  Eigen::Matrix3Xd none(3, 1);
  none << 0, 0.3, 0;
  try {
    foot_progression_angle(none, line, Side::Left);
    FAIL("expected empty input");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("session progression on synthetic walks") {
  SUBCASE("zero cycles") {
    SynthParams p;
    p.n_strides = 2;
    CHECK(session_progression(generate(p).sequence, {}).empty());
  }
  SUBCASE("straight walk without toe-out") {
    SynthParams p;
    p.toe_out = {0.0, 0.0};
    const auto session = generate(p);
    const auto samples = session_progression(session.sequence, session.truth.cycles);
    CHECK(samples.size() == session.truth.cycles.size());
    for (const auto& s : samples) CHECK(std::abs(s.angle) <= 0.2);
  }
  SUBCASE("opposite toe-out per foot") {
    SynthParams p;
    p.toe_out = {8.0, -8.0};
    p.direction = Eigen::Vector3d(0.3, 0.0, 1.0).normalized();
    const auto session = generate(p);
    const auto samples = session_progression(session.sequence, session.truth.cycles);
    double sum[2] = {0, 0};
    int count[2] = {0, 0};
    for (const auto& s : samples) {
      sum[s.side == Side::Left ? 0 : 1] += s.angle;
      ++count[s.side == Side::Left ? 0 : 1];
    }
    REQUIRE(count[0] > 0);
    REQUIRE(count[1] > 0);
    CHECK(std::abs(sum[0] / count[0] - 8.0) <= 0.5);
    CHECK(std::abs(sum[1] / count[1] + 8.0) <= 0.5);
  }
  SUBCASE("pronation preset per step") {
    const auto p = class_preset(GaitClass::Pronation, 9);
    const auto session = generate(p);
    const auto samples = session_progression(session.sequence, session.truth.cycles);
    REQUIRE(samples.size() == session.truth.fpa.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK(std::abs(samples[i].angle - session.truth.fpa[i].angle) <= 0.5);
    }
  }
}

TEST_CASE("walking direction estimate") {
  SynthParams p;
  p.direction = Eigen::Vector3d(-0.5, 0.0, 1.0).normalized();
  const auto d = estimate_walking_direction(generate(p).sequence);
  CHECK(d.dot(p.direction) > 0.999);
  CHECK(progression_csv({}) == "cycle_start_frame,side,fpa_deg\n");
}
