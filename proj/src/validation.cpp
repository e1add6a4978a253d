#include "gaitkit/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <fmt/format.h>

#include "gaitkit/error.hpp"

namespace gaitkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_period(const std::vector<double>& t) {
  std::vector<double> dt;
  for (std::size_t i = 1; i < t.size(); ++i) dt.push_back(t[i] - t[i - 1]);
  if (dt.empty()) return 0.0;
  std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2), dt.end());
  return dt[dt.size() / 2];
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v[lo];
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace

std::vector<double> SideErrors::values(AngleParameter p) const {
  std::vector<double> out;
  const auto c = static_cast<Eigen::Index>(p);
  for (Eigen::Index i = 0; i < errors.values.rows(); ++i) {
    if (std::isfinite(errors.values(i, c))) out.push_back(errors.values(i, c));
  }
  return out;
}

std::vector<double> AngularErrors::values(AngleParameter p) const {
  auto out = sides[0].values(p);
  const auto right = sides[1].values(p);
  out.insert(out.end(), right.begin(), right.end());
  return out;
}

AngularErrors angular_errors(const AngleSeries& estimate, const AngleSeries& reference,
                             const TimeMapping& mapping, bool signed_errors) {
  if (estimate.samples.empty() || reference.samples.empty()) {
    throw Error(ErrorCode::EmptyInput, "angular errors need non-empty estimate and reference series");
  }
  AngularErrors result;
  result.signed_errors = signed_errors;
  const double tolerance = median_period(estimate.frame_times);
  for (Side side : kSides) {
    auto& out = result.sides[side == Side::Left ? 0 : 1];
    out.side = side;
    const SampledSeries est = angle_table(estimate, side);
    const SampledSeries ref = angle_table(reference, side);
    const SampledSeries mapped = resample_to(est, mapping, ref.t, tolerance);
    out.frames = reference.frame_indices;
    out.errors.t = ref.t;
    out.errors.values = Eigen::MatrixXd::Constant(ref.values.rows(), ref.values.cols(), kNaN);
    for (Eigen::Index i = 0; i < ref.values.rows(); ++i) {
      const bool ok = ref.values.row(i).allFinite() && mapped.values.row(i).allFinite();
      if (!ok) {
        ++out.excluded;
        continue;
      }
      ++out.aligned;
      const Eigen::RowVectorXd diff = mapped.values.row(i) - ref.values.row(i);
      out.errors.values.row(i) = signed_errors ? diff : diff.cwiseAbs();
    }
  }
  if (result.aligned() == 0) {
    throw Error(ErrorCode::EmptyOverlap, "estimate and reference share no aligned frames");
  }
  return result;
}

ErrorHistogram histogram(std::span<const double> errors, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw Error(ErrorCode::Config, "histogram bin width must be positive");
  }
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "histogram of an empty error set");
  ErrorHistogram h;
  h.bin_width = bin_width;
  h.total_frames = errors.size();
  std::vector<std::size_t> counts;
  for (double e : errors) {
    if (!std::isfinite(e) || e < 0.0) {
      throw Error(ErrorCode::Range, fmt::format("histogram: error value {} is not a finite magnitude", e));
    }
    auto k = static_cast<std::size_t>(std::floor(e / bin_width));
    // Keep k consistent with the bin test k*w <= e < (k+1)*w in floating point.
    while (k > 0 && static_cast<double>(k) * bin_width > e) --k;
    while (static_cast<double>(k + 1) * bin_width <= e) ++k;
    if (k >= counts.size()) counts.resize(k + 1, 0);
    ++counts[k];
  }
  const auto total = static_cast<double>(h.total_frames);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    h.bins.push_back({static_cast<double>(k) * bin_width, counts[k],
                      static_cast<double>(counts[k]) * 100.0 / total});
  }
  return h;
}

CycleErrorCurve cycle_error_curve(std::span<const CycleErrorInput> inputs, Eigen::Index channel,
                                  int n_points) {
  if (n_points < 2) throw Error(ErrorCode::Config, "cycle curves need at least two points");
  std::vector<std::tuple<double, int, std::size_t, std::size_t>> order;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t c = 0; c < inputs[i].cycles.size(); ++c) {
      const auto& cyc = inputs[i].cycles[c];
      order.emplace_back(cyc.start.timestamp, static_cast<int>(cyc.side), i, c);
    }
  }
  std::sort(order.begin(), order.end());

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_points);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(n_points);
  std::size_t used = 0;
  for (const auto& [t, side, i, c] : order) {
    const auto& input = inputs[i];
    const auto& cycle = input.cycles[c];
    const auto& series = *input.errors;
    if (series.t.empty() || cycle.start.timestamp < series.t.front() || cycle.end.timestamp > series.t.back()) {
      continue;
    }
    const Eigen::MatrixXd normalized = normalize_cycle(series, cycle, n_points);
    bool any = false;
    for (int p = 0; p < n_points; ++p) {
      const double v = normalized(p, channel);
      if (!std::isfinite(v)) continue;
      sum(p) += v;
      ++count(p);
      any = true;
    }
    if (any) ++used;
  }
  if (used == 0) throw Error(ErrorCode::EmptyInput, "no gait cycle overlaps the error series");
  CycleErrorCurve curve;
  curve.cycles_averaged = used;
  curve.points.resize(n_points);
  for (int p = 0; p < n_points; ++p) curve.points(p) = count(p) > 0 ? sum(p) / count(p) : kNaN;
  return curve;
}

CycleErrorCurve cycle_error_curve(const SampledSeries& errors, Eigen::Index channel,
                                  const std::vector<GaitCycle>& cycles, int n_points) {
  const CycleErrorInput input{&errors, cycles};
  return cycle_error_curve(std::span<const CycleErrorInput>(&input, 1), channel, n_points);
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "box statistics of an empty set");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::Range, "box statistics: non-finite value");
  }
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.n = v.size();
  b.min = v.front();
  b.max = v.back();
  b.q1 = quantile_sorted(v, 0.25);
  b.median = quantile_sorted(v, 0.5);
  b.q3 = quantile_sorted(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr;
  const double hi = b.q3 + 1.5 * iqr;
  for (double x : v) {
    if (x < lo || x > hi) b.outliers.push_back(x);
  }
  return b;
}

std::string histogram_csv(const std::vector<std::pair<std::string, ErrorHistogram>>& groups) {
  std::string out = "group,lower_deg,upper_deg,count,percentage\n";
  for (const auto& [name, h] : groups) {
    for (const auto& bin : h.bins) {
      out += fmt::format("{},{},{},{},{}\n", name, bin.lower_edge, bin.lower_edge + h.bin_width,
                         bin.count, bin.percentage);
    }
  }
  return out;
}

std::string box_stats_csv(const std::vector<std::pair<std::string, BoxStats>>& groups) {
  std::string out = "group,n,min,q1,median,q3,max,outliers\n";
  for (const auto& [name, b] : groups) {
    std::string outliers;
    for (std::size_t i = 0; i < b.outliers.size(); ++i) {
      if (i > 0) outliers += ';';
      outliers += fmt::format("{}", b.outliers[i]);
    }
    out += fmt::format("{},{},{},{},{},{},{},{}\n", name, b.n, b.min, b.q1, b.median, b.q3, b.max, outliers);
  }
  return out;
}

}  // namespace gaitkit
