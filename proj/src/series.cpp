#include "gaitkit/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gaitkit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double interpolate_channel(const SampledSeries& series, Eigen::Index channel, double query) {
  const auto& t = series.t;
  if (t.empty()) return kNaN;
  const auto col = series.values.col(channel);
  // First sample with t >= query.
  auto it = std::lower_bound(t.begin(), t.end(), query);
  auto hi = static_cast<Eigen::Index>(it - t.begin());
  const auto n = static_cast<Eigen::Index>(t.size());
  if (hi < n && t[static_cast<std::size_t>(hi)] == query && std::isfinite(col(hi))) return col(hi);
  while (hi < n && !std::isfinite(col(hi))) ++hi;
  Eigen::Index lo = static_cast<Eigen::Index>(it - t.begin()) - 1;
  while (lo >= 0 && !std::isfinite(col(lo))) --lo;
  if (lo < 0 || hi >= n) return kNaN;
  const double t0 = t[static_cast<std::size_t>(lo)];
  const double t1 = t[static_cast<std::size_t>(hi)];
  return col(lo) + (col(hi) - col(lo)) * ((query - t0) / (t1 - t0));
}

double interpolate_strict(const SampledSeries& series, Eigen::Index channel, double query) {
  const auto& t = series.t;
  if (t.empty() || query < t.front() || query > t.back()) return kNaN;
  const auto col = series.values.col(channel);
  auto it = std::lower_bound(t.begin(), t.end(), query);
  const auto hi = static_cast<Eigen::Index>(it - t.begin());
  if (t[static_cast<std::size_t>(hi)] == query) return col(hi);
  const Eigen::Index lo = hi - 1;
  if (!std::isfinite(col(lo)) || !std::isfinite(col(hi))) return kNaN;
  const double t0 = t[static_cast<std::size_t>(lo)];
  const double t1 = t[static_cast<std::size_t>(hi)];
  return col(lo) + (col(hi) - col(lo)) * ((query - t0) / (t1 - t0));
}

}  // namespace gaitkit
