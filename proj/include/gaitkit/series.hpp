#pragma once

#include <Eigen/Core>

#include <vector>

namespace gaitkit {

/// A multi-channel signal sampled at strictly increasing timestamps.
/// Rows are samples, columns channels; NaN marks a missing value.
struct SampledSeries {
  std::vector<double> t;
  Eigen::MatrixXd values;

  Eigen::Index size() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
};

/// Linear interpolation of one channel at time `query`, bridging missing
/// samples. Returns NaN when no valid sample exists on one side of `query`.
double interpolate_channel(const SampledSeries& series, Eigen::Index channel, double query);

/// Value at `query` only from the two grid samples bracketing it; NaN if
/// either is missing or `query` is outside [t.front(), t.back()].
double interpolate_strict(const SampledSeries& series, Eigen::Index channel, double query);

}  // namespace gaitkit
