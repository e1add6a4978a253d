#pragma once

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include <fmt/format.h>

#include "gaitkit/config.hpp"
#include "gaitkit/synth.hpp"

namespace gaitkit::testing {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / fmt::format("gaitkit-{}-{:x}", tag, rng());
  std::filesystem::create_directories(dir);
  return dir;
}

/// Config for noiseless synthetic input: no smoothing, raw thresholds.
inline RunConfig exact_config() {
  RunConfig c;
  c.smoothing_window = 1;
  c.fill_gaps = 0;
  return c;
}

/// Config tuned for keypoint noise around 1 cm.
inline RunConfig noisy_config() {
  RunConfig c;
  c.smoothing_window = 5;
  c.events.smoothing_window = 9;
  c.events.v_stop = 0.15;
  c.events.v_lift = 0.3;
  return c;
}

/// Largest absolute difference between corresponding numbers of two JSON
/// documents; infinity when their shapes or non-numeric values differ.
inline double max_numeric_difference(const ordered_json& a, const ordered_json& b) {
  constexpr double kMismatch = std::numeric_limits<double>::infinity();
  if (a.is_number() && b.is_number()) return std::abs(a.get<double>() - b.get<double>());
  if (a.type() != b.type() || a.size() != b.size()) return kMismatch;
  double worst = 0.0;
  if (a.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key())) return kMismatch;
      worst = std::max(worst, max_numeric_difference(it.value(), b.at(it.key())));
    }
    return worst;
  }
  if (a.is_array()) {
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, max_numeric_difference(a[i], b[i]));
    return worst;
  }
  return a == b ? 0.0 : kMismatch;
}

inline int run(const std::string& command) {
  return WEXITSTATUS(std::system((command + " 2>/dev/null >/dev/null").c_str()));
}

}  // namespace gaitkit::testing
