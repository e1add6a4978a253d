#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gaitkit/config.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/skeleton.hpp"

namespace gaitkit {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port"; throws ErrorCode::Config.
  static Endpoint parse(std::string_view text);
};

struct StreamStats {
  std::size_t received = 0;      // lines seen, headers included
  std::size_t frames = 0;        // frames kept
  std::size_t dropped = 0;       // gaps in the frame index
  std::size_t malformed = 0;     // lines that failed to parse
  std::size_t out_of_order = 0;  // frames at or before the last kept index
};

/// Accumulates one streamed session in arrival order.
class StreamSession {
 public:
  explicit StreamSession(const RunConfig& config);

  /// Consumes one line; returns angle CSV rows for a kept frame, else "".
  std::string feed(std::string_view line);

  bool empty() const { return frames_.empty(); }
  const StreamStats& stats() const { return stats_; }

  /// The received frames as a sequence, finalized like a batch file.
  SkeletonSequence sequence() const;

  /// Full analysis report; throws ErrorCode::EmptyInput for an empty session.
  CommandResult finish(const std::string& source) const;

 private:
  const RunConfig& config_;
  ParseOptions options_;
  AxisConvention axes_;
  int dims_ = 0;
  std::optional<double> header_rate_;
  std::string header_axes_;
  std::string condition_;
  std::vector<SkeletonFrame> frames_;
  std::deque<SkeletonFrame> window_;
  StreamStats stats_;
};

struct StreamHooks {
  /// Called once the socket is bound, with the actual port.
  std::function<void(std::uint16_t)> on_ready;
  /// Called for every completed non-empty session.
  std::function<void(const CommandResult&, const StreamStats&)> on_report;
  std::atomic<bool>* stop = nullptr;
};

/// Receives until a session closes (or forever unless config.stream.once).
/// Angle rows go to `rows`. Throws ErrorCode::Io when the endpoint cannot be
/// bound. Returns the number of reports produced.
std::size_t run_stream(const RunConfig& config, std::ostream& rows, const StreamHooks& hooks = {});

struct ReplayOptions {
  Endpoint target;
  std::string transport = "udp";
  /// Frames per second; 0 sends as fast as possible.
  double fps = 0.0;
  /// Fraction of frames withheld; the first and last frame are always sent.
  double drop_fraction = 0.0;
  std::uint64_t seed = 1;
};

struct ReplayResult {
  std::size_t sent = 0;
  std::vector<std::size_t> dropped;  // positions among the frame lines
};

/// Frame positions withheld for a given frame count.
std::vector<std::size_t> choose_drops(std::size_t frame_count, double fraction, std::uint64_t seed);

/// Sends the non-blank lines of a canonical keypoint stream.
ReplayResult replay(std::string_view canonical_json, const ReplayOptions& options);

/// The same stream with the chosen frames removed.
std::string without_frames(std::string_view canonical_json, const std::vector<std::size_t>& dropped);

}  // namespace gaitkit
