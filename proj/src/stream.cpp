#include "gaitkit/stream.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/kinematics.hpp"
#include "gaitkit/progression.hpp"

namespace gaitkit {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::string_view kAngleHeader = "frame,t,side,inv_ev_deg,dorsi_plantar_deg,ankle_deg\n";

class Socket {
 public:
  explicit Socket(int fd = -1) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { reset(); }

  int fd() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (ep.host.empty() || ep.host == "*" || ep.host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* found = nullptr;
  if (::getaddrinfo(ep.host.c_str(), nullptr, &hints, &found) != 0 || found == nullptr) {
    throw Error(ErrorCode::Io, fmt::format("cannot resolve host '{}'", ep.host));
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(found->ai_addr)->sin_addr;
  ::freeaddrinfo(found);
  return addr;
}

bool is_header_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    return j.is_object() && j.contains("format");
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

std::vector<std::string_view> nonblank_lines(std::string_view bytes) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string_view::npos) end = bytes.size();
    std::string_view line = bytes.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) out.push_back(line);
    start = end + 1;
  }
  return out;
}

// Frame positions (among frame lines) of every line; nullopt for headers.
std::vector<std::optional<std::size_t>> frame_positions(const std::vector<std::string_view>& lines) {
  std::vector<std::optional<std::size_t>> out;
  std::size_t k = 0;
  for (auto line : lines) {
    if (is_header_line(line)) {
      out.emplace_back();
    } else {
      out.emplace_back(k++);
    }
  }
  return out;
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::Config, fmt::format("endpoint '{}' is not host:port", text));
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const std::string port(text.substr(colon + 1));
  try {
    std::size_t used = 0;
    const long p = std::stol(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(p);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Config, fmt::format("endpoint '{}' has an invalid port", text));
  }
  return ep;
}

StreamSession::StreamSession(const RunConfig& config)
    : config_(config), options_(json_options(config)), axes_(AxisConvention::parse(config.axes)) {}

std::string StreamSession::feed(std::string_view line) {
  if (line.find_first_not_of(" \t\r") == std::string_view::npos) return {};
  ++stats_.received;
  const std::int64_t fallback = frames_.empty() ? 0 : frames_.back().frame_index + 1;
  const double rate = options_.frame_rate.value_or(header_rate_.value_or(30.0));
  StreamLine parsed;
  try {
    parsed = parse_frame_line(line, &dims_, options_, fallback, rate);
  } catch (const Error& e) {
    ++stats_.malformed;
    spdlog::debug("stream: malformed line dropped: {}", e.what());
    return {};
  }
  if (const auto* header = std::get_if<StreamHeader>(&parsed)) {
    if (header->frame_rate) header_rate_ = header->frame_rate;
    if (!header->axes.empty()) header_axes_ = header->axes;
    condition_ = header->condition;
    return {};
  }
  SkeletonFrame frame = std::get<SkeletonFrame>(std::move(parsed));
  if (!frames_.empty()) {
    const auto& last = frames_.back();
    if (frame.frame_index <= last.frame_index || !(frame.timestamp > last.timestamp)) {
      ++stats_.out_of_order;
      return {};
    }
    stats_.dropped += static_cast<std::size_t>(frame.frame_index - last.frame_index - 1);
  }
  frames_.push_back(frame);
  ++stats_.frames;

  // Preview angles on the raw frame; the walking direction comes from the
  // recent window.
  SkeletonSequence window;
  window.dims = dims_ == 0 ? 3 : dims_;
  SkeletonSequence single = window;
  single.frames.push_back(frame);
  single = normalize_axes(single, axes_);
  window_.push_back(single.frames.front());
  while (!window_.empty() && frame.timestamp - window_.front().timestamp > config_.stream.window_s) window_.pop_front();
  window.frames.assign(window_.begin(), window_.end());
  const Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d direction = config_.progression.direction
                                        ? Eigen::Vector3d(config_.progression.direction->normalized())
                                        : estimate_walking_direction(window, up);
  std::string rows;
  for (Side s : kSides) {
    try {
      const auto link = link_vectors(single.frames.front(), s);
      AngleSample a;
      a.frame_index = frame.frame_index;
      a.timestamp = frame.timestamp;
      a.side = s;
      a.inversion_eversion = inversion_eversion(link, up);
      a.dorsiflexion_plantarflexion = dorsiflexion_plantarflexion(link, direction);
      a.ankle = ankle_angle(link);
      rows += angle_csv_row(a);
    } catch (const Error&) {
    }
  }
  return rows;
}

SkeletonSequence StreamSession::sequence() const {
  SkeletonSequence seq;
  seq.frames = frames_;
  seq.dims = dims_ == 0 ? 3 : dims_;
  seq.condition = condition_;
  if (!header_axes_.empty()) seq.axes = AxisConvention::parse(header_axes_);
  finalize_sequence(seq, options_.frame_rate, header_rate_);
  return seq;
}

CommandResult StreamSession::finish(const std::string& source) const {
  if (frames_.empty()) throw Error(ErrorCode::EmptyInput, "stream session received no frames");
  const SkeletonSequence seq = sequence();
  ordered_json input{{"path", source},
                     {"frames", seq.frames.size()},
                     {"dims", seq.dims},
                     {"frame_rate", seq.frame_rate},
                     {"condition", seq.condition},
                     {"stream",
                      {{"received", stats_.received},
                       {"dropped", stats_.dropped},
                       {"malformed", stats_.malformed},
                       {"out_of_order", stats_.out_of_order}}}};
  return run_analyze(config_, seq, std::move(input));
}

std::size_t run_stream(const RunConfig& config, std::ostream& rows, const StreamHooks& hooks) {
  const Endpoint ep = Endpoint::parse(config.stream.listen);
  const bool tcp = config.stream.transport == "tcp";
  Socket server(::socket(AF_INET, tcp ? SOCK_STREAM : SOCK_DGRAM, 0));
  if (!server) throw Error(ErrorCode::Io, fmt::format("socket: {}", std::strerror(errno)));
  const int yes = 1;
  ::setsockopt(server.fd(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  if (!tcp) {
    const int buffer = 8 << 20;
    ::setsockopt(server.fd(), SOL_SOCKET, SO_RCVBUF, &buffer, sizeof buffer);
  }
  sockaddr_in addr = resolve(ep);
  if (::bind(server.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error(ErrorCode::Io, fmt::format("cannot bind {}: {}", config.stream.listen, std::strerror(errno)));
  }
  if (tcp && ::listen(server.fd(), 4) != 0) {
    throw Error(ErrorCode::Io, fmt::format("cannot listen on {}: {}", config.stream.listen, std::strerror(errno)));
  }
  socklen_t len = sizeof addr;
  ::getsockname(server.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  const std::uint16_t bound_port = ntohs(addr.sin_port);
  spdlog::info("stream: listening on {}:{} ({})", ep.host, bound_port, config.stream.transport);
  if (hooks.on_ready) hooks.on_ready(bound_port);

  const auto idle = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(config.stream.idle_timeout_s));
  const std::string source = fmt::format("stream:{}://{}:{}", config.stream.transport, ep.host, bound_port);
  std::vector<char> buffer(65536);
  std::size_t reports = 0;
  Socket client;
  std::string pending;

  while (true) {
    StreamSession session(config);
    bool header_written = false;
    auto last_activity = Clock::now();
    auto consume = [&](std::string_view text) {
      std::size_t start = 0;
      while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string out = session.feed(text.substr(start, end - start));
        if (!out.empty()) {
          if (!header_written) rows << kAngleHeader;
          header_written = true;
          rows << out;
        }
        start = end + 1;
      }
    };

    bool stopped = false;
    while (true) {
      if (hooks.stop && hooks.stop->load()) {
        stopped = true;
        break;
      }
      const auto now = Clock::now();
      if (now - last_activity >= idle) break;
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(idle - (now - last_activity));
      const int wait_ms = static_cast<int>(std::clamp<std::int64_t>(remaining.count(), 1, 100));

      pollfd fds[2];
      nfds_t nfds = 0;
      fds[nfds++] = pollfd{server.fd(), POLLIN, 0};
      if (client) fds[nfds++] = pollfd{client.fd(), POLLIN, 0};
      const int ready = ::poll(fds, nfds, wait_ms);
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::Io, fmt::format("poll: {}", std::strerror(errno)));
      }
      if (ready == 0) continue;

      if (fds[0].revents & POLLIN) {
        if (tcp) {
          Socket accepted(::accept(server.fd(), nullptr, nullptr));
          if (accepted) {
            if (client) consume(pending);
            pending.clear();
            client = std::move(accepted);
          }
        } else {
          const ssize_t n = ::recv(server.fd(), buffer.data(), buffer.size(), 0);
          if (n > 0) {
            consume(std::string_view(buffer.data(), static_cast<std::size_t>(n)));
            last_activity = Clock::now();
          }
        }
      }
      if (client && nfds == 2 && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
        const ssize_t n = ::recv(client.fd(), buffer.data(), buffer.size(), 0);
        if (n <= 0) {
          consume(pending);
          pending.clear();
          client.reset();
        } else {
          pending.append(buffer.data(), static_cast<std::size_t>(n));
          const auto cut = pending.rfind('\n');
          if (cut != std::string::npos) {
            consume(std::string_view(pending).substr(0, cut));
            pending.erase(0, cut + 1);
          }
        }
        last_activity = Clock::now();
      }
    }
    if (!pending.empty()) {
      consume(pending);
      pending.clear();
    }
    rows.flush();

    if (session.empty()) {
      if (config.stream.once || session.stats().received > 0) {
        spdlog::warn("stream: empty session (no frames within {} s); no report written", config.stream.idle_timeout_s);
      }
    } else {
      const auto& st = session.stats();
      spdlog::info("stream: session closed with {} frames, {} dropped, {} malformed", st.frames, st.dropped, st.malformed);
      const CommandResult result = session.finish(source);
      if (hooks.on_report) hooks.on_report(result, st);
      ++reports;
    }
    if (stopped || config.stream.once) break;
  }
  return reports;
}

std::vector<std::size_t> choose_drops(std::size_t frame_count, double fraction, std::uint64_t seed) {
  if (frame_count < 3 || !(fraction > 0.0)) return {};
  std::vector<std::size_t> candidates(frame_count - 2);
  std::iota(candidates.begin(), candidates.end(), std::size_t{1});
  const auto k = std::min(candidates.size(),
                          static_cast<std::size_t>(std::llround(fraction * static_cast<double>(frame_count))));
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(k);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

ReplayResult replay(std::string_view canonical_json, const ReplayOptions& options) {
  const auto lines = nonblank_lines(canonical_json);
  const auto positions = frame_positions(lines);
  const std::size_t frame_count =
      static_cast<std::size_t>(std::count_if(positions.begin(), positions.end(), [](const auto& p) { return p.has_value(); }));
  ReplayResult result;
  result.dropped = choose_drops(frame_count, options.drop_fraction, options.seed);

  const bool tcp = options.transport == "tcp";
  if (!tcp && options.transport != "udp") throw Error(ErrorCode::Config, "transport must be udp or tcp");
  Socket sock(::socket(AF_INET, tcp ? SOCK_STREAM : SOCK_DGRAM, 0));
  if (!sock) throw Error(ErrorCode::Io, fmt::format("socket: {}", std::strerror(errno)));
  sockaddr_in addr = resolve(options.target);
  if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error(ErrorCode::Io, fmt::format("cannot connect to {}:{}: {}", options.target.host, options.target.port,
                                           std::strerror(errno)));
  }

  auto send_all = [&](std::string_view data) {
    while (!data.empty()) {
      const ssize_t n = ::send(sock.fd(), data.data(), data.size(), MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::Io, fmt::format("send: {}", std::strerror(errno)));
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  };

  const auto start = Clock::now();
  std::size_t drop_cursor = 0;
  std::size_t frame_no = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (positions[i]) {
      const std::size_t pos = *positions[i];
      if (options.fps > 0.0) {
        std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(
                                                  std::chrono::duration<double>(static_cast<double>(frame_no) / options.fps)));
      }
      ++frame_no;
      if (drop_cursor < result.dropped.size() && result.dropped[drop_cursor] == pos) {
        ++drop_cursor;
        continue;
      }
    }
    std::string payload(lines[i]);
    payload += '\n';
    send_all(payload);
    ++result.sent;
  }
  return result;
}

std::string without_frames(std::string_view canonical_json, const std::vector<std::size_t>& dropped) {
  const auto lines = nonblank_lines(canonical_json);
  const auto positions = frame_positions(lines);
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (positions[i] && std::binary_search(dropped.begin(), dropped.end(), *positions[i])) continue;
    out.append(lines[i]);
    out += '\n';
  }
  return out;
}

}  // namespace gaitkit
