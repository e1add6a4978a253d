#include "gaitkit/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gaitkit/error.hpp"
#include "json.hpp"

namespace gaitkit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kNoTimestamp = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_lines(std::string_view bytes) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string_view::npos) end = bytes.size();
    std::string_view line = bytes.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == bytes.size()) break;
    start = end + 1;
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

double number_at(const json& arr, std::size_t i, const std::string& where) {
  const auto& v = arr.at(i);
  if (!v.is_number()) throw Error(ErrorCode::Parse, fmt::format("{}: non-numeric coordinate", where));
  return v.get<double>();
}

void store_joint(SkeletonFrame& frame, JointId id, const Eigen::Vector3d& p, double c,
                 double floor) {
  if (!std::isfinite(c) || c < floor || !p.allFinite()) return;
  frame.set(id, p, c);
}

int positional_stride(int dims) { return dims == 3 ? 4 : 3; }

StreamLine parse_object(const json& obj, int* dims, const ParseOptions& options,
                        std::int64_t fallback_index, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::Parse, fmt::format("{}: expected a JSON object", where));

  if (obj.contains("format")) {
    StreamHeader header;
    if (obj.at("format") != kKeypointFormat) {
      throw Error(ErrorCode::Schema, fmt::format("{}: unsupported format {}", where, obj.at("format").dump()));
    }
    if (obj.contains("dims")) header.dims = obj.at("dims").get<int>();
    if (obj.contains("frame_rate")) header.frame_rate = obj.at("frame_rate").get<double>();
    if (obj.contains("axes")) header.axes = obj.at("axes").get<std::string>();
    if (obj.contains("condition")) header.condition = obj.at("condition").get<std::string>();
    if (header.dims) {
      if (*dims != 0 && *dims != *header.dims) {
        throw Error(ErrorCode::Schema, fmt::format("{}: header dims disagree with data", where));
      }
      *dims = *header.dims;
    }
    return header;
  }

  SkeletonFrame frame;
  frame.frame_index = fallback_index;
  frame.timestamp = kNoTimestamp;
  if (obj.contains("frame")) frame.frame_index = obj.at("frame").get<std::int64_t>();
  if (obj.contains("t")) {
    if (!obj.at("t").is_number()) throw Error(ErrorCode::Parse, fmt::format("{}: 't' must be a number", where));
    frame.timestamp = obj.at("t").get<double>();
  }

  const bool canonical = obj.contains("joints");
  const bool use_canonical = options.mode == ParseOptions::Mode::Canonical ||
                             (options.mode == ParseOptions::Mode::Auto && canonical);
  if (use_canonical) {
    if (!canonical || !obj.at("joints").is_object()) {
      throw Error(ErrorCode::Schema, fmt::format("{}: missing 'joints' object", where));
    }
    for (const auto& [name, arr] : obj.at("joints").items()) {
      const auto id = joint_from_name(name);
      if (!id) throw Error(ErrorCode::Schema, fmt::format("{}: unknown joint '{}'", where, name));
      if (!arr.is_array() || (arr.size() != 3 && arr.size() != 4)) {
        throw Error(ErrorCode::Schema,
                    fmt::format("{}: joint '{}' must be [x,y,c] or [x,y,z,c]", where, name));
      }
      const int d = arr.size() == 4 ? 3 : 2;
      if (*dims == 0) *dims = d;
      if (*dims != d) {
        throw Error(ErrorCode::Schema, fmt::format("{}: joint '{}' has {}D data in a {}D stream", where, name, d, *dims));
      }
      Eigen::Vector3d p(number_at(arr, 0, where), number_at(arr, 1, where),
                        d == 3 ? number_at(arr, 2, where) : 0.0);
      store_joint(frame, *id, p, number_at(arr, arr.size() - 1, where), options.confidence_floor);
    }
    return frame;
  }

  // Positional triples/quadruples.
  const json* values = nullptr;
  int d = options.dims.value_or(0);
  const json* holder = &obj;
  if (obj.contains("people")) {
    const auto& people = obj.at("people");
    if (!people.is_array()) throw Error(ErrorCode::Parse, fmt::format("{}: 'people' must be an array", where));
    if (people.empty()) return frame;
    holder = &people.at(0);
  }
  auto pick = [&](const std::string& key, int key_dims) {
    if (!values && holder->contains(key)) {
      values = &holder->at(key);
      if (key_dims != 0) d = key_dims;
    }
  };
  if (!options.positional_key.empty()) pick(options.positional_key, 0);
  pick("pose_keypoints_3d", 3);
  pick("pose_keypoints_2d", 2);
  pick("keypoints", 0);
  if (!values || !values->is_array()) {
    throw Error(ErrorCode::Schema, fmt::format("{}: no joints or positional keypoint array", where));
  }
  if (d == 0) d = *dims != 0 ? *dims : 2;
  if (*dims == 0) *dims = d;
  if (*dims != d) throw Error(ErrorCode::Schema, fmt::format("{}: {}D keypoints in a {}D stream", where, d, *dims));
  const std::size_t stride = static_cast<std::size_t>(positional_stride(d));
  const std::size_t expected = stride * options.ordering.slots.size();
  if (values->size() != expected) {
    throw Error(ErrorCode::Schema,
                fmt::format("{}: expected {} values for {} joints, got {}", where, expected,
                            options.ordering.slots.size(), values->size()));
  }
  for (std::size_t slot = 0; slot < options.ordering.slots.size(); ++slot) {
    const auto id = options.ordering.slots[slot];
    if (!id) continue;
    const std::size_t base = slot * stride;
    Eigen::Vector3d p(number_at(*values, base, where), number_at(*values, base + 1, where),
                      d == 3 ? number_at(*values, base + 2, where) : 0.0);
    store_joint(frame, *id, p, number_at(*values, base + stride - 1, where), options.confidence_floor);
  }
  return frame;
}

double estimate_frame_rate(const std::vector<SkeletonFrame>& frames) {
  std::vector<double> periods;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const double dt = frames[i].timestamp - frames[i - 1].timestamp;
    const auto df = frames[i].frame_index - frames[i - 1].frame_index;
    if (std::isfinite(dt) && dt > 0.0 && df > 0) periods.push_back(dt / static_cast<double>(df));
  }
  if (periods.empty()) return 0.0;
  std::nth_element(periods.begin(), periods.begin() + periods.size() / 2, periods.end());
  return 1.0 / periods[periods.size() / 2];
}

void finish_sequence(SkeletonSequence& seq, const std::optional<double>& forced_rate,
                     const std::optional<double>& header_rate) {
  double rate = 0.0;
  if (forced_rate) rate = *forced_rate;
  else if (header_rate) rate = *header_rate;
  else rate = estimate_frame_rate(seq.frames);
  if (!(rate > 0.0)) rate = 30.0;
  seq.frame_rate = rate;
  for (auto& f : seq.frames) {
    if (std::isnan(f.timestamp)) f.timestamp = static_cast<double>(f.frame_index) / rate;
  }
  check_sequence(seq);
}

std::string format_number(double v) { return fmt::format("{}", v); }

}  // namespace

void finalize_sequence(SkeletonSequence& seq, const std::optional<double>& forced_rate,
                       const std::optional<double>& header_rate) {
  finish_sequence(seq, forced_rate, header_rate);
}

JointOrdering JointOrdering::body25() {
  JointOrdering o;
  o.slots.assign(25, std::nullopt);
  o.slots[9] = JointId::RightHip;
  o.slots[10] = JointId::RightKnee;
  o.slots[11] = JointId::RightAnkle;
  o.slots[12] = JointId::LeftHip;
  o.slots[13] = JointId::LeftKnee;
  o.slots[14] = JointId::LeftAnkle;
  o.slots[19] = JointId::LeftToe;
  o.slots[21] = JointId::LeftHeel;
  o.slots[22] = JointId::RightToe;
  o.slots[24] = JointId::RightHeel;
  return o;
}

JointOrdering JointOrdering::from_names(const std::vector<std::string>& names) {
  JointOrdering o;
  for (const auto& n : names) {
    if (n.empty()) {
      o.slots.push_back(std::nullopt);
      continue;
    }
    const auto id = joint_from_name(n);
    if (!id) throw Error(ErrorCode::Config, fmt::format("joint ordering: unknown joint '{}'", n));
    o.slots.push_back(*id);
  }
  return o;
}

StreamLine parse_frame_line(std::string_view line, int* dims, const ParseOptions& options,
                            std::int64_t fallback_index, double fallback_rate) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, fmt::format("malformed JSON: {}", e.what()));
  }
  try {
    auto parsed = parse_object(obj, dims, options, fallback_index, "frame");
    if (auto* frame = std::get_if<SkeletonFrame>(&parsed); frame && std::isnan(frame->timestamp)) {
      frame->timestamp = static_cast<double>(frame->frame_index) / fallback_rate;
    }
    return parsed;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, fmt::format("invalid frame: {}", e.what()));
  }
}

SkeletonSequence parse_keypoint_json(std::string_view bytes, const ParseOptions& options) {
  SkeletonSequence seq;
  int dims = options.dims.value_or(0);
  std::optional<double> header_rate;
  std::optional<std::string> header_axes;

  auto consume = [&](const json& obj, std::int64_t ordinal, const std::string& where) {
    StreamLine parsed;
    try {
      parsed = parse_object(obj, &dims, options, ordinal, where);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse, fmt::format("{}: {}", where, e.what()));
    }
    if (auto* header = std::get_if<StreamHeader>(&parsed)) {
      if (header->frame_rate) header_rate = header->frame_rate;
      if (!header->axes.empty()) header_axes = header->axes;
      seq.condition = header->condition;
    } else {
      seq.frames.push_back(std::move(std::get<SkeletonFrame>(parsed)));
    }
  };

  std::size_t first = bytes.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && bytes[first] == '[') {
    json doc;
    try {
      doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Parse, fmt::format("malformed JSON array: {}", e.what()));
    }
    std::int64_t ordinal = 0;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      consume(doc[i], ordinal, fmt::format("element {}", i + 1));
      if (!(doc[i].is_object() && doc[i].contains("format"))) ++ordinal;
    }
  } else {
    const auto lines = split_lines(bytes);
    std::int64_t ordinal = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (is_blank(lines[i])) continue;
      json obj;
      try {
        obj = json::parse(lines[i]);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, fmt::format("line {}: malformed JSON: {}", i + 1, e.what()));
      }
      const bool header = obj.is_object() && obj.contains("format");
      consume(obj, ordinal, fmt::format("line {}", i + 1));
      if (!header) ++ordinal;
    }
  }

  seq.dims = dims == 0 ? 3 : dims;
  if (header_axes) seq.axes = AxisConvention::parse(*header_axes);
  finish_sequence(seq, options.frame_rate, header_rate);
  return seq;
}

namespace {

std::vector<std::string> split_cells(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    std::string_view cell = line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    std::size_t a = cell.find_first_not_of(" \t");
    std::size_t b = cell.find_last_not_of(" \t");
    cells.emplace_back(a == std::string_view::npos ? std::string_view{} : cell.substr(a, b - a + 1));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, fmt::format("row {}: column '{}': invalid number '{}'", row, column, cell));
  }
}

constexpr std::array<std::string_view, 4> kAxisNames{"x", "y", "z", "conf"};

}  // namespace

SkeletonSequence parse_keypoint_csv(std::string_view bytes, const CsvOptions& options) {
  const auto lines = split_lines(bytes);
  std::size_t li = 0;
  while (li < lines.size() && is_blank(lines[li])) ++li;
  if (li == lines.size()) {
    throw Error(ErrorCode::Parse, "CSV input has no header row");
  }
  const auto header = split_cells(lines[li]);
  const std::size_t header_line = li;

  std::optional<std::size_t> frame_col;
  std::optional<std::size_t> time_col;
  std::vector<std::optional<std::pair<JointId, int>>> bindings(header.size());

  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name == "frame") {
      frame_col = c;
      continue;
    }
    if (name == "t") {
      time_col = c;
      continue;
    }
    if (!options.column_map.empty()) {
      if (auto it = options.column_map.find(name); it != options.column_map.end()) bindings[c] = it->second;
      continue;
    }
    const auto us = name.rfind('_');
    if (us == std::string::npos) continue;
    const auto joint = joint_from_name(std::string_view(name).substr(0, us));
    const auto axis_name = std::string_view(name).substr(us + 1);
    const auto axis_it = std::find(kAxisNames.begin(), kAxisNames.end(), axis_name);
    if (!joint || axis_it == kAxisNames.end()) {
      spdlog::debug("csv: ignoring column '{}'", name);
      continue;
    }
    bindings[c] = std::make_pair(*joint, static_cast<int>(axis_it - kAxisNames.begin()));
  }
  for (const auto& [column, binding] : options.column_map) {
    if (std::find(header.begin(), header.end(), column) == header.end()) {
      throw Error(ErrorCode::Config, fmt::format("column map names '{}' which is not in the CSV header", column));
    }
  }

  SkeletonSequence seq;
  seq.dims = 2;
  std::array<std::array<std::optional<std::size_t>, 4>, kAllJoints.size()> columns{};
  for (std::size_t c = 0; c < bindings.size(); ++c) {
    if (!bindings[c]) continue;
    const auto [joint, axis] = *bindings[c];
    columns[static_cast<std::size_t>(joint)][static_cast<std::size_t>(axis)] = c;
    if (axis == 2) seq.dims = 3;
  }

  std::int64_t ordinal = 0;
  for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const auto cells = split_cells(lines[i]);
    const std::size_t row = i + 1;
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::Parse, fmt::format("row {}: expected {} cells, got {}", row, header.size(), cells.size()));
    }
    SkeletonFrame frame;
    frame.frame_index = ordinal;
    frame.timestamp = kNoTimestamp;
    if (frame_col && !cells[*frame_col].empty()) {
      frame.frame_index = static_cast<std::int64_t>(parse_cell(cells[*frame_col], row, "frame"));
    }
    if (time_col && !cells[*time_col].empty()) frame.timestamp = parse_cell(cells[*time_col], row, "t");

    for (JointId j : kAllJoints) {
      const auto& cols = columns[static_cast<std::size_t>(j)];
      if (!cols[0] && !cols[1]) continue;
      bool complete = true;
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      for (int axis = 0; axis < seq.dims; ++axis) {
        const auto& col = cols[static_cast<std::size_t>(axis)];
        if (!col || cells[*col].empty()) {
          complete = false;
          break;
        }
        p[axis] = parse_cell(cells[*col], row, header[*col]);
      }
      if (!complete) continue;
      double conf = 1.0;
      if (const auto& col = cols[kConfidenceAxis]) {
        if (cells[*col].empty()) continue;
        conf = parse_cell(cells[*col], row, header[*col]);
      }
      store_joint(frame, j, p, conf, options.confidence_floor);
    }
    seq.frames.push_back(std::move(frame));
    ++ordinal;
  }
  finish_sequence(seq, options.frame_rate, std::nullopt);
  return seq;
}

std::string serialize_header_json(const SkeletonSequence& seq) {
  ordered_json h;
  h["format"] = kKeypointFormat;
  h["dims"] = seq.dims;
  h["frame_rate"] = seq.frame_rate;
  h["axes"] = seq.axes.to_string();
  if (!seq.condition.empty()) h["condition"] = seq.condition;
  return h.dump();
}

std::string serialize_frame_json(const SkeletonFrame& frame, int dims) {
  ordered_json f;
  f["frame"] = frame.frame_index;
  f["t"] = frame.timestamp;
  ordered_json joints = ordered_json::object();
  for (JointId j : kAllJoints) {
    if (!frame.has(j)) continue;
    const auto& k = frame.keypoint(j);
    ordered_json arr = ordered_json::array();
    arr.push_back(k.position.x());
    arr.push_back(k.position.y());
    if (dims == 3) arr.push_back(k.position.z());
    arr.push_back(k.confidence);
    joints[std::string(joint_name(j))] = std::move(arr);
  }
  f["joints"] = std::move(joints);
  return f.dump();
}

std::string serialize_json(const SkeletonSequence& seq) {
  std::string out = serialize_header_json(seq);
  out += '\n';
  for (const auto& frame : seq.frames) {
    out += serialize_frame_json(frame, seq.dims);
    out += '\n';
  }
  return out;
}

std::string serialize_csv(const SkeletonSequence& seq) {
  std::vector<JointId> present;
  for (JointId j : kAllJoints) {
    if (std::any_of(seq.frames.begin(), seq.frames.end(), [j](const auto& f) { return f.has(j); })) {
      present.push_back(j);
    }
  }
  std::string out = "frame,t";
  for (JointId j : present) {
    for (int axis = 0; axis < seq.dims; ++axis) out += fmt::format(",{}_{}", joint_name(j), kAxisNames[axis]);
    out += fmt::format(",{}_conf", joint_name(j));
  }
  out += '\n';
  for (const auto& f : seq.frames) {
    out += fmt::format("{},{}", f.frame_index, format_number(f.timestamp));
    for (JointId j : present) {
      if (!f.has(j)) {
        out += std::string(static_cast<std::size_t>(seq.dims + 1), ',');
        continue;
      }
      const auto& k = f.keypoint(j);
      for (int axis = 0; axis < seq.dims; ++axis) out += "," + format_number(k.position[axis]);
      out += "," + format_number(k.confidence);
    }
    out += '\n';
  }
  return out;
}

SkeletonSequence normalize_axes(const SkeletonSequence& seq, const AxisConvention& convention) {
  const Eigen::Matrix3d& m = convention.matrix();
  if (seq.dims == 2 && std::abs(m(2, 2)) != 1.0) {
    throw Error(ErrorCode::Config, "2D sequences cannot move the depth axis into the image plane");
  }
  SkeletonSequence out = seq;
  for (auto& frame : out.frames) {
    for (auto& k : frame.joints) {
      if (k) {
        k->position = m * k->position;
        if (seq.dims == 2) k->position.z() = 0.0;
      }
    }
  }
  out.axes = seq.axes.then(convention);
  return out;
}

SkeletonSequence fill_gaps(const SkeletonSequence& seq, int max_gap_frames) {
  if (max_gap_frames < 0) throw Error(ErrorCode::Config, "max_gap_frames must be >= 0");
  SkeletonSequence out = seq;
  const std::size_t n = seq.frames.size();
  for (JointId j : kAllJoints) {
    const auto idx = static_cast<std::size_t>(j);
    std::optional<std::size_t> last_present;
    for (std::size_t i = 0; i < n; ++i) {
      if (!seq.frames[i].joints[idx]) continue;
      if (last_present && i - *last_present > 1) {
        const std::size_t gap = i - *last_present - 1;
        if (gap <= static_cast<std::size_t>(max_gap_frames)) {
          const auto& a = *seq.frames[*last_present].joints[idx];
          const auto& b = *seq.frames[i].joints[idx];
          const double ta = seq.frames[*last_present].timestamp;
          const double tb = seq.frames[i].timestamp;
          for (std::size_t k = *last_present + 1; k < i; ++k) {
            const double w = (seq.frames[k].timestamp - ta) / (tb - ta);
            Keypoint kp;
            kp.position = a.position + w * (b.position - a.position);
            kp.confidence = std::min(a.confidence, b.confidence);
            kp.filled = true;
            out.frames[k].joints[idx] = kp;
          }
        }
      }
      last_present = i;
    }
  }
  return out;
}

SkeletonSequence smooth(const SkeletonSequence& seq, int window_frames) {
  if (window_frames < 1 || window_frames % 2 == 0) {
    throw Error(ErrorCode::Config, fmt::format("smoothing window must be odd and >= 1, got {}", window_frames));
  }
  if (window_frames == 1) return seq;
  const auto half = static_cast<std::ptrdiff_t>(window_frames / 2);
  const auto n = static_cast<std::ptrdiff_t>(seq.frames.size());
  SkeletonSequence out = seq;
  for (JointId j : kAllJoints) {
    const auto idx = static_cast<std::size_t>(j);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      if (!seq.frames[static_cast<std::size_t>(i)].joints[idx]) continue;
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      int count = 0;
      for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, i - half); k <= std::min(n - 1, i + half); ++k) {
        const auto& kp = seq.frames[static_cast<std::size_t>(k)].joints[idx];
        if (!kp) continue;
        sum += kp->position;
        ++count;
      }
      out.frames[static_cast<std::size_t>(i)].joints[idx]->position = sum / count;
    }
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write '{}'", tmp));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::Io, fmt::format("write failed for '{}'", tmp));
  }
  std::filesystem::rename(tmp, target);
}

SkeletonSequence load_sequence(const std::string& path, const ParseOptions& json_options,
                               const CsvOptions& csv_options, InputFormat format) {
  const std::string bytes = read_file(path);
  if (format == InputFormat::Auto) {
    const auto ext = std::filesystem::path(path).extension().string();
    format = (ext == ".csv" || ext == ".CSV") ? InputFormat::Csv : InputFormat::Json;
  }
  return format == InputFormat::Csv ? parse_keypoint_csv(bytes, csv_options)
                                    : parse_keypoint_json(bytes, json_options);
}

}  // namespace gaitkit
