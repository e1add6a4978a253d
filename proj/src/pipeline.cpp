#include "gaitkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gaitkit/error.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/sync.hpp"

namespace gaitkit {

namespace {

const Eigen::Vector3d kUp = Eigen::Vector3d::UnitY();

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json vec_json(const Eigen::Vector3d& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

std::string resolve_condition(const std::string& preferred, const RunConfig& config, const SkeletonSequence& seq) {
  if (!preferred.empty()) return preferred;
  if (!config.condition.empty()) return config.condition;
  if (!seq.condition.empty()) return seq.condition;
  return "default";
}

std::vector<double> fpa_values(const std::vector<FootProgressionSample>& samples) {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.angle);
  return out;
}

ordered_json optional_box(const std::vector<double>& values) {
  return values.empty() ? ordered_json(nullptr) : box_json(box_stats(values));
}

ordered_json features_json(const GaitFeatures& f) {
  ordered_json j;
  j["median_inversion_eversion"] = {{"left", f.median_inversion_eversion[0]}, {"right", f.median_inversion_eversion[1]}};
  j["median_fpa"] = f.has_fpa ? ordered_json{{"left", f.median_fpa[0]}, {"right", f.median_fpa[1]}} : ordered_json(nullptr);
  j["stance_fraction"] = {{"left", f.stance_fraction[0]}, {"right", f.stance_fraction[1]}};
  j["stance_asymmetry"] = f.stance_asymmetry;
  j["cadence"] = f.cadence;
  return j;
}

ordered_json label_json(const ClassLabel& l) {
  ordered_json scores;
  for (GaitClass c : kGaitClasses) scores[std::string(class_name(c))] = l.score(c);
  return {{"label", class_name(l.label)}, {"scores", scores}};
}

ordered_json input_json(const std::string& path, const SkeletonSequence& seq) {
  return {{"path", path}, {"frames", seq.frames.size()}, {"dims", seq.dims}, {"frame_rate", seq.frame_rate},
          {"condition", seq.condition}};
}

std::string angle_box_csv(const SessionAnalysis& a) {
  std::vector<std::pair<std::string, BoxStats>> groups;
  if (!a.fpa.empty()) groups.emplace_back(fmt::format("fpa/{}", a.condition), box_stats(fpa_values(a.fpa)));
  for (Side s : kSides) {
    const SampledSeries table = angle_table(a.angles, s);
    for (AngleParameter p : kAngleParameters) {
      std::vector<double> v;
      const auto c = static_cast<Eigen::Index>(p);
      for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
        if (std::isfinite(table.values(i, c))) v.push_back(table.values(i, c));
      }
      if (!v.empty()) groups.emplace_back(fmt::format("{}/{}", parameter_name(p), side_name(s)), box_stats(v));
    }
  }
  return box_stats_csv(groups);
}

struct ValidatedSession {
  SessionSpec spec;
  SessionAnalysis estimate;
  SessionAnalysis reference;
  std::vector<double> estimate_jumps;
  std::vector<double> reference_jumps;
  TimeMapping mapping;
  AngularErrors errors;
};

ValidatedSession validate_session(const RunConfig& config, SessionSpec spec) {
  const SkeletonSequence est_raw = load_input(config, spec.estimate);
  const SkeletonSequence ref_raw = load_input(config, spec.reference);
  if (est_raw.dims != ref_raw.dims) {
    throw Error(ErrorCode::Dimension,
                fmt::format("estimate '{}' is {}D but reference '{}' is {}D", spec.estimate, est_raw.dims,
                            spec.reference, ref_raw.dims));
  }
  ValidatedSession v;
  v.estimate = analyze_sequence(est_raw, config, config.axes, false);
  v.reference = analyze_sequence(ref_raw, config, config.reference_axes, false);
  spec.condition = resolve_condition(spec.condition, config, est_raw);
  v.estimate.condition = spec.condition;
  v.reference.condition = spec.condition;
  v.spec = spec;
  if (config.sync.method == "jumps") {
    const JumpParams jp = jump_params(config);
    v.estimate_jumps = detect_jumps(v.estimate.cleaned, jp);
    v.reference_jumps = detect_jumps(v.reference.cleaned, jp);
    v.mapping = align(v.estimate_jumps, v.reference_jumps);
  } else {
    v.mapping = TimeMapping{config.sync.offset, config.sync.rate};
  }
  v.errors = angular_errors(v.estimate.angles, v.reference.angles, v.mapping, config.validation.signed_errors);
  return v;
}

}  // namespace

SkeletonSequence load_input(const RunConfig& config, const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::Config, "no input file given");
  return load_sequence(path, json_options(config), csv_options(config), input_format(config));
}

SessionAnalysis analyze_sequence(const SkeletonSequence& raw, const RunConfig& config, const std::string& axes,
                                 bool require_label) {
  if (raw.frames.empty()) throw Error(ErrorCode::EmptyInput, "input contains no frames");
  check_sequence(raw);
  SessionAnalysis a;
  a.cleaned = fill_gaps(normalize_axes(raw, AxisConvention::parse(axes)), config.fill_gaps);
  a.smoothed = smooth(a.cleaned, config.smoothing_window);
  a.condition = resolve_condition("", config, raw);

  if (config.progression.direction) {
    Eigen::Vector3d d = *config.progression.direction;
    d -= d.dot(kUp) * kUp;
    if (!(d.norm() > kMinLinkLength)) throw Error(ErrorCode::Config, "progression.direction is vertical");
    a.direction = d.normalized();
  } else {
    a.direction = estimate_walking_direction(a.cleaned, kUp);
  }
  a.angles = angle_series(a.smoothed, AngleConfig{kUp, a.direction});
  if (a.angles.samples.empty()) {
    throw Error(ErrorCode::InsufficientData, "no frame carries knee, ankle and toe of either side");
  }

  EventParams ep = config.events;
  ep.up = kUp;
  for (Side s : kSides) {
    const auto side_events = detect_events(a.cleaned, s, ep);
    a.events.insert(a.events.end(), side_events.begin(), side_events.end());
  }
  std::stable_sort(a.events.begin(), a.events.end(), [](const GaitEvent& x, const GaitEvent& y) {
    return std::tie(x.timestamp, x.side) < std::tie(y.timestamp, y.side);
  });
  a.cycles = segment_cycles(a.events);

  ProgressionOptions po = progression_options(config);
  po.up = kUp;
  a.fpa = session_progression(a.smoothed, a.cycles, po);

  try {
    a.features = extract_features(a.angles, a.cycles, a.fpa);
    a.label = RuleClassifier(config.classifier).classify(*a.features);
  } catch (const Error& e) {
    if (require_label) throw;
    a.classification_note = e.what();
    spdlog::info("classification skipped: {}", e.what());
  }
  return a;
}

ordered_json box_json(const BoxStats& b) {
  return {{"n", b.n},   {"min", b.min}, {"q1", b.q1},   {"median", b.median},
          {"q3", b.q3}, {"max", b.max}, {"outliers", b.outliers}};
}

ordered_json analysis_json(const SessionAnalysis& a) {
  ordered_json j;
  j["frames"] = a.cleaned.frames.size();
  j["frame_rate"] = a.cleaned.frame_rate;
  j["dims"] = a.cleaned.dims;
  j["condition"] = a.condition;
  j["walking_direction"] = vec_json(a.direction);

  ordered_json angles;
  for (Side s : kSides) {
    const auto samples = a.angles.side(s);
    ordered_json side;
    side["frames"] = samples.size();
    for (AngleParameter p : kAngleParameters) {
      std::vector<double> v;
      for (const auto& sample : samples) v.push_back(value_of(sample, p));
      side[std::string(parameter_name(p))] = optional_box(v);
    }
    angles[std::string(side_name(s))] = side;
  }
  j["angles"] = angles;

  ordered_json events = ordered_json::array();
  for (const auto& e : a.events) {
    events.push_back({{"kind", event_kind_name(e.kind)}, {"side", side_name(e.side)}, {"frame", e.frame_index},
                      {"t", e.timestamp}});
  }
  j["events"] = events;

  ordered_json cycles = ordered_json::array();
  for (const auto& c : a.cycles) {
    cycles.push_back({{"side", side_name(c.side)},
                      {"start_frame", c.start.frame_index},
                      {"toe_off_frame", c.toe_off.frame_index},
                      {"end_frame", c.end.frame_index},
                      {"duration_s", c.duration()},
                      {"stance_fraction", c.stance_fraction()}});
  }
  j["cycles"] = cycles;

  ordered_json fpa = ordered_json::array();
  for (const auto& s : a.fpa) {
    fpa.push_back({{"cycle_start_frame", s.cycle.start.frame_index},
                   {"side", side_name(s.side)},
                   {"fpa_deg", s.angle},
                   {"line", {{"m", s.line.m}, {"n", s.line.n}, {"x0", s.line.x0}, {"y0", s.line.y0}}}});
  }
  j["fpa"] = {{"samples", fpa}, {"box", {{a.condition, optional_box(fpa_values(a.fpa))}}}};
  j["features"] = a.features ? features_json(*a.features) : ordered_json(nullptr);
  j["classification"] = a.label ? label_json(*a.label) : ordered_json(nullptr);
  if (!a.classification_note.empty()) j["classification_note"] = a.classification_note;
  return j;
}

CommandResult run_analyze(const RunConfig& config, const SkeletonSequence& raw, ordered_json input) {
  const SessionAnalysis a = analyze_sequence(raw, config, config.axes, false);
  CommandResult r;
  r.report["schema"] = kReportSchema;
  r.report["kind"] = "analyze";
  r.report["config"] = config_to_json(config);
  r.report["input"] = std::move(input);
  r.report["analysis"] = analysis_json(a);
  r.files.push_back({"angles.csv", angle_series_csv(a.angles)});
  r.files.push_back({"events.csv", events_csv(a.events)});
  r.files.push_back({"fpa.csv", progression_csv(a.fpa)});
  r.files.push_back({"box_stats.csv", angle_box_csv(a)});
  return r;
}

CommandResult run_analyze(const RunConfig& config) {
  const SkeletonSequence raw = load_input(config, config.input);
  return run_analyze(config, raw, input_json(config.input, raw));
}

CommandResult run_validate(const RunConfig& config) {
  std::vector<SessionSpec> specs = config.sessions;
  if (specs.empty()) {
    if (config.input.empty() || config.reference.empty()) {
      throw Error(ErrorCode::Config, "validate needs --input and --reference or a sessions list");
    }
    specs.push_back({config.input, config.reference, config.condition});
  }
  for (const auto& s : specs) {
    if (s.estimate.empty() || s.reference.empty()) {
      throw Error(ErrorCode::Config, "every session needs an estimate and a reference");
    }
  }

  std::vector<std::future<ValidatedSession>> pending;
  for (const auto& s : specs) pending.push_back(std::async(std::launch::async, validate_session, std::cref(config), s));
  std::vector<ValidatedSession> sessions;
  std::exception_ptr failure;
  for (auto& f : pending) {
    try {
      sessions.push_back(f.get());
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::map<std::string, std::vector<const ValidatedSession*>> by_condition;
  for (const auto& s : sessions) by_condition[s.spec.condition].push_back(&s);

  ordered_json analysis;
  ordered_json session_list = ordered_json::array();
  for (const auto& s : sessions) {
    ordered_json j;
    j["estimate"] = s.spec.estimate;
    j["reference"] = s.spec.reference;
    j["condition"] = s.spec.condition;
    j["mapping"] = {{"offset", s.mapping.offset}, {"rate", s.mapping.rate}};
    j["jumps"] = {{"estimate", s.estimate_jumps}, {"reference", s.reference_jumps}};
    j["frames"] = {{"estimate", s.estimate.cleaned.frames.size()},
                   {"reference", s.reference.cleaned.frames.size()},
                   {"aligned", s.errors.aligned()},
                   {"excluded", s.errors.excluded()}};
    j["classification"] = s.estimate.label ? label_json(*s.estimate.label) : ordered_json(nullptr);
    session_list.push_back(j);
  }
  analysis["sessions"] = session_list;

  ordered_json counts;
  std::size_t total = 0;
  for (const auto& [condition, list] : by_condition) {
    std::size_t aligned = 0;
    std::size_t excluded = 0;
    for (const auto* s : list) {
      aligned += s->errors.aligned();
      excluded += s->errors.excluded();
    }
    total += aligned;
    counts[condition] = {{"sessions", list.size()}, {"aligned", aligned}, {"excluded", excluded}};
  }
  analysis["frame_counts"] = counts;
  analysis["total_aligned_frames"] = total;

  std::vector<std::pair<std::string, ErrorHistogram>> histogram_groups;
  ordered_json histograms;
  ordered_json summary;
  for (AngleParameter p : kAngleParameters) {
    const std::string pname(parameter_name(p));
    for (const auto& [condition, list] : by_condition) {
      std::vector<double> values;
      for (const auto* s : list) {
        const auto v = s->errors.values(p);
        values.insert(values.end(), v.begin(), v.end());
      }
      if (values.empty()) continue;
      double sum = 0.0;
      for (double v : values) sum += v;
      std::vector<double> magnitudes = values;
      for (double& v : magnitudes) v = std::abs(v);
      const ErrorHistogram h = histogram(magnitudes, config.validation.bin_width);
      ordered_json bins = ordered_json::array();
      for (const auto& b : h.bins) {
        bins.push_back({{"lower", b.lower_edge}, {"upper", b.lower_edge + h.bin_width}, {"count", b.count},
                        {"percentage", b.percentage}});
      }
      histograms[pname][condition] = {{"bin_width", h.bin_width}, {"total_frames", h.total_frames}, {"bins", bins}};
      summary[pname][condition] = {{"mean", sum / static_cast<double>(values.size())}, {"box", box_json(box_stats(values))}};
      histogram_groups.emplace_back(fmt::format("{}/{}", pname, condition), h);
    }
  }
  analysis["histograms"] = histograms;
  analysis["error_summary"] = summary;

  ordered_json curves;
  std::string curve_csv = "percent";
  std::vector<Eigen::VectorXd> curve_points;
  for (AngleParameter p : kAngleParameters) {
    const std::string pname(parameter_name(p));
    curve_csv += fmt::format(",{}_deg", pname);
    std::vector<CycleErrorInput> inputs;
    for (const auto& s : sessions) {
      for (Side side : kSides) {
        CycleErrorInput in;
        in.errors = &s.errors.side(side).errors;
        for (const auto& c : s.reference.cycles) {
          if (c.side == side) in.cycles.push_back(c);
        }
        inputs.push_back(std::move(in));
      }
    }
    try {
      const CycleErrorCurve curve =
          cycle_error_curve(inputs, static_cast<Eigen::Index>(p), config.validation.n_points);
      ordered_json points = ordered_json::array();
      for (Eigen::Index i = 0; i < curve.points.size(); ++i) points.push_back(number_or_null(curve.points(i)));
      curves[pname] = {{"cycles_averaged", curve.cycles_averaged}, {"points", points}};
      curve_points.push_back(curve.points);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyInput) throw;
      spdlog::warn("cycle error curve for {}: {}", pname, e.what());
      curves[pname] = nullptr;
      curve_points.push_back(Eigen::VectorXd::Constant(config.validation.n_points, std::nan("")));
    }
  }
  curve_csv += '\n';
  for (int i = 0; i < config.validation.n_points; ++i) {
    curve_csv += fmt::format("{}", 100.0 * i / (config.validation.n_points - 1));
    for (const auto& pts : curve_points) {
      curve_csv += std::isfinite(pts(i)) ? fmt::format(",{}", pts(i)) : std::string(",");
    }
    curve_csv += '\n';
  }
  analysis["cycle_curves"] = curves;

  std::vector<std::pair<std::string, BoxStats>> box_groups;
  ordered_json fpa_box;
  for (const auto& [condition, list] : by_condition) {
    std::vector<double> est;
    std::vector<double> ref;
    for (const auto* s : list) {
      const auto e = fpa_values(s->estimate.fpa);
      const auto r = fpa_values(s->reference.fpa);
      est.insert(est.end(), e.begin(), e.end());
      ref.insert(ref.end(), r.begin(), r.end());
    }
    fpa_box[condition] = {{"estimate", optional_box(est)}, {"reference", optional_box(ref)}};
    if (!est.empty()) box_groups.emplace_back(fmt::format("fpa/{}/estimate", condition), box_stats(est));
    if (!ref.empty()) box_groups.emplace_back(fmt::format("fpa/{}/reference", condition), box_stats(ref));
  }
  analysis["fpa_box"] = fpa_box;
  ordered_json conditions = ordered_json::array();
  for (const auto& [condition, list] : by_condition) conditions.push_back(condition);
  analysis["conditions"] = conditions;

  CommandResult r;
  r.report["schema"] = kReportSchema;
  r.report["kind"] = "validate";
  r.report["config"] = config_to_json(config);
  r.report["analysis"] = analysis;
  r.files.push_back({"histogram.csv", histogram_csv(histogram_groups)});
  r.files.push_back({"cycle_curves.csv", curve_csv});
  r.files.push_back({"box_stats.csv", box_stats_csv(box_groups)});
  return r;
}

std::vector<ordered_json> run_classify(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> inputs;  // path, condition
  for (const auto& s : config.sessions) inputs.emplace_back(s.estimate, s.condition);
  if (inputs.empty()) inputs.emplace_back(config.input, config.condition);

  std::vector<std::future<ordered_json>> pending;
  for (const auto& [path, condition] : inputs) {
    pending.push_back(std::async(std::launch::async, [&config, path = path, condition = condition] {
      const SkeletonSequence raw = load_input(config, path);
      SessionAnalysis a = analyze_sequence(raw, config, config.axes, true);
      ordered_json j;
      j["input"] = path;
      j["condition"] = resolve_condition(condition, config, raw);
      const ordered_json label = label_json(*a.label);
      j["label"] = label["label"];
      j["scores"] = label["scores"];
      j["features"] = features_json(*a.features);
      return j;
    }));
  }
  std::vector<ordered_json> out;
  std::exception_ptr failure;
  for (auto& f : pending) {
    try {
      out.push_back(f.get());
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void write_outputs(const std::string& out_dir, const CommandResult& result) {
  const std::filesystem::path dir(out_dir);
  for (const auto& f : result.files) write_file_atomic((dir / f.name).string(), f.contents);
  write_file_atomic((dir / "report.json").string(), dump_report(result.report));
}

std::string dump_report(const ordered_json& report) { return report.dump(2) + "\n"; }

}  // namespace gaitkit
