#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <iterator>

#include "io.hpp"
#include "totr/error.hpp"
#include "totr/evaluation.hpp"
#include "totr/motion_csv.hpp"
#include "totr/predictor.hpp"
#include "totr/synth.hpp"
#include "totr/uncertainty.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace totr::cli {

namespace {

constexpr double kDefaultRate = 60.0;

std::size_t axis_index(const std::string& axis) {
  if (axis == "x") return 0;
  if (axis == "y") return 1;
  if (axis == "z") return 2;
  throw DataError("axis must be x, y or z, got '" + axis + "'");
}

Skeleton load_skeleton(const std::optional<fs::path>& path) {
  return path ? Skeleton::load(*path) : Skeleton::default_upper_body();
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory '" + dir.string() + "'");
}

MotionSequence frame_range(const MotionSequence& seq, std::size_t first, std::optional<std::size_t> end) {
  const std::size_t stop = end.value_or(seq.frame_count());
  if (first >= stop || stop > seq.frame_count()) {
    throw DataError("frame range [" + std::to_string(first) + ", " + std::to_string(stop) + ") outside the " +
                    std::to_string(seq.frame_count()) + "-frame input");
  }
  return seq.slice(first, stop);
}

std::string seconds_label(double seconds) { return number(seconds) + "s"; }

std::string summary_header() {
  const std::string t = summary_table({});
  return t.substr(0, t.find('\n') + 1);
}

std::string summary_values(const Summary& s) {
  const std::string t = summary_table(s);
  return t.substr(t.find('\n') + 1);
}

struct PrepOutput {
  Skeleton skeleton;
  ReferenceCycle reference;
  double frame_rate = kDefaultRate;
};

PrepOutput read_prep(const fs::path& dir) {
  const json meta = json::parse(read_file(dir / "cycles.json"));
  PrepOutput p;
  p.frame_rate = meta.at("frame_rate").get<double>();
  p.skeleton = Skeleton::load(dir / "skeleton.json");
  p.reference = read_reference(dir / "reference.csv", dir / "reference_std.csv", p.skeleton, p.frame_rate);
  p.reference.source_cycle_count = meta.at("selected").size();
  return p;
}

RootPolicy root_policy(const std::string& name) {
  if (name == "hold") return RootPolicy::Hold;
  if (name == "linear") return RootPolicy::Linear;
  throw DataError("root policy must be hold or linear, got '" + name + "'");
}

}  // namespace

void run_synth(const SynthArgs& a) {
  SynthConfig cfg;
  cfg.cycle_count = a.cycles;
  cfg.base_period_frames = a.period_frames;
  cfg.period_jitter_fraction = a.jitter;
  cfg.noise_std_cm = a.noise_cm;
  cfg.length_jitter_fraction = a.length_jitter;
  cfg.frame_rate = a.frame_rate;
  cfg.seed = a.seed;
  cfg.skeleton = load_skeleton(a.skeleton);
  const SynthMotion m = generate_motion(cfg);

  make_dir(a.out_dir);
  Manifest manifest("synth");
  if (a.skeleton) manifest.input(*a.skeleton);
  manifest.config() = {{"cycles", a.cycles},       {"period_frames", a.period_frames}, {"jitter", a.jitter},
                       {"noise_cm", a.noise_cm},   {"length_jitter", a.length_jitter}, {"frame_rate", a.frame_rate}};
  manifest.seed("synth", a.seed);

  const fs::path motion = a.out_dir / "motion.csv", skel = a.out_dir / "skeleton.json",
                 truth = a.out_dir / "boundaries.json";
  export_csv(m.motion, cfg.skeleton, motion);
  write_file(skel, cfg.skeleton.to_json());
  const SynthChannel primary = primary_channel(cfg.skeleton);
  write_file(truth, json{{"boundaries", m.boundaries},
                         {"primary_joint", cfg.skeleton.joints()[cfg.skeleton.segments()[primary.segment]].name},
                         {"primary_axis", std::string(1, "xyz"[primary.axis])}}
                        .dump(2) +
                        "\n");
  for (const auto& p : {motion, skel, truth}) manifest.output(p);
  manifest.write(a.out_dir);
  std::printf("wrote %zu frames, %zu cycles to %s\n", m.motion.frame_count(), a.cycles, a.out_dir.string().c_str());
}

void run_prep(const PrepArgs& a) {
  const Skeleton skel = load_skeleton(a.skeleton);
  const MotionSequence all = ingest_csv(a.input, skel, kDefaultRate);
  const MotionSequence motion = frame_range(all, a.first_frame, a.end_frame);

  PrepOptions opt;
  if (a.channel_joint.empty()) {
    opt.segment = primary_channel(skel).segment;
  } else {
    const auto seg = skel.segment_of(skel.index_of(a.channel_joint));
    if (!seg) throw DataError("joint '" + a.channel_joint + "' is the root and ends no segment");
    opt.segment = *seg;
  }
  opt.axis = axis_index(a.axis);
  opt.peaks_per_cycle = a.peaks_per_cycle;
  opt.cutoff = a.cutoff;
  opt.cycle_selection = parse_index_list(a.cycles);
  opt.target_frames = a.target_frames;
  const Preparation p = prepare_reference(motion, skel, opt);

  make_dir(a.out_dir);
  Manifest manifest("prep");
  manifest.input(a.input);
  if (a.skeleton) manifest.input(*a.skeleton);
  const std::string joint = skel.joints()[skel.segments()[opt.segment]].name;
  manifest.config() = {{"channel_joint", joint},      {"axis", a.axis},         {"peaks_per_cycle", a.peaks_per_cycle},
                       {"cutoff", a.cutoff},          {"cycles", opt.cycle_selection},
                       {"first_frame", a.first_frame}, {"end_frame", a.first_frame + motion.frame_count()}};

  const fs::path ref = a.out_dir / "reference.csv", sd = a.out_dir / "reference_std.csv",
                 fixed = a.out_dir / "skeleton.json", cycles = a.out_dir / "cycles.json";
  write_reference(p.reference, p.skeleton, ref, sd);
  write_file(fixed, p.skeleton.to_json());
  json detected = json::array();
  for (const auto& c : p.cycles) detected.push_back({c.begin + a.first_frame, c.end + a.first_frame});
  write_file(cycles, json{{"frame_rate", motion.frame_rate},
                          {"detected", detected},
                          {"selected", p.selected},
                          {"reference_frames", p.reference.length_frames}}
                         .dump(2) +
                         "\n");
  for (const auto& f : {ref, sd, fixed, cycles}) manifest.output(f);
  manifest.write(a.out_dir);
  std::printf("detected %zu cycles, reference of %zu frames from %zu cycles\n", p.cycles.size(),
              p.reference.length_frames, p.selected.size());
}

void run_build(const BuildArgs& a) {
  const PrepOutput prep = read_prep(a.prep_dir);
  PipelineConfig base;
  base.past_seconds = a.past_seconds;
  base.future_seconds = a.future_seconds;
  base.model_stride_frames = a.model_stride;
  base.frame_rate = prep.frame_rate;
  base.update_stride_frames = a.update_stride.value_or(base.future_frames());
  base.root_policy = root_policy(a.root_policy);
  base.regression.rank = a.rank;
  base.regression.penalty = a.penalty;
  base.regression.max_sweeps = a.max_sweeps;
  base.regression.tolerance = a.tolerance;
  base.regression.seed = a.seed;
  base.validate();

  std::vector<std::pair<PipelineConfig, fs::path>> grid;
  if (a.sweep.empty()) {
    grid.emplace_back(base, a.out);
  } else if (a.sweep == "rank" || a.sweep == "penalty") {
    make_dir(a.out);
    const std::vector<double> values = a.sweep == "rank" ? std::vector<double>{11, 12, 13, 14, 15}
                                                         : std::vector<double>{0.1, 0.6, 1, 5, 10, 15, 25, 50, 100};
    for (double v : values) {
      PipelineConfig c = base;
      if (a.sweep == "rank") {
        c.regression.rank = static_cast<std::size_t>(v);
        c.regression.penalty = 50.0;
      } else {
        c.regression.rank = 13;
        c.regression.penalty = v;
      }
      const std::string name = "collection_R" + std::to_string(c.regression.rank) + "_lambda" +
                               number(c.regression.penalty) + ".bin";
      grid.emplace_back(c, a.out / name);
    }
  } else {
    throw DataError("sweep must be rank or penalty, got '" + a.sweep + "'");
  }

  const fs::path out_dir = a.sweep.empty() ? (a.out.has_parent_path() ? a.out.parent_path() : fs::path(".")) : a.out;
  make_dir(out_dir);
  Manifest manifest("build");
  for (const char* f : {"reference.csv", "reference_std.csv", "skeleton.json", "cycles.json"}) manifest.input(a.prep_dir / f);
  manifest.seed("regression", a.seed);
  manifest.config()["sweep"] = a.sweep;
  manifest.config()["runs"] = json::array();
  for (const auto& [cfg, path] : grid) {
    const MotionSequence ext = extend_reference(prep.reference, cfg.past_frames());
    auto progress = [&](std::size_t done, std::size_t total) {
      if (a.verbose && (done % 25 == 0 || done == total)) std::fprintf(stderr, "fitted %zu/%zu\n", done, total);
    };
    const CoefficientCollection coll = build_collection(ext, cfg, progress);
    save_collection(coll, path);
    manifest.output(path);
    const std::string header = config_to_json(cfg, coll.reference_frames);
    manifest.config()["runs"].push_back(json::parse(header));
    std::printf("%s %s models=%zu\n", path.filename().string().c_str(), header.c_str(), coll.entries.size());
  }
  manifest.write(out_dir);
}

void run_predict(const PredictArgs& a) {
  const CoefficientCollection coll = load_collection(a.collection);
  const Skeleton skel = Skeleton::load(a.skeleton);
  const std::string text = a.input == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                          : read_file(a.input);
  const MotionSequence all = parse_motion_csv(text, skel, coll.config.frame_rate);
  if (std::abs(all.frame_rate - coll.config.frame_rate) > 1e-9 * coll.config.frame_rate) {
    throw DataError("input frame rate " + number(all.frame_rate) + " differs from the collection's " +
                    number(coll.config.frame_rate));
  }
  const MotionSequence motion = frame_range(all, a.first_frame, a.end_frame);
  const std::size_t K = coll.config.future_frames();
  std::vector<std::size_t> horizons;
  for (double h : a.horizons) {
    const auto frames = static_cast<std::size_t>(std::llround(h * coll.config.frame_rate));
    if (!(h > 0.0) || frames == 0 || frames > K) {
      throw DataError("horizon " + number(h) + " s is outside the model's 1.." + std::to_string(K) + " frames");
    }
    horizons.push_back(frames);
  }

  std::vector<BandRow> bands;
  if (a.bands) bands = parse_bands(read_file(*a.bands), skel);
  const auto batches = run_online(motion, coll, skel);

  make_dir(a.out_dir);
  Manifest manifest("predict");
  manifest.input(a.collection);
  manifest.input(a.skeleton);
  if (a.input != "-") manifest.input(a.input);
  if (a.bands) manifest.input(*a.bands);
  manifest.config() = {{"horizons_seconds", a.horizons}, {"first_frame", a.first_frame},
                       {"end_frame", a.first_frame + motion.frame_count()}, {"band_level", a.band_level}};

  std::string header = "frame_index,model_index,matched_end,horizon_frame";
  for (const auto& j : skel.joints()) header += "," + j.name + "_x," + j.name + "_y," + j.name + "_z";
  if (a.bands) {
    for (const auto& j : skel.joints()) header += "," + j.name + "_sd_x," + j.name + "_sd_y," + j.name + "_sd_z";
  }
  std::string rows = header + "\n";
  for (const auto& b : batches) {
    std::optional<CoordinateBand> coord;
    if (a.bands) {
      const auto it = std::find_if(bands.begin(), bands.end(),
                                   [&](const BandRow& r) { return r.model_index == b.selection.model_index; });
      if (it == bands.end()) {
        throw DataError("band table has no entry for model " + std::to_string(b.selection.model_index));
      }
      coord = band_to_coordinates(UncertaintyBand{it->deviation}, b.prediction.frames, skel, a.band_level);
    }
    for (std::size_t h = 0; h < b.prediction.frames.size(); ++h) {
      const auto& f = b.prediction.frames[h];
      rows += std::to_string(b.frame_index + a.first_frame) + "," + std::to_string(b.selection.model_index) + "," +
              std::to_string(b.selection.matched_end) + "," + std::to_string(f.horizon_frame);
      for (std::size_t j = 0; j < skel.joint_count(); ++j) {
        for (std::size_t v = 0; v < 3; ++v) rows += "," + number(f.coordinates({j, v}));
      }
      if (coord) {
        for (std::size_t j = 0; j < skel.joint_count(); ++j) {
          for (std::size_t v = 0; v < 3; ++v) rows += "," + number(coord->deviation({h, j, v}));
        }
      }
      rows += "\n";
    }
  }
  const fs::path batch_path = a.out_dir / "batches.csv";
  write_file(batch_path, rows);
  manifest.output(batch_path);

  for (std::size_t i = 0; i < horizons.size(); ++i) {
    HorizonReport r = evaluate_horizon(motion, batches, horizons[i]);
    for (auto* s : {&r.model, &r.baseline}) {
      for (auto& f : s->frames) f += a.first_frame;
    }
    const std::string label = seconds_label(a.horizons[i]);
    const fs::path see = a.out_dir / ("see_" + label + ".csv"), hold = a.out_dir / ("baseline_" + label + ".csv"),
                   summary = a.out_dir / ("summary_" + label + ".csv");
    write_file(see, see_csv(r.model));
    write_file(hold, see_csv(r.baseline));
    write_file(summary, "series," + summary_header() + "model," + summary_values(r.model.summary) + "baseline," +
                            summary_values(r.baseline.summary));
    for (const auto& p : {see, hold, summary}) manifest.output(p);
    std::printf("horizon %s: median SEE %.3f cm (hold baseline %.3f cm) over %zu updates\n", label.c_str(),
                r.model.summary.median, r.baseline.summary.median, r.model.values_cm.size());
  }
  manifest.write(a.out_dir);
}

void run_uncertainty(const UncertaintyArgs& a) {
  const CoefficientCollection coll = load_collection(a.collection);
  PrepOutput prep = read_prep(a.prep_dir);
  if (!(a.variability >= 0.0)) throw DataError("variability must be >= 0");
  prep.reference.per_timestep_std = a.variability * prep.reference.per_timestep_std;
  const auto chosen = parse_index_list(a.models);
  const auto result = predictive_variation(prep.reference, coll, a.samples, a.seed,
                                           chosen.empty() ? std::nullopt : std::optional(chosen));

  make_dir(a.out_dir);
  Manifest manifest("uncertainty");
  manifest.input(a.collection);
  for (const char* f : {"reference.csv", "reference_std.csv", "skeleton.json", "cycles.json"}) manifest.input(a.prep_dir / f);
  manifest.seed("ensemble", a.seed);
  manifest.config() = {{"samples", a.samples}, {"variability", a.variability}, {"models", chosen}};

  std::vector<BandRow> rows;
  for (const auto& m : result) rows.push_back({m.model_index, coll.entries[m.model_index].time_index, m.band.deviation});
  const fs::path bands = a.out_dir / "bands.csv";
  write_file(bands, format_bands(rows, prep.skeleton));
  manifest.output(bands);

  if (a.posterior_model) {
    const std::size_t m = *a.posterior_model;
    if (m >= coll.entries.size()) throw DataError("posterior model " + std::to_string(m) + " out of range");
    const std::size_t L = coll.config.past_frames(), t = coll.entries[m].time_index;
    const MotionSequence window = coll.extended_reference.slice(t + 1 - L, t + 1);
    GibbsOptions opts;
    const PosteriorSummary post = posterior_for_model(coll, m, window, a.samples, a.credibility, opts);
    std::string out = "horizon_frame,joint,axis,mean,lower,upper\n";
    const auto& skel = prep.skeleton;
    for (std::size_t h = 0; h < post.mean.extent(0); ++h) {
      for (std::size_t s = 0; s < skel.segment_count(); ++s) {
        for (std::size_t v = 0; v < 3; ++v) {
          out += std::to_string(h + 1) + "," + skel.joints()[skel.segments()[s]].name + "," + "xyz"[v] + "," +
                 number(post.mean({h, s, v})) + "," + number(post.lower({h, s, v})) + "," +
                 number(post.upper({h, s, v})) + "\n";
        }
      }
    }
    const fs::path path = a.out_dir / "posterior.csv";
    write_file(path, out);
    manifest.output(path);
    manifest.config()["posterior_model"] = m;
    manifest.config()["credibility"] = a.credibility;
    manifest.seed("gibbs", coll.config.regression.seed);
  }
  manifest.write(a.out_dir);
  std::printf("bands for %zu models from %zu samples\n", result.size(), a.samples);
}

void run_report(const ReportArgs& a) {
  const SeeSeries series = parse_see_csv(read_file(a.see));
  make_dir(a.out_dir);
  Manifest manifest("report");
  manifest.input(a.see);
  const fs::path summary = a.out_dir / "summary.csv";
  write_file(summary, summary_table(series.summary));
  manifest.output(summary);

  if (a.batches || a.truth) {
    if (!a.batches || !a.truth || !a.skeleton || a.horizon_frames == 0) {
      throw DataError("a plot needs --batches, --truth, --skeleton and --horizon-frames");
    }
    const Skeleton skel = Skeleton::load(*a.skeleton);
    const MotionSequence truth = ingest_csv(*a.truth, skel, kDefaultRate);
    const std::size_t joint = skel.index_of(a.joint);
    const std::string col = a.joint + "_" + a.axis, sd_col = a.joint + "_sd_" + a.axis;
    (void)axis_index(a.axis);

    const std::string text = read_file(*a.batches);
    const auto nl = text.find('\n');
    std::vector<std::string> header;
    for (std::size_t s = 0, e; s <= nl; s = e + 1) {
      e = text.find_first_of(",\n", s);
      header.push_back(text.substr(s, e - s));
      if (e == nl) break;
    }
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
      const auto it = std::find(header.begin(), header.end(), name);
      return it == header.end() ? std::nullopt : std::optional<std::size_t>(it - header.begin());
    };
    const auto c_frame = column("frame_index"), c_h = column("horizon_frame"), c_val = column(col);
    const auto c_sd = column(sd_col);
    if (!c_frame || !c_h || !c_val) throw DataError("batch table lacks frame_index, horizon_frame or " + col);

    std::vector<std::size_t> frames;
    std::vector<double> truth_v, pred_v, dev_v;
    std::size_t row = 1;
    for (std::size_t s = nl + 1; s < text.size();) {
      const auto e = std::min(text.find('\n', s), text.size());
      ++row;
      std::vector<std::string> cells;
      for (std::size_t p = s;;) {
        const auto c = text.find(',', p);
        if (c == std::string::npos || c > e) {
          cells.push_back(text.substr(p, e - p));
          break;
        }
        cells.push_back(text.substr(p, c - p));
        p = c + 1;
      }
      s = e + 1;
      if (cells.size() != header.size()) throw DataError("batch table row " + std::to_string(row) + " is malformed");
      if (static_cast<std::size_t>(parse_number(cells[*c_h], row, "horizon_frame")) != a.horizon_frames) continue;
      const auto target =
          static_cast<std::size_t>(parse_number(cells[*c_frame], row, "frame_index")) + a.horizon_frames;
      if (target >= truth.frame_count()) continue;
      frames.push_back(target);
      truth_v.push_back(truth.frames({target, joint, axis_index(a.axis)}));
      pred_v.push_back(parse_number(cells[*c_val], row, col));
      dev_v.push_back(c_sd ? parse_number(cells[*c_sd], row, sd_col) : 0.0);
    }
    if (frames.empty()) throw DataError("no batch rows at horizon " + std::to_string(a.horizon_frames));
    const fs::path plot = a.out_dir / "plot.csv";
    write_file(plot, plot_csv(frames, truth_v, pred_v, dev_v));
    manifest.input(*a.batches);
    manifest.input(*a.truth);
    manifest.output(plot);
    manifest.config() = {{"joint", a.joint}, {"axis", a.axis}, {"horizon_frames", a.horizon_frames}};
  }
  manifest.write(a.out_dir);
  std::printf("%s", summary_table(series.summary).c_str());
}

}  // namespace totr::cli
