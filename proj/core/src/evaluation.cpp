#include "totr/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "totr/error.hpp"

namespace totr {

namespace {

constexpr double kCentimetersPerMeter = 100.0;

double joint_distance(const Tensor& a, std::size_t ta, const Tensor& b, std::size_t tb, std::size_t j) {
  double s = 0.0;
  for (std::size_t v = 0; v < 3; ++v) {
    const double d = a({ta, j, v}) - b({tb, j, v});
    s += d * d;
  }
  return std::sqrt(s);
}

double interpolated(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

}  // namespace

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw DataError("cannot summarize an empty series");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = interpolated(sorted, 0.25);
  s.median = interpolated(sorted, 0.5);
  s.q3 = interpolated(sorted, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

SeeSeries see(const MotionSequence& truth, const MotionSequence& pred) {
  if (truth.space != MotionSpace::Cartesian || pred.space != MotionSpace::Cartesian) {
    throw DataError("SEE compares Cartesian sequences");
  }
  if (truth.frames.shape() != pred.frames.shape()) throw ShapeError("truth and prediction shapes differ");
  SeeSeries out;
  const std::size_t T = truth.frame_count();
  const std::size_t J = truth.channel_count();
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (std::size_t j = 0; j < J; ++j) sum += joint_distance(truth.frames, t, pred.frames, t, j);
    out.frames.push_back(t);
    out.values_cm.push_back(kCentimetersPerMeter * sum);
  }
  out.summary = summarize(out.values_cm);
  return out;
}

SeeSeries backtransform_error(const MotionSequence& truth, const Skeleton& skel) {
  const AngleConversion conv = to_joint_angles(truth, skel);
  const Skeleton fixed = fix_segment_lengths(truth, skel);
  return see(truth, from_joint_angles(conv.angles, fixed));
}

HorizonReport evaluate_horizon(const MotionSequence& truth, const std::vector<PredictionBatch>& batches,
                               std::size_t horizon_frames) {
  if (horizon_frames == 0) throw DataError("horizon must be at least one frame");
  HorizonReport report;
  report.horizon_frames = horizon_frames;
  const std::size_t J = truth.channel_count();
  for (const auto& b : batches) {
    const std::size_t target = b.frame_index + horizon_frames;
    if (target >= truth.frame_count()) continue;
    if (horizon_frames > b.prediction.frames.size()) throw DataError("horizon exceeds the predicted frames");
    const Tensor& pred = b.prediction.frames[horizon_frames - 1].coordinates;
    double model = 0.0, hold = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      double sm = 0.0, sh = 0.0;
      for (std::size_t v = 0; v < 3; ++v) {
        const double t = truth.frames({target, j, v});
        const double dm = t - pred({j, v});
        const double dh = t - truth.frames({b.frame_index, j, v});
        sm += dm * dm;
        sh += dh * dh;
      }
      model += std::sqrt(sm);
      hold += std::sqrt(sh);
    }
    report.model.frames.push_back(target);
    report.model.values_cm.push_back(kCentimetersPerMeter * model);
    report.baseline.frames.push_back(target);
    report.baseline.values_cm.push_back(kCentimetersPerMeter * hold);
  }
  if (report.model.values_cm.empty()) throw DataError("no batch has ground truth at this horizon");
  report.model.summary = summarize(report.model.values_cm);
  report.baseline.summary = summarize(report.baseline.values_cm);
  return report;
}

std::string see_csv(const SeeSeries& series) {
  std::string out = "frame,see_cm\n";
  for (std::size_t i = 0; i < series.values_cm.size(); ++i) {
    out += std::to_string(series.frames[i]) + "," + number(series.values_cm[i]) + "\n";
  }
  return out;
}

SeeSeries parse_see_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "frame,see_cm") throw DataError("SEE file must start with 'frame,see_cm'");
  SeeSeries out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("SEE file row " + std::to_string(row) + " has no comma");
    std::size_t frame = 0;
    double value = 0.0;
    const auto r1 = std::from_chars(line.data(), line.data() + comma, frame);
    const auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), value);
    if (r1.ec != std::errc{} || r1.ptr != line.data() + comma || r2.ec != std::errc{} ||
        r2.ptr != line.data() + line.size() || !(value >= 0.0)) {
      throw DataError("SEE file row " + std::to_string(row) + " is not 'frame,nonnegative number'");
    }
    out.frames.push_back(frame);
    out.values_cm.push_back(value);
  }
  out.summary = summarize(out.values_cm);
  return out;
}

std::string summary_table(const Summary& s) {
  return "min,q1,median,mean,q3,max\n" + number(s.min) + "," + number(s.q1) + "," + number(s.median) + "," +
         number(s.mean) + "," + number(s.q3) + "," + number(s.max) + "\n";
}

std::string plot_csv(const std::vector<std::size_t>& frames, const std::vector<double>& truth,
                     const std::vector<double>& prediction, const std::vector<double>& deviation) {
  if (truth.size() != frames.size() || prediction.size() != frames.size() || deviation.size() != frames.size()) {
    throw ShapeError("plot columns differ in length");
  }
  std::string out = "frame,truth,prediction,lower_1,upper_1,lower_2,upper_2,lower_3,upper_3\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out += std::to_string(frames[i]) + "," + number(truth[i]) + "," + number(prediction[i]);
    for (int level = 1; level <= 3; ++level) {
      out += "," + number(prediction[i] - level * deviation[i]) + "," + number(prediction[i] + level * deviation[i]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace totr
