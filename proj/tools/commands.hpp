#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace totr::cli {

struct SynthArgs {
  std::filesystem::path out_dir;
  std::size_t cycles = 8;
  std::size_t period_frames = 360;
  double jitter = 0.1;
  double noise_cm = 0.5;
  double length_jitter = 0.0;
  double frame_rate = 60.0;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> skeleton;
};

struct PrepArgs {
  std::filesystem::path input;
  std::optional<std::filesystem::path> skeleton;
  std::filesystem::path out_dir;
  std::string channel_joint;  ///< end joint of the segmentation segment; primary channel when empty
  std::string axis = "z";
  std::size_t peaks_per_cycle = 1;
  double cutoff = 0.05;
  std::string cycles;  ///< comma-separated cycle indices
  std::optional<std::size_t> target_frames;
  std::size_t first_frame = 0;
  std::optional<std::size_t> end_frame;
};

struct BuildArgs {
  std::filesystem::path prep_dir;
  std::filesystem::path out;
  double past_seconds = 4.0;
  double future_seconds = 1.0;
  std::size_t model_stride = 2;
  std::optional<std::size_t> update_stride;  ///< one horizon of frames when unset
  std::size_t rank = 13;
  double penalty = 50.0;
  std::size_t max_sweeps = 500;
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
  std::string root_policy = "hold";
  std::string sweep;  ///< "", "rank" or "penalty"
  bool verbose = false;
};

struct PredictArgs {
  std::filesystem::path collection;
  std::filesystem::path input;  ///< motion CSV, "-" for stdin
  std::filesystem::path skeleton;
  std::filesystem::path out_dir;
  std::vector<double> horizons{0.5, 1.0};
  std::optional<std::filesystem::path> bands;
  double band_level = 1.0;
  std::size_t first_frame = 0;
  std::optional<std::size_t> end_frame;
};

struct UncertaintyArgs {
  std::filesystem::path collection;
  std::filesystem::path prep_dir;
  std::filesystem::path out_dir;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  double variability = 1.0;
  std::string models;
  std::optional<std::size_t> posterior_model;
  double credibility = 0.95;
};

struct ReportArgs {
  std::filesystem::path see;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> batches;
  std::optional<std::filesystem::path> truth;
  std::optional<std::filesystem::path> skeleton;
  std::string joint = "right_hand";
  std::string axis = "z";
  std::size_t horizon_frames = 0;
};

void run_synth(const SynthArgs& a);
void run_prep(const PrepArgs& a);
void run_build(const BuildArgs& a);
void run_predict(const PredictArgs& a);
void run_uncertainty(const UncertaintyArgs& a);
void run_report(const ReportArgs& a);

}  // namespace totr::cli
