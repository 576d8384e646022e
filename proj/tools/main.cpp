#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "commands.hpp"
#include "totr/error.hpp"

namespace {

int fail(int code, const char* kind, const std::string& message) {
  std::fprintf(stderr, "error code=%d kind=%s message=%s\n", code, kind, nlohmann::json(message).dump().c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace totr::cli;
  CLI::App app{"Tensor-on-tensor regression for cyclic human motion prediction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate synthetic repetitive upper-body motion");
  s->add_option("--out-dir,-o", synth.out_dir, "output directory")->required();
  s->add_option("--cycles", synth.cycles, "number of cycles")->capture_default_str();
  s->add_option("--period-frames", synth.period_frames, "base cycle length")->capture_default_str();
  s->add_option("--jitter", synth.jitter, "period jitter fraction")->capture_default_str();
  s->add_option("--noise-cm", synth.noise_cm, "coordinate noise std in cm")->capture_default_str();
  s->add_option("--length-jitter", synth.length_jitter, "per-frame segment length jitter fraction")
      ->capture_default_str();
  s->add_option("--rate", synth.frame_rate, "frame rate in Hz")->capture_default_str();
  s->add_option("--seed", synth.seed, "random seed")->capture_default_str();
  s->add_option("--skeleton", synth.skeleton, "skeleton JSON (default upper body)")->check(CLI::ExistingFile);

  PrepArgs prep;
  auto* p = app.add_subcommand("prep", "joint angles, cycle segmentation and reference cycle");
  p->add_option("--input,-i", prep.input, "motion CSV")->required()->check(CLI::ExistingFile);
  p->add_option("--skeleton", prep.skeleton, "skeleton JSON (default upper body)")->check(CLI::ExistingFile);
  p->add_option("--out-dir,-o", prep.out_dir, "output directory")->required();
  p->add_option("--channel", prep.channel_joint, "end joint of the segment used for segmentation");
  p->add_option("--axis", prep.axis, "angle axis used for segmentation")->check(CLI::IsMember({"x", "y", "z"}))
      ->capture_default_str();
  p->add_option("--peaks-per-cycle", prep.peaks_per_cycle)->capture_default_str();
  p->add_option("--cutoff", prep.cutoff, "share of the spectrum kept by the smoother")->capture_default_str();
  p->add_option("--cycles", prep.cycles, "comma-separated indices of the cycles to average (default all)");
  p->add_option("--reference-frames", prep.target_frames, "reference length (default median cycle length)");
  p->add_option("--first-frame", prep.first_frame, "first input frame used")->capture_default_str();
  p->add_option("--end-frame", prep.end_frame, "one past the last input frame used");

  BuildArgs build;
  auto* b = app.add_subcommand("build", "fit the coefficient collection along the extended reference");
  b->add_option("--prep", build.prep_dir, "output directory of prep")->required()->check(CLI::ExistingDirectory);
  b->add_option("--out,-o", build.out, "collection file, or directory for a sweep")->required();
  b->add_option("--past", build.past_seconds, "input window in seconds")->capture_default_str();
  b->add_option("--future", build.future_seconds, "prediction horizon in seconds")->capture_default_str();
  b->add_option("--model-stride", build.model_stride, "frames between fitted models")->capture_default_str();
  b->add_option("--update-stride", build.update_stride, "frames between online updates (default: the horizon)");
  b->add_option("--rank,-R", build.rank)->capture_default_str();
  b->add_option("--penalty,-l", build.penalty)->capture_default_str();
  b->add_option("--max-sweeps", build.max_sweeps)->capture_default_str();
  b->add_option("--tolerance", build.tolerance)->capture_default_str();
  b->add_option("--seed", build.seed, "seed of the first model's random start")->capture_default_str();
  b->add_option("--root-policy", build.root_policy)->check(CLI::IsMember({"hold", "linear"}))->capture_default_str();
  b->add_option("--sweep", build.sweep,
                "grid preset: rank (R = 11..15 at penalty 50) or penalty (0.1 .. 100 at R = 13)")
      ->check(CLI::IsMember({"rank", "penalty"}));
  b->add_flag("--verbose,-v", build.verbose, "report fitting progress on stderr");

  PredictArgs predict;
  auto* r = app.add_subcommand("predict", "replay a motion file through the online predictor");
  r->add_option("--collection,-c", predict.collection)->required()->check(CLI::ExistingFile);
  r->add_option("--input,-i", predict.input, "motion CSV, - for stdin")->required();
  r->add_option("--skeleton", predict.skeleton, "skeleton JSON written by prep")->required()->check(CLI::ExistingFile);
  r->add_option("--out-dir,-o", predict.out_dir)->required();
  r->add_option("--horizon", predict.horizons, "evaluation horizons in seconds")->delimiter(',')->capture_default_str();
  r->add_option("--bands", predict.bands, "band table from uncertainty")->check(CLI::ExistingFile);
  r->add_option("--band-level", predict.band_level, "band multiple of the deviation")->capture_default_str();
  r->add_option("--first-frame", predict.first_frame)->capture_default_str();
  r->add_option("--end-frame", predict.end_frame);

  UncertaintyArgs unc;
  auto* u = app.add_subcommand("uncertainty", "predictive variation bands and posterior intervals");
  u->add_option("--collection,-c", unc.collection)->required()->check(CLI::ExistingFile);
  u->add_option("--prep", unc.prep_dir)->required()->check(CLI::ExistingDirectory);
  u->add_option("--out-dir,-o", unc.out_dir)->required();
  u->add_option("--samples,-n", unc.samples)->capture_default_str();
  u->add_option("--seed", unc.seed)->capture_default_str();
  u->add_option("--variability", unc.variability, "multiple of the per-timestep deviation")->capture_default_str();
  u->add_option("--models", unc.models, "comma-separated model indices (default all)");
  u->add_option("--posterior-model", unc.posterior_model, "also sample the posterior of this model");
  u->add_option("--credibility", unc.credibility)->capture_default_str();

  ReportArgs report;
  auto* t = app.add_subcommand("report", "summary table and plot-ready rows");
  t->add_option("--see", report.see, "SEE series CSV")->required()->check(CLI::ExistingFile);
  t->add_option("--out-dir,-o", report.out_dir)->required();
  t->add_option("--batches", report.batches, "batches.csv from predict")->check(CLI::ExistingFile);
  t->add_option("--truth", report.truth, "motion CSV with the true coordinates")->check(CLI::ExistingFile);
  t->add_option("--skeleton", report.skeleton)->check(CLI::ExistingFile);
  t->add_option("--joint", report.joint)->capture_default_str();
  t->add_option("--axis", report.axis)->check(CLI::IsMember({"x", "y", "z"}))->capture_default_str();
  t->add_option("--horizon-frames", report.horizon_frames);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(1, "usage", e.what());
  }

  try {
    if (s->parsed()) run_synth(synth);
    if (p->parsed()) run_prep(prep);
    if (b->parsed()) run_build(build);
    if (r->parsed()) run_predict(predict);
    if (u->parsed()) run_uncertainty(unc);
    if (t->parsed()) run_report(report);
  } catch (const totr::NumericError& e) {
    return fail(3, "numeric", e.what());
  } catch (const totr::ShapeError& e) {
    return fail(2, "shape", e.what());
  } catch (const totr::Error& e) {
    return fail(2, "data", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(2, "data", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(2, "io", e.what());
  } catch (const std::exception& e) {
    return fail(3, "internal", e.what());
  }
  return 0;
}
