#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "fixture.hpp"
#include "support.hpp"
#include "totr/alignment.hpp"
#include "totr/error.hpp"
#include "totr/predictor.hpp"

using namespace totr;

namespace {

const test::Fixture& fixture() {
  static const test::Fixture f = test::make_fixture();
  return f;
}

const CoefficientCollection& collection() {
  static const CoefficientCollection c = build_collection(fixture().ext, fixture().cfg);
  return c;
}

/// Cartesian replay of the extended reference.
MotionSequence replay(const test::Fixture& f) { return from_joint_angles(f.ext, f.skel); }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("totr_unit_" + name);
}

}  // namespace

TEST_CASE("config frame counts and validation") {
  PipelineConfig cfg;
  CHECK(cfg.past_frames() == 240);
  CHECK(cfg.future_frames() == 60);
  CHECK(cfg.regression.rank == 13);
  CHECK(cfg.regression.penalty == 50.0);
  CHECK_NOTHROW(cfg.validate());
  PipelineConfig bad = cfg;
  bad.future_seconds = 5.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = cfg;
  bad.update_stride_frames = 61;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = cfg;
  bad.model_stride_frames = 0;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("training windows are shifted by the future frame count") {
  const auto& f = fixture();
  const std::size_t L = f.cfg.past_frames(), K = f.cfg.future_frames();
  const std::size_t T = f.ext.frame_count();
  for (std::size_t t = L - 1; t < T; t += 7) {
    const auto [x, y] = training_pair(f.ext, T - L, t, f.cfg);
    for (std::size_t i = 0; i < L; ++i) {
      const std::size_t in = t + 1 - L + i;
      const std::size_t out = wrap_extended_index(in + K, T, T - L);
      CHECK(out < T);
      CHECK((out == in + K || out == in + K - (T - L)));
      for (std::size_t s = 0; s < 9; ++s) {
        CHECK(x({i, s, 2}) == f.ext.frames({in, s, 2}));
        CHECK(y({i, s, 2}) == f.ext.frames({out, s, 2}));
      }
    }
  }
}

TEST_CASE("default operating point window sizes") {
  PipelineConfig cfg;
  MotionSequence ext{Tensor({600, 2, 3}), 60.0, MotionSpace::JointAngle, std::nullopt};
  for (std::size_t i = 0; i < ext.frames.size(); ++i) ext.frames[i] = static_cast<double>(i);
  const auto [x0, y0] = training_pair(ext, 360, 239, cfg);
  const auto [x1, y1] = training_pair(ext, 360, 241, cfg);
  CHECK(x0.shape() == Shape{240, 2, 3});
  CHECK(y0.shape() == Shape{240, 2, 3});
  CHECK(x1({0, 0, 0}) - x0({0, 0, 0}) == 2.0);
  CHECK(y0({0, 0, 0}) - x0({0, 0, 0}) == 60.0);
}

TEST_CASE("model count") {
  PipelineConfig cfg = fixture().cfg;
  const std::size_t L = cfg.past_frames();
  for (std::size_t m : {1, 2, 3, 7, 40}) {
    cfg.model_stride_frames = m;
    std::size_t enumerated = 0;
    for (std::size_t t = L - 1; t - (L - 1) < 40; t += m) ++enumerated;
    CHECK(model_count(40 + L, cfg) == enumerated);
  }
  cfg.model_stride_frames = 40;
  CHECK(model_count(40 + L, cfg) == 1);
}

TEST_CASE("collection layout") {
  const auto& c = collection();
  REQUIRE(c.entries.size() == 20);
  CHECK(c.reference_frames == 40);
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    CHECK(c.entries[i].time_index == 19 + 2 * i);
    CHECK(c.entries[i].factors.coefficient_shape() == Shape{9, 3, 9, 3});
  }
  const CoefficientCollection again = build_collection(fixture().ext, fixture().cfg);
  for (std::size_t i = 0; i < c.entries.size(); ++i) CHECK(again.entries[i].factors == c.entries[i].factors);
  MotionSequence short_ref = fixture().ext.slice(0, 25);
  CHECK_THROWS_AS(build_collection(short_ref, fixture().cfg), DataError);
}

TEST_CASE("progress is reported per model") {
  auto cfg = fixture().cfg;
  cfg.model_stride_frames = 10;
  std::vector<std::size_t> seen;
  build_collection(fixture().ext, cfg, [&](std::size_t done, std::size_t total) {
    CHECK(total == 4);
    seen.push_back(done);
  });
  CHECK(seen == std::vector<std::size_t>{1, 2, 3, 4});
}

TEST_CASE("constant pose reference is reproduced") {
  const auto& f = fixture();
  PipelineConfig cfg = f.cfg;
  cfg.regression.penalty = 1e-6;
  cfg.regression.tolerance = 1e-14;
  cfg.regression.max_sweeps = 500;
  cfg.model_stride_frames = 5;
  MotionSequence ext = f.ext;
  for (std::size_t t = 0; t < ext.frame_count(); ++t)
    for (std::size_t s = 0; s < 9; ++s)
      for (std::size_t v = 0; v < 3; ++v) ext.frames({t, s, v}) = f.ext.frames({0, s, v});
  const CoefficientCollection c = build_collection(ext, cfg);
  for (const auto& e : c.entries) {
    const auto [x, y] = training_pair(ext, c.reference_frames, e.time_index, cfg);
    CHECK(test::max_abs_diff(predict(x, e.factors), y) < 1e-6);
  }
}

TEST_CASE("nearest model") {
  const auto& c = collection();
  CHECK(nearest_model(c, c.entries[5].time_index) == 5);
  CHECK(nearest_model(c, c.entries[5].time_index + 1) == 5);
  // Prefix frames duplicate the end of the cycle.
  const std::size_t L = c.config.past_frames();
  CHECK(phase_distance(L - 2, c.entries.back().time_index, L, c.reference_frames) <= 2);
  for (std::size_t f = 0; f < c.extended_reference.frame_count(); ++f) {
    const std::size_t i = nearest_model(c, f);
    CHECK(phase_distance(f, c.entries[i].time_index, L, c.reference_frames) <= 1);
  }
}

TEST_CASE("window cut from the reference selects a nearby model") {
  const auto& c = collection();
  const std::size_t L = c.config.past_frames();
  for (std::size_t end = L - 1; end < c.extended_reference.frame_count(); end += 3) {
    const MotionSequence window = c.extended_reference.slice(end + 1 - L, end + 1);
    const Selection sel = select_coefficient(window, c);
    CHECK(phase_distance(end, c.entries[sel.model_index].time_index, L, c.reference_frames) <= 2);
  }
}

TEST_CASE("prediction reproduces the training continuation") {
  const auto& f = fixture();
  const auto& c = collection();
  const std::size_t L = c.config.past_frames(), K = c.config.future_frames();
  for (std::size_t i : {0, 7, 19}) {
    const auto& e = c.entries[i];
    const auto [x, y] = training_pair(c.extended_reference, c.reference_frames, e.time_index, c.config);
    MotionSequence window = c.extended_reference.slice(e.time_index + 1 - L, e.time_index + 1);
    const WindowPrediction pred = predict_window(window, e.factors, i, f.skel, c.config);
    REQUIRE(pred.frames.size() == K);
    const Tensor full = predict(x, e.factors);
    double ss = 0.0;
    for (std::size_t h = 0; h < K; ++h) {
      CHECK(pred.frames[h].horizon_frame == h + 1);
      CHECK(pred.frames[h].model_index == i);
      for (std::size_t s = 0; s < 9; ++s) {
        for (std::size_t v = 0; v < 3; ++v) {
          const double fitted = std::clamp(full({L - K + h, s, v}), 0.0, std::numbers::pi);
          CHECK(pred.frames[h].angles({s, v}) == fitted);
          ss += std::pow(pred.frames[h].angles({s, v}) - y({L - K + h, s, v}), 2);
        }
      }
    }
    const double rmse = std::sqrt(ss / static_cast<double>(K * 27));
    CHECK(rmse <= std::sqrt(e.residual_variance * static_cast<double>(L) / static_cast<double>(K)) + 1e-6);
  }
}

TEST_CASE("root policies") {
  const auto& f = fixture();
  const auto& c = collection();
  const std::size_t L = c.config.past_frames();
  MotionSequence window = c.extended_reference.slice(0, L);
  window.root_track = Tensor({L, 3});
  for (std::size_t t = 0; t < L; ++t) (*window.root_track)({t, 0}) = 0.01 * static_cast<double>(t);
  PipelineConfig cfg = c.config;
  const auto hold = predict_window(window, c.entries[0].factors, 0, f.skel, cfg);
  cfg.root_policy = RootPolicy::Linear;
  const auto linear = predict_window(window, c.entries[0].factors, 0, f.skel, cfg);
  const std::size_t root = f.skel.root();
  CHECK(hold.frames[3].coordinates({root, 0}) == doctest::Approx(0.01 * (L - 1)));
  CHECK(linear.frames[3].coordinates({root, 0}) == doctest::Approx(0.01 * (L - 1 + 4)));
}

TEST_CASE("zero window is plumbed through") {
  const auto& f = fixture();
  const auto& c = collection();
  const std::size_t L = c.config.past_frames();
  MotionSequence window{Tensor({L, 9, 3}), 10.0, MotionSpace::JointAngle, Tensor({L, 3})};
  const auto pred = predict_window(window, c.entries[0].factors, 0, f.skel, c.config);
  for (const auto& fr : pred.frames) CHECK(frobenius_norm(fr.angles) == 0.0);
  CHECK(pred.clamped == 0);
  MotionSequence wrong{Tensor({L - 1, 9, 3}), 10.0, MotionSpace::JointAngle, Tensor({L - 1, 3})};
  CHECK_THROWS_AS(predict_window(wrong, c.entries[0].factors, 0, f.skel, c.config), ShapeError);
}

TEST_CASE("out-of-range angles are clamped and counted") {
  const auto& f = fixture();
  const auto& c = collection();
  const std::size_t L = c.config.past_frames();
  MotionSequence window{Tensor({L, 9, 3}, 50.0), 10.0, MotionSpace::JointAngle, Tensor({L, 3})};
  const auto pred = predict_window(window, c.entries[0].factors, 0, f.skel, c.config);
  CHECK(pred.clamped > 0);
  for (const auto& fr : pred.frames)
    for (double a : fr.angles.data()) CHECK((a >= 0.0 && a <= std::numbers::pi));
}

TEST_CASE("online replay tracks the stream position") {
  const auto& f = fixture();
  const auto& c = collection();
  const MotionSequence stream = replay(f);
  const auto batches = run_online(stream, c, f.skel);
  const std::size_t L = c.config.past_frames();
  REQUIRE(!batches.empty());
  for (std::size_t k = 0; k < batches.size(); ++k) {
    CHECK(batches[k].frame_index == L - 1 + k * c.config.update_stride_frames);
    const auto& e = c.entries[batches[k].selection.model_index];
    CHECK(phase_distance(batches[k].frame_index, e.time_index, L, c.reference_frames) <= c.config.model_stride_frames);
  }
}

TEST_CASE("updates every future window give non-overlapping horizons") {
  const auto& f = fixture();
  CoefficientCollection c = collection();
  c.config.update_stride_frames = c.config.future_frames();
  const auto batches = run_online(replay(f), c, f.skel);
  REQUIRE(batches.size() >= 2);
  for (std::size_t k = 1; k < batches.size(); ++k) {
    CHECK(batches[k].frame_index - batches[k - 1].frame_index == c.config.future_frames());
  }
}

TEST_CASE("online and offline batches are byte-identical") {
  const auto& f = fixture();
  const auto& c = collection();
  SynthConfig sc;
  sc.cycle_count = 3;
  sc.base_period_frames = 40;
  sc.frame_rate = 10.0;
  sc.seed = 5;
  const MotionSequence stream = generate_motion(sc).motion;
  const auto online = run_online(stream, c, f.skel);
  REQUIRE(!online.empty());
  for (const auto& b : online) CHECK(encode(b) == encode(predict_at(stream, b.frame_index, c, f.skel)));
}

TEST_CASE("stream gaps are reported") {
  const auto& f = fixture();
  OnlinePredictor online(collection(), f.skel);
  const MotionSequence stream = replay(f);
  auto pose = [&](std::size_t t) {
    Tensor p({10, 3});
    for (std::size_t j = 0; j < 10; ++j)
      for (std::size_t v = 0; v < 3; ++v) p({j, v}) = stream.frames({t, j, v});
    return p;
  };
  CHECK_FALSE(online.push(0, pose(0)).has_value());
  CHECK_FALSE(online.push(1, pose(1)).has_value());
  try {
    online.push(4, pose(4));
    FAIL("expected a gap error");
  } catch (const StreamGapError& e) {
    CHECK(e.gap() == 2);
  }
  CHECK_THROWS_AS(online.push(2, Tensor({9, 3})), ShapeError);
}

TEST_CASE("collection persistence") {
  const auto& f = fixture();
  const auto& c = collection();
  const auto path = temp_file("coll.bin");
  save_collection(c, path);
  const CoefficientCollection loaded = load_collection(path);
  CHECK(loaded.reference_frames == c.reference_frames);
  CHECK(loaded.extended_reference.frames == c.extended_reference.frames);
  CHECK(*loaded.extended_reference.root_track == *c.extended_reference.root_track);
  REQUIRE(loaded.entries.size() == c.entries.size());
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    CHECK(loaded.entries[i].time_index == c.entries[i].time_index);
    CHECK(loaded.entries[i].factors == c.entries[i].factors);
    CHECK(loaded.entries[i].residual_variance == c.entries[i].residual_variance);
  }
  CHECK(config_to_json(loaded.config, loaded.reference_frames) == config_to_json(c.config, c.reference_frames));
  const auto stream = replay(f);
  const auto a = run_online(stream, c, f.skel);
  const auto b = run_online(stream, loaded, f.skel);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(encode(a[k]) == encode(b[k]));

  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.put('x');
  }
  CHECK_THROWS_AS(load_collection(path), DataError);
  std::filesystem::resize_file(path, 100);
  CHECK_THROWS_AS(load_collection(path), DataError);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "NOTACOLLECTION";
  }
  CHECK_THROWS_AS(load_collection(path), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_collection(path), DataError);
}

TEST_CASE("config json echoes the operating point") {
  PipelineConfig cfg;
  cfg.root_policy = RootPolicy::Linear;
  std::size_t ref = 0;
  const PipelineConfig back = config_from_json(config_to_json(cfg, 123), &ref);
  CHECK(ref == 123);
  CHECK(back.regression.rank == 13);
  CHECK(back.regression.penalty == 50.0);
  CHECK(back.model_stride_frames == 2);
  CHECK(back.root_policy == RootPolicy::Linear);
  CHECK_THROWS_AS(config_from_json("{}"), DataError);
}
