#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "totr/predictor.hpp"

namespace totr {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'T', 'O', 'T', 'R', 'C', 'O', 'L', 'L'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "collection files are written little-endian");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot open " + path.string() + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <typename T>
  void value(T v) {
    bytes(&v, sizeof v);
  }
  /// Rows x cols matrix stored column-major in `t`, written row-major.
  void matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
    value<std::uint64_t>(rows);
    value<std::uint64_t>(cols);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) value<double>(t[i + rows * j]);
    }
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw DataError("failed writing " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataError("cannot open collection file " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw DataError("collection file " + path_.string() + " is truncated");
  }
  template <typename T>
  T value() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t bounded(std::uint64_t limit, const char* what) {
    const auto v = value<std::uint64_t>();
    if (v > limit) throw DataError(std::string("implausible ") + what + " in collection file");
    return v;
  }
  Tensor matrix() {
    const auto rows = bounded(1u << 20, "matrix rows");
    const auto cols = bounded(1u << 20, "matrix columns");
    if (rows == 0 || cols == 0) throw DataError("empty matrix in collection file");
    Tensor t({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) t[i + rows * j] = value<double>();
    }
    return t;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

const char* policy_name(RootPolicy p) { return p == RootPolicy::Hold ? "hold" : "linear"; }

}  // namespace

std::string config_to_json(const PipelineConfig& cfg, std::size_t reference_frames) {
  json j;
  j["past_seconds"] = cfg.past_seconds;
  j["future_seconds"] = cfg.future_seconds;
  j["model_stride_frames"] = cfg.model_stride_frames;
  j["update_stride_frames"] = cfg.update_stride_frames;
  j["frame_rate"] = cfg.frame_rate;
  j["root_policy"] = policy_name(cfg.root_policy);
  j["reference_frames"] = reference_frames;
  j["regression"] = {{"rank", cfg.regression.rank},
                     {"penalty", cfg.regression.penalty},
                     {"max_sweeps", cfg.regression.max_sweeps},
                     {"tolerance", cfg.regression.tolerance},
                     {"seed", cfg.regression.seed}};
  return j.dump();
}

PipelineConfig config_from_json(const std::string& text, std::size_t* reference_frames) {
  try {
    const json j = json::parse(text);
    PipelineConfig cfg;
    cfg.past_seconds = j.at("past_seconds").get<double>();
    cfg.future_seconds = j.at("future_seconds").get<double>();
    cfg.model_stride_frames = j.at("model_stride_frames").get<std::size_t>();
    cfg.update_stride_frames = j.at("update_stride_frames").get<std::size_t>();
    cfg.frame_rate = j.at("frame_rate").get<double>();
    const auto policy = j.value("root_policy", std::string("hold"));
    if (policy != "hold" && policy != "linear") throw DataError("unknown root_policy '" + policy + "'");
    cfg.root_policy = policy == "hold" ? RootPolicy::Hold : RootPolicy::Linear;
    const auto& r = j.at("regression");
    cfg.regression.rank = r.at("rank").get<std::size_t>();
    cfg.regression.penalty = r.at("penalty").get<double>();
    cfg.regression.max_sweeps = r.value("max_sweeps", cfg.regression.max_sweeps);
    cfg.regression.tolerance = r.value("tolerance", cfg.regression.tolerance);
    cfg.regression.seed = r.value("seed", cfg.regression.seed);
    if (reference_frames) *reference_frames = j.value("reference_frames", std::size_t{0});
    return cfg;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid pipeline config: ") + e.what());
  }
}

void save_collection(const CoefficientCollection& coll, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.value<std::uint32_t>(kVersion);
  const std::string cfg = config_to_json(coll.config, coll.reference_frames);
  w.value<std::uint64_t>(cfg.size());
  w.bytes(cfg.data(), cfg.size());

  const auto& ref = coll.extended_reference;
  const std::size_t T = ref.frame_count();
  const std::size_t S = ref.channel_count();
  w.value<std::uint64_t>(T);
  w.value<std::uint64_t>(S);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t v = 0; v < 3; ++v) w.value<double>(ref.frames({t, s, v}));
    }
  }
  w.value<std::uint8_t>(ref.root_track ? 1 : 0);
  if (ref.root_track) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t v = 0; v < 3; ++v) w.value<double>((*ref.root_track)({t, v}));
    }
  }

  w.value<std::uint64_t>(coll.entries.size());
  for (const auto& e : coll.entries) {
    w.value<std::uint64_t>(e.time_index);
    w.value<double>(e.residual_variance);
    w.value<std::uint32_t>(static_cast<std::uint32_t>(e.factors.input_factors.size()));
    w.value<std::uint32_t>(static_cast<std::uint32_t>(e.factors.output_factors.size()));
    for (const auto& u : e.factors.input_factors) w.matrix(u, u.extent(0), u.extent(1));
    for (const auto& v : e.factors.output_factors) w.matrix(v, v.extent(0), v.extent(1));
  }
  w.finish(path);
}

CoefficientCollection load_collection(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError(path.string() + " is not a collection file");
  const auto version = r.value<std::uint32_t>();
  if (version != kVersion) throw DataError("unsupported collection version " + std::to_string(version));

  CoefficientCollection coll;
  const auto cfg_len = r.bounded(1u << 20, "config length");
  std::string cfg(cfg_len, '\0');
  r.bytes(cfg.data(), cfg.size());
  coll.config = config_from_json(cfg, &coll.reference_frames);

  const auto T = r.bounded(1u << 26, "frame count");
  const auto S = r.bounded(1u << 16, "channel count");
  if (T == 0 || S == 0) throw DataError("collection file has an empty reference");
  coll.extended_reference = {Tensor({T, S, 3}), coll.config.frame_rate, MotionSpace::JointAngle, std::nullopt};
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t v = 0; v < 3; ++v) coll.extended_reference.frames({t, s, v}) = r.value<double>();
    }
  }
  if (r.value<std::uint8_t>()) {
    Tensor root({T, 3});
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t v = 0; v < 3; ++v) root({t, v}) = r.value<double>();
    }
    coll.extended_reference.root_track = std::move(root);
  }

  const auto n = r.bounded(1u << 24, "entry count");
  coll.entries.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    CollectionEntry e;
    e.time_index = r.value<std::uint64_t>();
    e.residual_variance = r.value<double>();
    const auto n_in = r.value<std::uint32_t>();
    const auto n_out = r.value<std::uint32_t>();
    if (n_in > 64 || n_out > 64) throw DataError("implausible factor count in collection file");
    for (std::uint32_t k = 0; k < n_in; ++k) e.factors.input_factors.push_back(r.matrix());
    for (std::uint32_t k = 0; k < n_out; ++k) e.factors.output_factors.push_back(r.matrix());
    e.factors.validate();
    coll.entries.push_back(std::move(e));
  }
  if (!r.at_end()) throw DataError("trailing bytes after the last collection entry");
  return coll;
}

}  // namespace totr
