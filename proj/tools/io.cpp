#include "io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "totr/error.hpp"

namespace totr::cli {

namespace {

const char* const kAxes[3] = {"x", "y", "z"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  Table t;
  if (!std::getline(in, line)) throw DataError(what + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw DataError(what + " row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " columns, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::size_t parse_index(const std::string& cell, std::size_t row, const std::string& column) {
  std::size_t v = 0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (r.ec != std::errc{} || r.ptr != cell.data() + cell.size()) {
    throw DataError("non-integer value '" + cell + "' at row " + std::to_string(row) + " column " + column);
  }
  return v;
}

std::vector<std::string> angle_columns(const Skeleton& skel) {
  std::vector<std::string> cols;
  for (auto j : skel.segments()) {
    for (const char* a : kAxes) cols.push_back(skel.joints()[j].name + "_a" + a);
  }
  return cols;
}

void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want, const std::string& what) {
  if (got != want) {
    std::string w;
    for (const auto& c : want) w += (w.empty() ? "" : ",") + c;
    throw DataError("malformed header in " + what + "; expected '" + w + "'");
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw DataError("cannot write '" + path.string() + "'");
  }
}

std::string sha256_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &size) != 1) {
    throw Error("SHA-256 failed for '" + path.string() + "'");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < size; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  double v = 0.0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty()) throw DataError("missing value at row " + std::to_string(row) + " column " + column);
  if (r.ec != std::errc{} || r.ptr != cell.data() + cell.size()) {
    throw DataError("non-numeric value '" + cell + "' at row " + std::to_string(row) + " column " + column);
  }
  if (!std::isfinite(v)) throw DataError("non-finite value at row " + std::to_string(row) + " column " + column);
  return v;
}

std::string format_angle_table(const MotionSequence& seq, const Skeleton& skel) {
  const std::size_t T = seq.frame_count(), S = skel.segment_count();
  if (seq.space != MotionSpace::JointAngle || seq.channel_count() != S) {
    throw ShapeError("angle table needs a joint-angle sequence matching the skeleton");
  }
  std::string out = "frame";
  for (const auto& c : angle_columns(skel)) out += "," + c;
  if (seq.root_track) out += ",root_x,root_y,root_z";
  out += "\n";
  for (std::size_t t = 0; t < T; ++t) {
    out += std::to_string(t);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t v = 0; v < 3; ++v) out += "," + number(seq.frames({t, s, v}));
    }
    if (seq.root_track) {
      for (std::size_t v = 0; v < 3; ++v) out += "," + number((*seq.root_track)({t, v}));
    }
    out += "\n";
  }
  return out;
}

MotionSequence parse_angle_table(const std::string& text, const Skeleton& skel, double frame_rate) {
  const Table t = read_table(text, "angle table");
  std::vector<std::string> want{"frame"};
  for (const auto& c : angle_columns(skel)) want.push_back(c);
  const bool root = t.header.size() == want.size() + 3;
  if (root) want.insert(want.end(), {"root_x", "root_y", "root_z"});
  expect_header(t.header, want, "angle table");
  if (t.rows.empty()) throw DataError("angle table has no rows");
  const std::size_t T = t.rows.size(), S = skel.segment_count();
  MotionSequence seq{Tensor({T, S, 3}), frame_rate, MotionSpace::JointAngle, std::nullopt};
  if (root) seq.root_track = Tensor({T, 3});
  for (std::size_t r = 0; r < T; ++r) {
    const auto& row = t.rows[r];
    if (parse_index(row[0], r + 2, "frame") != r) throw DataError("angle table frames must count up from 0");
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t v = 0; v < 3; ++v) {
        const std::size_t c = 1 + 3 * s + v;
        seq.frames({r, s, v}) = parse_number(row[c], r + 2, want[c]);
      }
    }
    if (root) {
      for (std::size_t v = 0; v < 3; ++v) {
        const std::size_t c = 1 + 3 * S + v;
        (*seq.root_track)({r, v}) = parse_number(row[c], r + 2, want[c]);
      }
    }
  }
  return seq;
}

void write_reference(const ReferenceCycle& ref, const Skeleton& skel, const std::filesystem::path& mean_path,
                     const std::filesystem::path& std_path) {
  write_file(mean_path, format_angle_table(ref.angles, skel));
  const MotionSequence sd{ref.per_timestep_std, ref.angles.frame_rate, MotionSpace::JointAngle, std::nullopt};
  write_file(std_path, format_angle_table(sd, skel));
}

ReferenceCycle read_reference(const std::filesystem::path& mean_path, const std::filesystem::path& std_path,
                              const Skeleton& skel, double frame_rate) {
  ReferenceCycle ref;
  ref.angles = parse_angle_table(read_file(mean_path), skel, frame_rate);
  const MotionSequence sd = parse_angle_table(read_file(std_path), skel, frame_rate);
  if (sd.root_track || sd.frames.shape() != ref.angles.frames.shape()) {
    throw DataError("deviation table does not match the reference table");
  }
  ref.per_timestep_std = sd.frames;
  ref.length_frames = ref.angles.frame_count();
  return ref;
}

std::string format_bands(const std::vector<BandRow>& bands, const Skeleton& skel) {
  std::string out = "model_index,time_index,horizon_frame";
  for (const auto& c : angle_columns(skel)) out += "," + c;
  out += "\n";
  for (const auto& b : bands) {
    const std::size_t K = b.deviation.extent(0);
    for (std::size_t h = 0; h < K; ++h) {
      out += std::to_string(b.model_index) + "," + std::to_string(b.time_index) + "," + std::to_string(h + 1);
      for (std::size_t s = 0; s < skel.segment_count(); ++s) {
        for (std::size_t v = 0; v < 3; ++v) out += "," + number(b.deviation({h, s, v}));
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<BandRow> parse_bands(const std::string& text, const Skeleton& skel) {
  const Table t = read_table(text, "band table");
  std::vector<std::string> want{"model_index", "time_index", "horizon_frame"};
  for (const auto& c : angle_columns(skel)) want.push_back(c);
  expect_header(t.header, want, "band table");
  const std::size_t S = skel.segment_count();
  // Rows are grouped by model with horizons counting up from 1.
  std::vector<BandRow> out;
  std::vector<std::vector<double>> values;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t model = parse_index(row[0], r + 2, want[0]);
    const std::size_t time = parse_index(row[1], r + 2, want[1]);
    const std::size_t h = parse_index(row[2], r + 2, want[2]);
    if (h == 1) {
      out.push_back({model, time, {}});
      values.emplace_back();
    } else if (out.empty() || out.back().model_index != model || values.back().size() != (h - 1) * S * 3) {
      throw DataError("band table row " + std::to_string(r + 2) + " breaks the model/horizon order");
    }
    for (std::size_t c = 3; c < want.size(); ++c) values.back().push_back(parse_number(row[c], r + 2, want[c]));
  }
  for (std::size_t b = 0; b < out.size(); ++b) {
    const std::size_t K = values[b].size() / (S * 3);
    if (!out.empty() && K != values.front().size() / (S * 3)) throw DataError("band table models differ in horizon");
    Tensor dev({K, S, 3});
    for (std::size_t h = 0; h < K; ++h) {
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t v = 0; v < 3; ++v) dev({h, s, v}) = values[b][(h * S + s) * 3 + v];
      }
    }
    out[b].deviation = std::move(dev);
  }
  return out;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  for (const auto& cell : split(text)) {
    std::size_t v = 0;
    const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || r.ec != std::errc{} || r.ptr != cell.data() + cell.size()) {
      throw DataError("'" + text + "' is not a comma-separated list of indices");
    }
    out.push_back(v);
  }
  return out;
}

Manifest::Manifest(std::string command) {
  doc_["tool"] = "totr";
  doc_["command"] = std::move(command);
  doc_["config"] = nlohmann::json::object();
  doc_["seeds"] = nlohmann::json::object();
  doc_["inputs"] = nlohmann::json::array();
  doc_["outputs"] = nlohmann::json::array();
}

void Manifest::input(const std::filesystem::path& path) {
  doc_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void Manifest::output(const std::filesystem::path& path) {
  doc_["outputs"].push_back({{"path", path.filename().string()}, {"sha256", sha256_file(path)}});
}

void Manifest::write(const std::filesystem::path& dir) { write_file(dir / "manifest.json", doc_.dump(2) + "\n"); }

}  // namespace totr::cli
