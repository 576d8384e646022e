#include "totr/motion_csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "totr/error.hpp"

namespace totr {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return cells;
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::string where(std::size_t row, std::size_t col, std::string_view name) {
  return "row " + std::to_string(row) + " column " + std::to_string(col) + " (" + std::string(name) + ")";
}

double cell_value(std::string_view cell, std::size_t row, std::size_t col, std::string_view name) {
  cell = trim(cell);
  if (cell.empty()) throw DataError("missing value at " + where(row, col, name));
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
    throw DataError("non-numeric value '" + std::string(cell) + "' at " + where(row, col, name));
  }
  if (!std::isfinite(v)) throw DataError("non-finite value at " + where(row, col, name));
  return v;
}

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

}  // namespace

MotionSequence parse_motion_csv(const std::string& text, const Skeleton& skel, double default_rate) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("motion CSV is empty");
  const auto header = split(trim(line));
  const std::size_t J = skel.joint_count();
  if (header.size() < 2 || trim(header[0]) != "frame" || trim(header[1]) != "time") {
    throw DataError("malformed header: expected 'frame,time,<joint>_x,...'");
  }
  if ((header.size() - 2) % 3 != 0) throw DataError("malformed header: coordinate columns do not come in triples");
  if ((header.size() - 2) / 3 != J) {
    throw DataError("malformed header: " + std::to_string((header.size() - 2) / 3) + " joints, skeleton has " +
                    std::to_string(J));
  }
  // column_of[j][v] = CSV column holding joint j, axis v
  std::vector<std::array<std::size_t, 3>> column_of(J, {0, 0, 0});
  std::vector<bool> seen(J, false);
  constexpr std::string_view kSuffix[3] = {"_x", "_y", "_z"};
  for (std::size_t c = 2; c < header.size(); c += 3) {
    const auto first = trim(header[c]);
    if (first.size() < 3 || !first.ends_with("_x")) {
      throw DataError("malformed header: column " + std::to_string(c + 1) + " should end in _x");
    }
    const std::string name(first.substr(0, first.size() - 2));
    for (std::size_t v = 0; v < 3; ++v) {
      if (trim(header[c + v]) != name + std::string(kSuffix[v])) {
        throw DataError("malformed header: expected " + name + std::string(kSuffix[v]) + " in column " +
                        std::to_string(c + v + 1));
      }
    }
    std::size_t j = 0;
    try {
      j = skel.index_of(name);
    } catch (const Error&) {
      throw DataError("malformed header: joint '" + name + "' is not in the skeleton");
    }
    if (seen[j]) throw DataError("malformed header: joint '" + name + "' appears twice");
    seen[j] = true;
    column_of[j] = {c, c + 1, c + 2};
  }

  std::vector<double> values;
  std::vector<double> times;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto cells = split(body);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " columns, header has " +
                      std::to_string(header.size()));
    }
    cell_value(cells[0], row, 1, "frame");
    times.push_back(cell_value(cells[1], row, 2, "time"));
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t v = 0; v < 3; ++v) {
        const std::size_t c = column_of[j][v];
        values.push_back(cell_value(cells[c], row, c + 1, trim(header[c])));
      }
    }
  }
  const std::size_t T = times.size();
  if (T == 0) throw DataError("motion CSV has no data rows");

  Tensor frames({T, J, 3});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t v = 0; v < 3; ++v) frames({t, j, v}) = values[(t * J + j) * 3 + v];
    }
  }
  double rate = default_rate;
  if (T > 1) {
    const double span = times.back() - times.front();
    if (!(span > 0.0)) throw DataError("time column must increase");
    rate = static_cast<double>(T - 1) / span;
    const double nearest = std::round(rate);
    if (std::abs(rate - nearest) <= 1e-6 * nearest) rate = nearest;
  }
  return {std::move(frames), rate, MotionSpace::Cartesian, std::nullopt};
}

MotionSequence ingest_csv(const std::filesystem::path& path, const Skeleton& skel, double default_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_motion_csv(buf.str(), skel, default_rate);
}

std::string format_motion_csv(const MotionSequence& seq, const Skeleton& skel) {
  if (seq.space != MotionSpace::Cartesian) throw DataError("only Cartesian sequences are exported as CSV");
  const std::size_t J = skel.joint_count();
  if (seq.frames.order() != 3 || seq.channel_count() != J || seq.frames.extent(2) != 3) {
    throw ShapeError("sequence layout does not match the skeleton");
  }
  std::string out = "frame,time";
  for (const auto& joint : skel.joints()) out += "," + joint.name + "_x," + joint.name + "_y," + joint.name + "_z";
  out += "\n";
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    out += std::to_string(t) + "," + number(static_cast<double>(t) / seq.frame_rate);
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t v = 0; v < 3; ++v) out += "," + number(seq.frames({t, j, v}));
    }
    out += "\n";
  }
  return out;
}

void export_csv(const MotionSequence& seq, const Skeleton& skel, const std::filesystem::path& path) {
  const std::string text = format_motion_csv(seq, skel);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace totr
