#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "totr/cycles.hpp"
#include "totr/kinematics.hpp"
#include "totr/uncertainty.hpp"

namespace totr::cli {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string number(double v);
double parse_number(const std::string& cell, std::size_t row, const std::string& column);

/// Joint-angle table "frame,<joint>_ax,<joint>_ay,<joint>_az,..." with one
/// triple per segment, named after the segment's end joint, followed by
/// root_x,root_y,root_z when the sequence has a root track.
std::string format_angle_table(const MotionSequence& seq, const Skeleton& skel);
MotionSequence parse_angle_table(const std::string& text, const Skeleton& skel, double frame_rate);

/// Reference cycle as two angle tables (mean with root track, deviation).
void write_reference(const ReferenceCycle& ref, const Skeleton& skel, const std::filesystem::path& mean_path,
                     const std::filesystem::path& std_path);
ReferenceCycle read_reference(const std::filesystem::path& mean_path, const std::filesystem::path& std_path,
                              const Skeleton& skel, double frame_rate);

/// Angle-space band deviations: "model_index,time_index,horizon_frame,<joint>_ax,...".
struct BandRow {
  std::size_t model_index = 0;
  std::size_t time_index = 0;
  Tensor deviation;  ///< K x S x 3
};
std::string format_bands(const std::vector<BandRow>& bands, const Skeleton& skel);
std::vector<BandRow> parse_bands(const std::string& text, const Skeleton& skel);

/// Comma-separated unsigned list such as "0,2,5".
std::vector<std::size_t> parse_index_list(const std::string& text);

/// Run record written next to every command's outputs.
class Manifest {
 public:
  explicit Manifest(std::string command);
  nlohmann::json& config() { return doc_["config"]; }
  void seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }
  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);
  /// Writes manifest.json into `dir`.
  void write(const std::filesystem::path& dir);

 private:
  nlohmann::json doc_;
};

}  // namespace totr::cli
