#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "totr/tensor.hpp"

namespace totr {

/// Joint tree with one root. Joints are stored so that every predecessor
/// precedes its children (topological order), which is what the
/// back-transform traversal relies on.
class Skeleton {
 public:
  struct Joint {
    std::string name;
    std::optional<std::size_t> parent;  ///< empty for the root
    double length = 0.0;                ///< distance to the parent in meters; 0 when unknown or root
    friend bool operator==(const Joint&, const Joint&) = default;
  };

  Skeleton() = default;
  /// Validates the tree; joints may be given in any order and are sorted
  /// topologically (stable with respect to the input order).
  explicit Skeleton(std::vector<Joint> joints);

  /// hip -> spine -> neck -> head; neck -> {left,right}_shoulder -> elbow -> hand.
  static Skeleton default_upper_body(double scale = 1.0);

  /// JSON document: {"joints": [{"name": ..., "parent": ... | null, "length": ...}, ...]}.
  static Skeleton from_json(const std::string& text);
  static Skeleton load(const std::filesystem::path& path);
  [[nodiscard]] std::string to_json() const;

  [[nodiscard]] std::size_t joint_count() const noexcept { return joints_.size(); }
  [[nodiscard]] std::size_t segment_count() const noexcept { return segments_.size(); }
  [[nodiscard]] const std::vector<Joint>& joints() const noexcept { return joints_; }
  [[nodiscard]] std::size_t root() const noexcept { return root_; }
  [[nodiscard]] std::size_t index_of(const std::string& name) const;

  /// Non-root joints in storage order; segment s ends at joint segments()[s].
  [[nodiscard]] const std::vector<std::size_t>& segments() const noexcept { return segments_; }
  /// Segment index ending at `joint`, or nullopt for the root.
  [[nodiscard]] std::optional<std::size_t> segment_of(std::size_t joint) const;

  [[nodiscard]] std::vector<double> segment_lengths() const;
  [[nodiscard]] Skeleton with_segment_lengths(const std::vector<double>& lengths) const;

  friend bool operator==(const Skeleton&, const Skeleton&) = default;

 private:
  std::vector<Joint> joints_;
  std::vector<std::size_t> segments_;
  std::vector<std::optional<std::size_t>> segment_of_joint_;
  std::size_t root_ = 0;
};

enum class MotionSpace { Cartesian, JointAngle };

/// Frames x channels x 3 motion samples.
///
/// Cartesian: frames is T x J x 3 with joint positions in meters, one row per
/// skeleton joint. JointAngle: frames is T x S x 3 with the direction angles
/// (radians) of each segment against the x, y and z axes, S = J - 1 in
/// skeleton segment order, and root_track holds the T x 3 absolute root
/// positions.
struct MotionSequence {
  Tensor frames;
  double frame_rate = 60.0;
  MotionSpace space = MotionSpace::Cartesian;
  std::optional<Tensor> root_track;

  [[nodiscard]] std::size_t frame_count() const { return frames.extent(0); }
  [[nodiscard]] std::size_t channel_count() const { return frames.extent(1); }

  /// Frames [begin, end) including the matching root_track rows.
  [[nodiscard]] MotionSequence slice(std::size_t begin, std::size_t end) const;
};

/// Copy of frames [begin, end) of a T x A x B tensor.
Tensor slice_frames(const Tensor& t, std::size_t begin, std::size_t end);

/// Concatenates two sequences along the frame axis.
MotionSequence concatenate(const MotionSequence& a, const MotionSequence& b);

struct AngleConversion {
  MotionSequence angles;
  Tensor distances;  ///< T x S per-frame segment lengths
};

/// alpha_v = arccos((J_v - P_v) / ||J - P||) per segment and axis.
AngleConversion to_joint_angles(const MotionSequence& cartesian, const Skeleton& skel);

/// Places every non-root joint at P + d * (cos ax, cos ay, cos az) using the
/// skeleton's fixed segment lengths.
MotionSequence from_joint_angles(const MotionSequence& angles, const Skeleton& skel);

/// Same, with per-frame segment lengths (T x S) instead of fixed ones.
MotionSequence from_joint_angles(const MotionSequence& angles, const Skeleton& skel, const Tensor& lengths);

/// Per-segment median of the observed distances over all frames. For an even
/// frame count the median is the mean of the two middle order statistics.
Skeleton fix_segment_lengths(const MotionSequence& cartesian, const Skeleton& skel);

/// Maximum deviation from [-1, 1] tolerated (and clamped) in arccos arguments,
/// and from [0, pi] in angles fed to the back-transform.
inline constexpr double kClampTolerance = 1e-9;

}  // namespace totr
