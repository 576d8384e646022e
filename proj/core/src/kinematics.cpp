#include "totr/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "totr/error.hpp"

namespace totr {

namespace {

using json = nlohmann::json;

void require_three_axes(const Tensor& frames, const char* what) {
  if (frames.order() != 3 || frames.extent(2) != 3) {
    throw ShapeError(std::string(what) + " must be a frames x joints x 3 tensor");
  }
}

double clamp_unit(double v, std::size_t frame, std::size_t joint) {
  if (v > 1.0 + kClampTolerance || v < -1.0 - kClampTolerance) {
    throw NumericError("direction cosine " + std::to_string(v) + " outside [-1, 1] at frame " + std::to_string(frame) +
                       ", segment " + std::to_string(joint));
  }
  return std::clamp(v, -1.0, 1.0);
}

double checked_angle(double a, std::size_t frame, std::size_t segment) {
  if (!(a >= -kClampTolerance && a <= std::numbers::pi + kClampTolerance)) {
    throw DataError("joint angle " + std::to_string(a) + " outside [0, pi] at frame " + std::to_string(frame) +
                    ", segment " + std::to_string(segment));
  }
  return std::clamp(a, 0.0, std::numbers::pi);
}

}  // namespace

Skeleton::Skeleton(std::vector<Joint> joints) {
  const std::size_t n = joints.size();
  if (n < 2) throw DataError("skeleton needs a root and at least one more joint");
  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (joints[k].name == joints[i].name) throw DataError("duplicate joint name '" + joints[i].name + "'");
    }
    if (!joints[i].parent) {
      if (root) throw DataError("skeleton has more than one root");
      root = i;
    } else if (*joints[i].parent >= n || *joints[i].parent == i) {
      throw DataError("joint '" + joints[i].name + "' has an invalid predecessor");
    }
  }
  if (!root) throw DataError("skeleton has no root");

  // Stable topological order: repeatedly emit joints whose parent is placed.
  std::vector<std::size_t> order{*root};
  std::vector<bool> placed(n, false);
  placed[*root] = true;
  while (order.size() < n) {
    bool progress = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!placed[i] && placed[*joints[i].parent]) {
        order.push_back(i);
        placed[i] = true;
        progress = true;
      }
    }
    if (!progress) throw DataError("skeleton predecessor graph contains a cycle");
  }
  std::vector<std::size_t> new_index(n);
  for (std::size_t k = 0; k < n; ++k) new_index[order[k]] = k;
  for (std::size_t k = 0; k < n; ++k) {
    Joint j = joints[order[k]];
    if (j.parent) j.parent = new_index[*j.parent];
    if (j.parent && !(j.length >= 0.0)) throw DataError("segment length of '" + j.name + "' must be >= 0");
    joints_.push_back(std::move(j));
  }
  root_ = 0;
  segment_of_joint_.assign(n, std::nullopt);
  for (std::size_t k = 1; k < n; ++k) {
    segment_of_joint_[k] = segments_.size();
    segments_.push_back(k);
  }
}

Skeleton Skeleton::default_upper_body(double scale) {
  std::vector<Joint> j = {
      {"hip", std::nullopt, 0.0},
      {"spine", 0, 0.25 * scale},
      {"neck", 1, 0.30 * scale},
      {"head", 2, 0.15 * scale},
      {"left_shoulder", 2, 0.18 * scale},
      {"right_shoulder", 2, 0.18 * scale},
      {"left_elbow", 4, 0.30 * scale},
      {"right_elbow", 5, 0.30 * scale},
      {"left_hand", 6, 0.27 * scale},
      {"right_hand", 7, 0.27 * scale},
  };
  return Skeleton(std::move(j));
}

Skeleton Skeleton::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("skeleton config is not valid JSON: ") + e.what());
  }
  if (!doc.contains("joints") || !doc["joints"].is_array()) throw DataError("skeleton config needs a 'joints' array");
  const auto& arr = doc["joints"];
  std::vector<std::string> names;
  for (const auto& j : arr) {
    if (!j.contains("name") || !j["name"].is_string()) throw DataError("every joint needs a string 'name'");
    names.push_back(j["name"].get<std::string>());
  }
  std::vector<Joint> joints;
  for (const auto& j : arr) {
    Joint joint;
    joint.name = j["name"].get<std::string>();
    if (j.contains("parent") && !j["parent"].is_null()) {
      if (!j["parent"].is_string()) throw DataError("parent of joint '" + joint.name + "' must be a joint name");
      const auto parent = j["parent"].get<std::string>();
      const auto it = std::find(names.begin(), names.end(), parent);
      if (it == names.end()) throw DataError("joint '" + joint.name + "' names unknown parent '" + parent + "'");
      joint.parent = static_cast<std::size_t>(it - names.begin());
    }
    if (j.contains("length") && !j["length"].is_null()) {
      if (!j["length"].is_number()) throw DataError("length of joint '" + joint.name + "' must be a number");
      joint.length = j["length"].get<double>();
    }
    joints.push_back(std::move(joint));
  }
  return Skeleton(std::move(joints));
}

Skeleton Skeleton::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open skeleton config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string Skeleton::to_json() const {
  json arr = json::array();
  for (const auto& j : joints_) {
    json e;
    e["name"] = j.name;
    e["parent"] = j.parent ? json(joints_[*j.parent].name) : json(nullptr);
    e["length"] = j.length;
    arr.push_back(std::move(e));
  }
  return json{{"joints", arr}}.dump(2);
}

std::size_t Skeleton::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    if (joints_[i].name == name) return i;
  }
  throw DataError("unknown joint '" + name + "'");
}

std::optional<std::size_t> Skeleton::segment_of(std::size_t joint) const { return segment_of_joint_.at(joint); }

std::vector<double> Skeleton::segment_lengths() const {
  std::vector<double> out;
  for (auto j : segments_) out.push_back(joints_[j].length);
  return out;
}

Skeleton Skeleton::with_segment_lengths(const std::vector<double>& lengths) const {
  if (lengths.size() != segments_.size()) throw ShapeError("one length per segment expected");
  Skeleton s = *this;
  for (std::size_t k = 0; k < segments_.size(); ++k) s.joints_[segments_[k]].length = lengths[k];
  return s;
}

Tensor slice_frames(const Tensor& t, std::size_t begin, std::size_t end) {
  if (begin >= end || end > t.extent(0)) throw ShapeError("frame slice out of range");
  const std::size_t T = t.extent(0);
  const std::size_t n = end - begin;
  Shape shape = t.shape();
  shape[0] = n;
  Tensor out(shape);
  const std::size_t cols = t.size() / T;
  for (std::size_t c = 0; c < cols; ++c) {
    std::copy_n(t.data().begin() + static_cast<std::ptrdiff_t>(c * T + begin), n,
                out.data().begin() + static_cast<std::ptrdiff_t>(c * n));
  }
  return out;
}

MotionSequence MotionSequence::slice(std::size_t begin, std::size_t end) const {
  MotionSequence out{slice_frames(frames, begin, end), frame_rate, space, std::nullopt};
  if (root_track) out.root_track = slice_frames(*root_track, begin, end);
  return out;
}

MotionSequence concatenate(const MotionSequence& a, const MotionSequence& b) {
  if (a.space != b.space) throw DataError("cannot concatenate sequences from different spaces");
  auto cat = [](const Tensor& x, const Tensor& y) {
    if (x.order() != y.order() || !std::equal(x.shape().begin() + 1, x.shape().end(), y.shape().begin() + 1)) {
      throw ShapeError("sequence layouts differ");
    }
    const std::size_t tx = x.extent(0), ty = y.extent(0);
    Shape shape = x.shape();
    shape[0] = tx + ty;
    Tensor out(shape);
    const std::size_t cols = x.size() / tx;
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t t = 0; t < tx; ++t) out[c * (tx + ty) + t] = x[c * tx + t];
      for (std::size_t t = 0; t < ty; ++t) out[c * (tx + ty) + tx + t] = y[c * ty + t];
    }
    return out;
  };
  MotionSequence out{cat(a.frames, b.frames), a.frame_rate, a.space, std::nullopt};
  if (a.root_track.has_value() != b.root_track.has_value()) throw DataError("root track present on only one side");
  if (a.root_track) out.root_track = cat(*a.root_track, *b.root_track);
  return out;
}

AngleConversion to_joint_angles(const MotionSequence& cartesian, const Skeleton& skel) {
  if (cartesian.space != MotionSpace::Cartesian) throw DataError("to_joint_angles expects Cartesian input");
  require_three_axes(cartesian.frames, "Cartesian frames");
  if (cartesian.channel_count() != skel.joint_count()) {
    throw ShapeError("sequence has " + std::to_string(cartesian.channel_count()) + " joints, skeleton has " +
                     std::to_string(skel.joint_count()));
  }
  const std::size_t T = cartesian.frame_count();
  const std::size_t S = skel.segment_count();
  const auto& pos = cartesian.frames;

  AngleConversion out{{Tensor({T, S, 3}), cartesian.frame_rate, MotionSpace::JointAngle, Tensor({T, 3})},
                      Tensor({T, S})};
  Tensor& angles = out.angles.frames;
  Tensor& root = *out.angles.root_track;
  const std::size_t r = skel.root();
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < 3; ++v) root({t, v}) = pos({t, r, v});
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t j = skel.segments()[s];
      const std::size_t p = *skel.joints()[j].parent;
      const double dx = pos({t, j, 0}) - pos({t, p, 0});
      const double dy = pos({t, j, 1}) - pos({t, p, 1});
      const double dz = pos({t, j, 2}) - pos({t, p, 2});
      const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (!(d > 0.0)) {
        throw DataError("joints '" + skel.joints()[j].name + "' and '" + skel.joints()[p].name +
                        "' coincide at frame " + std::to_string(t));
      }
      out.distances({t, s}) = d;
      const double delta[3] = {dx, dy, dz};
      for (std::size_t v = 0; v < 3; ++v) angles({t, s, v}) = std::acos(clamp_unit(delta[v] / d, t, s));
    }
  }
  return out;
}

namespace {

MotionSequence place_joints(const MotionSequence& angles, const Skeleton& skel, const Tensor* lengths) {
  if (angles.space != MotionSpace::JointAngle) throw DataError("from_joint_angles expects joint-angle input");
  if (!angles.root_track) throw DataError("joint-angle sequence has no root track");
  require_three_axes(angles.frames, "angle frames");
  const std::size_t T = angles.frame_count();
  const std::size_t S = skel.segment_count();
  if (angles.channel_count() != S) throw ShapeError("angle channels do not match skeleton segments");
  if (angles.root_track->shape() != Shape{T, 3}) throw ShapeError("root track must be frames x 3");
  if (lengths && lengths->shape() != Shape{T, S}) throw ShapeError("per-frame lengths must be frames x segments");

  const std::vector<double> fixed = skel.segment_lengths();
  MotionSequence out{Tensor({T, skel.joint_count(), 3}), angles.frame_rate, MotionSpace::Cartesian, std::nullopt};
  Tensor& pos = out.frames;
  const std::size_t r = skel.root();
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < 3; ++v) pos({t, r, v}) = (*angles.root_track)({t, v});
    // Parents precede children in skeleton storage order.
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t j = skel.segments()[s];
      const std::size_t p = *skel.joints()[j].parent;
      const double d = lengths ? (*lengths)({t, s}) : fixed[s];
      for (std::size_t v = 0; v < 3; ++v) {
        pos({t, j, v}) = pos({t, p, v}) + d * std::cos(checked_angle(angles.frames({t, s, v}), t, s));
      }
    }
  }
  return out;
}

}  // namespace

MotionSequence from_joint_angles(const MotionSequence& angles, const Skeleton& skel) {
  for (double d : skel.segment_lengths()) {
    if (!(d > 0.0)) throw DataError("skeleton has a non-positive fixed segment length");
  }
  return place_joints(angles, skel, nullptr);
}

MotionSequence from_joint_angles(const MotionSequence& angles, const Skeleton& skel, const Tensor& lengths) {
  return place_joints(angles, skel, &lengths);
}

Skeleton fix_segment_lengths(const MotionSequence& cartesian, const Skeleton& skel) {
  const AngleConversion conv = to_joint_angles(cartesian, skel);
  const std::size_t T = cartesian.frame_count();
  std::vector<double> medians;
  std::vector<double> column(T);
  for (std::size_t s = 0; s < skel.segment_count(); ++s) {
    for (std::size_t t = 0; t < T; ++t) column[t] = conv.distances({t, s});
    std::sort(column.begin(), column.end());
    medians.push_back(T % 2 ? column[T / 2] : 0.5 * (column[T / 2 - 1] + column[T / 2]));
  }
  return skel.with_segment_lengths(medians);
}

}  // namespace totr
