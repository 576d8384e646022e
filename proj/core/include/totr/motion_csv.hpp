#pragma once

#include <filesystem>
#include <string>

#include "totr/kinematics.hpp"

namespace totr {

/// Rows "frame,time,<joint>_x,<joint>_y,<joint>_z,..." in meters. Every
/// skeleton joint must appear exactly once (in any column order); the result
/// follows skeleton joint order. The frame rate comes from the time column
/// and falls back to `default_rate` for a single row.
MotionSequence parse_motion_csv(const std::string& text, const Skeleton& skel, double default_rate = 60.0);
MotionSequence ingest_csv(const std::filesystem::path& path, const Skeleton& skel, double default_rate = 60.0);

/// Writes shortest round-trip decimal representations, so ingesting the
/// result restores every coordinate bit for bit.
std::string format_motion_csv(const MotionSequence& seq, const Skeleton& skel);
void export_csv(const MotionSequence& seq, const Skeleton& skel, const std::filesystem::path& path);

}  // namespace totr
