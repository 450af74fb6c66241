#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "rmtnm/dynamics.hpp"

namespace rmtnm {

// Trajectory CSV: one '#' header line with delta, lambda, N, N_sam, seed, a column
// header, then one row per time point. Values carry 17 significant digits so a file
// read back reproduces the in-memory trajectory exactly.
void write_trajectory(std::ostream& os, const ChannelTrajectory& traj);
void write_trajectory_file(const std::filesystem::path& path, const ChannelTrajectory& traj);

// Parses and checks a trajectory file: header keys, column layout, strictly increasing
// time starting at 0, and a t = 0 row equal to (1, 1, 0) within max(5 SE, 1e-10).
// Throws ParseError carrying the 1-based line number.
ChannelTrajectory read_trajectory(std::istream& is);
ChannelTrajectory validate_trajectory_file(const std::filesystem::path& path);

// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace rmtnm
