#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "dcabc/trajectory.hpp"

namespace dcabc {

/// CSV with header `time,x1,...,xd`.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Binary cache: "DCTRAJ" magic, version byte, u64 count, then per trajectory
/// u64 rows, u64 dim, u8 resolution, u8 origin, and rows of (time, x1..xd)
/// as little-endian float64.
inline constexpr unsigned char kTrajectoryCacheVersion = 1;
void write_trajectory_cache(const std::filesystem::path& path, const std::vector<Trajectory>& trajs);
std::vector<Trajectory> read_trajectory_cache(const std::filesystem::path& path);

}  // namespace dcabc
