#include "dcabc/trajectory_io.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "dcabc/binary_io.hpp"
#include "dcabc/csv.hpp"
#include "dcabc/error.hpp"

namespace dcabc {

namespace {

constexpr std::array<char, 6> kMagic{'D', 'C', 'T', 'R', 'A', 'J'};

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "time";
  for (Eigen::Index c = 0; c < traj.dim(); ++c) out << ",x" << (c + 1);
  out << '\n';
  for (Eigen::Index r = 0; r < traj.length(); ++r) {
    out << csv::format_double(traj.times[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < traj.dim(); ++c) out << ',' << csv::format_double(traj.values(r, c));
    out << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_trajectory_csv(out, traj);
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.header.empty() || table.header.front() != "time")
    throw Error(path.string() + ": trajectory CSV must start with a 'time' column");
  const auto dim = static_cast<Eigen::Index>(table.header.size() - 1);
  if (dim < 1) throw Error(path.string() + ": no state columns");
  Trajectory traj;
  traj.resolution = Resolution::Coarse;
  traj.origin = Origin::Observed;
  traj.values.resize(static_cast<Eigen::Index>(table.rows.size()), dim);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    traj.times.push_back(table.rows[r][0]);
    for (Eigen::Index c = 0; c < dim; ++c)
      traj.values(static_cast<Eigen::Index>(r), c) = table.rows[r][static_cast<std::size_t>(c + 1)];
  }
  return traj;
}

void write_trajectory_cache(const std::filesystem::path& path, const std::vector<Trajectory>& trajs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  binio::put_u8(out, kTrajectoryCacheVersion);
  binio::put_u64(out, trajs.size());
  for (const auto& t : trajs) {
    binio::put_u64(out, static_cast<std::uint64_t>(t.length()));
    binio::put_u64(out, static_cast<std::uint64_t>(t.dim()));
    binio::put_u8(out, static_cast<unsigned char>(t.resolution));
    binio::put_u8(out, static_cast<unsigned char>(t.origin));
    for (Eigen::Index r = 0; r < t.length(); ++r) {
      binio::put_f64(out, t.times[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < t.dim(); ++c) binio::put_f64(out, t.values(r, c));
    }
  }
}

std::vector<Trajectory> read_trajectory_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::array<char, 6> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(path.string() + ": not a trajectory cache");
  const unsigned char version = binio::get_u8(in);
  if (version != kTrajectoryCacheVersion)
    throw Error(path.string() + ": unsupported cache version " + std::to_string(version));
  const std::uint64_t count = binio::get_u64(in);
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Trajectory t;
    const auto rows = static_cast<Eigen::Index>(binio::get_u64(in));
    const auto dim = static_cast<Eigen::Index>(binio::get_u64(in));
    t.resolution = static_cast<Resolution>(binio::get_u8(in));
    t.origin = static_cast<Origin>(binio::get_u8(in));
    t.values.resize(rows, dim);
    t.times.resize(static_cast<std::size_t>(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
      t.times[static_cast<std::size_t>(r)] = binio::get_f64(in);
      for (Eigen::Index c = 0; c < dim; ++c) t.values(r, c) = binio::get_f64(in);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace dcabc
