#ifndef MEMSDE_HARNESS_IO_HPP
#define MEMSDE_HARNESS_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "memsde/pathspace.hpp"

namespace memsde::harness {

// Trajectory container format shared repo-wide ("MSDE"): header of magic,
// format version (u32), dim (u32), n_samples (u64), dt (f64), origin_time
// (f64), seed (u64), followed by row-major little-endian f64 samples, one row
// per time step, chronological from origin_time.
inline constexpr std::uint32_t kMsdeVersion = 1;

struct TrajectoryFile {
  FullPath path;
  std::uint64_t seed = 0;
};

/// Write past+future chronologically; origin_time is the earliest past time.
void save_trajectory(const std::string& file, const FullPath& p, std::uint64_t seed);

/// Bit-exact inverse of save_trajectory.  Throws FormatError on bad magic,
/// unknown version or truncation, quoting found-vs-expected bytes.
TrajectoryFile load_trajectory(const std::string& file);

/// CSV with a header row; floats printed with 17 significant digits.
void save_csv(const std::string& file, const std::vector<std::string>& columns,
              const std::vector<std::vector<double>>& rows);

std::string file_digest(const std::string& file);  // fnv1a64 over the bytes

}  // namespace memsde::harness

#endif
