#include "memsde/harness/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "memsde/harness/config.hpp"

namespace memsde::harness {

namespace {

// x86-64 is little-endian; these keep the byte order explicit in one place.
template <typename T>
void put(std::string& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& off, const char* what) {
  if (off + sizeof(T) > in.size())
    throw FormatError(std::string("MSDE file truncated while reading ") + what);
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void save_trajectory(const std::string& file, const FullPath& p, std::uint64_t seed) {
  p.validate();
  const int dim = p.past.dim;
  const std::vector<double> flat = flatten(p);
  const std::uint64_t n_samples = flat.size() / static_cast<std::size_t>(dim);
  const double origin_time = -p.past.view().window();

  std::string out;
  out.append("MSDE", 4);
  put<std::uint32_t>(out, kMsdeVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  put<std::uint64_t>(out, n_samples);
  put<double>(out, p.past.dt);
  put<double>(out, origin_time);
  put<std::uint64_t>(out, seed);
  for (double v : flat) put<double>(out, v);

  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open for writing: " + file);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

TrajectoryFile load_trajectory(const std::string& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw FormatError("cannot open: " + file);
  std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  std::size_t off = 0;
  if (in.size() < 4 || in.compare(0, 4, "MSDE") != 0)
    throw FormatError("bad magic: expected 'MSDE', found '" + in.substr(0, 4) + "'");
  off = 4;
  const auto version = take<std::uint32_t>(in, off, "version");
  if (version != kMsdeVersion)
    throw FormatError("unsupported MSDE version: expected " + std::to_string(kMsdeVersion) +
                      ", found " + std::to_string(version));
  const auto dim = take<std::uint32_t>(in, off, "dim");
  const auto n_samples = take<std::uint64_t>(in, off, "n_samples");
  const auto dt = take<double>(in, off, "dt");
  const auto origin_time = take<double>(in, off, "origin_time");
  const auto seed = take<std::uint64_t>(in, off, "seed");
  if (dim == 0 || n_samples == 0 || !(dt > 0.0))
    throw FormatError("MSDE header describes an empty or invalid trajectory");

  std::vector<double> flat(n_samples * dim);
  for (double& v : flat) v = take<double>(in, off, "samples");
  if (off != in.size()) throw FormatError("MSDE file has trailing bytes");

  // Split at time 0.
  const double idx0_f = -origin_time / dt;
  const auto idx0 = static_cast<std::int64_t>(std::llround(idx0_f));
  if (idx0 < 0 || static_cast<std::uint64_t>(idx0) >= n_samples ||
      std::abs(idx0_f - static_cast<double>(idx0)) > 1e-9)
    throw FormatError("MSDE trajectory does not span time 0 on its grid");

  TrajectoryFile out;
  out.seed = seed;
  out.path.past.dim = static_cast<int>(dim);
  out.path.past.dt = dt;
  out.path.past.samples.resize((static_cast<std::size_t>(idx0) + 1) * dim);
  for (std::int64_t k = 0; k <= idx0; ++k)
    for (std::uint32_t c = 0; c < dim; ++c)
      out.path.past.samples[static_cast<std::size_t>(k) * dim + c] =
          flat[static_cast<std::size_t>(idx0 - k) * dim + c];
  out.path.future.dim = static_cast<int>(dim);
  out.path.future.dt = dt;
  out.path.future.samples.assign(flat.begin() + static_cast<std::ptrdiff_t>(idx0) * dim,
                                 flat.end());
  return out;
}

void save_csv(const std::string& file, const std::vector<std::string>& columns,
              const std::vector<std::vector<double>>& rows) {
  std::ofstream f(file, std::ios::trunc);
  if (!f) throw FormatError("cannot open for writing: " + file);
  for (std::size_t c = 0; c < columns.size(); ++c)
    f << (c ? "," : "") << columns[c];
  f << "\n";
  char buf[40];
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw ContractViolation("save_csv: row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
      f << (c ? "," : "") << buf;
    }
    f << "\n";
  }
}

std::string file_digest(const std::string& file) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw FormatError("cannot open: " + file);
  std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return fnv1a64_hex(in.data(), in.size());
}

}  // namespace memsde::harness
