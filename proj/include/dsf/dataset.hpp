#ifndef DSF_DATASET_HPP
#define DSF_DATASET_HPP

// Recordings, datasets and the binary dataset file format:
//
//   "DSFD" | version u32 | C u32 | T u32 | sfreq f64 | n_classes u32 |
//   n_recordings u64 | per recording: id u64, label u8, n_windows u32,
//   n_windows * C * T f64 (row-major windows)
//
// All integers and floats little-endian.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dsf/io.hpp"
#include "dsf/linalg.hpp"

namespace dsf {

struct Recording {
  std::uint64_t id = 0;
  int label = 0;
  std::vector<Matrix> windows;  // each C x T, uV
};

enum class Split : std::uint8_t { train, valid, test };

struct Dataset {
  std::size_t channels = 0;
  std::size_t samples = 0;  // per window
  double sfreq = 100.0;
  std::size_t n_classes = 2;
  std::vector<Recording> recordings;
  std::vector<Split> splits;  // parallel to recordings, empty when unsplit

  std::vector<const Recording*> subset(Split s) const {
    std::vector<const Recording*> out;
    for (std::size_t i = 0; i < recordings.size(); ++i)
      if (i < splits.size() && splits[i] == s) out.push_back(&recordings[i]);
    return out;
  }
};

inline constexpr std::uint32_t kDatasetVersion = 1;

inline void write_dataset(std::ostream& os, const Dataset& ds) {
  os.write("DSFD", 4);
  io::put<std::uint32_t>(os, kDatasetVersion);
  io::put<std::uint32_t>(os, std::uint32_t(ds.channels));
  io::put<std::uint32_t>(os, std::uint32_t(ds.samples));
  io::put<double>(os, ds.sfreq);
  io::put<std::uint32_t>(os, std::uint32_t(ds.n_classes));
  io::put<std::uint64_t>(os, ds.recordings.size());
  for (const auto& r : ds.recordings) {
    io::put<std::uint64_t>(os, r.id);
    io::put<std::uint8_t>(os, std::uint8_t(r.label));
    io::put<std::uint32_t>(os, std::uint32_t(r.windows.size()));
    for (const auto& w : r.windows) {
      if (w.rows() != ds.channels || w.cols() != ds.samples)
        throw IoError("write_dataset: window shape differs from header");
      io::put_doubles(os, w.data());
    }
  }
}

inline Dataset read_dataset(std::istream& is) {
  io::expect_magic(is, "DSFD");
  const auto version = io::get<std::uint32_t>(is);
  if (version != kDatasetVersion) throw IoError("unsupported dataset version");
  Dataset ds;
  ds.channels = io::get<std::uint32_t>(is);
  ds.samples = io::get<std::uint32_t>(is);
  ds.sfreq = io::get<double>(is);
  ds.n_classes = io::get<std::uint32_t>(is);
  const auto n = io::get<std::uint64_t>(is);
  ds.recordings.resize(n);
  for (auto& r : ds.recordings) {
    r.id = io::get<std::uint64_t>(is);
    r.label = io::get<std::uint8_t>(is);
    const auto nw = io::get<std::uint32_t>(is);
    r.windows.assign(nw, Matrix(ds.channels, ds.samples));
    for (auto& w : r.windows) io::get_doubles(is, w.data());
  }
  return ds;
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  io::write_atomically(path, [&](std::ostream& os) { write_dataset(os, ds); });
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_dataset(is);
}

}  // namespace dsf

#endif  // DSF_DATASET_HPP
