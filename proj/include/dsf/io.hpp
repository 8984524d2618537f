#ifndef DSF_IO_HPP
#define DSF_IO_HPP

// Little-endian binary helpers and atomic file replacement.

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace dsf {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace io {

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  os.write(buf.data(), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  std::array<char, sizeof(T)> buf;
  if (!is.read(buf.data(), sizeof(T))) throw IoError("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

inline void put_doubles(std::ostream& os, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             std::streamsize(values.size() * sizeof(double)));
  } else {
    for (double v : values) put(os, v);
  }
}

inline void get_doubles(std::istream& is, std::span<double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(values.data()),
                 std::streamsize(values.size() * sizeof(double))))
      throw IoError("unexpected end of file");
  } else {
    for (double& v : values) v = get<double>(is);
  }
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
    throw IoError(std::string("bad magic, expected ") + magic);
}

/// Write via a temporary sibling and rename into place.
template <typename WriteFn>
void write_atomically(const std::filesystem::path& path, WriteFn&& fn,
                      std::ios::openmode mode = std::ios::binary) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, mode | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    fn(os);
    os.flush();
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace io

}  // namespace dsf

#endif  // DSF_IO_HPP
