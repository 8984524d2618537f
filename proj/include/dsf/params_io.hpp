#ifndef DSF_PARAMS_IO_HPP
#define DSF_PARAMS_IO_HPP

// ParamStore file format, values only (optimizer state is not persisted):
//
//   "DSF1" | version u32 | per entry until EOF:
//     name length u64 | UTF-8 name | rank u64 | dims u64 x rank | f64 values
//
// Little-endian throughout.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dsf/io.hpp"
#include "dsf/nn.hpp"

namespace dsf {

inline constexpr std::uint32_t kParamsVersion = 1;

inline void write_params(std::ostream& os, const ParamStore& ps) {
  os.write("DSF1", 4);
  io::put<std::uint32_t>(os, kParamsVersion);
  for (std::size_t i = 0; i < ps.names().size(); ++i) {
    const auto& name = ps.names()[i];
    const auto& value = ps.entries()[i].value;
    io::put<std::uint64_t>(os, name.size());
    os.write(name.data(), std::streamsize(name.size()));
    io::put<std::uint64_t>(os, value.rank());
    for (std::size_t d : value.shape()) io::put<std::uint64_t>(os, d);
    io::put_doubles(os, value.data());
  }
}

inline ParamStore read_params(std::istream& is) {
  io::expect_magic(is, "DSF1");
  if (io::get<std::uint32_t>(is) != kParamsVersion) throw IoError("unsupported params version");
  ParamStore ps;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto len = io::get<std::uint64_t>(is);
    if (len > (1u << 16)) throw IoError("implausible parameter name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), std::streamsize(len))) throw IoError("unexpected end of file");
    const auto rank = io::get<std::uint64_t>(is);
    if (rank > 8) throw IoError("implausible tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = io::get<std::uint64_t>(is);
    Tensor value(shape);
    io::get_doubles(is, value.data());
    ps.add(name, std::move(value));
  }
  return ps;
}

inline void save_params(const std::filesystem::path& path, const ParamStore& ps) {
  io::write_atomically(path, [&](std::ostream& os) { write_params(os, ps); });
}

inline ParamStore load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_params(is);
}

}  // namespace dsf

#endif  // DSF_PARAMS_IO_HPP
