#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gel/types.hpp"

namespace gel {

// 17-significant-digit float formatting; '.' decimal, locale independent.
inline std::string format_float(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Column-major binary blob: 24-byte header (magic "GEL1", u32 rows, u32 cols,
// u64 seed, u32 reserved), then rows*cols doubles.
inline void write_matrix_binary(const std::string& path, const Matrix& m,
                                std::uint64_t seed = 0) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const char magic[4] = {'G', 'E', 'L', '1'};
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  const std::uint32_t reserved = 0;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(&seed), 8);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct BinaryMatrix {
  Matrix m;
  std::uint64_t seed = 0;
};

inline BinaryMatrix read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  std::uint32_t rows = 0, cols = 0, reserved = 0;
  std::uint64_t seed = 0;
  in.read(magic, 4);
  if (std::memcmp(magic, "GEL1", 4) != 0)
    throw std::runtime_error("bad magic in " + path);
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  in.read(reinterpret_cast<char*>(&seed), 8);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  BinaryMatrix bm;
  bm.seed = seed;
  bm.m.resize(rows, cols);
  in.read(reinterpret_cast<char*>(bm.m.data()),
          static_cast<std::streamsize>(sizeof(double) * bm.m.size()));
  if (!in) throw std::runtime_error("truncated file: " + path);
  return bm;
}

inline void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ostringstream out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_float(m(i, j));
    }
    out << '\n';
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << out.str();
}

// temp-file + rename so partially written outputs are never observed
inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::uint64_t fnv1a_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_digest(ss.str());
}

}  // namespace gel
