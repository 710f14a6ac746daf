#pragma once

// "UTLM" binary matrix files:
//   bytes 0..3   magic "UTLM"
//   bytes 4..7   format version, u32 little-endian (= 1)
//   bytes 8..15  rows, u64 little-endian
//   bytes 16..23 cols, u64 little-endian
//   then rows*cols IEEE-754 binary64 little-endian values, row-major.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "utl/errors.hpp"
#include "utl/linops.hpp"

namespace utl {

inline constexpr std::array<char, 4> kMatrixMagic{'U', 'T', 'L', 'M'};
inline constexpr std::uint32_t kMatrixFormatVersion = 1;
inline constexpr std::uint64_t kMatrixHeaderBytes = 24;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>((value >> (8 * i)) & 0xffu));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_matrix(const Matrix& m) {
  std::vector<unsigned char> out;
  const auto count = static_cast<std::uint64_t>(m.rows()) * static_cast<std::uint64_t>(m.cols());
  out.reserve(kMatrixHeaderBytes + 8 * count);
  out.insert(out.end(), kMatrixMagic.begin(), kMatrixMagic.end());
  detail::put_le<std::uint32_t>(out, kMatrixFormatVersion);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m(i, j)));
    }
  }
  return out;
}

inline Matrix decode_matrix(const std::vector<unsigned char>& bytes) {
  const std::uint64_t size = bytes.size();
  if (size < 4) throw FormatError("truncated magic", size);
  if (std::memcmp(bytes.data(), kMatrixMagic.data(), 4) != 0) throw FormatError("bad magic", 0);
  if (size < 8) throw FormatError("truncated version field", size);
  const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kMatrixFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version), 4);
  }
  if (size < kMatrixHeaderBytes) throw FormatError("truncated shape header", size);
  const auto rows = detail::get_le<std::uint64_t>(bytes.data() + 8);
  const auto cols = detail::get_le<std::uint64_t>(bytes.data() + 16);
  if (rows == 0 || cols == 0) throw FormatError("zero dimension", rows == 0 ? 8 : 16);
  if (rows > (UINT64_MAX - kMatrixHeaderBytes) / 8 / cols) throw FormatError("shape overflow", 8);
  const std::uint64_t expected = kMatrixHeaderBytes + 8 * rows * cols;
  if (size < expected) {
    // offset of the first value that is not fully present
    const std::uint64_t first_missing = kMatrixHeaderBytes + 8 * ((size - kMatrixHeaderBytes) / 8);
    throw FormatError("truncated data: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(size),
                      first_missing);
  }
  if (size > expected) throw FormatError("trailing bytes after matrix data", expected);

  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  const unsigned char* p = bytes.data() + kMatrixHeaderBytes;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j, p += 8) {
      const double v = std::bit_cast<double>(detail::get_le<std::uint64_t>(p));
      if (!std::isfinite(v)) {
        throw FormatError("non-finite matrix entry", static_cast<std::uint64_t>(p - bytes.data()));
      }
      m(i, j) = v;
    }
  }
  return m;
}

inline void write_matrix(const std::string& path, const Matrix& m) {
  const auto bytes = encode_matrix(m);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("write failed for " + path);
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path + " for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_matrix(bytes);
}

}  // namespace utl
