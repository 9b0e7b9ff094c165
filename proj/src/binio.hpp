#pragma once

// Little-endian binary IO helpers shared by the checkpoint and embedding
// formats. Reads track the byte offset so truncation errors can name it.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "bowlab/errors.hpp"

namespace bowlab::binio {

struct Reader {
  std::ifstream in;
  std::uint64_t offset = 0;
  std::string path;

  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw DataError("cannot open file: " + p);
  }

  void bytes(void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw DataError(path + ": truncated while reading " + what + " at byte offset " +
                      std::to_string(offset));
    offset += n;
  }

  // True when the stream is cleanly at end-of-file.
  bool at_eof() {
    return in.peek() == std::char_traits<char>::eof();
  }

  std::uint8_t u8(const char* what) {
    std::uint8_t v;
    bytes(&v, 1, what);
    return v;
  }

  std::uint32_t u32(const char* what) {
    std::uint8_t b[4];
    bytes(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint64_t u64(const char* what) {
    const std::uint64_t lo = u32(what);
    const std::uint64_t hi = u32(what);
    return lo | (hi << 32);
  }

  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  void f32_array(float* dst, std::size_t n, const char* what) {
    std::vector<std::uint8_t> buf(n * 4);
    bytes(buf.data(), buf.size(), what);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(buf[i * 4]) |
                                 (static_cast<std::uint32_t>(buf[i * 4 + 1]) << 8) |
                                 (static_cast<std::uint32_t>(buf[i * 4 + 2]) << 16) |
                                 (static_cast<std::uint32_t>(buf[i * 4 + 3]) << 24);
      std::memcpy(dst + i, &bits, 4);
    }
  }

  std::string str(std::size_t n, const char* what) {
    std::string s(n, '\0');
    bytes(s.data(), n, what);
    return s;
  }
};

struct Writer {
  std::ofstream out;
  std::string path;

  explicit Writer(const std::string& p) : out(p, std::ios::binary), path(p) {
    if (!out) throw DataError("cannot write file: " + p);
  }

  void bytes(const void* src, std::size_t n) { out.write(static_cast<const char*>(src), static_cast<std::streamsize>(n)); }

  void u8(std::uint8_t v) { bytes(&v, 1); }

  void u32(std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    bytes(b, 4);
  }

  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }

  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }

  void f32_array(const float* src, std::size_t n) {
    std::vector<std::uint8_t> buf(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, src + i, 4);
      buf[i * 4] = static_cast<std::uint8_t>(bits);
      buf[i * 4 + 1] = static_cast<std::uint8_t>(bits >> 8);
      buf[i * 4 + 2] = static_cast<std::uint8_t>(bits >> 16);
      buf[i * 4 + 3] = static_cast<std::uint8_t>(bits >> 24);
    }
    bytes(buf.data(), buf.size());
  }

  void str(const std::string& s) { bytes(s.data(), s.size()); }

  void close() {
    out.close();
    if (!out) throw DataError("failed writing file: " + path);
  }
};

}  // namespace bowlab::binio
