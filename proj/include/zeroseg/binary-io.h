// zeroseg/binary-io.h

// Copyright 2026  The zeroseg Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitive readers/writers shared by the binary formats
// (FEAT1, DPGM1, MTLN1).  Readers track the byte offset so that format errors
// can say where the file went wrong.

#ifndef ZEROSEG_BINARY_IO_H_
#define ZEROSEG_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "zeroseg/base.h"

namespace zeroseg {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream &os) : os_(os) {}

  void Bytes(const void *data, size_t n) {
    os_.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
  }
  void Magic(std::string_view magic) {
    Bytes(magic.data(), magic.size());
    const char zero = 0;
    Bytes(&zero, 1);
  }
  void U8(std::uint8_t v) { Bytes(&v, 1); }
  void U32(std::uint32_t v) { Bytes(&v, 4); }
  void F32(float v) { Bytes(&v, 4); }
  void F64(double v) { Bytes(&v, 8); }
  void String(const std::string &s) {
    U32(static_cast<std::uint32_t>(s.size()));
    Bytes(s.data(), s.size());
  }
  void Check(const char *what) {
    if (!os_) throw Error(std::string("write failed: ") + what);
  }

 private:
  std::ostream &os_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream &is) : is_(is) {}

  std::uint64_t offset() const { return offset_; }

  void Bytes(void *data, size_t n, const char *what) {
    is_.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is_.gcount()) != n)
      throw FormatError(std::string("unexpected end of file reading ") + what,
                        offset_ + static_cast<std::uint64_t>(is_.gcount()));
    offset_ += n;
  }
  void Magic(std::string_view magic) {
    std::string buf(magic.size() + 1, '\0');
    const std::uint64_t start = offset_;
    Bytes(buf.data(), buf.size(), "magic");
    if (std::string_view(buf.data(), magic.size()) != magic || buf.back() != '\0')
      throw FormatError("bad magic, expected \"" + std::string(magic) + "\"", start);
  }
  std::uint8_t U8(const char *what) {
    std::uint8_t v;
    Bytes(&v, 1, what);
    return v;
  }
  std::uint32_t U32(const char *what) {
    std::uint32_t v;
    Bytes(&v, 4, what);
    return v;
  }
  float F32(const char *what) {
    float v;
    Bytes(&v, 4, what);
    return v;
  }
  double F64(const char *what) {
    double v;
    Bytes(&v, 8, what);
    return v;
  }
  std::string String(const char *what, std::uint32_t max_len = 1u << 20) {
    const std::uint64_t start = offset_;
    std::uint32_t n = U32(what);
    if (n > max_len) throw FormatError(std::string("implausible length for ") + what, start);
    std::string s(n, '\0');
    Bytes(s.data(), n, what);
    return s;
  }
  bool AtEnd() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream &is_;
  std::uint64_t offset_ = 0;
};

}  // namespace zeroseg

#endif  // ZEROSEG_BINARY_IO_H_
