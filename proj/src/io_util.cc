// Copyright 2026 The dictg2p Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dictg2p/io_util.h"

#include <cctype>
#include <cstring>
#include <istream>
#include <ostream>

#include "dictg2p/error.h"

namespace dictg2p {

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));  // host is little-endian
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw FormatError("unexpected end of file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_u32(std::ostream& os, uint32_t v) { write_le(os, v); }
void write_u64(std::ostream& os, uint64_t v) { write_le(os, v); }
void write_f32(std::ostream& os, float v) { write_le(os, v); }
void write_f64(std::ostream& os, double v) { write_le(os, v); }

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_magic(std::ostream& os, const char magic[4]) { os.write(magic, 4); }

uint32_t read_u32(std::istream& is) { return read_le<uint32_t>(is); }
uint64_t read_u64(std::istream& is) { return read_le<uint64_t>(is); }
float read_f32(std::istream& is) { return read_le<float>(is); }
double read_f64(std::istream& is) { return read_le<double>(is); }

std::string read_string(std::istream& is) {
  uint32_t len = read_u32(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw FormatError("unexpected end of file in string");
  return s;
}

void expect_magic(std::istream& is, const char magic[4], uint32_t version) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected \"") +
                      std::string(magic, 4) + "\"");
  }
  uint32_t v = read_u32(is);
  if (v != version) {
    throw FormatError("unsupported version " + std::to_string(v) +
                      " for \"" + std::string(magic, 4) + "\" (expected " +
                      std::to_string(version) + ")");
  }
}

std::vector<std::string> split_utf8(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if ((c & 0x80u) == 0x00u) {
      len = 1;
    } else if ((c & 0xE0u) == 0xC0u) {
      len = 2;
    } else if ((c & 0xF0u) == 0xE0u) {
      len = 3;
    } else if ((c & 0xF8u) == 0xF0u) {
      len = 4;
    }
    if (i + len > s.size()) len = 1;
    // Continuation bytes must look like 10xxxxxx, else fall back to 1 byte.
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0u) != 0x80u) {
        len = 1;
        break;
      }
    }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> tokenize_text(const std::string& s) {
  for (char c : s) {
    if (c == ' ' || c == '\t') return split_whitespace(s);
  }
  return split_utf8(s);
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dictg2p
