// Copyright 2026 The Walnut Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WALNUT_BYTES_HPP
#define WALNUT_BYTES_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace walnut {

using Bytes = std::vector<uint8_t>;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string(std::span<const uint8_t> b) {
  return std::string(b.begin(), b.end());
}

inline Bytes concat(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  Bytes out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline Bytes xor_bytes(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  if (a.size() != b.size()) {
    throw Error("xor_bytes: length mismatch (" + std::to_string(a.size()) +
                " vs " + std::to_string(b.size()) + ")");
  }
  Bytes out(a.size());
  for (size_t i = 0; i < a.size(); i++) out[i] = a[i] ^ b[i];
  return out;
}

inline std::string to_hex(std::span<const uint8_t> b) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (uint8_t c : b) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

/// Canonical big-endian writer. All wire formats in the project go through
/// this so byte accounting and tamper tests see one stable encoding.
class Writer {
 public:
  void put_u8(uint8_t v) { buf_.push_back(v); }

  void put_u32(uint32_t v) {
    buf_.push_back(uint8_t(v >> 24));
    buf_.push_back(uint8_t(v >> 16));
    buf_.push_back(uint8_t(v >> 8));
    buf_.push_back(uint8_t(v));
  }

  void put_u64(uint64_t v) {
    put_u32(uint32_t(v >> 32));
    put_u32(uint32_t(v));
  }

  // Raw bytes, no length prefix. For fixed-size fields (ids, signatures).
  void put_raw(std::span<const uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }

  // Length-prefixed bytes.
  void put_bytes(std::span<const uint8_t> b) {
    put_u32(uint32_t(b.size()));
    put_raw(b);
  }

  void put_str(std::string_view s) {
    put_u32(uint32_t(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  const Bytes& bytes() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> b) : data_(b) {}

  uint8_t get_u8() {
    need(1);
    return data_[pos_++];
  }

  uint32_t get_u32() {
    need(4);
    uint32_t v = uint32_t(data_[pos_]) << 24 | uint32_t(data_[pos_ + 1]) << 16 |
                 uint32_t(data_[pos_ + 2]) << 8 | uint32_t(data_[pos_ + 3]);
    pos_ += 4;
    return v;
  }

  uint64_t get_u64() {
    uint64_t hi = get_u32();
    return hi << 32 | get_u32();
  }

  Bytes get_raw(size_t n) {
    need(n);
    Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }

  Bytes get_bytes() {
    uint32_t n = get_u32();
    return get_raw(n);
  }

  std::string get_str() {
    Bytes b = get_bytes();
    return std::string(b.begin(), b.end());
  }

  size_t remaining() const { return data_.size() - pos_; }

  void expect_end() const {
    if (pos_ != data_.size()) throw Error("decode: trailing bytes");
  }

 private:
  void need(size_t n) const {
    if (data_.size() - pos_ < n) throw Error("decode: truncated input");
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

}  // namespace walnut

#endif  // WALNUT_BYTES_HPP
