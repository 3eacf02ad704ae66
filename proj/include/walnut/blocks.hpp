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
//
// String blocking: values are split at spaces/punctuation into blocks,
// placeholders ({{key}}) are kept in the clear, adjacent literal blocks are
// individually padded and merged, and literal payloads are XOR-shared.
//
// A merged literal payload is a sequence of self-framing segments:
//
//   [orig_len:4 BE][content][0x00.. pad to policy(orig_len)] ...
//
// The length prefix travels inside the shared payload, so the platform sees
// only padded bucket sizes, while the action service can strip padding after
// reconstruction.

#ifndef WALNUT_BLOCKS_HPP
#define WALNUT_BLOCKS_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "walnut/bytes.hpp"
#include "walnut/crypto.hpp"
#include "walnut/rng.hpp"

namespace walnut {

enum class BlockKind : uint8_t { Literal = 0, Placeholder = 1 };

struct Block {
  BlockKind kind = BlockKind::Literal;
  std::string content;            // literal text, or placeholder key (no braces)
  uint32_t original_length = 0;   // content bytes before padding
};

struct PaddingPolicy {
  enum class Mode : uint8_t { FixedMax = 0, NextPowerOfTwo = 1, MultipleOf = 2 };
  Mode mode = Mode::NextPowerOfTwo;
  uint32_t parameter = 0;

  static PaddingPolicy next_power_of_two() { return {Mode::NextPowerOfTwo, 0}; }
  static PaddingPolicy fixed_max(uint32_t n) { return {Mode::FixedMax, n}; }
  static PaddingPolicy multiple_of(uint32_t n) { return {Mode::MultipleOf, n}; }

  uint32_t padded_size(uint32_t len) const {
    switch (mode) {
      case Mode::FixedMax:
        if (len > parameter) {
          throw Error("padding: length " + std::to_string(len) +
                      " exceeds fixed maximum " + std::to_string(parameter));
        }
        return parameter;
      case Mode::NextPowerOfTwo: {
        if (len <= 1) return len;
        uint32_t p = 1;
        while (p < len) p <<= 1;
        return p;
      }
      case Mode::MultipleOf: {
        if (parameter == 0) throw Error("padding: multiple-of zero");
        return (len + parameter - 1) / parameter * parameter;
      }
    }
    throw Error("padding: bad mode");
  }
};

namespace detail {

// Space and ASCII punctuation split a string; each such character is its own
// literal block. Other whitespace is treated like space.
inline bool is_break_char(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  if (u == ' ' || u == '\t' || u == '\n' || u == '\r' || u == '\f' || u == '\v')
    return true;
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) ||
         (u >= 123 && u <= 126);
}

}  // namespace detail

/// Splits at spaces and punctuation; {{key}} runs become Placeholder blocks.
inline std::vector<Block> split_blocks(std::string_view s) {
  std::vector<Block> out;
  size_t i = 0;
  auto flush_word = [&](size_t begin, size_t end) {
    if (end > begin) {
      std::string w(s.substr(begin, end - begin));
      out.push_back({BlockKind::Literal, w, uint32_t(w.size())});
    }
  };
  size_t word_begin = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '{') {
      flush_word(word_begin, i);
      if (i + 1 >= s.size() || s[i + 1] != '{') {
        throw Error("split_blocks: unbalanced braces");
      }
      size_t close = s.find("}}", i + 2);
      if (close == std::string_view::npos) {
        throw Error("split_blocks: unbalanced braces");
      }
      std::string key(s.substr(i + 2, close - (i + 2)));
      if (key.empty()) throw Error("split_blocks: empty placeholder key");
      if (key.find('{') != std::string::npos ||
          key.find('}') != std::string::npos) {
        throw Error("split_blocks: brace inside placeholder key");
      }
      out.push_back({BlockKind::Placeholder, key, uint32_t(key.size())});
      i = close + 2;
      word_begin = i;
    } else if (c == '}') {
      throw Error("split_blocks: unbalanced braces");
    } else if (detail::is_break_char(c)) {
      flush_word(word_begin, i);
      out.push_back({BlockKind::Literal, std::string(1, c), 1});
      i++;
      word_begin = i;
    } else {
      i++;
    }
  }
  flush_word(word_begin, i);
  return out;
}

/// Zero-pads a literal block's content to the policy size. Placeholders pass
/// through untouched.
inline Block pad_block(const Block& b, const PaddingPolicy& policy) {
  if (b.kind == BlockKind::Placeholder) return b;
  if (b.content.size() != b.original_length) {
    throw Error("pad_block: block already padded");
  }
  uint32_t padded;
  try {
    padded = policy.padded_size(b.original_length);
  } catch (const Error&) {
    throw Error("pad_block: block \"" + b.content +
                "\" exceeds fixed maximum " + std::to_string(policy.parameter));
  }
  Block out = b;
  out.content.resize(padded, '\0');
  return out;
}

inline std::string strip_padding(const Block& b) {
  return b.content.substr(0, b.original_length);
}

namespace detail {

inline void append_segment(std::string& payload, const Block& unpadded,
                           const PaddingPolicy& policy) {
  Block padded = pad_block(unpadded, policy);
  uint32_t n = unpadded.original_length;
  payload.push_back(char(n >> 24));
  payload.push_back(char(n >> 16));
  payload.push_back(char(n >> 8));
  payload.push_back(char(n));
  payload += padded.content;
}

}  // namespace detail

/// Pads each literal individually, then merges maximal literal runs into one
/// block whose content is the concatenation of self-framing segments.
inline std::vector<Block> coalesce(const std::vector<Block>& blocks,
                                   const PaddingPolicy& policy) {
  std::vector<Block> out;
  size_t i = 0;
  while (i < blocks.size()) {
    if (blocks[i].kind == BlockKind::Placeholder) {
      out.push_back(blocks[i]);
      i++;
      continue;
    }
    Block merged{BlockKind::Literal, {}, 0};
    while (i < blocks.size() && blocks[i].kind == BlockKind::Literal) {
      detail::append_segment(merged.content, blocks[i], policy);
      merged.original_length += blocks[i].original_length;
      i++;
    }
    out.push_back(std::move(merged));
  }
  return out;
}

/// Recovers the original text from a merged literal payload. Trailing zero
/// bytes (zero-extension) are ignored.
inline std::string strip_segments(std::span<const uint8_t> payload,
                                  const PaddingPolicy& policy) {
  std::string out;
  size_t pos = 0;
  while (payload.size() - pos >= 4) {
    uint32_t len = uint32_t(payload[pos]) << 24 | uint32_t(payload[pos + 1]) << 16 |
                   uint32_t(payload[pos + 2]) << 8 | uint32_t(payload[pos + 3]);
    if (len == 0) break;
    uint32_t padded = policy.padded_size(len);
    if (payload.size() - pos - 4 < padded) {
      throw Error("strip_segments: truncated segment");
    }
    out.append(reinterpret_cast<const char*>(payload.data() + pos + 4), len);
    pos += 4 + padded;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Share vectors

struct SharedBlock {
  BlockKind kind = BlockKind::Literal;
  Bytes bytes;  // XOR share of the merged payload, or the cleartext key name
};

struct ShareVector {
  std::vector<SharedBlock> blocks;

  // Wire format: [count:4 BE] then per block [kind:1][length:4 BE][bytes].
  void encode(Writer& w) const {
    w.put_u32(uint32_t(blocks.size()));
    for (const auto& b : blocks) {
      w.put_u8(uint8_t(b.kind));
      w.put_bytes(b.bytes);
    }
  }

  static ShareVector decode(Reader& r) {
    ShareVector v;
    uint32_t n = r.get_u32();
    v.blocks.reserve(n);
    for (uint32_t i = 0; i < n; i++) {
      SharedBlock b;
      uint8_t k = r.get_u8();
      if (k > 1) throw Error("share vector: bad block kind");
      b.kind = BlockKind(k);
      b.bytes = r.get_bytes();
      v.blocks.push_back(std::move(b));
    }
    return v;
  }

  Bytes serialize() const {
    Writer w;
    encode(w);
    return w.take();
  }

  bool same_shape(const ShareVector& other) const {
    if (blocks.size() != other.blocks.size()) return false;
    for (size_t i = 0; i < blocks.size(); i++) {
      if (blocks[i].kind != other.blocks[i].kind) return false;
      if (blocks[i].bytes.size() != other.blocks[i].bytes.size()) return false;
      if (blocks[i].kind == BlockKind::Placeholder &&
          blocks[i].bytes != other.blocks[i].bytes) {
        return false;
      }
    }
    return true;
  }
};

/// The padded cleartext payload the shares of a value reconstruct to; test
/// oracle and input to plaintext comparisons.
inline Bytes padded_plaintext(std::string_view v, const PaddingPolicy& policy) {
  Bytes out;
  for (const Block& b : coalesce(split_blocks(v), policy)) {
    if (b.kind == BlockKind::Placeholder) continue;
    out.insert(out.end(), b.content.begin(), b.content.end());
  }
  return out;
}

/// Split, coalesce, pad, then XOR-share every literal block. Placeholder
/// blocks are copied in the clear into both vectors.
inline std::pair<ShareVector, ShareVector> share_value(
    std::string_view v, const PaddingPolicy& policy, Rng& rng) {
  ShareVector a, b;
  for (const Block& blk : coalesce(split_blocks(v), policy)) {
    if (blk.kind == BlockKind::Placeholder) {
      Bytes key = to_bytes(blk.content);
      a.blocks.push_back({BlockKind::Placeholder, key});
      b.blocks.push_back({BlockKind::Placeholder, std::move(key)});
    } else {
      auto [s0, s1] = share(to_bytes(blk.content), rng);
      a.blocks.push_back({BlockKind::Literal, std::move(s0.bytes)});
      b.blocks.push_back({BlockKind::Literal, std::move(s1.bytes)});
    }
  }
  return {std::move(a), std::move(b)};
}

/// XOR corresponding literal blocks, strip padding, concatenate. Fails on
/// shape mismatch or on a still-unsubstituted placeholder.
inline std::string reconstruct_value(const ShareVector& a, const ShareVector& b,
                                     const PaddingPolicy& policy) {
  if (a.blocks.size() != b.blocks.size()) {
    throw Error("reconstruct_value: share vector shape mismatch");
  }
  std::string out;
  for (size_t i = 0; i < a.blocks.size(); i++) {
    const auto& ba = a.blocks[i];
    const auto& bb = b.blocks[i];
    if (ba.kind != bb.kind) {
      throw Error("reconstruct_value: share vector shape mismatch");
    }
    if (ba.kind == BlockKind::Placeholder) {
      throw Error("reconstruct_value: unsubstituted key \"" +
                  to_string(ba.bytes) + "\"");
    }
    if (ba.bytes.size() != bb.bytes.size()) {
      throw Error("reconstruct_value: share vector shape mismatch");
    }
    out += strip_segments(xor_bytes(ba.bytes, bb.bytes), policy);
  }
  return out;
}

}  // namespace walnut

#endif  // WALNUT_BLOCKS_HPP
