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
// Share-domain string substitution. Each server runs the same purely local
// function over its half of trigOut and actInp; the XOR of the two results
// is the padded plaintext substitution. No bytes cross the server boundary.

#ifndef WALNUT_STRINGSUB_HPP
#define WALNUT_STRINGSUB_HPP

#include <map>
#include <string>

#include "walnut/blocks.hpp"

namespace walnut {

using KeyedShareMap = std::map<std::string, ShareVector>;

inline void encode_keyed_share_map(Writer& w, const KeyedShareMap& m) {
  w.put_u32(uint32_t(m.size()));
  for (const auto& [key, vec] : m) {
    w.put_str(key);
    vec.encode(w);
  }
}

inline KeyedShareMap decode_keyed_share_map(Reader& r) {
  KeyedShareMap m;
  uint32_t n = r.get_u32();
  for (uint32_t i = 0; i < n; i++) {
    std::string key = r.get_str();
    m[key] = ShareVector::decode(r);
  }
  return m;
}

/// Replaces every placeholder block in the actInp shares with the matching
/// trigOut share block and concatenates each value into a single literal
/// block. Local computation only; both servers call this with their own
/// halves.
inline KeyedShareMap string_sub(const KeyedShareMap& sh_trig_out,
                                const KeyedShareMap& sh_act_inp) {
  KeyedShareMap out;
  for (const auto& [key, vec] : sh_act_inp) {
    Bytes payload;
    for (const SharedBlock& b : vec.blocks) {
      if (b.kind == BlockKind::Literal) {
        payload.insert(payload.end(), b.bytes.begin(), b.bytes.end());
        continue;
      }
      std::string ref(to_string(b.bytes));
      auto it = sh_trig_out.find(ref);
      if (it == sh_trig_out.end()) {
        throw Error("string_sub: unknown placeholder key \"" + ref + "\"");
      }
      const ShareVector& tv = it->second;
      if (tv.blocks.size() != 1 || tv.blocks[0].kind != BlockKind::Literal) {
        throw Error("string_sub: trigOut value for \"" + ref +
                    "\" is not a single coalesced block");
      }
      payload.insert(payload.end(), tv.blocks[0].bytes.begin(),
                     tv.blocks[0].bytes.end());
    }
    ShareVector sv;
    sv.blocks.push_back({BlockKind::Literal, std::move(payload)});
    out[key] = std::move(sv);
  }
  return out;
}

/// Plaintext oracle: what a no-crypto platform would produce for the same
/// template and trigger output.
inline std::string plaintext_substitute(
    std::string_view templ, const std::map<std::string, std::string>& trig_out) {
  std::string out;
  for (const Block& b : split_blocks(templ)) {
    if (b.kind == BlockKind::Literal) {
      out += b.content;
      continue;
    }
    auto it = trig_out.find(b.content);
    if (it == trig_out.end()) {
      throw Error("plaintext_substitute: missing key \"" + b.content + "\"");
    }
    out += it->second;
  }
  return out;
}

/// Padded form of the oracle, for comparing against reconstructed share-domain
/// results before padding is stripped.
inline Bytes plaintext_substitute_padded(
    std::string_view templ, const std::map<std::string, std::string>& trig_out,
    const PaddingPolicy& policy) {
  Bytes out;
  for (const Block& b : coalesce(split_blocks(templ), policy)) {
    if (b.kind == BlockKind::Literal) {
      out.insert(out.end(), b.content.begin(), b.content.end());
    } else {
      auto it = trig_out.find(b.content);
      if (it == trig_out.end()) {
        throw Error("plaintext_substitute: missing key \"" + b.content + "\"");
      }
      Bytes padded = padded_plaintext(it->second, policy);
      out.insert(out.end(), padded.begin(), padded.end());
    }
  }
  return out;
}

}  // namespace walnut

#endif  // WALNUT_STRINGSUB_HPP
