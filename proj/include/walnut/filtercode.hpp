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

#ifndef WALNUT_FILTERCODE_HPP
#define WALNUT_FILTERCODE_HPP

#include <string>
#include <vector>

#include "walnut/blocks.hpp"
#include "walnut/bytes.hpp"

namespace walnut {

enum class FilterKind : uint8_t { PassAround = 0, StringSub = 1, CustomSelect = 2 };

inline const char* filter_kind_name(FilterKind k) {
  switch (k) {
    case FilterKind::PassAround: return "pass_around";
    case FilterKind::StringSub: return "string_sub";
    case FilterKind::CustomSelect: return "custom_select";
  }
  return "?";
}

/// The applet's filterCode. PassAround and StringSub run as share-domain
/// string substitution; CustomSelect compares one trigOut value against case
/// constants inside a garbled circuit and selects among templates.
struct FilterCodeDescriptor {
  FilterKind kind = FilterKind::StringSub;

  struct Case {
    std::string match;     // trigOut value this case fires on
    std::string templ;     // selected output (placeholder-free)
  };

  // CustomSelect only.
  std::string key;         // trigOut key the selection is keyed on
  std::string target;      // actInp key the selected template becomes
  std::vector<Case> cases;
  std::string default_templ;

  void validate() const {
    if (kind != FilterKind::CustomSelect) return;
    if (key.empty()) throw Error("filterCode: custom select needs a key");
    if (target.empty()) throw Error("filterCode: custom select needs a target");
    if (cases.empty()) throw Error("filterCode: custom select needs a case");
    for (const Case& c : cases) {
      for (const Block& b : split_blocks(c.templ)) {
        if (b.kind == BlockKind::Placeholder) {
          throw Error("filterCode: select templates must be placeholder-free");
        }
      }
    }
    for (const Block& b : split_blocks(default_templ)) {
      if (b.kind == BlockKind::Placeholder) {
        throw Error("filterCode: select templates must be placeholder-free");
      }
    }
  }

  /// Plaintext semantics, used by the NoSec path and as the test oracle.
  std::string select_plain(const std::string& value) const {
    for (const Case& c : cases) {
      if (c.match == value) return c.templ;
    }
    return default_templ;
  }

  void encode(Writer& w) const {
    w.put_u8(uint8_t(kind));
    w.put_str(key);
    w.put_str(target);
    w.put_u32(uint32_t(cases.size()));
    for (const Case& c : cases) {
      w.put_str(c.match);
      w.put_str(c.templ);
    }
    w.put_str(default_templ);
  }

  static FilterCodeDescriptor decode(Reader& r) {
    FilterCodeDescriptor fc;
    uint8_t k = r.get_u8();
    if (k > 2) throw Error("filterCode: bad kind");
    fc.kind = FilterKind(k);
    fc.key = r.get_str();
    fc.target = r.get_str();
    uint32_t n = r.get_u32();
    for (uint32_t i = 0; i < n; i++) {
      Case c;
      c.match = r.get_str();
      c.templ = r.get_str();
      fc.cases.push_back(std::move(c));
    }
    fc.default_templ = r.get_str();
    return fc;
  }
};

}  // namespace walnut

#endif  // WALNUT_FILTERCODE_HPP
