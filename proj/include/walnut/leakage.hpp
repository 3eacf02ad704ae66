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
// What a platform-side adversary is permitted to learn about an applet: per
// actInp key, the names of the contributing trigOut keys and the coalesced
// block positions where they are substituted, plus the filterCode and both
// endpoint URLs. Computable from the applet spec alone.

#ifndef WALNUT_LEAKAGE_HPP
#define WALNUT_LEAKAGE_HPP

#include <map>
#include <set>
#include <string>

#include "walnut/applet.hpp"

namespace walnut {

struct LeakageDescriptor {
  // K: actInp key -> contributing trigOut key names
  std::map<std::string, std::set<std::string>> contributing_keys;
  // P: actInp key -> substitution positions (block indices after coalescing)
  std::map<std::string, std::set<size_t>> positions;
  // P context: total coalesced block count per actInp key
  std::map<std::string, size_t> block_counts;
  // F: the filterCode and the two endpoints
  FilterCodeDescriptor filter;
  std::string trigger_endpoint;
  std::string action_endpoint;
};

inline LeakageDescriptor leakage_of(const AppletSpec& spec,
                                    const PaddingPolicy& policy) {
  LeakageDescriptor d;
  d.filter = spec.filter;
  d.trigger_endpoint = spec.trigger_endpoint;
  d.action_endpoint = spec.action_endpoint;
  for (const auto& [key, templ] : spec.act_inp_templates) {
    auto& keys = d.contributing_keys[key];
    auto& pos = d.positions[key];
    std::vector<Block> blocks = coalesce(split_blocks(templ), policy);
    d.block_counts[key] = blocks.size();
    for (size_t i = 0; i < blocks.size(); i++) {
      if (blocks[i].kind == BlockKind::Placeholder) {
        keys.insert(blocks[i].content);
        pos.insert(i);
      }
    }
  }
  if (spec.filter.kind == FilterKind::CustomSelect) {
    d.contributing_keys[spec.filter.target].insert(spec.filter.key);
    d.positions[spec.filter.target].insert(0);
    d.block_counts[spec.filter.target] = 1;
  }
  return d;
}

}  // namespace walnut

#endif  // WALNUT_LEAKAGE_HPP
