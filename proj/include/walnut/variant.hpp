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

#ifndef WALNUT_VARIANT_HPP
#define WALNUT_VARIANT_HPP

#include <array>
#include <string>

#include "walnut/bytes.hpp"

namespace walnut {

/// The system ladder. Each variant adds one mechanism on top of the previous:
/// NoSec (plaintext baseline) -> W-Yao (confidentiality, Yao for everything)
/// -> W-C (local string substitution) -> W-I (signatures + TEEs) -> W (token
/// chains).
struct Variant {
  enum class Kind : uint8_t { NoSec = 0, WYao = 1, WC = 2, WI = 3, W = 4 };
  Kind kind = Kind::W;

  bool confidentiality() const { return kind != Kind::NoSec; }
  bool string_sub_enabled() const {
    return kind == Kind::WC || kind == Kind::WI || kind == Kind::W;
  }
  bool integrity() const { return kind == Kind::WI || kind == Kind::W; }
  bool token_chains() const { return kind == Kind::W; }

  const char* name() const {
    switch (kind) {
      case Kind::NoSec: return "nosec";
      case Kind::WYao: return "w-yao";
      case Kind::WC: return "w-c";
      case Kind::WI: return "w-i";
      case Kind::W: return "w";
    }
    return "?";
  }

  static Variant parse(const std::string& s) {
    for (Variant v : all()) {
      if (s == v.name()) return v;
    }
    throw Error("unknown variant \"" + s + "\"");
  }

  static std::array<Variant, 5> all() {
    return {Variant{Kind::NoSec}, Variant{Kind::WYao}, Variant{Kind::WC},
            Variant{Kind::WI}, Variant{Kind::W}};
  }
};

}  // namespace walnut

#endif  // WALNUT_VARIANT_HPP
