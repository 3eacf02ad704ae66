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

#ifndef WALNUT_PARTY_HPP
#define WALNUT_PARTY_HPP

#include <array>
#include <cstdint>
#include <string>

#include "walnut/bytes.hpp"

namespace walnut {

// The deployment has two platform servers. Server b holds one untrusted
// machine M_b and three simulated TEEs; TS and AS are the external services.
enum class Party : uint8_t {
  User = 0,
  M0,
  M1,
  Tee00,  // server 0, TEE 0
  Tee01,
  Tee02,
  Tee10,  // server 1, TEE 0
  Tee11,
  Tee12,
  TS,
  AS,
};

inline constexpr std::array<Party, 11> kAllParties = {
    Party::User,  Party::M0,    Party::M1,    Party::Tee00,
    Party::Tee01, Party::Tee02, Party::Tee10, Party::Tee11,
    Party::Tee12, Party::TS,    Party::AS,
};

inline const char* party_name(Party p) {
  switch (p) {
    case Party::User: return "user";
    case Party::M0: return "m0";
    case Party::M1: return "m1";
    case Party::Tee00: return "t0_0";
    case Party::Tee01: return "t0_1";
    case Party::Tee02: return "t0_2";
    case Party::Tee10: return "t1_0";
    case Party::Tee11: return "t1_1";
    case Party::Tee12: return "t1_2";
    case Party::TS: return "ts";
    case Party::AS: return "as";
  }
  return "?";
}

inline bool is_platform(Party p) {
  return p != Party::User && p != Party::TS && p != Party::AS;
}

// -1 for non-platform parties.
inline int server_of(Party p) {
  switch (p) {
    case Party::M0:
    case Party::Tee00:
    case Party::Tee01:
    case Party::Tee02:
      return 0;
    case Party::M1:
    case Party::Tee10:
    case Party::Tee11:
    case Party::Tee12:
      return 1;
    default:
      return -1;
  }
}

inline Party machine_of_server(int b) { return b == 0 ? Party::M0 : Party::M1; }

inline Party tee_party(int b, int i) {
  static constexpr Party t[2][3] = {
      {Party::Tee00, Party::Tee01, Party::Tee02},
      {Party::Tee10, Party::Tee11, Party::Tee12},
  };
  if (b < 0 || b > 1 || i < 0 || i > 2) throw Error("tee_party: bad index");
  return t[b][i];
}

}  // namespace walnut

#endif  // WALNUT_PARTY_HPP
