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

#ifndef WALNUT_ERRORS_HPP
#define WALNUT_ERRORS_HPP

#include "walnut/bytes.hpp"

namespace walnut {

/// One-byte rejection codes carried on the wire as [0xFF][code].
enum class ErrCode : uint8_t {
  None = 0,
  BadSignature = 1,
  BadToken = 2,
  Expired = 3,
  Replay = 4,
  ProofFail = 5,
  Malformed = 6,
  Mismatch = 7,
};

inline const char* err_name(ErrCode c) {
  switch (c) {
    case ErrCode::None: return "ok";
    case ErrCode::BadSignature: return "bad-signature";
    case ErrCode::BadToken: return "bad-token";
    case ErrCode::Expired: return "expired";
    case ErrCode::Replay: return "replay";
    case ErrCode::ProofFail: return "proof-fail";
    case ErrCode::Malformed: return "malformed";
    case ErrCode::Mismatch: return "mismatch";
  }
  return "?";
}

/// An Error that maps onto a wire rejection code.
struct CodedError : Error {
  ErrCode code;
  CodedError(ErrCode c, const std::string& what) : Error(what), code(c) {}
};

}  // namespace walnut

#endif  // WALNUT_ERRORS_HPP
