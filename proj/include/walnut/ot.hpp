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
// 1-of-2 oblivious transfer over ristretto255, semi-honest. Sender publishes
// S = yG once per session; per transfer the receiver sends R = cS + xG, a
// uniform group element either way, so the transcript carries no literal
// choice bit. Keys: sender derives from yR and y(R-S), receiver from xS.

#ifndef WALNUT_OT_HPP
#define WALNUT_OT_HPP

#include <sodium.h>

#include <utility>

#include "walnut/bytes.hpp"
#include "walnut/crypto.hpp"
#include "walnut/rng.hpp"

namespace walnut {

inline constexpr size_t kOtPointBytes = crypto_core_ristretto255_BYTES;  // 32

namespace detail {

inline Bytes ot_scalar(Rng& rng) {
  Bytes wide = rng.bytes(64);
  Bytes s(crypto_core_ristretto255_SCALARBYTES);
  crypto_core_ristretto255_scalar_reduce(s.data(), wide.data());
  return s;
}

inline Bytes ot_pad(std::span<const uint8_t> point, uint64_t index, size_t n) {
  Writer w;
  w.put_raw(point);
  w.put_u64(index);
  return derive_bytes(w.bytes(), "walnut.ot.pad", n);
}

}  // namespace detail

struct OtSenderSetup {
  Bytes y;        // secret scalar
  Bytes s_point;  // S = yG, sent to the receiver
};

inline OtSenderSetup ot_setup_sender(Rng& rng) {
  ensure_sodium();
  OtSenderSetup s;
  s.y = detail::ot_scalar(rng);
  s.s_point.resize(kOtPointBytes);
  if (crypto_scalarmult_ristretto255_base(s.s_point.data(), s.y.data()) != 0) {
    throw Error("ot: degenerate sender scalar");
  }
  return s;
}

struct OtChoice {
  Bytes x;        // secret scalar
  Bytes r_point;  // R, sent to the sender
};

inline OtChoice ot_choose(std::span<const uint8_t> s_point, int choice,
                          Rng& rng) {
  ensure_sodium();
  OtChoice c;
  c.x = detail::ot_scalar(rng);
  Bytes xg(kOtPointBytes);
  if (crypto_scalarmult_ristretto255_base(xg.data(), c.x.data()) != 0) {
    throw Error("ot: degenerate receiver scalar");
  }
  c.r_point.resize(kOtPointBytes);
  if (choice & 1) {
    if (crypto_core_ristretto255_add(c.r_point.data(), s_point.data(),
                                     xg.data()) != 0) {
      throw Error("ot: invalid sender point");
    }
  } else {
    c.r_point = std::move(xg);
  }
  return c;
}

/// Encrypts (m0, m1) so the receiver can open exactly its chosen one.
inline std::pair<Bytes, Bytes> ot_respond(const OtSenderSetup& setup,
                                          std::span<const uint8_t> r_point,
                                          std::span<const uint8_t> m0,
                                          std::span<const uint8_t> m1,
                                          uint64_t index) {
  if (m0.size() != m1.size()) throw Error("ot: message length mismatch");
  Bytes p0(kOtPointBytes), p1(kOtPointBytes), r_minus_s(kOtPointBytes);
  if (crypto_scalarmult_ristretto255(p0.data(), setup.y.data(),
                                     r_point.data()) != 0) {
    throw Error("ot: invalid receiver point");
  }
  if (crypto_core_ristretto255_sub(r_minus_s.data(), r_point.data(),
                                   setup.s_point.data()) != 0 ||
      crypto_scalarmult_ristretto255(p1.data(), setup.y.data(),
                                     r_minus_s.data()) != 0) {
    throw Error("ot: invalid receiver point");
  }
  return {xor_bytes(m0, detail::ot_pad(p0, index, m0.size())),
          xor_bytes(m1, detail::ot_pad(p1, index, m1.size()))};
}

inline Bytes ot_finish(const OtChoice& choice,
                       std::span<const uint8_t> s_point,
                       std::span<const uint8_t> e0,
                       std::span<const uint8_t> e1, int bit, uint64_t index) {
  if (e0.size() != e1.size()) throw Error("ot: message length mismatch");
  Bytes p(kOtPointBytes);
  if (crypto_scalarmult_ristretto255(p.data(), choice.x.data(),
                                     s_point.data()) != 0) {
    throw Error("ot: invalid sender point");
  }
  std::span<const uint8_t> e = (bit & 1) ? e1 : e0;
  return xor_bytes(e, detail::ot_pad(p, index, e.size()));
}

/// Single self-contained transfer; protocol flows use the split phases.
inline Bytes ot_transfer(std::span<const uint8_t> m0,
                         std::span<const uint8_t> m1, int choice, Rng& rng) {
  OtSenderSetup setup = ot_setup_sender(rng);
  OtChoice c = ot_choose(setup.s_point, choice, rng);
  auto [e0, e1] = ot_respond(setup, c.r_point, m0, m1, 0);
  return ot_finish(c, setup.s_point, e0, e1, choice, 0);
}

}  // namespace walnut

#endif  // WALNUT_OT_HPP
