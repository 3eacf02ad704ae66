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

#ifndef WALNUT_RNG_HPP
#define WALNUT_RNG_HPP

#include <sodium.h>

#include <array>
#include <cstdint>
#include <mutex>

#include "walnut/bytes.hpp"

namespace walnut {

inline void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error("sodium_init failed");
  });
}

/// Single injectable randomness source. Everything that draws randomness
/// (shares, keys, nonces, wire labels, OT scalars) takes an Rng&, so a run
/// can be made reproducible by injecting a SeededRng.
class Rng {
 public:
  virtual ~Rng() = default;
  virtual void fill(uint8_t* out, size_t n) = 0;

  Bytes bytes(size_t n) {
    Bytes b(n);
    if (n > 0) fill(b.data(), n);
    return b;
  }

  uint64_t u64() {
    uint64_t v;
    fill(reinterpret_cast<uint8_t*>(&v), sizeof v);
    return v;
  }

  // Uniform in [0, n). Modulo bias is irrelevant at the sizes used here
  // (workload draws, not key material).
  uint64_t below(uint64_t n) { return n == 0 ? 0 : u64() % n; }
};

/// OS CSPRNG. Production mode.
class SystemRng final : public Rng {
 public:
  SystemRng() { ensure_sodium(); }
  void fill(uint8_t* out, size_t n) override { randombytes_buf(out, n); }
};

/// Deterministic ChaCha20-based stream, keyed from a 64-bit seed.
class SeededRng final : public Rng {
 public:
  explicit SeededRng(uint64_t seed) {
    ensure_sodium();
    std::array<uint8_t, 8> s{};
    for (int i = 0; i < 8; i++) s[i] = uint8_t(seed >> (8 * i));
    crypto_generichash(key_.data(), key_.size(), s.data(), s.size(), nullptr, 0);
  }

  void fill(uint8_t* out, size_t n) override {
    std::array<uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
    for (int i = 0; i < 8; i++) nonce[i] = uint8_t(counter_ >> (8 * i));
    counter_++;
    crypto_stream_chacha20(out, n, nonce.data(), key_.data());
  }

 private:
  std::array<uint8_t, crypto_stream_chacha20_KEYBYTES> key_{};
  uint64_t counter_ = 0;
};

}  // namespace walnut

#endif  // WALNUT_RNG_HPP
