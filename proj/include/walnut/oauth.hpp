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
// Token chains: a service-signed ciphertext binding the user's epoch-0
// access token to the current epoch's token, so the platform can keep
// presenting the original encrypted token while the user stays offline.
//
// Chain note (inside the ciphertext): [at_0:32][at_k:32][epoch:4 BE].
// Chain wire format: [ciphertext len:4][ciphertext][signature:64][epoch:4].

#ifndef WALNUT_OAUTH_HPP
#define WALNUT_OAUTH_HPP

#include "walnut/crypto.hpp"
#include "walnut/errors.hpp"

namespace walnut {

inline constexpr size_t kTokenBytes = 32;

struct EpochClock {
  uint32_t current = 0;
  void advance() { current++; }
};

/// 0 lifetime = the token never expires (the non-chain variants).
struct TokenPolicy {
  uint32_t access_lifetime_epochs = 0;
  uint32_t refresh_lifetime_epochs = 0;

  bool access_expired(uint32_t issue_epoch, const EpochClock& clock) const {
    return access_lifetime_epochs != 0 &&
           clock.current >= issue_epoch + access_lifetime_epochs;
  }
  bool refresh_expired(uint32_t issue_epoch, const EpochClock& clock) const {
    return refresh_lifetime_epochs != 0 &&
           clock.current >= issue_epoch + refresh_lifetime_epochs;
  }
};

struct TokenChain {
  Bytes ciphertext;
  Bytes signature;  // issuer's, over the ciphertext
  uint32_t epoch = 0;

  void encode(Writer& w) const {
    w.put_bytes(ciphertext);
    if (signature.size() != kSignatureBytes) {
      throw Error("token chain: bad signature size");
    }
    w.put_raw(signature);
    w.put_u32(epoch);
  }

  static TokenChain decode(Reader& r) {
    TokenChain c;
    c.ciphertext = r.get_bytes();
    c.signature = r.get_raw(kSignatureBytes);
    c.epoch = r.get_u32();
    return c;
  }
};

struct ChainNote {
  Bytes at0;
  Bytes atk;
  uint32_t epoch = 0;
};

namespace detail {

inline TokenChain seal_chain(const ChainNote& note, const KeyPair& issuer,
                             Rng& rng) {
  Writer w;
  w.put_raw(note.at0);
  w.put_raw(note.atk);
  w.put_u32(note.epoch);
  TokenChain chain;
  chain.ciphertext = pk_encrypt(issuer, w.bytes(), rng).bytes;
  chain.signature = sign(issuer, chain.ciphertext).bytes;
  chain.epoch = note.epoch;
  return chain;
}

}  // namespace detail

/// Verifies the issuer signature, decrypts, and cross-checks the clear epoch
/// against the sealed one.
inline ChainNote open_chain(const TokenChain& chain, const KeyPair& issuer) {
  if (!verify(issuer.public_key, chain.ciphertext, chain.signature)) {
    throw CodedError(ErrCode::BadSignature, "token chain: bad signature");
  }
  Bytes note;
  try {
    note = pk_decrypt(issuer, Ciphertext{chain.ciphertext, issuer.owner});
  } catch (const Error&) {
    throw CodedError(ErrCode::Malformed, "token chain: undecryptable");
  }
  if (note.size() != 2 * kTokenBytes + 4) {
    throw CodedError(ErrCode::Malformed, "token chain: bad note size");
  }
  ChainNote out;
  out.at0.assign(note.begin(), note.begin() + kTokenBytes);
  out.atk.assign(note.begin() + kTokenBytes, note.begin() + 2 * kTokenBytes);
  Reader r(std::span<const uint8_t>(note.data() + 2 * kTokenBytes, 4));
  out.epoch = r.get_u32();
  if (out.epoch != chain.epoch) {
    throw CodedError(ErrCode::BadToken, "token chain: epoch mismatch");
  }
  return out;
}

/// Epoch-0 chain: Enc(pk, at_0 || at_0), signed.
inline TokenChain make_initial_chain(std::span<const uint8_t> at0,
                                     const KeyPair& issuer, Rng& rng) {
  if (at0.size() != kTokenBytes) throw Error("token chain: bad token size");
  ChainNote note{Bytes(at0.begin(), at0.end()), Bytes(at0.begin(), at0.end()),
                 0};
  return detail::seal_chain(note, issuer, rng);
}

/// Carries at_0 forward from inside chain_k and seals (at_0 || at_next) for
/// the next epoch. The caller has already validated chain_k against the
/// presented tokens.
inline TokenChain advance_chain(const TokenChain& chain_k,
                                std::span<const uint8_t> at_next,
                                const KeyPair& issuer, Rng& rng) {
  ChainNote note = open_chain(chain_k, issuer);
  note.atk.assign(at_next.begin(), at_next.end());
  note.epoch = chain_k.epoch + 1;
  return detail::seal_chain(note, issuer, rng);
}

/// The per-request resolution step: signature valid, at_0 matches the
/// originally supplied (encrypted) token, and at_k is still live at the
/// current epoch. Returns at_k.
inline Bytes verify_and_resolve(const TokenChain& chain,
                                const Ciphertext& presented_token,
                                const KeyPair& issuer, const EpochClock& clock,
                                const TokenPolicy& policy) {
  ChainNote note = open_chain(chain, issuer);
  Bytes presented;
  try {
    presented = pk_decrypt(issuer, presented_token);
  } catch (const Error&) {
    throw CodedError(ErrCode::Malformed, "token: undecryptable");
  }
  if (presented != note.at0) {
    throw CodedError(ErrCode::BadToken, "token chain: at_0 mismatch");
  }
  if (policy.access_expired(note.epoch, clock)) {
    throw CodedError(ErrCode::Expired, "token chain: at_k expired");
  }
  return note.atk;
}

}  // namespace walnut

#endif  // WALNUT_OAUTH_HPP
