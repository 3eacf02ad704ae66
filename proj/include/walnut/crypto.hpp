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
// Core primitives: 2-out-of-2 XOR secret sharing, elliptic-curve integrated
// encryption (X25519 + XChaCha20-Poly1305), and 64-byte Ed25519 signatures.

#ifndef WALNUT_CRYPTO_HPP
#define WALNUT_CRYPTO_HPP

#include <sodium.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "walnut/bytes.hpp"
#include "walnut/party.hpp"
#include "walnut/rng.hpp"

namespace walnut {

inline constexpr size_t kSignatureBytes = 64;
inline constexpr size_t kEncPkBytes = crypto_box_PUBLICKEYBYTES;   // 32
inline constexpr size_t kEncSkBytes = crypto_box_SECRETKEYBYTES;   // 32
inline constexpr size_t kSigPkBytes = crypto_sign_PUBLICKEYBYTES;  // 32
inline constexpr size_t kSigSkBytes = crypto_sign_SECRETKEYBYTES;  // 64

struct Share {
  Bytes bytes;
  size_t length() const { return bytes.size(); }
};

struct Ciphertext {
  Bytes bytes;
  Party recipient = Party::User;
};

struct Signature {
  Bytes bytes;  // always 64
  Party signer = Party::User;
};

/// A party identity: one encryption keypair and one signing keypair, exposed
/// as opaque concatenated blobs. public_key = enc_pk(32) || sig_pk(32);
/// secret_key = enc_sk(32) || sig_sk(64).
struct KeyPair {
  Party owner = Party::User;
  Bytes public_key;
  Bytes secret_key;

  std::span<const uint8_t> enc_pk() const {
    return {public_key.data(), kEncPkBytes};
  }
  std::span<const uint8_t> sig_pk() const {
    return {public_key.data() + kEncPkBytes, kSigPkBytes};
  }
  std::span<const uint8_t> enc_sk() const {
    return {secret_key.data(), kEncSkBytes};
  }
  std::span<const uint8_t> sig_sk() const {
    return {secret_key.data() + kEncSkBytes, kSigSkBytes};
  }
};

inline KeyPair generate_keypair(Party owner, Rng& rng) {
  ensure_sodium();
  Bytes enc_seed = rng.bytes(crypto_box_SEEDBYTES);
  Bytes sig_seed = rng.bytes(crypto_sign_SEEDBYTES);
  KeyPair kp;
  kp.owner = owner;
  kp.public_key.resize(kEncPkBytes + kSigPkBytes);
  kp.secret_key.resize(kEncSkBytes + kSigSkBytes);
  crypto_box_seed_keypair(kp.public_key.data(), kp.secret_key.data(),
                          enc_seed.data());
  crypto_sign_seed_keypair(kp.public_key.data() + kEncPkBytes,
                           kp.secret_key.data() + kEncSkBytes,
                           sig_seed.data());
  return kp;
}

// ---------------------------------------------------------------------------
// XOR secret sharing

inline std::pair<Share, Share> share(std::span<const uint8_t> secret,
                                     Rng& rng) {
  Share k{rng.bytes(secret.size())};
  Share k2{xor_bytes(k.bytes, secret)};
  return {std::move(k), std::move(k2)};
}

inline Bytes reconstruct(const Share& k, const Share& k2) {
  if (k.length() != k2.length()) {
    throw Error("reconstruct: share length mismatch");
  }
  return xor_bytes(k.bytes, k2.bytes);
}

// ---------------------------------------------------------------------------
// Public-key authenticated encryption.
//
// Ciphertext layout: ephemeral_pk(32) || aead(m). The AEAD key and nonce are
// derived from the ECDH shared point and both public keys; any flipped byte
// fails the Poly1305 tag check.

inline constexpr size_t kCiphertextOverhead =
    kEncPkBytes + crypto_aead_xchacha20poly1305_ietf_ABYTES;  // 32 + 16

namespace detail {

inline void ecies_key_nonce(std::span<const uint8_t> shared,
                            std::span<const uint8_t> epk,
                            std::span<const uint8_t> rpk, uint8_t* key,
                            uint8_t* nonce) {
  Bytes km = concat(shared, epk);
  km = concat(km, rpk);
  crypto_generichash(key, crypto_aead_xchacha20poly1305_ietf_KEYBYTES,
                     km.data(), km.size(), nullptr, 0);
  Bytes nm = concat(epk, rpk);
  crypto_generichash(nonce, crypto_aead_xchacha20poly1305_ietf_NPUBBYTES,
                     nm.data(), nm.size(), nullptr, 0);
}

}  // namespace detail

inline Ciphertext pk_encrypt(const KeyPair& recipient,
                             std::span<const uint8_t> plaintext, Rng& rng) {
  ensure_sodium();
  Bytes eseed = rng.bytes(crypto_box_SEEDBYTES);
  Bytes epk(kEncPkBytes), esk(kEncSkBytes);
  crypto_box_seed_keypair(epk.data(), esk.data(), eseed.data());

  Bytes shared(crypto_scalarmult_BYTES);
  if (crypto_scalarmult(shared.data(), esk.data(),
                        recipient.enc_pk().data()) != 0) {
    throw Error("pk_encrypt: bad recipient key");
  }

  uint8_t key[crypto_aead_xchacha20poly1305_ietf_KEYBYTES];
  uint8_t nonce[crypto_aead_xchacha20poly1305_ietf_NPUBBYTES];
  detail::ecies_key_nonce(shared, epk, recipient.enc_pk(), key, nonce);

  Ciphertext ct;
  ct.recipient = recipient.owner;
  ct.bytes.resize(kEncPkBytes + plaintext.size() +
                  crypto_aead_xchacha20poly1305_ietf_ABYTES);
  std::copy(epk.begin(), epk.end(), ct.bytes.begin());
  unsigned long long clen = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(
      ct.bytes.data() + kEncPkBytes, &clen, plaintext.data(), plaintext.size(),
      nullptr, 0, nullptr, nonce, key);
  return ct;
}

inline Bytes pk_decrypt(const KeyPair& recipient, const Ciphertext& ct) {
  ensure_sodium();
  if (ct.bytes.size() < kCiphertextOverhead) {
    throw Error("pk_decrypt: ciphertext too short");
  }
  std::span<const uint8_t> epk(ct.bytes.data(), kEncPkBytes);

  Bytes shared(crypto_scalarmult_BYTES);
  if (crypto_scalarmult(shared.data(), recipient.enc_sk().data(),
                        epk.data()) != 0) {
    throw Error("pk_decrypt: bad ephemeral key");
  }

  uint8_t key[crypto_aead_xchacha20poly1305_ietf_KEYBYTES];
  uint8_t nonce[crypto_aead_xchacha20poly1305_ietf_NPUBBYTES];
  detail::ecies_key_nonce(shared, epk, recipient.enc_pk(), key, nonce);

  Bytes out(ct.bytes.size() - kCiphertextOverhead);
  unsigned long long mlen = 0;
  if (crypto_aead_xchacha20poly1305_ietf_decrypt(
          out.data(), &mlen, nullptr, ct.bytes.data() + kEncPkBytes,
          ct.bytes.size() - kEncPkBytes, nullptr, 0, nonce, key) != 0) {
    throw Error("pk_decrypt: authentication failed");
  }
  out.resize(mlen);
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic key/stream derivation (masks, OT pads). Not a wire format.

inline Bytes derive_bytes(std::span<const uint8_t> material,
                          std::string_view context, size_t n) {
  ensure_sodium();
  uint8_t key[crypto_stream_chacha20_KEYBYTES];
  crypto_generichash(key, sizeof key, material.data(), material.size(),
                     reinterpret_cast<const unsigned char*>(context.data()),
                     std::min<size_t>(context.size(), 64));
  Bytes out(n);
  uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
  if (n > 0) crypto_stream_chacha20(out.data(), n, nonce, key);
  return out;
}

// ---------------------------------------------------------------------------
// Signatures

inline Signature sign(const KeyPair& signer, std::span<const uint8_t> msg) {
  ensure_sodium();
  Signature sig;
  sig.signer = signer.owner;
  sig.bytes.resize(kSignatureBytes);
  crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(),
                       signer.sig_sk().data());
  return sig;
}

/// True on a valid signature, false on anything else (wrong key, tampered
/// message, malformed or wrong-size signature bytes).
inline bool verify(std::span<const uint8_t> signer_public_key,
                   std::span<const uint8_t> msg,
                   std::span<const uint8_t> sig) {
  ensure_sodium();
  if (sig.size() != kSignatureBytes) return false;
  if (signer_public_key.size() < kEncPkBytes + kSigPkBytes) return false;
  return crypto_sign_verify_detached(
             sig.data(), msg.data(), msg.size(),
             signer_public_key.data() + kEncPkBytes) == 0;
}

inline bool verify(const KeyPair& signer, std::span<const uint8_t> msg,
                   const Signature& sig) {
  return verify(signer.public_key, msg, sig.bytes);
}

// ---------------------------------------------------------------------------
// Key files: {deployment}/{party}/pk and {deployment}/{party}/sk, raw bytes.

class KeyStore {
 public:
  KeyStore() = default;

  static KeyStore generate(Rng& rng) {
    KeyStore ks;
    for (Party p : kAllParties) ks.keys_[p] = generate_keypair(p, rng);
    return ks;
  }

  const KeyPair& of(Party p) const {
    auto it = keys_.find(p);
    if (it == keys_.end()) throw Error("keystore: no keys for party");
    return it->second;
  }

  /// Public half only, as the other parties would know it.
  Bytes public_key_of(Party p) const { return of(p).public_key; }

  void save(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    for (const auto& [p, kp] : keys_) {
      fs::path d = dir / party_name(p);
      fs::create_directories(d);
      write_file(d / "pk", kp.public_key);
      write_file(d / "sk", kp.secret_key);
    }
  }

  static KeyStore load(const std::filesystem::path& dir) {
    KeyStore ks;
    for (Party p : kAllParties) {
      KeyPair kp;
      kp.owner = p;
      kp.public_key = read_file(dir / party_name(p) / "pk");
      kp.secret_key = read_file(dir / party_name(p) / "sk");
      if (kp.public_key.size() != kEncPkBytes + kSigPkBytes ||
          kp.secret_key.size() != kEncSkBytes + kSigSkBytes) {
        throw Error(std::string("keystore: bad key file size for ") +
                    party_name(p));
      }
      ks.keys_[p] = std::move(kp);
    }
    return ks;
  }

 private:
  static void write_file(const std::filesystem::path& f, const Bytes& b) {
    std::ofstream out(f, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + f.string());
    out.write(reinterpret_cast<const char*>(b.data()),
              std::streamsize(b.size()));
  }

  static Bytes read_file(const std::filesystem::path& f) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error("cannot read " + f.string());
    Bytes b((std::istreambuf_iterator<char>(in)),
            std::istreambuf_iterator<char>());
    return b;
  }

  std::map<Party, KeyPair> keys_;
};

}  // namespace walnut

#endif  // WALNUT_CRYPTO_HPP
