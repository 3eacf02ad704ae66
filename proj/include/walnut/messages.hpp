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
// Wire protocol. Every request starts with [msg type:1]; replies are
// [0x00][payload] or [0xFF][error code:1]. Encodings are canonical
// big-endian; signed units (trigger request, trigger output, action request)
// expose their exact signable byte strings.

#ifndef WALNUT_MESSAGES_HPP
#define WALNUT_MESSAGES_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "walnut/errors.hpp"
#include "walnut/oauth.hpp"
#include "walnut/stringsub.hpp"

namespace walnut {

inline constexpr size_t kIdBytes = 16;  // TID / RID / session ids

enum class MsgType : uint8_t {
  TriggerSign = 0x01,
  TokenIssue = 0x02,
  AppletDeliver = 0x03,
  TriggerPoll = 0x04,
  ToutPush = 0x05,
  ToutToTee = 0x06,
  YaoForward = 0x07,
  ActionSubmit = 0x08,
  TokenRefresh = 0x09,
  ChainPush = 0x0a,
  TeeCollect = 0x0b,
  NoSecTriggerPoll = 0x20,
  NoSecActionSubmit = 0x21,
};

inline Bytes ok_response(std::span<const uint8_t> payload = {}) {
  Writer w;
  w.put_u8(0x00);
  w.put_raw(payload);
  return w.take();
}

inline Bytes err_response(ErrCode code) {
  Writer w;
  w.put_u8(0xff);
  w.put_u8(uint8_t(code));
  return w.take();
}

struct Response {
  bool ok = false;
  ErrCode code = ErrCode::None;
  Bytes payload;
};

inline Response parse_response(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  Response resp;
  uint8_t tag = r.get_u8();
  if (tag == 0x00) {
    resp.ok = true;
    resp.payload = r.get_raw(r.remaining());
  } else if (tag == 0xff) {
    resp.code = ErrCode(r.get_u8());
  } else {
    throw Error("response: bad envelope tag");
  }
  return resp;
}

// ---------------------------------------------------------------------------
// Shared small encodings

inline void encode_kv_map(Writer& w, const std::map<std::string, std::string>& m) {
  w.put_u32(uint32_t(m.size()));
  for (const auto& [k, v] : m) {
    w.put_str(k);
    w.put_str(v);
  }
}

inline std::map<std::string, std::string> decode_kv_map(Reader& r) {
  std::map<std::string, std::string> m;
  uint32_t n = r.get_u32();
  for (uint32_t i = 0; i < n; i++) {
    std::string k = r.get_str();
    m[k] = r.get_str();
  }
  return m;
}

inline void encode_opt_bytes(Writer& w, const std::optional<Bytes>& b) {
  w.put_u8(b ? 1 : 0);
  if (b) w.put_bytes(*b);
}

inline std::optional<Bytes> decode_opt_bytes(Reader& r) {
  if (r.get_u8() == 0) return std::nullopt;
  return r.get_bytes();
}

inline void encode_opt_chain(Writer& w, const std::optional<TokenChain>& c) {
  w.put_u8(c ? 1 : 0);
  if (c) c->encode(w);
}

inline std::optional<TokenChain> decode_opt_chain(Reader& r) {
  if (r.get_u8() == 0) return std::nullopt;
  return TokenChain::decode(r);
}

// ---------------------------------------------------------------------------
// Protocol units

/// T: the trigger half of an applet. The core bytes are what TS signs.
struct TriggerRequestT {
  std::string endpoint;
  Bytes c_at_ts;      // Enc(pk_TS, at-TS)
  Bytes c_trig_inp;   // Enc(pk_TS, trigInp blob)
  Bytes tid;          // 16 bytes

  void encode_core(Writer& w) const {
    w.put_str(endpoint);
    w.put_bytes(c_at_ts);
    w.put_bytes(c_trig_inp);
    if (tid.size() != kIdBytes) throw Error("trigger request: bad TID size");
    w.put_raw(tid);
  }

  Bytes core_bytes() const {
    Writer w;
    encode_core(w);
    return w.take();
  }

  static TriggerRequestT decode_core(Reader& r) {
    TriggerRequestT t;
    t.endpoint = r.get_str();
    t.c_at_ts = r.get_bytes();
    t.c_trig_inp = r.get_bytes();
    t.tid = r.get_raw(kIdBytes);
    return t;
  }
};

/// tout_b: RID/TID-stamped share bundle from the trigger service. The core
/// bytes are what σ_tout covers. Passive mode leaves RID/TID zeroed and the
/// signature absent.
struct TriggerOutput {
  Bytes rid;  // 16 bytes
  Bytes tid;  // 16 bytes
  KeyedShareMap shares;

  void encode_core(Writer& w) const {
    if (rid.size() != kIdBytes || tid.size() != kIdBytes) {
      throw Error("trigger output: bad id size");
    }
    w.put_raw(rid);
    w.put_raw(tid);
    encode_keyed_share_map(w, shares);
  }

  Bytes core_bytes() const {
    Writer w;
    encode_core(w);
    return w.take();
  }

  static TriggerOutput decode_core(Reader& r) {
    TriggerOutput t;
    t.rid = r.get_raw(kIdBytes);
    t.tid = r.get_raw(kIdBytes);
    t.shares = decode_keyed_share_map(r);
    return t;
  }
};

/// ain_b: the action-API input half submitted by server b. Core bytes are
/// what every TEE proof signs.
struct ActionRequestAin {
  Bytes rid;  // 16 bytes; zeroed in passive mode
  std::string endpoint;
  Bytes c_at_as;
  KeyedShareMap shares;

  void encode_core(Writer& w) const {
    if (rid.size() != kIdBytes) throw Error("action request: bad RID size");
    w.put_raw(rid);
    w.put_str(endpoint);
    w.put_bytes(c_at_as);
    encode_keyed_share_map(w, shares);
  }

  Bytes core_bytes() const {
    Writer w;
    encode_core(w);
    return w.take();
  }

  static ActionRequestAin decode_core(Reader& r) {
    ActionRequestAin a;
    a.rid = r.get_raw(kIdBytes);
    a.endpoint = r.get_str();
    a.c_at_as = r.get_bytes();
    a.shares = decode_keyed_share_map(r);
    return a;
  }
};

struct TeeProof {
  uint8_t server = 0;
  uint8_t tee = 0;
  Bytes sig;  // 64 bytes, over the ain core

  void encode(Writer& w) const {
    w.put_u8(server);
    w.put_u8(tee);
    if (sig.size() != kSignatureBytes) throw Error("proof: bad signature size");
    w.put_raw(sig);
  }

  static TeeProof decode(Reader& r) {
    TeeProof p;
    p.server = r.get_u8();
    p.tee = r.get_u8();
    p.sig = r.get_raw(kSignatureBytes);
    return p;
  }
};

// ---------------------------------------------------------------------------
// Full messages

struct TriggerPollMsg {
  TriggerRequestT t;
  std::optional<Bytes> sig_t;          // active mode
  std::optional<TokenChain> chain;     // chain variants

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::TriggerPoll));
    t.encode_core(w);
    encode_opt_bytes(w, sig_t);
    encode_opt_chain(w, chain);
    return w.take();
  }

  static TriggerPollMsg decode(Reader& r) {
    TriggerPollMsg m;
    m.t = TriggerRequestT::decode_core(r);
    m.sig_t = decode_opt_bytes(r);
    m.chain = decode_opt_chain(r);
    r.expect_end();
    return m;
  }
};

/// Reply payload of TriggerPoll, and body of the TS→M1 push.
struct SignedTout {
  TriggerOutput tout;
  std::optional<Bytes> sig;

  void encode(Writer& w) const {
    tout.encode_core(w);
    encode_opt_bytes(w, sig);
  }

  static SignedTout decode(Reader& r) {
    SignedTout s;
    s.tout = TriggerOutput::decode_core(r);
    s.sig = decode_opt_bytes(r);
    return s;
  }
};

/// TS -> M1 delivery of the counterpart's half; M1 matches it to an applet
/// by TID.
struct ToutPushMsg {
  SignedTout body;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::ToutPush));
    body.encode(w);
    return w.take();
  }

  static ToutPushMsg decode(Reader& r) {
    ToutPushMsg m;
    m.body = SignedTout::decode(r);
    r.expect_end();
    return m;
  }
};

struct ToutToTeeMsg {
  std::string applet_id;
  SignedTout body;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::ToutToTee));
    w.put_str(applet_id);
    body.encode(w);
    return w.take();
  }

  static ToutToTeeMsg decode(Reader& r) {
    ToutToTeeMsg m;
    m.applet_id = r.get_str();
    m.body = SignedTout::decode(r);
    r.expect_end();
    return m;
  }
};

/// Second step of active action-generation: asks an armed TEE to produce its
/// signed action request share.
struct TeeCollectMsg {
  std::string applet_id;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::TeeCollect));
    w.put_str(applet_id);
    return w.take();
  }

  static TeeCollectMsg decode(Reader& r) {
    TeeCollectMsg m;
    m.applet_id = r.get_str();
    r.expect_end();
    return m;
  }
};

/// TEE's answer to TeeCollect: its signed action request share.
struct TeeAinReply {
  ActionRequestAin ain;
  Bytes proof_sig;

  Bytes encode() const {
    Writer w;
    ain.encode_core(w);
    w.put_raw(proof_sig);
    return w.take();
  }

  static TeeAinReply decode(Reader& r) {
    TeeAinReply a;
    a.ain = ActionRequestAin::decode_core(r);
    a.proof_sig = r.get_raw(kSignatureBytes);
    r.expect_end();
    return a;
  }
};

struct ActionSubmitMsg {
  uint8_t server = 0;
  uint8_t tee_index = 0xff;  // 0xff in passive mode
  ActionRequestAin ain;
  std::vector<TeeProof> proofs;
  std::optional<TokenChain> chain;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::ActionSubmit));
    w.put_u8(server);
    w.put_u8(tee_index);
    ain.encode_core(w);
    w.put_u8(uint8_t(proofs.size()));
    for (const TeeProof& p : proofs) p.encode(w);
    encode_opt_chain(w, chain);
    return w.take();
  }

  static ActionSubmitMsg decode(Reader& r) {
    ActionSubmitMsg m;
    m.server = r.get_u8();
    m.tee_index = r.get_u8();
    m.ain = ActionRequestAin::decode_core(r);
    uint8_t n = r.get_u8();
    for (uint8_t i = 0; i < n; i++) m.proofs.push_back(TeeProof::decode(r));
    m.chain = decode_opt_chain(r);
    r.expect_end();
    return m;
  }
};

struct TokenIssueReply {
  Bytes at, rt;
  TokenChain chain;

  Bytes encode() const {
    Writer w;
    w.put_bytes(at);
    w.put_bytes(rt);
    chain.encode(w);
    return w.take();
  }

  static TokenIssueReply decode(Reader& r) {
    TokenIssueReply t;
    t.at = r.get_bytes();
    t.rt = r.get_bytes();
    t.chain = TokenChain::decode(r);
    r.expect_end();
    return t;
  }
};

struct TokenRefreshMsg {
  std::string applet_id;
  Bytes c_at;  // Enc(pk_svc, at_k)
  Bytes c_rt;  // Enc(pk_svc, rt_k)
  TokenChain chain;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::TokenRefresh));
    w.put_str(applet_id);
    w.put_bytes(c_at);
    w.put_bytes(c_rt);
    chain.encode(w);
    return w.take();
  }

  static TokenRefreshMsg decode(Reader& r) {
    TokenRefreshMsg m;
    m.applet_id = r.get_str();
    m.c_at = r.get_bytes();
    m.c_rt = r.get_bytes();
    m.chain = TokenChain::decode(r);
    r.expect_end();
    return m;
  }
};

struct TokenRefreshReply {
  Bytes c_at, c_rt;  // next epoch, encrypted to the service itself
  TokenChain chain;

  Bytes encode() const {
    Writer w;
    w.put_bytes(c_at);
    w.put_bytes(c_rt);
    chain.encode(w);
    return w.take();
  }

  static TokenRefreshReply decode(Reader& r) {
    TokenRefreshReply m;
    m.c_at = r.get_bytes();
    m.c_rt = r.get_bytes();
    m.chain = TokenChain::decode(r);
    r.expect_end();
    return m;
  }
};

struct ChainPushMsg {
  std::string applet_id;
  uint8_t which = 0;  // 0: trigger service chain, 1: action service chain
  TokenChain chain;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::ChainPush));
    w.put_str(applet_id);
    w.put_u8(which);
    chain.encode(w);
    return w.take();
  }

  static ChainPushMsg decode(Reader& r) {
    ChainPushMsg m;
    m.applet_id = r.get_str();
    m.which = r.get_u8();
    m.chain = TokenChain::decode(r);
    r.expect_end();
    return m;
  }
};

/// Garbled-session frame routed through the untrusted machines.
struct YaoForwardMsg {
  Party dest = Party::M1;
  std::string applet_id;
  std::string key;  // actInp key this session computes
  Bytes frame;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::YaoForward));
    w.put_u8(uint8_t(dest));
    w.put_str(applet_id);
    w.put_str(key);
    w.put_bytes(frame);
    return w.take();
  }

  static YaoForwardMsg decode(Reader& r) {
    YaoForwardMsg m;
    m.dest = Party(r.get_u8());
    m.applet_id = r.get_str();
    m.key = r.get_str();
    m.frame = r.get_bytes();
    r.expect_end();
    return m;
  }
};

// ---------------------------------------------------------------------------
// NoSec baseline messages: plaintext everything, single platform machine.

struct NoSecTriggerPollMsg {
  std::string endpoint;
  Bytes at;
  std::map<std::string, std::string> trig_inp;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::NoSecTriggerPoll));
    w.put_str(endpoint);
    w.put_bytes(at);
    encode_kv_map(w, trig_inp);
    return w.take();
  }

  static NoSecTriggerPollMsg decode(Reader& r) {
    NoSecTriggerPollMsg m;
    m.endpoint = r.get_str();
    m.at = r.get_bytes();
    m.trig_inp = decode_kv_map(r);
    r.expect_end();
    return m;
  }
};

struct NoSecActionSubmitMsg {
  std::string endpoint;
  Bytes at;
  std::map<std::string, std::string> act_inp;

  Bytes encode() const {
    Writer w;
    w.put_u8(uint8_t(MsgType::NoSecActionSubmit));
    w.put_str(endpoint);
    w.put_bytes(at);
    encode_kv_map(w, act_inp);
    return w.take();
  }

  static NoSecActionSubmitMsg decode(Reader& r) {
    NoSecActionSubmitMsg m;
    m.endpoint = r.get_str();
    m.at = r.get_bytes();
    m.act_inp = decode_kv_map(r);
    r.expect_end();
    return m;
  }
};

}  // namespace walnut

#endif  // WALNUT_MESSAGES_HPP
