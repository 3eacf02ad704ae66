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
// Mock trigger and action services. The API-specific part is a tiny registry
// of mock endpoints (a weather trigger, an email action); everything else is
// the API-agnostic shim: token decryption and validation, trigOut sharing
// and signing, proof checking, share reconstruction, replay defense, and the
// OAuth issue/refresh endpoints.

#ifndef WALNUT_SERVICES_HPP
#define WALNUT_SERVICES_HPP

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "walnut/messages.hpp"
#include "walnut/transport.hpp"
#include "walnut/variant.hpp"

namespace walnut {

/// Everything a deployment's components share.
struct DeployContext {
  KeyStore* keys = nullptr;
  Transport* transport = nullptr;
  Rng* rng = nullptr;
  EpochClock clock;
  PaddingPolicy pad = PaddingPolicy::next_power_of_two();
  Variant variant;
  TokenPolicy token_policy;
  std::filesystem::path state_dir;
};

// ---------------------------------------------------------------------------
// Persisted service state

class TokenRegistry {
 public:
  TokenRegistry() = default;
  explicit TokenRegistry(std::filesystem::path file) : file_(std::move(file)) {
    load();
  }

  Bytes mint_access(Rng& rng, uint32_t epoch) {
    Bytes t = rng.bytes(kTokenBytes);
    access_[t] = epoch;
    persist();
    return t;
  }

  Bytes mint_refresh(Rng& rng, uint32_t epoch) {
    Bytes t = rng.bytes(kTokenBytes);
    refresh_[t] = epoch;
    persist();
    return t;
  }

  std::optional<uint32_t> access_epoch(const Bytes& t) const {
    auto it = access_.find(t);
    if (it == access_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<uint32_t> refresh_epoch(const Bytes& t) const {
    auto it = refresh_.find(t);
    if (it == refresh_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<Bytes> access_tokens() const {
    std::vector<Bytes> out;
    for (const auto& [t, e] : access_) out.push_back(t);
    return out;
  }

 private:
  void persist() const {
    if (file_.empty()) return;
    Writer w;
    w.put_u32(uint32_t(access_.size()));
    for (const auto& [t, e] : access_) {
      w.put_bytes(t);
      w.put_u32(e);
    }
    w.put_u32(uint32_t(refresh_.size()));
    for (const auto& [t, e] : refresh_) {
      w.put_bytes(t);
      w.put_u32(e);
    }
    std::ofstream out(file_, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(w.bytes().data()),
              std::streamsize(w.bytes().size()));
  }

  void load() {
    std::ifstream in(file_, std::ios::binary);
    if (!in) return;
    Bytes b((std::istreambuf_iterator<char>(in)),
            std::istreambuf_iterator<char>());
    Reader r(b);
    uint32_t na = r.get_u32();
    for (uint32_t i = 0; i < na; i++) {
      Bytes t = r.get_bytes();
      access_[t] = r.get_u32();
    }
    uint32_t nr = r.get_u32();
    for (uint32_t i = 0; i < nr; i++) {
      Bytes t = r.get_bytes();
      refresh_[t] = r.get_u32();
    }
  }

  std::filesystem::path file_;
  std::map<Bytes, uint32_t> access_;   // token -> issue epoch
  std::map<Bytes, uint32_t> refresh_;
};

/// Append-only store of RIDs the action service has acted on. Survives
/// restarts, so replayed requests stay rejected.
class RidStore {
 public:
  RidStore() = default;
  explicit RidStore(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) seen_.insert(line);
    }
  }

  bool contains(const Bytes& rid) const { return seen_.count(to_hex(rid)) > 0; }

  void insert(const Bytes& rid) {
    std::string h = to_hex(rid);
    if (!seen_.insert(h).second) return;
    if (file_.empty()) return;
    std::ofstream out(file_, std::ios::app);
    out << h << "\n";
  }

  size_t size() const { return seen_.size(); }

 private:
  std::filesystem::path file_;
  std::set<std::string> seen_;
};

struct OutboxEntry {
  std::string endpoint;
  std::map<std::string, std::string> fields;

  bool operator==(const OutboxEntry&) const = default;
};

/// The action effects, one line per executed action.
class Outbox {
 public:
  Outbox() = default;
  explicit Outbox(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) entries_.push_back(from_line(line));
    }
  }

  void append(OutboxEntry e) {
    if (!file_.empty()) {
      std::ofstream out(file_, std::ios::app);
      out << to_line(e) << "\n";
    }
    entries_.push_back(std::move(e));
  }

  const std::vector<OutboxEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        default: out.push_back(c);
      }
    }
    return out;
  }

  static std::string unescape(const std::string& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); i++) {
      if (s[i] == '\\' && i + 1 < s.size()) {
        char c = s[++i];
        out.push_back(c == 't' ? '\t' : c == 'n' ? '\n' : c);
      } else {
        out.push_back(s[i]);
      }
    }
    return out;
  }

  static std::string to_line(const OutboxEntry& e) {
    std::string line = escape(e.endpoint);
    for (const auto& [k, v] : e.fields) {
      line += "\t" + escape(k) + "=" + escape(v);
    }
    return line;
  }

  static OutboxEntry from_line(const std::string& line) {
    OutboxEntry e;
    size_t pos = 0;
    bool first = true;
    while (pos <= line.size()) {
      size_t tab = line.find('\t', pos);
      std::string tok = line.substr(pos, tab == std::string::npos ? std::string::npos
                                                                  : tab - pos);
      if (first) {
        e.endpoint = unescape(tok);
        first = false;
      } else {
        size_t eq = tok.find('=');
        e.fields[unescape(tok.substr(0, eq))] = unescape(tok.substr(eq + 1));
      }
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    return e;
  }

 private:
  std::filesystem::path file_;
  std::vector<OutboxEntry> entries_;
};

// ---------------------------------------------------------------------------
// Common service plumbing

namespace detail {

/// Decrypt-and-validate of a presented access token; with chains enabled the
/// chain does the heavy lifting, otherwise the registry is consulted
/// directly.
inline Bytes resolve_access_token(const Ciphertext& presented,
                                  const std::optional<TokenChain>& chain,
                                  const KeyPair& self,
                                  const TokenRegistry& registry,
                                  const DeployContext& ctx) {
  if (ctx.variant.token_chains()) {
    if (!chain) {
      throw CodedError(ErrCode::BadToken, "token: missing chain");
    }
    Bytes at =
        verify_and_resolve(*chain, presented, self, ctx.clock, ctx.token_policy);
    if (!registry.access_epoch(at)) {
      throw CodedError(ErrCode::BadToken, "token: unknown access token");
    }
    return at;
  }
  Bytes at;
  try {
    at = pk_decrypt(self, presented);
  } catch (const Error&) {
    throw CodedError(ErrCode::Malformed, "token: undecryptable");
  }
  auto epoch = registry.access_epoch(at);
  if (!epoch) throw CodedError(ErrCode::BadToken, "token: unknown access token");
  if (ctx.token_policy.access_expired(*epoch, ctx.clock)) {
    throw CodedError(ErrCode::Expired, "token: expired");
  }
  return at;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trigger service

using TriggerFn = std::function<std::map<std::string, std::string>(
    const std::map<std::string, std::string>&)>;

class TriggerService {
 public:
  explicit TriggerService(DeployContext& ctx)
      : ctx_(ctx),
        registry_(ctx.state_dir.empty() ? std::filesystem::path{}
                                        : ctx.state_dir / "ts_tokens.bin") {
    // Default mock catalog: a weather trigger.
    triggers_["weather/current"] = [this](const auto&) {
      return std::map<std::string, std::string>{
          {"new_weather_type", weather_}};
    };
  }

  void register_trigger(const std::string& endpoint, TriggerFn fn) {
    triggers_[endpoint] = std::move(fn);
  }

  const TokenRegistry& tokens() const { return registry_; }

  /// Test/workload control: what the next poll will observe.
  void set_weather(std::string v) { weather_ = std::move(v); }

  Bytes handle(Party from, const Bytes& msg) {
    try {
      Reader r(msg);
      switch (MsgType(r.get_u8())) {
        case MsgType::TriggerSign: return on_sign(r);
        case MsgType::TokenIssue: return on_issue(r);
        case MsgType::TriggerPoll: return on_poll(from, r);
        case MsgType::TokenRefresh: return on_refresh(r);
        case MsgType::NoSecTriggerPoll: return on_nosec_poll(r);
        default:
          throw CodedError(ErrCode::Malformed, "trigger service: bad message");
      }
    } catch (const CodedError& e) {
      return err_response(e.code);
    } catch (const Error&) {
      return err_response(ErrCode::Malformed);
    }
  }

 private:
  const KeyPair& self() const { return ctx_.keys->of(Party::TS); }

  Bytes on_sign(Reader& r) {
    Bytes core = r.get_raw(r.remaining());
    Reader check(core);
    TriggerRequestT::decode_core(check);  // syntax check only
    return ok_response(sign(self(), core).bytes);
  }

  Bytes on_issue(Reader& r) {
    (void)r.get_str();  // user handle; single-user deployment
    TokenIssueReply reply;
    reply.at = registry_.mint_access(*ctx_.rng, ctx_.clock.current);
    reply.rt = registry_.mint_refresh(*ctx_.rng, ctx_.clock.current);
    reply.chain = make_initial_chain(reply.at, self(), *ctx_.rng);
    return ok_response(reply.encode());
  }

  Bytes on_poll(Party, Reader& r) {
    TriggerPollMsg m = TriggerPollMsg::decode(r);
    if (ctx_.variant.integrity()) {
      if (!m.sig_t || !verify(self().public_key, m.t.core_bytes(), *m.sig_t)) {
        throw CodedError(ErrCode::BadSignature, "trigger: bad request signature");
      }
    }
    detail::resolve_access_token(Ciphertext{m.t.c_at_ts, Party::TS}, m.chain,
                                 self(), registry_, ctx_);

    std::map<std::string, std::string> trig_inp;
    try {
      Bytes blob = pk_decrypt(self(), Ciphertext{m.t.c_trig_inp, Party::TS});
      Reader br(blob);
      trig_inp = decode_kv_map(br);
    } catch (const Error&) {
      throw CodedError(ErrCode::Malformed, "trigger: undecryptable trigInp");
    }

    auto it = triggers_.find(m.t.endpoint);
    if (it == triggers_.end()) {
      throw CodedError(ErrCode::Malformed, "trigger: unknown endpoint");
    }
    std::map<std::string, std::string> trig_out = it->second(trig_inp);

    SignedTout out0, out1;
    out0.tout.tid = m.t.tid;
    out1.tout.tid = m.t.tid;
    if (ctx_.variant.integrity()) {
      out0.tout.rid = ctx_.rng->bytes(kIdBytes);
    } else {
      out0.tout.rid = Bytes(kIdBytes, 0);
    }
    out1.tout.rid = out0.tout.rid;
    for (const auto& [k, v] : trig_out) {
      auto [s0, s1] = share_value(v, ctx_.pad, *ctx_.rng);
      out0.tout.shares[k] = std::move(s0);
      out1.tout.shares[k] = std::move(s1);
    }
    if (ctx_.variant.integrity()) {
      out0.sig = sign(self(), out0.tout.core_bytes()).bytes;
      out1.sig = sign(self(), out1.tout.core_bytes()).bytes;
    }

    // The counterpart server gets its half directly.
    ToutPushMsg push{std::move(out1)};
    ctx_.transport->send(Party::TS, Party::M1, push.encode());

    Writer w;
    out0.encode(w);
    return ok_response(w.bytes());
  }

  Bytes on_refresh(Reader& r) {
    TokenRefreshMsg m = TokenRefreshMsg::decode(r);
    ChainNote note = open_chain(m.chain, self());

    Bytes at_k, rt_k;
    try {
      at_k = pk_decrypt(self(), Ciphertext{m.c_at, Party::TS});
      rt_k = pk_decrypt(self(), Ciphertext{m.c_rt, Party::TS});
    } catch (const Error&) {
      throw CodedError(ErrCode::Malformed, "refresh: undecryptable tokens");
    }
    if (note.atk != at_k) {
      throw CodedError(ErrCode::BadToken, "refresh: chain/token mismatch");
    }
    auto rt_epoch = registry_.refresh_epoch(rt_k);
    if (!rt_epoch) {
      throw CodedError(ErrCode::BadToken, "refresh: unknown refresh token");
    }
    if (ctx_.token_policy.refresh_expired(*rt_epoch, ctx_.clock)) {
      throw CodedError(ErrCode::Expired, "refresh: refresh token expired");
    }

    TokenRefreshReply reply;
    Bytes at_next = registry_.mint_access(*ctx_.rng, ctx_.clock.current);
    Bytes rt_next = registry_.mint_refresh(*ctx_.rng, ctx_.clock.current);
    TokenChain chain_next = advance_chain(m.chain, at_next, self(), *ctx_.rng);
    reply.c_at = pk_encrypt(self(), at_next, *ctx_.rng).bytes;
    reply.c_rt = pk_encrypt(self(), rt_next, *ctx_.rng).bytes;
    reply.chain = chain_next;

    ChainPushMsg push{m.applet_id, 0, chain_next};
    ctx_.transport->send(Party::TS, Party::M1, push.encode());
    return ok_response(reply.encode());
  }

  Bytes on_nosec_poll(Reader& r) {
    NoSecTriggerPollMsg m = NoSecTriggerPollMsg::decode(r);
    if (!registry_.access_epoch(m.at)) {
      throw CodedError(ErrCode::BadToken, "trigger: unknown access token");
    }
    auto it = triggers_.find(m.endpoint);
    if (it == triggers_.end()) {
      throw CodedError(ErrCode::Malformed, "trigger: unknown endpoint");
    }
    Writer w;
    encode_kv_map(w, it->second(m.trig_inp));
    return ok_response(w.bytes());
  }

  DeployContext& ctx_;
  TokenRegistry registry_;
  std::map<std::string, TriggerFn> triggers_;
  std::string weather_ = "sunny";
};

// ---------------------------------------------------------------------------
// Action service

class ActionService {
 public:
  explicit ActionService(DeployContext& ctx)
      : ctx_(ctx),
        registry_(ctx.state_dir.empty() ? std::filesystem::path{}
                                        : ctx.state_dir / "as_tokens.bin"),
        rids_(ctx.state_dir.empty() ? std::filesystem::path{}
                                    : ctx.state_dir / "as_rids.log"),
        outbox_(ctx.state_dir.empty() ? std::filesystem::path{}
                                      : ctx.state_dir / "outbox.log") {
    actions_.insert("email/send");
  }

  void register_action(const std::string& endpoint) {
    actions_.insert(endpoint);
  }

  const TokenRegistry& tokens() const { return registry_; }

  const Outbox& outbox() const { return outbox_; }
  const RidStore& rids() const { return rids_; }

  Bytes handle(Party from, const Bytes& msg) {
    try {
      Reader r(msg);
      switch (MsgType(r.get_u8())) {
        case MsgType::TokenIssue: return on_issue(r);
        case MsgType::ActionSubmit: return on_submit(from, r);
        case MsgType::TokenRefresh: return on_refresh(r);
        case MsgType::NoSecActionSubmit: return on_nosec_submit(r);
        default:
          throw CodedError(ErrCode::Malformed, "action service: bad message");
      }
    } catch (const CodedError& e) {
      return err_response(e.code);
    } catch (const Error&) {
      return err_response(ErrCode::Malformed);
    }
  }

  /// Forgets half-arrived submissions at the end of a cycle; returns the
  /// endpoints that were left waiting (timeout aborts).
  std::vector<std::string> sweep_pending() {
    std::vector<std::string> stranded;
    for (const auto& [ep, pair] : pending_) {
      if (pair[0].has_value() != pair[1].has_value()) stranded.push_back(ep);
    }
    pending_.clear();
    return stranded;
  }

 private:
  const KeyPair& self() const { return ctx_.keys->of(Party::AS); }

  Bytes on_issue(Reader& r) {
    (void)r.get_str();
    TokenIssueReply reply;
    reply.at = registry_.mint_access(*ctx_.rng, ctx_.clock.current);
    reply.rt = registry_.mint_refresh(*ctx_.rng, ctx_.clock.current);
    reply.chain = make_initial_chain(reply.at, self(), *ctx_.rng);
    return ok_response(reply.encode());
  }

  Bytes on_submit(Party from, Reader& r) {
    ActionSubmitMsg m = ActionSubmitMsg::decode(r);
    int sender_server = from == Party::M0 ? 0 : from == Party::M1 ? 1 : -1;
    if (sender_server < 0 || m.server != sender_server) {
      throw CodedError(ErrCode::Malformed, "action: sender/server mismatch");
    }
    if (!actions_.count(m.ain.endpoint)) {
      throw CodedError(ErrCode::Malformed, "action: unknown endpoint");
    }

    if (ctx_.variant.integrity()) {
      if (m.tee_index > 2) {
        throw CodedError(ErrCode::Malformed, "action: bad tee index");
      }
      if (m.proofs.size() != 3) {
        throw CodedError(ErrCode::ProofFail, "action: need one proof per TEE");
      }
      std::set<uint8_t> seen;
      Bytes core = m.ain.core_bytes();
      for (const TeeProof& p : m.proofs) {
        if (p.server != m.server || p.tee > 2 || !seen.insert(p.tee).second) {
          throw CodedError(ErrCode::ProofFail, "action: bad proof set");
        }
        const Bytes& pk =
            ctx_.keys->of(tee_party(p.server, p.tee)).public_key;
        if (!verify(pk, core, p.sig)) {
          throw CodedError(ErrCode::ProofFail, "action: proof does not verify");
        }
      }
    }

    std::string endpoint = m.ain.endpoint;
    auto& pair = pending_[endpoint];
    pair[m.server] = std::move(m);
    if (!pair[0] || !pair[1]) {
      Writer w;
      w.put_u8(1);  // pending: waiting for the counterpart server
      return ok_response(w.bytes());
    }

    ActionSubmitMsg a0 = std::move(*pair[0]);
    ActionSubmitMsg a1 = std::move(*pair[1]);
    pending_.erase(endpoint);
    execute_pair(a0, a1);
    Writer w;
    w.put_u8(0);  // executed
    return ok_response(w.bytes());
  }

  void execute_pair(const ActionSubmitMsg& a0, const ActionSubmitMsg& a1) {
    if (ctx_.variant.integrity()) {
      if (a0.ain.rid != a1.ain.rid) {
        throw CodedError(ErrCode::Mismatch, "action: RID mismatch");
      }
      if (a0.tee_index != a1.tee_index) {
        throw CodedError(ErrCode::Mismatch, "action: TEE index mismatch");
      }
      if (rids_.contains(a0.ain.rid)) {
        throw CodedError(ErrCode::Replay, "action: RID replayed");
      }
    }

    detail::resolve_access_token(Ciphertext{a0.ain.c_at_as, Party::AS},
                                 a0.chain, self(), registry_, ctx_);

    OutboxEntry entry;
    entry.endpoint = a0.ain.endpoint;
    try {
      for (const auto& [k, v0] : a0.ain.shares) {
        auto it = a1.ain.shares.find(k);
        if (it == a1.ain.shares.end()) {
          throw Error("missing key in counterpart shares");
        }
        entry.fields[k] = reconstruct_value(v0, it->second, ctx_.pad);
      }
      if (a1.ain.shares.size() != a0.ain.shares.size()) {
        throw Error("share key sets differ");
      }
    } catch (const CodedError&) {
      throw;
    } catch (const Error&) {
      throw CodedError(ErrCode::Malformed, "action: reconstruction failed");
    }

    if (ctx_.variant.integrity()) rids_.insert(a0.ain.rid);
    outbox_.append(std::move(entry));
  }

  Bytes on_refresh(Reader& r) {
    TokenRefreshMsg m = TokenRefreshMsg::decode(r);
    ChainNote note = open_chain(m.chain, self());
    Bytes at_k, rt_k;
    try {
      at_k = pk_decrypt(self(), Ciphertext{m.c_at, Party::AS});
      rt_k = pk_decrypt(self(), Ciphertext{m.c_rt, Party::AS});
    } catch (const Error&) {
      throw CodedError(ErrCode::Malformed, "refresh: undecryptable tokens");
    }
    if (note.atk != at_k) {
      throw CodedError(ErrCode::BadToken, "refresh: chain/token mismatch");
    }
    auto rt_epoch = registry_.refresh_epoch(rt_k);
    if (!rt_epoch) {
      throw CodedError(ErrCode::BadToken, "refresh: unknown refresh token");
    }
    if (ctx_.token_policy.refresh_expired(*rt_epoch, ctx_.clock)) {
      throw CodedError(ErrCode::Expired, "refresh: refresh token expired");
    }

    TokenRefreshReply reply;
    Bytes at_next = registry_.mint_access(*ctx_.rng, ctx_.clock.current);
    Bytes rt_next = registry_.mint_refresh(*ctx_.rng, ctx_.clock.current);
    TokenChain chain_next = advance_chain(m.chain, at_next, self(), *ctx_.rng);
    reply.c_at = pk_encrypt(self(), at_next, *ctx_.rng).bytes;
    reply.c_rt = pk_encrypt(self(), rt_next, *ctx_.rng).bytes;
    reply.chain = chain_next;

    ChainPushMsg push{m.applet_id, 1, chain_next};
    ctx_.transport->send(Party::AS, Party::M1, push.encode());
    return ok_response(reply.encode());
  }

  Bytes on_nosec_submit(Reader& r) {
    NoSecActionSubmitMsg m = NoSecActionSubmitMsg::decode(r);
    if (!actions_.count(m.endpoint)) {
      throw CodedError(ErrCode::Malformed, "action: unknown endpoint");
    }
    if (!registry_.access_epoch(m.at)) {
      throw CodedError(ErrCode::BadToken, "action: unknown access token");
    }
    outbox_.append({m.endpoint, m.act_inp});
    Writer w;
    w.put_u8(0);
    return ok_response(w.bytes());
  }

  DeployContext& ctx_;
  TokenRegistry registry_;
  RidStore rids_;
  Outbox outbox_;
  std::set<std::string> actions_;
  // endpoint -> per-server half-submissions awaiting their counterpart
  std::map<std::string, std::array<std::optional<ActionSubmitMsg>, 2>> pending_;
};

}  // namespace walnut

#endif  // WALNUT_SERVICES_HPP
