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
// The two-server platform: untrusted machines M_0/M_1, three simulated TEEs
// per server, the user's setup step, and the cycle orchestration across the
// trigger-polling, action-generation and action-execution phases.
//
// Action generation routes through GenerateAI: string substitution runs
// locally over shares; CustomSelect (and, in the Yao-only variant, every
// filterCode) runs as a garbled-circuit session between server-0 (garbler)
// and server-1 (evaluator) components, framed through the machines as
// untrusted forwarders.

#ifndef WALNUT_PLATFORM_HPP
#define WALNUT_PLATFORM_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "walnut/applet.hpp"
#include "walnut/garble.hpp"
#include "walnut/services.hpp"

namespace walnut {

struct CycleAbort : Error {
  Party party;
  ErrCode code;
  CycleAbort(Party p, ErrCode c, const std::string& detail)
      : Error(detail), party(p), code(c) {}
};

struct AbortRecord {
  Phase phase = Phase::Setup;
  Party party = Party::User;
  ErrCode code = ErrCode::None;
  std::string detail;
};

struct CycleResult {
  bool executed = false;
  std::vector<AbortRecord> aborts;
};

// ---------------------------------------------------------------------------
// GenerateAI building blocks shared by machines and TEEs

namespace detail {

inline const ShareVector& trig_share_for(const TriggerOutput& tout,
                                         const std::string& key) {
  auto it = tout.shares.find(key);
  if (it == tout.shares.end()) {
    throw CodedError(ErrCode::Malformed,
                     "generate: trigOut key \"" + key + "\" missing");
  }
  if (it->second.blocks.size() != 1 ||
      it->second.blocks[0].kind != BlockKind::Literal) {
    throw CodedError(ErrCode::Malformed,
                     "generate: trigOut value is not a single block");
  }
  return it->second;
}

/// Per-server byte string a substitution circuit operates on: the template's
/// literal share blocks with trigOut share blocks spliced at placeholders.
inline Bytes substitution_bytes(const AppletShare& app,
                                const TriggerOutput& tout,
                                const std::string& act_key) {
  auto it = app.sh_act_inp.find(act_key);
  if (it == app.sh_act_inp.end()) {
    throw CodedError(ErrCode::Malformed, "generate: unknown actInp key");
  }
  Bytes out;
  for (const SharedBlock& b : it->second.blocks) {
    if (b.kind == BlockKind::Literal) {
      out.insert(out.end(), b.bytes.begin(), b.bytes.end());
    } else {
      const ShareVector& tv = trig_share_for(tout, to_string(b.bytes));
      out.insert(out.end(), tv.blocks[0].bytes.begin(),
                 tv.blocks[0].bytes.end());
    }
  }
  return out;
}

inline Bytes yao_session_id(const std::string& applet_id,
                            const std::string& key, const Bytes& rid,
                            uint8_t pair_index) {
  Writer w;
  w.put_str(applet_id);
  w.put_str(key);
  w.put_raw(rid);
  w.put_u8(pair_index);
  return derive_bytes(w.bytes(), "walnut.yao.session", kIdBytes);
}

/// Active-mode output re-sharing mask: a per-execution value all three TEEs
/// of a server derive identically from applet secrets and the RID, so their
/// signed action requests coincide.
inline Bytes derive_active_mask(const AppletShare& app, const Bytes& rid,
                                const std::string& key, size_t n) {
  Writer w;
  w.put_raw(app.mask_seed());
  w.put_raw(rid);
  w.put_str(key);
  return derive_bytes(w.bytes(), "walnut.mask", n);
}

/// Builds the evaluator endpoint for one (applet, actInp key) session.
inline yao::Evaluator make_evaluator(const AppletShare& app,
                                     const TriggerOutput& tout,
                                     const std::string& act_key,
                                     const PaddingPolicy& pad, Rng& rng) {
  if (app.fc.kind == FilterKind::CustomSelect && act_key == app.fc.target) {
    const ShareVector& tv = trig_share_for(tout, app.fc.key);
    const Bytes& share = tv.blocks[0].bytes;
    SelectPlan plan =
        build_select_circuit(app.fc, uint32_t(share.size()), pad);
    return yao::Evaluator(std::move(plan.circuit), plan.evaluator_bits(share),
                          rng);
  }
  Bytes own = substitution_bytes(app, tout, act_key);
  BooleanCircuit c = build_substitution_circuit(uint32_t(own.size()) * 8);
  return yao::Evaluator(std::move(c), bits_from_bytes(own), rng);
}

}  // namespace detail

/// Evaluator-side session table for a server-1 component. Sessions are
/// created lazily from the first frame and their decoded outputs parked
/// under (applet, key) until the local GenerateAI picks them up.
class YaoPeer {
 public:
  using StateLookup = std::function<std::pair<const AppletShare*,
                                              const TriggerOutput*>(
      const std::string& applet_id)>;

  Bytes handle(const YaoForwardMsg& m, const StateLookup& lookup,
               const PaddingPolicy& pad, Rng& rng) {
    yao::Frame f = yao::parse_frame(m.frame);
    std::string sid = to_hex(f.session);
    auto it = sessions_.find(sid);
    if (it == sessions_.end()) {
      auto [app, tout] = lookup(m.applet_id);
      if (!app || !tout) {
        throw CodedError(ErrCode::Malformed, "yao: no state for applet");
      }
      it = sessions_
               .emplace(sid, detail::make_evaluator(*app, *tout, m.key, pad, rng))
               .first;
    }
    Bytes reply = it->second.handle(f);
    if (it->second.done()) {
      results_[m.applet_id + "\x1f" + m.key] =
          bytes_from_bits(it->second.output_bits());
      sessions_.erase(it);
    }
    return reply;
  }

  Bytes take_result(const std::string& applet_id, const std::string& key) {
    auto it = results_.find(applet_id + "\x1f" + key);
    if (it == results_.end()) {
      throw CodedError(ErrCode::Malformed, "yao: no session result for key");
    }
    Bytes out = std::move(it->second);
    results_.erase(it);
    return out;
  }

 private:
  std::map<std::string, yao::Evaluator> sessions_;
  std::map<std::string, Bytes> results_;
};

// ---------------------------------------------------------------------------
// Simulated TEE

/// An isolated signing component. Reachable only through its message handler;
/// holds its own keypair and its copy of App_b.
class Tee {
 public:
  Tee(DeployContext& ctx, int server, int index)
      : ctx_(ctx), server_(server), index_(index) {}

  Party party() const { return tee_party(server_, index_); }
  void disable_signing(bool on) { signing_disabled_ = on; }

  void inject_applet(AppletShare app) { applets_[app.applet_id] = std::move(app); }

  Bytes handle(Party /*from*/, const Bytes& msg) {
    try {
      Reader r(msg);
      switch (MsgType(r.get_u8())) {
        case MsgType::AppletDeliver: {
          (void)r.get_u8();  // payload kind; TEEs only ever get share form
          AppletShare app = AppletShare::decode(r);
          inject_applet(std::move(app));
          return ok_response();
        }
        case MsgType::ToutToTee: return on_arm(r);
        case MsgType::TeeCollect: return on_collect(r);
        case MsgType::YaoForward: {
          YaoForwardMsg m = YaoForwardMsg::decode(r);
          if (m.dest != party()) {
            throw CodedError(ErrCode::Malformed, "tee: misrouted yao frame");
          }
          auto it = applets_.find(m.applet_id);
          auto ait = armed_.find(m.applet_id);
          if (it == applets_.end() || ait == armed_.end()) {
            throw CodedError(ErrCode::Malformed, "tee: not armed");
          }
          return peer_.handle(
              m,
              [&](const std::string&) {
                return std::make_pair(&it->second, &ait->second.tout);
              },
              ctx_.pad, *ctx_.rng);
        }
        default:
          throw CodedError(ErrCode::Malformed, "tee: bad message");
      }
    } catch (const CodedError& e) {
      return err_response(e.code);
    } catch (const Error&) {
      return err_response(ErrCode::Malformed);
    }
  }

 private:
  const KeyPair& keys() const { return ctx_.keys->of(party()); }

  // Fig-style arming: check the trigger output really is from the right
  // service and for the right applet, then hold it for the collect step.
  Bytes on_arm(Reader& r) {
    ToutToTeeMsg m = ToutToTeeMsg::decode(r);
    auto it = applets_.find(m.applet_id);
    if (it == applets_.end()) {
      throw CodedError(ErrCode::Malformed, "tee: unknown applet");
    }
    const AppletShare& app = it->second;
    if (!m.body.sig ||
        !verify(app.pk_ts, m.body.tout.core_bytes(), *m.body.sig)) {
      throw CodedError(ErrCode::BadSignature, "tee: trigOut signature invalid");
    }
    if (m.body.tout.tid != app.t.tid) {
      throw CodedError(ErrCode::Mismatch, "tee: TID does not match applet");
    }
    armed_[m.applet_id] = m.body;
    return ok_response();
  }

  Bytes on_collect(Reader& r) {
    TeeCollectMsg m = TeeCollectMsg::decode(r);
    auto it = applets_.find(m.applet_id);
    auto ait = armed_.find(m.applet_id);
    if (it == applets_.end() || ait == armed_.end()) {
      throw CodedError(ErrCode::Malformed, "tee: not armed");
    }
    const AppletShare& app = it->second;
    const TriggerOutput& tout = ait->second.tout;

    KeyedShareMap result = string_sub(tout.shares, app.sh_act_inp);
    if (app.fc.kind == FilterKind::CustomSelect) {
      if (server_ == 0) {
        result[app.fc.target] = run_select_garbler(app, tout);
      } else {
        ShareVector sv;
        sv.blocks.push_back(
            {BlockKind::Literal, peer_.take_result(app.applet_id, app.fc.target)});
        result[app.fc.target] = std::move(sv);
      }
    }

    TeeAinReply reply;
    reply.ain.rid = tout.rid;
    reply.ain.endpoint = app.action_endpoint;
    reply.ain.c_at_as = app.c_at_as;
    reply.ain.shares = std::move(result);
    Bytes core = reply.ain.core_bytes();
    if (signing_disabled_) {
      // Simulated compromise of this vendor's attestation: emit garbage.
      reply.proof_sig = Bytes(kSignatureBytes, 0);
    } else {
      reply.proof_sig = sign(keys(), core).bytes;
    }
    return ok_response(reply.encode());
  }

  ShareVector run_select_garbler(const AppletShare& app,
                                 const TriggerOutput& tout) {
    const ShareVector& tv = detail::trig_share_for(tout, app.fc.key);
    const Bytes& share = tv.blocks[0].bytes;
    SelectPlan plan = build_select_circuit(app.fc, uint32_t(share.size()),
                                           ctx_.pad);
    Bytes mask =
        detail::derive_active_mask(app, tout.rid, app.fc.target, plan.out_bytes);
    Bytes session = detail::yao_session_id(app.applet_id, app.fc.target,
                                           tout.rid, uint8_t(index_));
    Party counterpart = tee_party(1 - server_, index_);
    Party hop = machine_of_server(server_);
    yao::run_garbler(
        plan.circuit, plan.garbler_bits(share, mask), session,
        [&](const Bytes& frame) {
          YaoForwardMsg fwd{counterpart, app.applet_id, app.fc.target, frame};
          auto reply = ctx_.transport->call(party(), hop, fwd.encode());
          if (!reply) {
            throw CodedError(ErrCode::Malformed, "tee: yao transport dropped");
          }
          return *reply;
        },
        *ctx_.rng);
    ShareVector sv;
    sv.blocks.push_back({BlockKind::Literal, std::move(mask)});
    return sv;
  }

  DeployContext& ctx_;
  int server_;
  int index_;
  bool signing_disabled_ = false;
  std::map<std::string, AppletShare> applets_;
  std::map<std::string, SignedTout> armed_;
  YaoPeer peer_;
};

// ---------------------------------------------------------------------------
// Untrusted machine M_b

/// Scripted deviations for the compromise-surface tests (active setting).
enum class Misbehavior : uint8_t {
  None = 0,
  TamperTriggerRequest,  // corrupt T before sending to the trigger service
  TamperTout,            // corrupt trigOut before feeding the TEEs
  WrongGenerate,         // submit self-made shares instead of the TEEs' output
  TamperAin,             // corrupt the signed action request in flight
  ReplayAction,          // resubmit the previous cycle's action request
  WithholdAction,        // never send the action request
};

class MachineM {
 public:
  MachineM(DeployContext& ctx, int server) : ctx_(ctx), server_(server) {}

  Party party() const { return machine_of_server(server_); }
  void set_misbehavior(Misbehavior m) { misbehavior_ = m; }

  /// Which TEE's action request this machine forwards (any one is valid).
  void set_chosen_tee(int i) {
    if (i < 0 || i > 2) throw Error("machine: bad tee index");
    chosen_tee_ = i;
  }

  struct AppletState {
    std::optional<AppletShare> app;
    std::optional<NoSecApplet> nosec;
    std::optional<SignedTout> tout;
    std::map<std::string, std::string> nosec_trig_out;
    std::map<std::string, std::string> nosec_act_inp;
    KeyedShareMap gen_result;                // passive GenerateAI output
    std::optional<ActionRequestAin> ain;     // active: the chosen TEE's
    std::vector<TeeProof> proofs;
    std::optional<TokenChain> chain_ts, chain_as;
    Bytes c_at_ts_cur, c_rt_ts_cur;          // current-epoch presentation (M0)
    Bytes c_at_as_cur, c_rt_as_cur;
    Bytes prev_submission;                   // for the replay deviation
  };

  void inject_applet(AppletShare app) {
    AppletState& st = states_[app.applet_id];
    st.chain_ts = app.chain_ts;
    st.chain_as = app.chain_as;
    st.c_at_ts_cur = app.t.c_at_ts;
    st.c_at_as_cur = app.c_at_as;
    st.c_rt_ts_cur = app.c_rt_ts;
    st.c_rt_as_cur = app.c_rt_as;
    st.app = std::move(app);
  }

  void inject_nosec(NoSecApplet app) {
    states_[app.spec.id].nosec = std::move(app);
  }

  std::vector<std::string> applet_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, st] : states_) ids.push_back(id);
    return ids;
  }

  const AppletState& state(const std::string& id) const {
    return states_.at(id);
  }

  Bytes handle(Party /*from*/, const Bytes& msg) {
    try {
      Reader r(msg);
      switch (MsgType(r.get_u8())) {
        case MsgType::AppletDeliver: {
          uint8_t kind = r.get_u8();
          if (kind == 0) {
            inject_applet(AppletShare::decode(r));
          } else {
            inject_nosec(NoSecApplet::decode(r));
          }
          return ok_response();
        }
        case MsgType::ToutPush: {
          ToutPushMsg m = ToutPushMsg::decode(r);
          for (auto& [id, st] : states_) {
            if (st.app && st.app->t.tid == m.body.tout.tid) {
              st.tout = std::move(m.body);
              break;
            }
          }
          return ok_response();
        }
        case MsgType::ChainPush: {
          ChainPushMsg m = ChainPushMsg::decode(r);
          auto it = states_.find(m.applet_id);
          if (it != states_.end()) {
            (m.which == 0 ? it->second.chain_ts : it->second.chain_as) =
                m.chain;
          }
          return ok_response();
        }
        case MsgType::YaoForward: {
          YaoForwardMsg m = YaoForwardMsg::decode(r);
          return on_yao_forward(m);
        }
        default:
          throw CodedError(ErrCode::Malformed, "machine: bad message");
      }
    } catch (const CodedError& e) {
      return err_response(e.code);
    } catch (const Error&) {
      return err_response(ErrCode::Malformed);
    }
  }

  // ---- orchestrated steps (driven by the deployment) ----

  void poll_trigger(const std::string& id) {
    AppletState& st = states_.at(id);
    TriggerPollMsg m;
    m.t = st.app->t;
    m.sig_t = st.app->sig_t;
    if (ctx_.variant.token_chains()) m.chain = st.chain_ts;
    Bytes bytes = m.encode();
    if (misbehavior_ == Misbehavior::TamperTriggerRequest) {
      bytes[1 + 4] ^= 0x01;  // first byte of the endpoint inside T
    }
    Bytes payload = expect_ok(Party::TS, "trigger poll",
                              ctx_.transport->call(party(), Party::TS, bytes));
    Reader r(payload);
    st.tout = SignedTout::decode(r);
  }

  /// Passive GenerateAI. use_yao routes even plain substitutions through
  /// garbled circuits (the Yao-only variant).
  void generate_local(const std::string& id, bool use_yao) {
    AppletState& st = states_.at(id);
    if (!st.tout) throw CodedError(ErrCode::Malformed, "no trigger output");
    const AppletShare& app = *st.app;
    const TriggerOutput& tout = st.tout->tout;
    st.gen_result.clear();

    std::vector<std::string> yao_keys;
    if (use_yao) {
      for (const auto& [k, v] : app.sh_act_inp) yao_keys.push_back(k);
    } else {
      st.gen_result = string_sub(tout.shares, app.sh_act_inp);
    }
    if (app.fc.kind == FilterKind::CustomSelect) {
      yao_keys.push_back(app.fc.target);
    }

    for (const std::string& key : yao_keys) {
      if (server_ == 0) {
        st.gen_result[key] = run_garbler_session(app, tout, key);
      } else {
        ShareVector sv;
        sv.blocks.push_back(
            {BlockKind::Literal, peer_.take_result(app.applet_id, key)});
        st.gen_result[key] = std::move(sv);
      }
    }
  }

  void deliver_tout_to_tees(const std::string& id) {
    AppletState& st = states_.at(id);
    if (!st.tout) throw CodedError(ErrCode::Malformed, "no trigger output");
    ToutToTeeMsg m{id, *st.tout};
    Bytes bytes = m.encode();
    if (misbehavior_ == Misbehavior::TamperTout) {
      bytes[bytes.size() - kSignatureBytes - 8] ^= 0x01;  // inside the shares
    }
    for (int i = 0; i < 3; i++) {
      Party tee = tee_party(server_, i);
      expect_ok(tee, "tee arm", ctx_.transport->call(party(), tee, bytes));
    }
  }

  void collect_tees(const std::string& id) {
    AppletState& st = states_.at(id);
    st.proofs.clear();
    st.ain.reset();
    TeeCollectMsg m{id};
    for (int i = 0; i < 3; i++) {
      Party tee = tee_party(server_, i);
      Bytes payload = expect_ok(
          tee, "tee collect", ctx_.transport->call(party(), tee, m.encode()));
      Reader r(payload);
      TeeAinReply reply = TeeAinReply::decode(r);
      if (i == chosen_tee_) st.ain = reply.ain;
      st.proofs.push_back(
          {uint8_t(server_), uint8_t(i), std::move(reply.proof_sig)});
    }
  }

  void execute_action(const std::string& id) {
    AppletState& st = states_.at(id);
    if (misbehavior_ == Misbehavior::WithholdAction) return;

    ActionSubmitMsg m;
    m.server = uint8_t(server_);
    if (ctx_.variant.integrity()) {
      if (!st.ain) throw CodedError(ErrCode::Malformed, "no TEE output");
      m.tee_index = uint8_t(chosen_tee_);
      m.ain = *st.ain;
      m.proofs = st.proofs;
    } else {
      m.tee_index = 0xff;
      m.ain.rid = Bytes(kIdBytes, 0);
      m.ain.endpoint = st.app->action_endpoint;
      m.ain.c_at_as = st.app->c_at_as;
      m.ain.shares = st.gen_result;
    }
    if (ctx_.variant.token_chains()) m.chain = st.chain_as;

    if (misbehavior_ == Misbehavior::WrongGenerate) {
      for (auto& [k, v] : m.ain.shares) {
        for (auto& b : v.blocks) b.bytes = ctx_.rng->bytes(b.bytes.size());
      }
    }
    Bytes bytes = m.encode();
    if (misbehavior_ == Misbehavior::TamperAin) {
      size_t core_len = m.ain.core_bytes().size();
      bytes[3 + core_len - 1] ^= 0x01;  // last byte of the signed region
    }
    if (misbehavior_ == Misbehavior::ReplayAction && !st.prev_submission.empty()) {
      bytes = st.prev_submission;
    }
    Bytes payload = expect_ok(Party::AS, "action submit",
                              ctx_.transport->call(party(), Party::AS, bytes));
    st.prev_submission = std::move(bytes);
    (void)payload;  // 1 = pending, 0 = executed; either is fine here
  }

  void refresh_tokens(const std::string& id) {
    AppletState& st = states_.at(id);
    refresh_one(id, st, Party::TS);
    refresh_one(id, st, Party::AS);
  }

  // ---- NoSec baseline (single machine, plaintext) ----

  void nosec_poll(const std::string& id) {
    AppletState& st = states_.at(id);
    const AppletSpec& spec = st.nosec->spec;
    NoSecTriggerPollMsg m{spec.trigger_endpoint, st.nosec->at_ts, spec.trig_inp};
    Bytes payload = expect_ok(Party::TS, "trigger poll",
                              ctx_.transport->call(party(), Party::TS, m.encode()));
    Reader r(payload);
    st.nosec_trig_out = decode_kv_map(r);
  }

  void nosec_generate(const std::string& id) {
    AppletState& st = states_.at(id);
    const AppletSpec& spec = st.nosec->spec;
    st.nosec_act_inp.clear();
    for (const auto& [k, templ] : spec.act_inp_templates) {
      st.nosec_act_inp[k] = plaintext_substitute(templ, st.nosec_trig_out);
    }
    if (spec.filter.kind == FilterKind::CustomSelect) {
      auto it = st.nosec_trig_out.find(spec.filter.key);
      if (it == st.nosec_trig_out.end()) {
        throw CodedError(ErrCode::Malformed, "nosec: missing trigOut key");
      }
      st.nosec_act_inp[spec.filter.target] = spec.filter.select_plain(it->second);
    }
  }

  void nosec_execute(const std::string& id) {
    AppletState& st = states_.at(id);
    NoSecActionSubmitMsg m{st.nosec->spec.action_endpoint, st.nosec->at_as,
                           st.nosec_act_inp};
    expect_ok(Party::AS, "action submit",
              ctx_.transport->call(party(), Party::AS, m.encode()));
  }

  // ---- refresh-state persistence (chains survive process restarts) ----

  void save_refresh_state(Writer& w) const {
    uint32_t n = 0;
    for (const auto& [id, st] : states_) {
      if (st.app) n++;
    }
    w.put_u32(n);
    for (const auto& [id, st] : states_) {
      if (!st.app) continue;
      w.put_str(id);
      encode_opt_chain(w, st.chain_ts);
      encode_opt_chain(w, st.chain_as);
      w.put_bytes(st.c_at_ts_cur);
      w.put_bytes(st.c_rt_ts_cur);
      w.put_bytes(st.c_at_as_cur);
      w.put_bytes(st.c_rt_as_cur);
    }
  }

  void load_refresh_state(Reader& r) {
    uint32_t n = r.get_u32();
    for (uint32_t i = 0; i < n; i++) {
      std::string id = r.get_str();
      AppletState& st = states_[id];
      st.chain_ts = decode_opt_chain(r);
      st.chain_as = decode_opt_chain(r);
      st.c_at_ts_cur = r.get_bytes();
      st.c_rt_ts_cur = r.get_bytes();
      st.c_at_as_cur = r.get_bytes();
      st.c_rt_as_cur = r.get_bytes();
    }
  }

 private:
  Bytes expect_ok(Party to, const char* what, std::optional<Bytes> reply) {
    if (!reply) {
      throw CycleAbort(to, ErrCode::None, std::string(what) + ": timed out");
    }
    Response resp = parse_response(*reply);
    if (!resp.ok) {
      throw CycleAbort(to, resp.code,
                       std::string(what) + ": rejected (" +
                           err_name(resp.code) + ")");
    }
    return resp.payload;
  }

  Bytes on_yao_forward(const YaoForwardMsg& m) {
    if (m.dest == party()) {
      auto it = states_.find(m.applet_id);
      if (it == states_.end() || !it->second.app || !it->second.tout) {
        throw CodedError(ErrCode::Malformed, "machine: no yao state");
      }
      return peer_.handle(
          m,
          [&](const std::string&) {
            return std::make_pair(&*it->second.app, &it->second.tout->tout);
          },
          ctx_.pad, *ctx_.rng);
    }
    Party next = server_of(m.dest) == server_ ? m.dest
                                              : machine_of_server(1 - server_);
    auto reply = ctx_.transport->call(party(), next, m.encode());
    if (!reply) throw Error("machine: yao forward dropped");
    return *reply;
  }

  ShareVector run_garbler_session(const AppletShare& app,
                                  const TriggerOutput& tout,
                                  const std::string& key) {
    BooleanCircuit circuit;
    BitVec g_bits;
    Bytes mask;
    if (app.fc.kind == FilterKind::CustomSelect && key == app.fc.target) {
      const ShareVector& tv = detail::trig_share_for(tout, app.fc.key);
      const Bytes& share = tv.blocks[0].bytes;
      SelectPlan plan =
          build_select_circuit(app.fc, uint32_t(share.size()), ctx_.pad);
      mask = ctx_.rng->bytes(plan.out_bytes);
      g_bits = plan.garbler_bits(share, mask);
      circuit = std::move(plan.circuit);
    } else {
      Bytes own = detail::substitution_bytes(app, tout, key);
      mask = ctx_.rng->bytes(own.size());
      circuit = build_substitution_circuit(uint32_t(own.size()) * 8);
      g_bits = bits_from_bytes(concat(own, mask));
    }
    Bytes session = detail::yao_session_id(app.applet_id, key, tout.rid, 0xff);
    yao::run_garbler(
        circuit, g_bits, session,
        [&](const Bytes& frame) {
          YaoForwardMsg fwd{machine_of_server(1 - server_), app.applet_id, key,
                            frame};
          auto reply =
              ctx_.transport->call(party(), machine_of_server(1 - server_),
                                   fwd.encode());
          if (!reply) {
            throw CycleAbort(machine_of_server(1 - server_), ErrCode::None,
                             "yao session dropped");
          }
          return *reply;
        },
        *ctx_.rng);
    ShareVector sv;
    sv.blocks.push_back({BlockKind::Literal, std::move(mask)});
    return sv;
  }

  void refresh_one(const std::string& id, AppletState& st, Party svc) {
    bool is_ts = svc == Party::TS;
    std::optional<TokenChain>& chain = is_ts ? st.chain_ts : st.chain_as;
    if (!chain) throw CodedError(ErrCode::Malformed, "refresh: no chain");
    TokenRefreshMsg m;
    m.applet_id = id;
    m.c_at = is_ts ? st.c_at_ts_cur : st.c_at_as_cur;
    m.c_rt = is_ts ? st.c_rt_ts_cur : st.c_rt_as_cur;
    m.chain = *chain;
    Bytes payload = expect_ok(svc, "token refresh",
                              ctx_.transport->call(party(), svc, m.encode()));
    Reader r(payload);
    TokenRefreshReply reply = TokenRefreshReply::decode(r);
    (is_ts ? st.c_at_ts_cur : st.c_at_as_cur) = reply.c_at;
    (is_ts ? st.c_rt_ts_cur : st.c_rt_as_cur) = reply.c_rt;
    chain = reply.chain;
  }

  DeployContext& ctx_;
  int server_;
  int chosen_tee_ = 0;
  Misbehavior misbehavior_ = Misbehavior::None;
  std::map<std::string, AppletState> states_;
  YaoPeer peer_;
};

}  // namespace walnut

#endif  // WALNUT_PLATFORM_HPP
