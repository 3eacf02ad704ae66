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
// One desk-scale deployment: the user, two servers (machine + three TEEs
// each), both services, and the deterministic transport between them.
// Mutable state (keys, applet shares, chains, RIDs, outbox, epoch) lives
// under a state directory so installs survive process restarts.

#ifndef WALNUT_DEPLOYMENT_HPP
#define WALNUT_DEPLOYMENT_HPP

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "walnut/platform.hpp"

namespace walnut {

class Deployment {
 public:
  struct Config {
    Variant variant;
    uint64_t seed = 0;
    bool deterministic = true;  // seeded rng; system CSPRNG otherwise
    PaddingPolicy pad = PaddingPolicy::next_power_of_two();
    TokenPolicy tokens;
    std::filesystem::path state_dir;
    // Trigger-polling cadence for timer-driven deployments. Cycles here are
    // event-driven (`fire` is the manual control), so this is carried as
    // deployment metadata only.
    uint32_t polling_interval_seconds = 900;
  };

  explicit Deployment(Config cfg) : cfg_(std::move(cfg)) {
    namespace fs = std::filesystem;
    if (cfg_.state_dir.empty()) throw Error("deployment: state dir required");
    fs::create_directories(cfg_.state_dir / "applets");

    if (cfg_.deterministic) {
      rng_ = std::make_unique<SeededRng>(cfg_.seed);
    } else {
      rng_ = std::make_unique<SystemRng>();
    }

    fs::path keys_dir = cfg_.state_dir / "keys";
    if (fs::exists(keys_dir / "ts" / "pk")) {
      keys_ = KeyStore::load(keys_dir);
    } else {
      keys_ = KeyStore::generate(*rng_);
      keys_.save(keys_dir);
    }

    ctx_.keys = &keys_;
    ctx_.transport = &transport_;
    ctx_.rng = rng_.get();
    ctx_.pad = cfg_.pad;
    ctx_.variant = cfg_.variant;
    ctx_.token_policy = cfg_.tokens;
    ctx_.state_dir = cfg_.state_dir;
    load_epoch();

    ts_ = std::make_unique<TriggerService>(ctx_);
    as_ = std::make_unique<ActionService>(ctx_);
    m_[0] = std::make_unique<MachineM>(ctx_, 0);
    m_[1] = std::make_unique<MachineM>(ctx_, 1);
    for (int b = 0; b < 2; b++) {
      for (int i = 0; i < 3; i++) {
        tees_[b * 3 + i] = std::make_unique<Tee>(ctx_, b, i);
      }
    }

    transport_.register_handler(
        Party::TS, [this](Party f, const Bytes& m) { return ts_->handle(f, m); });
    transport_.register_handler(
        Party::AS, [this](Party f, const Bytes& m) { return as_->handle(f, m); });
    transport_.register_handler(
        Party::M0, [this](Party f, const Bytes& m) { return m_[0]->handle(f, m); });
    transport_.register_handler(
        Party::M1, [this](Party f, const Bytes& m) { return m_[1]->handle(f, m); });
    for (auto& tee : tees_) {
      Tee* t = tee.get();
      transport_.register_handler(
          t->party(), [t](Party f, const Bytes& m) { return t->handle(f, m); });
    }

    load_applets();
    load_machine_state();
  }

  DeployContext& ctx() { return ctx_; }
  Transport& transport() { return transport_; }
  TriggerService& trigger_service() { return *ts_; }
  ActionService& action_service() { return *as_; }
  MachineM& machine(int b) { return *m_[b]; }
  Tee& tee(int b, int i) { return *tees_[b * 3 + i]; }
  const std::set<std::string>& installed() const { return installed_; }
  const Variant& variant() const { return cfg_.variant; }

  /// User-side setup: obtain tokens, encrypt, share, get the trigger request
  /// signed, and hand each server (and its TEEs, in active mode) its half.
  std::string install(const AppletSpec& spec) {
    spec.validate();
    if (installed_.count(spec.id)) {
      throw Error("applet \"" + spec.id + "\" already installed");
    }
    transport_.set_phase(Phase::Setup);
    auto scope = transport_.cpu().scope(Party::User);

    if (!cfg_.variant.confidentiality()) {
      TokenIssueReply ts_tok = issue_tokens(Party::TS);
      TokenIssueReply as_tok = issue_tokens(Party::AS);
      NoSecApplet app{spec, ts_tok.at, as_tok.at};
      Bytes encoded = app.encode();
      deliver_applet(Party::M0, 1, encoded);
      write_file(applet_path(spec.id, "nosec"), encoded);
      installed_.insert(spec.id);
      return spec.id;
    }

    TokenIssueReply ts_tok = issue_tokens(Party::TS);
    TokenIssueReply as_tok = issue_tokens(Party::AS);
    const KeyPair& pk_ts = keys_.of(Party::TS);
    const KeyPair& pk_as = keys_.of(Party::AS);

    TriggerRequestT t;
    t.endpoint = spec.trigger_endpoint;
    t.c_at_ts = pk_encrypt(pk_ts, ts_tok.at, *rng_).bytes;
    t.c_trig_inp = pk_encrypt(pk_ts, spec.trig_inp_blob(), *rng_).bytes;
    t.tid = rng_->bytes(kIdBytes);

    AppletShare app0, app1;
    app0.applet_id = app1.applet_id = spec.id;
    app0.server = 0;
    app1.server = 1;
    app0.t = app1.t = t;
    app0.pk_ts = app1.pk_ts = pk_ts.public_key;
    app0.action_endpoint = app1.action_endpoint = spec.action_endpoint;
    app0.c_at_as = app1.c_at_as = pk_encrypt(pk_as, as_tok.at, *rng_).bytes;
    app0.c_rt_ts = app1.c_rt_ts = pk_encrypt(pk_ts, ts_tok.rt, *rng_).bytes;
    app0.c_rt_as = app1.c_rt_as = pk_encrypt(pk_as, as_tok.rt, *rng_).bytes;
    app0.fc = app1.fc = spec.filter;
    for (const auto& [key, templ] : spec.act_inp_templates) {
      auto [s0, s1] = share_value(templ, cfg_.pad, *rng_);
      app0.sh_act_inp[key] = std::move(s0);
      app1.sh_act_inp[key] = std::move(s1);
    }
    if (cfg_.variant.integrity()) {
      Writer w;
      w.put_u8(uint8_t(MsgType::TriggerSign));
      w.put_raw(t.core_bytes());
      auto reply = transport_.call(Party::User, Party::TS, w.take());
      if (!reply) throw Error("setup: trigger service unreachable");
      Response resp = parse_response(*reply);
      if (!resp.ok) throw Error("setup: trigger service refused to sign");
      app0.sig_t = resp.payload;
      app1.sig_t = resp.payload;
    }
    if (cfg_.variant.token_chains()) {
      app0.chain_ts = app1.chain_ts = ts_tok.chain;
      app0.chain_as = app1.chain_as = as_tok.chain;
    }

    Bytes enc0 = app0.encode(), enc1 = app1.encode();
    deliver_applet(Party::M0, 0, enc0);
    deliver_applet(Party::M1, 0, enc1);
    if (cfg_.variant.integrity()) {
      for (int i = 0; i < 3; i++) {
        deliver_applet(tee_party(0, i), 0, enc0);
        deliver_applet(tee_party(1, i), 0, enc1);
      }
    }
    write_file(applet_path(spec.id, "app0"), enc0);
    write_file(applet_path(spec.id, "app1"), enc1);
    installed_.insert(spec.id);
    return spec.id;
  }

  /// One trigger->action cycle. Any check failure aborts the cycle; the
  /// applet stays installed.
  CycleResult fire(const std::string& id) {
    if (!installed_.count(id)) throw Error("unknown applet \"" + id + "\"");
    CycleResult res;
    size_t outbox_before = as_->outbox().size();
    try {
      if (!cfg_.variant.confidentiality()) {
        run_nosec_cycle(id);
      } else if (cfg_.variant.integrity()) {
        run_active_cycle(id);
      } else {
        run_passive_cycle(id);
      }
    } catch (const CycleAbort& e) {
      res.aborts.push_back(
          {transport_.phase(), e.party, e.code, e.what()});
    } catch (const CodedError& e) {
      res.aborts.push_back({transport_.phase(), Party::User, e.code, e.what()});
    } catch (const Error& e) {
      res.aborts.push_back(
          {transport_.phase(), Party::User, ErrCode::None, e.what()});
    }
    for (const std::string& ep : as_->sweep_pending()) {
      res.aborts.push_back({Phase::ActionExecution, Party::AS, ErrCode::None,
                            "timeout waiting for counterpart: " + ep});
    }
    res.executed = as_->outbox().size() > outbox_before;
    save_machine_state();
    return res;
  }

  /// Moves the clock one epoch and, with chains enabled, lets M_0 refresh
  /// every applet's tokens.
  std::vector<AbortRecord> advance_epoch() {
    ctx_.clock.advance();
    save_epoch();
    std::vector<AbortRecord> aborts;
    if (cfg_.variant.token_chains()) {
      transport_.set_phase(Phase::TokenRefresh);
      for (const std::string& id : installed_) {
        try {
          auto scope = transport_.cpu().scope(Party::M0);
          m_[0]->refresh_tokens(id);
        } catch (const CycleAbort& e) {
          aborts.push_back({Phase::TokenRefresh, e.party, e.code, e.what()});
        }
      }
      save_machine_state();
    }
    return aborts;
  }

  /// Serialized applet-store sizes, the storage comparison of the report.
  std::map<std::string, uint64_t> applet_storage() const {
    std::map<std::string, uint64_t> sizes;
    namespace fs = std::filesystem;
    for (const auto& entry :
         fs::directory_iterator(cfg_.state_dir / "applets")) {
      sizes[entry.path().filename().string()] = entry.file_size();
    }
    return sizes;
  }

 private:
  std::filesystem::path applet_path(const std::string& id,
                                    const char* ext) const {
    return cfg_.state_dir / "applets" / (id + "." + ext);
  }

  static void write_file(const std::filesystem::path& p, const Bytes& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
  }

  static Bytes read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return Bytes((std::istreambuf_iterator<char>(in)),
                 std::istreambuf_iterator<char>());
  }

  TokenIssueReply issue_tokens(Party svc) {
    Writer w;
    w.put_u8(uint8_t(MsgType::TokenIssue));
    w.put_str("user");
    auto reply = transport_.call(Party::User, svc, w.take());
    if (!reply) throw Error("setup: token service unreachable");
    Response resp = parse_response(*reply);
    if (!resp.ok) throw Error("setup: token issuance failed");
    Reader r(resp.payload);
    return TokenIssueReply::decode(r);
  }

  void deliver_applet(Party to, uint8_t kind, const Bytes& encoded) {
    Writer w;
    w.put_u8(uint8_t(MsgType::AppletDeliver));
    w.put_u8(kind);
    w.put_raw(encoded);
    transport_.send(Party::User, to, w.take());
  }

  void run_nosec_cycle(const std::string& id) {
    transport_.set_phase(Phase::TriggerPolling);
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->nosec_poll(id);
    }
    transport_.set_phase(Phase::ActionGeneration);
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->nosec_generate(id);
    }
    transport_.set_phase(Phase::ActionExecution);
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->nosec_execute(id);
    }
  }

  void run_passive_cycle(const std::string& id) {
    transport_.set_phase(Phase::TriggerPolling);
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->poll_trigger(id);
    }
    transport_.set_phase(Phase::ActionGeneration);
    bool use_yao = !cfg_.variant.string_sub_enabled();
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->generate_local(id, use_yao);
    }
    {
      auto s = transport_.cpu().scope(Party::M1);
      m_[1]->generate_local(id, use_yao);
    }
    transport_.set_phase(Phase::ActionExecution);
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->execute_action(id);
    }
    {
      auto s = transport_.cpu().scope(Party::M1);
      m_[1]->execute_action(id);
    }
  }

  void run_active_cycle(const std::string& id) {
    transport_.set_phase(Phase::TriggerPolling);
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->poll_trigger(id);
    }
    transport_.set_phase(Phase::ActionGeneration);
    {
      // Both servers arm their TEEs before any garbled session starts.
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->deliver_tout_to_tees(id);
    }
    {
      auto s = transport_.cpu().scope(Party::M1);
      m_[1]->deliver_tout_to_tees(id);
    }
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->collect_tees(id);
    }
    {
      auto s = transport_.cpu().scope(Party::M1);
      m_[1]->collect_tees(id);
    }
    transport_.set_phase(Phase::ActionExecution);
    {
      auto s = transport_.cpu().scope(Party::M0);
      m_[0]->execute_action(id);
    }
    {
      auto s = transport_.cpu().scope(Party::M1);
      m_[1]->execute_action(id);
    }
  }

  void load_applets() {
    namespace fs = std::filesystem;
    for (const auto& entry :
         fs::directory_iterator(cfg_.state_dir / "applets")) {
      std::string name = entry.path().filename().string();
      Bytes b = read_file(entry.path());
      Reader r(b);
      if (name.ends_with(".nosec")) {
        NoSecApplet app = NoSecApplet::decode(r);
        installed_.insert(app.spec.id);
        m_[0]->inject_nosec(std::move(app));
      } else if (name.ends_with(".app0") || name.ends_with(".app1")) {
        AppletShare app = AppletShare::decode(r);
        installed_.insert(app.applet_id);
        int b_idx = app.server;
        if (cfg_.variant.integrity()) {
          for (int i = 0; i < 3; i++) {
            tees_[b_idx * 3 + i]->inject_applet(app);
          }
        }
        m_[b_idx]->inject_applet(std::move(app));
      }
    }
  }

  void save_machine_state() {
    for (int b = 0; b < 2; b++) {
      Writer w;
      m_[b]->save_refresh_state(w);
      write_file(cfg_.state_dir / ("m" + std::to_string(b) + "_state.bin"),
                 w.bytes());
    }
  }

  void load_machine_state() {
    for (int b = 0; b < 2; b++) {
      auto p = cfg_.state_dir / ("m" + std::to_string(b) + "_state.bin");
      if (!std::filesystem::exists(p)) continue;
      Bytes bytes = read_file(p);
      Reader r(bytes);
      m_[b]->load_refresh_state(r);
    }
  }

  void save_epoch() {
    Writer w;
    w.put_u32(ctx_.clock.current);
    write_file(cfg_.state_dir / "epoch.bin", w.bytes());
  }

  void load_epoch() {
    auto p = cfg_.state_dir / "epoch.bin";
    if (!std::filesystem::exists(p)) return;
    Bytes b = read_file(p);
    Reader r(b);
    ctx_.clock.current = r.get_u32();
  }

  Config cfg_;
  std::unique_ptr<Rng> rng_;
  KeyStore keys_;
  Transport transport_;
  DeployContext ctx_;
  std::unique_ptr<TriggerService> ts_;
  std::unique_ptr<ActionService> as_;
  std::array<std::unique_ptr<MachineM>, 2> m_;
  std::array<std::unique_ptr<Tee>, 6> tees_;
  std::set<std::string> installed_;
};

}  // namespace walnut

#endif  // WALNUT_DEPLOYMENT_HPP
