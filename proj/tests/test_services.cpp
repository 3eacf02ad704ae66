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

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace walnut;
using namespace walnut::testutil;

TEST_CASE("trigger service shares reconstruct to the mock weather") {
  TempDir dir("svc_trig");
  Deployment dep(make_config(Variant::Kind::W, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  dep.trigger_service().set_weather("partly cloudy");

  CycleResult res = dep.fire(id);
  REQUIRE(res.aborts.empty());
  REQUIRE(res.executed);

  const auto& st0 = dep.machine(0).state(id);
  const auto& st1 = dep.machine(1).state(id);
  REQUIRE(st0.tout.has_value());
  REQUIRE(st1.tout.has_value());
  CHECK(st0.tout->tout.rid == st1.tout->tout.rid);
  CHECK(reconstruct_value(st0.tout->tout.shares.at("new_weather_type"),
                          st1.tout->tout.shares.at("new_weather_type"),
                          dep.ctx().pad) == "partly cloudy");

  // The executed action matches the plaintext oracle.
  REQUIRE(dep.action_service().outbox().size() == 1);
  const OutboxEntry& e = dep.action_service().outbox().entries()[0];
  CHECK(e.endpoint == "email/send");
  CHECK(e.fields.at("to") == "user@example.com");
  CHECK(e.fields.at("body") ==
        plaintext_substitute(kSubTemplate,
                             {{"new_weather_type", "partly cloudy"}}));
}

TEST_CASE("tampered trigger request is rejected with code 1") {
  TempDir dir("svc_sig");
  Deployment dep(make_config(Variant::Kind::WI, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));

  dep.transport().set_fault_hook([](Party, Party to, Phase, bool is_resp,
                                    Bytes& data) {
    if (!is_resp && to == Party::TS && !data.empty() &&
        data[0] == uint8_t(MsgType::TriggerPoll)) {
      data[5] ^= 0x01;
    }
    return FaultAction::Pass;
  });
  CycleResult res = dep.fire(id);
  dep.transport().clear_fault_hook();

  REQUIRE(res.aborts.size() == 1);
  CHECK(res.aborts[0].party == Party::TS);
  CHECK(res.aborts[0].code == ErrCode::BadSignature);
  CHECK_FALSE(res.executed);
  CHECK(dep.action_service().outbox().size() == 0);
}

TEST_CASE("tampered trigger output aborts at every TEE") {
  TempDir dir("svc_tout");
  Deployment dep(make_config(Variant::Kind::WI, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));

  dep.transport().set_fault_hook([](Party, Party to, Phase, bool is_resp,
                                    Bytes& data) {
    if (!is_resp && server_of(to) >= 0 && !data.empty() &&
        data[0] == uint8_t(MsgType::ToutToTee)) {
      data[data.size() - kSignatureBytes - 8] ^= 0x01;
    }
    return FaultAction::Pass;
  });
  CycleResult res = dep.fire(id);
  dep.transport().clear_fault_hook();

  REQUIRE_FALSE(res.aborts.empty());
  CHECK(server_of(res.aborts[0].party) >= 0);  // a TEE rejected
  CHECK(res.aborts[0].code == ErrCode::BadSignature);
  CHECK(dep.action_service().outbox().size() == 0);
}

TEST_CASE("replayed action submissions are rejected with code 4") {
  TempDir dir("svc_replay");
  Deployment dep(make_config(Variant::Kind::W, dir));
  std::string id = dep.install(weather_applet(FilterKind::PassAround));

  dep.transport().record_transcript(true);
  CycleResult res = dep.fire(id);
  REQUIRE(res.executed);
  REQUIRE(dep.action_service().outbox().size() == 1);

  // Pull the two action submissions off the wire and play them again.
  std::vector<std::pair<Party, Bytes>> submits;
  for (const auto& rec : dep.transport().transcript()) {
    if (!rec.is_response && rec.to == Party::AS && !rec.data.empty() &&
        rec.data[0] == uint8_t(MsgType::ActionSubmit)) {
      submits.push_back({rec.from, rec.data});
    }
  }
  REQUIRE(submits.size() == 2);

  auto r0 = dep.transport().call(submits[0].first, Party::AS, submits[0].second);
  auto r1 = dep.transport().call(submits[1].first, Party::AS, submits[1].second);
  REQUIRE(r0.has_value());
  REQUIRE(r1.has_value());
  CHECK(parse_response(*r0).ok);  // parked, waiting for the counterpart
  Response second = parse_response(*r1);
  CHECK_FALSE(second.ok);
  CHECK(second.code == ErrCode::Replay);
  CHECK(dep.action_service().outbox().size() == 1);  // at most once per RID
  dep.action_service().sweep_pending();
}

TEST_CASE("replay defense survives a service restart") {
  TempDir dir("svc_restart");
  std::vector<std::pair<Party, Bytes>> submits;
  {
    Deployment dep(make_config(Variant::Kind::W, dir));
    std::string id = dep.install(weather_applet(FilterKind::PassAround));
    dep.transport().record_transcript(true);
    REQUIRE(dep.fire(id).executed);
    for (const auto& rec : dep.transport().transcript()) {
      if (!rec.is_response && rec.to == Party::AS &&
          rec.data[0] == uint8_t(MsgType::ActionSubmit)) {
        submits.push_back({rec.from, rec.data});
      }
    }
  }
  // Fresh process over the same state: the RID store was reloaded from disk.
  Deployment dep2(make_config(Variant::Kind::W, dir, 8));
  REQUIRE(submits.size() == 2);
  dep2.transport().call(submits[0].first, Party::AS, submits[0].second);
  auto r1 = dep2.transport().call(submits[1].first, Party::AS, submits[1].second);
  Response second = parse_response(*r1);
  CHECK_FALSE(second.ok);
  CHECK(second.code == ErrCode::Replay);
  CHECK(dep2.action_service().outbox().size() == 1);  // loaded, not regrown
}

TEST_CASE("proof set is checked exhaustively before execution") {
  TempDir dir("svc_proofs");
  Deployment dep(make_config(Variant::Kind::WI, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  dep.transport().record_transcript(true);
  REQUIRE(dep.fire(id).executed);

  Bytes submit;
  for (const auto& rec : dep.transport().transcript()) {
    if (!rec.is_response && rec.from == Party::M0 && rec.to == Party::AS) {
      submit = rec.data;
    }
  }
  REQUIRE_FALSE(submit.empty());
  Reader r0(std::span<const uint8_t>(submit.data() + 1, submit.size() - 1));
  ActionSubmitMsg msg = ActionSubmitMsg::decode(r0);
  REQUIRE(msg.proofs.size() == 3);

  SECTION("dropping a proof fails with code 5") {
    ActionSubmitMsg bad = msg;
    bad.proofs.pop_back();
    auto reply = dep.transport().call(Party::M0, Party::AS, bad.encode());
    Response resp = parse_response(*reply);
    CHECK_FALSE(resp.ok);
    CHECK(resp.code == ErrCode::ProofFail);
  }

  SECTION("substituting a non-TEE signature fails with code 5") {
    ActionSubmitMsg bad = msg;
    SeededRng rng(99);
    KeyPair rogue = generate_keypair(Party::User, rng);
    bad.proofs[1].sig = sign(rogue, bad.ain.core_bytes()).bytes;
    auto reply = dep.transport().call(Party::M0, Party::AS, bad.encode());
    Response resp = parse_response(*reply);
    CHECK_FALSE(resp.ok);
    CHECK(resp.code == ErrCode::ProofFail);
  }

  SECTION("duplicated TEE index fails with code 5") {
    ActionSubmitMsg bad = msg;
    bad.proofs[2] = bad.proofs[1];
    auto reply = dep.transport().call(Party::M0, Party::AS, bad.encode());
    Response resp = parse_response(*reply);
    CHECK(resp.code == ErrCode::ProofFail);
  }
  CHECK(dep.action_service().outbox().size() == 1);
}

TEST_CASE("servers must submit the same TEE's action request") {
  TempDir dir("svc_teeidx");
  Deployment dep(make_config(Variant::Kind::WI, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  dep.transport().record_transcript(true);
  REQUIRE(dep.fire(id).executed);

  std::array<ActionSubmitMsg, 2> submits;
  for (const auto& rec : dep.transport().transcript()) {
    if (!rec.is_response && rec.to == Party::AS &&
        rec.data[0] == uint8_t(MsgType::ActionSubmit)) {
      Reader r(std::span<const uint8_t>(rec.data.data() + 1,
                                        rec.data.size() - 1));
      ActionSubmitMsg m = ActionSubmitMsg::decode(r);
      submits[m.server] = std::move(m);
    }
  }

  SECTION("mismatched tee index is code 7") {
    // The index sits outside the signed core, so the proofs still verify;
    // the cross-server equality check has to catch it. Fresh RIDs are not
    // needed because the mismatch check runs before the replay check.
    ActionSubmitMsg crooked = submits[1];
    crooked.tee_index = 1;
    dep.transport().call(Party::M0, Party::AS, submits[0].encode());
    auto reply = dep.transport().call(Party::M1, Party::AS, crooked.encode());
    Response resp = parse_response(*reply);
    CHECK_FALSE(resp.ok);
    CHECK(resp.code == ErrCode::Mismatch);
    dep.action_service().sweep_pending();
  }

  SECTION("server field must match the sender") {
    auto reply = dep.transport().call(Party::M1, Party::AS, submits[0].encode());
    Response resp = parse_response(*reply);
    CHECK_FALSE(resp.ok);
    CHECK(resp.code == ErrCode::Malformed);
  }
  CHECK(dep.action_service().outbox().size() == 1);
}

TEST_CASE("token refresh chains advance and resolve") {
  TempDir dir("svc_refresh");
  Deployment::Config cfg = make_config(Variant::Kind::W, dir);
  cfg.tokens.access_lifetime_epochs = 1;
  Deployment dep(cfg);
  std::string id = dep.install(weather_applet(FilterKind::PassAround));

  // Three consecutive epochs, refreshing between each; fires keep working
  // with the original encrypted token.
  for (int epoch = 0; epoch < 3; epoch++) {
    dep.trigger_service().set_weather("w" + std::to_string(epoch));
    CycleResult res = dep.fire(id);
    INFO("epoch " << epoch);
    REQUIRE(res.aborts.empty());
    auto aborts = dep.advance_epoch();
    REQUIRE(aborts.empty());
  }
  CHECK(dep.action_service().outbox().size() == 3);
  const auto& st = dep.machine(0).state(id);
  CHECK(st.chain_ts->epoch == 3);
  CHECK(dep.machine(1).state(id).chain_ts->epoch == 3);
}

TEST_CASE("refresh with a mismatched chain token is rejected") {
  TempDir dir("svc_refresh_bad");
  Deployment dep(make_config(Variant::Kind::W, dir));
  std::string id = dep.install(weather_applet(FilterKind::PassAround));

  const auto& st = dep.machine(0).state(id);
  TokenRefreshMsg m;
  m.applet_id = id;
  // Present the AS token against the TS chain: embedded at_k can't match.
  m.c_at = st.c_at_as_cur;
  m.c_rt = st.c_rt_ts_cur;
  m.chain = *st.chain_ts;
  auto reply = dep.transport().call(Party::M0, Party::TS, m.encode());
  Response resp = parse_response(*reply);
  CHECK_FALSE(resp.ok);
  CHECK((resp.code == ErrCode::BadToken || resp.code == ErrCode::Malformed));
}

TEST_CASE("data minimization: services see only their own side") {
  TempDir dir("svc_datamin");
  Deployment dep(make_config(Variant::Kind::W, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  dep.transport().record_transcript(true);
  REQUIRE(dep.fire(id).executed);
  const auto& recs = dep.transport().transcript();

  auto touches = [](Party p) {
    return [p](const TranscriptRecord& r) { return r.from == p || r.to == p; };
  };

  // Trigger service: never sees the action endpoint or actInp share bytes.
  CHECK_FALSE(transcript_contains(recs, to_bytes("email/send"), touches(Party::TS)));
  const auto& body_share =
      dep.machine(0).state(id).app->sh_act_inp.at("body").blocks[0].bytes;
  CHECK_FALSE(transcript_contains(recs, body_share, touches(Party::TS)));

  // Action service: never sees the trigger endpoint, trigInp, or trigOut keys.
  CHECK_FALSE(transcript_contains(recs, to_bytes("weather/current"),
                                  touches(Party::AS)));
  CHECK_FALSE(transcript_contains(recs, to_bytes("new_weather_type"),
                                  touches(Party::AS)));
  CHECK_FALSE(transcript_contains(recs, to_bytes("\"city\""), touches(Party::AS)));

  // No plaintext access token on any platform channel.
  auto platform_channel = [](const TranscriptRecord& r) {
    return is_platform(r.from) || is_platform(r.to);
  };
  for (const Bytes& at : dep.trigger_service().tokens().access_tokens()) {
    CHECK_FALSE(transcript_contains(recs, at, platform_channel));
  }
  for (const Bytes& at : dep.action_service().tokens().access_tokens()) {
    CHECK_FALSE(transcript_contains(recs, at, platform_channel));
  }
}

TEST_CASE("unknown access tokens are rejected with code 2") {
  TempDir dir("svc_badtoken");
  Deployment dep(make_config(Variant::Kind::WI, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));

  // Re-encrypt a garbage token into an otherwise valid request.
  const auto& st = dep.machine(0).state(id);
  SeededRng rng(77);
  TriggerRequestT t = st.app->t;
  t.c_at_ts =
      pk_encrypt(dep.ctx().keys->of(Party::TS), rng.bytes(kTokenBytes), rng)
          .bytes;
  Writer w;
  w.put_u8(uint8_t(MsgType::TriggerSign));
  w.put_raw(t.core_bytes());
  auto sig_reply = dep.transport().call(Party::User, Party::TS, w.take());
  TriggerPollMsg poll;
  poll.t = t;
  poll.sig_t = parse_response(*sig_reply).payload;
  auto reply = dep.transport().call(Party::M0, Party::TS, poll.encode());
  Response resp = parse_response(*reply);
  CHECK_FALSE(resp.ok);
  CHECK(resp.code == ErrCode::BadToken);
}

TEST_CASE("tampered refresh requests never corrupt chain state") {
  TempDir dir("svc_refresh_tamper");
  Deployment dep(make_config(Variant::Kind::W, dir));
  std::string id = dep.install(weather_applet(FilterKind::PassAround));

  const auto& st = dep.machine(0).state(id);
  TokenRefreshMsg good;
  good.applet_id = id;
  good.c_at = st.c_at_ts_cur;
  good.c_rt = st.c_rt_ts_cur;
  good.chain = *st.chain_ts;
  Bytes wire = good.encode();

  SeededRng rng(78);
  // Flip within the token/chain fields; the applet id ahead of them is an
  // opaque routing handle the service never validates.
  size_t fields_begin = 1 + 4 + id.size();
  for (int k = 0; k < 50; k++) {
    Bytes bad = wire;
    bad[fields_begin + rng.below(bad.size() - fields_begin)] ^=
        uint8_t(1 + rng.below(255));
    auto reply = dep.transport().call(Party::M0, Party::TS, bad);
    Response resp = parse_response(*reply);
    CHECK_FALSE(resp.ok);
    CHECK(int(resp.code) > 0);
  }
  // The untouched original still works afterwards.
  auto reply = dep.transport().call(Party::M0, Party::TS, wire);
  CHECK(parse_response(*reply).ok);
}

TEST_CASE("unknown endpoints and malformed messages are rejected cleanly") {
  TempDir dir("svc_malformed");
  Deployment dep(make_config(Variant::Kind::W, dir));

  auto reply = dep.transport().call(Party::M0, Party::TS, Bytes{0x77});
  CHECK(parse_response(*reply).code == ErrCode::Malformed);

  reply = dep.transport().call(Party::M0, Party::AS, Bytes{uint8_t(0x08), 0x00});
  CHECK(parse_response(*reply).code == ErrCode::Malformed);

  reply = dep.transport().call(Party::M0, Party::TS, Bytes{});
  CHECK_FALSE(reply->empty());
}
