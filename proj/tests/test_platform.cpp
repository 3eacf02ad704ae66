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

TEST_CASE("setup: applet shares carry no plaintext secrets") {
  TempDir dir("plat_setup");
  Deployment dep(make_config(Variant::Kind::W, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));

  const auto& st0 = dep.machine(0).state(id);
  const auto& st1 = dep.machine(1).state(id);
  Bytes enc0 = st0.app->encode();
  Bytes enc1 = st1.app->encode();

  for (const Bytes& at : dep.trigger_service().tokens().access_tokens()) {
    CHECK_FALSE(bytes_contain(enc0, at));
    CHECK_FALSE(bytes_contain(enc1, at));
  }
  for (const Bytes& at : dep.action_service().tokens().access_tokens()) {
    CHECK_FALSE(bytes_contain(enc0, at));
    CHECK_FALSE(bytes_contain(enc1, at));
  }
  // Literal template text is shared, not embedded.
  CHECK_FALSE(bytes_contain(enc0, to_bytes("substituted string")));
  CHECK_FALSE(bytes_contain(enc1, to_bytes("substituted string")));

  // Shares differ but have identical shapes, and XOR back to the padded
  // template.
  for (const auto& [key, v0] : st0.app->sh_act_inp) {
    const ShareVector& v1 = st1.app->sh_act_inp.at(key);
    REQUIRE(v0.same_shape(v1));
    for (size_t i = 0; i < v0.blocks.size(); i++) {
      if (v0.blocks[i].kind == BlockKind::Literal) {
        CHECK(v0.blocks[i].bytes != v1.blocks[i].bytes);
      }
    }
  }
  auto spec = weather_applet(FilterKind::StringSub);
  Bytes padded_body = padded_plaintext(spec.act_inp_templates["body"],
                                       dep.ctx().pad);
  Bytes got;
  const ShareVector& b0 = st0.app->sh_act_inp.at("body");
  const ShareVector& b1 = st1.app->sh_act_inp.at("body");
  for (size_t i = 0; i < b0.blocks.size(); i++) {
    if (b0.blocks[i].kind == BlockKind::Literal) {
      Bytes x = xor_bytes(b0.blocks[i].bytes, b1.blocks[i].bytes);
      got.insert(got.end(), x.begin(), x.end());
    }
  }
  CHECK(got == padded_body);
}

TEST_CASE("polling: only M0 talks to the trigger service") {
  TempDir dir("plat_poll");
  Deployment dep(make_config(Variant::Kind::W, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  REQUIRE(dep.fire(id).executed);
  CHECK(dep.transport().bytes(Party::M1, Party::TS) == 0);
  CHECK(dep.transport().bytes(Party::M0, Party::TS) > 0);
  CHECK(dep.transport().bytes(Party::TS, Party::M1) > 0);  // the push
}

TEST_CASE("string_sub path crosses zero inter-server bytes") {
  for (auto kind : {Variant::Kind::WC, Variant::Kind::WI, Variant::Kind::W}) {
    TempDir dir("plat_zero");
    Deployment dep(make_config(kind, dir));
    std::string id = dep.install(weather_applet(FilterKind::StringSub));
    REQUIRE(dep.fire(id).executed);
    INFO("variant " << Variant{kind}.name());
    CHECK(dep.transport().inter_server_bytes(Phase::ActionGeneration) == 0);
  }
}

TEST_CASE("yao-only variant pays heavily on the same workload") {
  TempDir dir("plat_yao");
  Deployment dep(make_config(Variant::Kind::WYao, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  dep.trigger_service().set_weather("sunny");
  REQUIRE(dep.fire(id).executed);
  uint64_t cross = dep.transport().inter_server_bytes(Phase::ActionGeneration);
  CHECK(cross > 100 * 1024);  // garbled tables dominate

  const OutboxEntry& e = dep.action_service().outbox().entries()[0];
  CHECK(e.fields.at("body") ==
        plaintext_substitute(kSubTemplate, {{"new_weather_type", "sunny"}}));
}

TEST_CASE("every variant produces the oracle effect on every filterCode") {
  for (auto fk : {FilterKind::PassAround, FilterKind::StringSub,
                  FilterKind::CustomSelect}) {
    for (auto vk : {Variant::Kind::NoSec, Variant::Kind::WYao,
                    Variant::Kind::WC, Variant::Kind::WI, Variant::Kind::W}) {
      TempDir dir("plat_equiv");
      Deployment dep(make_config(vk, dir));
      AppletSpec spec = weather_applet(fk);
      std::string id = dep.install(spec);
      dep.trigger_service().set_weather("rainy");
      CycleResult res = dep.fire(id);
      INFO("filter " << filter_kind_name(fk) << " variant "
                     << Variant{vk}.name());
      for (const auto& a : res.aborts) INFO("abort: " << a.detail);
      REQUIRE(res.executed);

      std::map<std::string, std::string> trig{{"new_weather_type", "rainy"}};
      std::string want_body =
          fk == FilterKind::CustomSelect
              ? spec.filter.select_plain("rainy")
              : plaintext_substitute(spec.act_inp_templates.at("body"), trig);
      const OutboxEntry& e = dep.action_service().outbox().entries()[0];
      CHECK(e.fields.at("body") == want_body);
      CHECK(e.fields.at("to") == "user@example.com");
    }
  }
}

TEST_CASE("active custom select: all three TEE pairs agree") {
  TempDir dir("plat_select");
  Deployment dep(make_config(Variant::Kind::WI, dir));
  std::string id = dep.install(weather_applet(FilterKind::CustomSelect));
  dep.trigger_service().set_weather("sunny");
  REQUIRE(dep.fire(id).executed);

  const auto& st0 = dep.machine(0).state(id);
  REQUIRE(st0.proofs.size() == 3);
  REQUIRE(st0.ain.has_value());
  Bytes core = st0.ain->core_bytes();
  for (const TeeProof& p : st0.proofs) {
    CHECK(verify(dep.ctx().keys->of(tee_party(p.server, p.tee)).public_key,
                 core, p.sig));
  }
  const auto& st1 = dep.machine(1).state(id);
  REQUIRE(st1.proofs.size() == 3);
  Bytes core1 = st1.ain->core_bytes();
  for (const TeeProof& p : st1.proofs) {
    CHECK(verify(dep.ctx().keys->of(tee_party(p.server, p.tee)).public_key,
                 core1, p.sig));
  }
}

TEST_CASE("scripted machine deviations all end in rejection or timeout") {
  TempDir dir("plat_dev");
  Deployment dep(make_config(Variant::Kind::WI, dir));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));

  // A clean first cycle, so the replay script has something to replay.
  REQUIRE(dep.fire(id).executed);
  size_t outbox = dep.action_service().outbox().size();

  struct Case {
    Misbehavior mis;
    ErrCode want;
    bool timeout;
  };
  for (const Case& c : {Case{Misbehavior::TamperTriggerRequest,
                             ErrCode::BadSignature, false},
                        Case{Misbehavior::TamperTout, ErrCode::BadSignature,
                             false},
                        Case{Misbehavior::WrongGenerate, ErrCode::ProofFail,
                             false},
                        Case{Misbehavior::TamperAin, ErrCode::ProofFail, false},
                        Case{Misbehavior::ReplayAction, ErrCode::Mismatch,
                             false},
                        Case{Misbehavior::WithholdAction, ErrCode::None,
                             true}}) {
    dep.machine(0).set_misbehavior(c.mis);
    CycleResult res = dep.fire(id);
    dep.machine(0).set_misbehavior(Misbehavior::None);
    INFO("deviation " << int(c.mis));
    CHECK_FALSE(res.executed);
    REQUIRE_FALSE(res.aborts.empty());
    if (c.timeout) {
      CHECK(res.aborts.back().detail.find("timeout") != std::string::npos);
    } else {
      CHECK(res.aborts[0].code == c.want);
    }
    CHECK(dep.action_service().outbox().size() == outbox);
  }

  // The applet stays installed and usable after every aborted cycle.
  CHECK(dep.fire(id).executed);
}

TEST_CASE("one honest TEE vendor blocks execution when its key is wrong") {
  for (int b = 0; b < 2; b++) {
    for (int i = 0; i < 3; i++) {
      TempDir dir("plat_tee");
      Deployment dep(make_config(Variant::Kind::WI, dir));
      std::string id = dep.install(weather_applet(FilterKind::StringSub));
      dep.tee(b, i).disable_signing(true);
      CycleResult res = dep.fire(id);
      INFO("tee " << b << "," << i);
      CHECK_FALSE(res.executed);
      REQUIRE_FALSE(res.aborts.empty());
      CHECK(res.aborts[0].code == ErrCode::ProofFail);
      CHECK(dep.action_service().outbox().size() == 0);
    }
  }
}

TEST_CASE("trigger output bound to the wrong applet fails the TID check") {
  TempDir dir("plat_tid");
  Deployment dep(make_config(Variant::Kind::WI, dir));
  std::string id_a = dep.install(weather_applet(FilterKind::StringSub));
  AppletSpec other = weather_applet(FilterKind::PassAround);
  std::string id_b = dep.install(other);

  // Rebind every tout delivery to the other applet's id.
  dep.transport().set_fault_hook([&](Party, Party to, Phase, bool is_resp,
                                     Bytes& data) {
    if (!is_resp && server_of(to) >= 0 && !data.empty() &&
        data[0] == uint8_t(MsgType::ToutToTee)) {
      Reader r(std::span<const uint8_t>(data.data() + 1, data.size() - 1));
      ToutToTeeMsg m = ToutToTeeMsg::decode(r);
      m.applet_id = m.applet_id == id_a ? id_b : id_a;
      data = m.encode();
    }
    return FaultAction::Pass;
  });
  CycleResult res = dep.fire(id_a);
  dep.transport().clear_fault_hook();

  CHECK_FALSE(res.executed);
  REQUIRE_FALSE(res.aborts.empty());
  CHECK(res.aborts[0].code == ErrCode::Mismatch);
  CHECK(dep.action_service().outbox().size() == 0);
}
