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
// Acceptance suite. One test case per criterion; each prints a single
// PASS/FAIL line. Run the binary directly (or `ctest -R walnut_acceptance
// --output-on-failure`) to see the lines.

#include <catch2/catch_amalgamated.hpp>
#include <chrono>
#include <cstdio>

#include "test_util.hpp"
#include "walnut/harness.hpp"

using namespace walnut;
using namespace walnut::testutil;

namespace {

struct Criterion {
  int number;
  const char* name;
  bool ok = true;
  std::string note;

  Criterion(int n, const char* nm) : number(n), name(nm) {}

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      note = what;
    }
  }

  ~Criterion() {
    std::printf("ACCEPTANCE %2d %-28s %s%s\n", number, name,
                ok ? "PASS" : "FAIL",
                ok ? "" : (" (" + note + ")").c_str());
    std::fflush(stdout);
  }
};

RunConfig make_run(Variant::Kind v, FilterKind fk, uint32_t cycles,
                   uint64_t seed) {
  RunConfig cfg;
  cfg.variant = Variant{v};
  cfg.workload = Workload::builtin(fk);
  cfg.cycles = cycles;
  cfg.seed = seed;
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

TEST_CASE("criterion 1: functional equivalence with NoSec") {
  Criterion c{1, "functional-equivalence"};
  auto t0 = std::chrono::steady_clock::now();
  for (auto fk : {FilterKind::PassAround, FilterKind::StringSub,
                  FilterKind::CustomSelect}) {
    RunReport nosec = run_variant(make_run(Variant::Kind::NoSec, fk, 100, 101));
    RunReport w = run_variant(make_run(Variant::Kind::W, fk, 100, 101));
    c.expect(nosec.clean() && w.clean(), "unexpected aborts");
    c.expect(nosec.effects.size() == 100 && w.effects.size() == 100,
             "missing effects");
    size_t n = std::min(nosec.effects.size(), w.effects.size());
    for (size_t i = 0; i < n; i++) {
      c.expect(w.effects[i] == nosec.effects[i],
               "effect " + std::to_string(i) + " differs under filter " +
                   filter_kind_name(fk));
    }
  }
  double secs = seconds_since(t0);
  c.expect(secs < 60.0, "took " + std::to_string(secs) + "s (limit 60)");
  REQUIRE(c.ok);
}

TEST_CASE("criterion 2: zero inter-server traffic for string_sub") {
  Criterion c{2, "stringsub-zero-network"};
  for (auto vk : {Variant::Kind::WC, Variant::Kind::WI, Variant::Kind::W}) {
    RunReport rep = run_variant(make_run(vk, FilterKind::StringSub, 5, 102));
    c.expect(rep.clean(), "aborts");
    c.expect(rep.inter_server_by_phase.at("action_generation") == 0,
             std::string(Variant{vk}.name()) +
                 " moved bytes between servers during action-generation");
  }
  RunReport wc = run_variant(make_run(Variant::Kind::WC, FilterKind::StringSub,
                                      5, 102));
  RunReport wyao = run_variant(make_run(Variant::Kind::WYao,
                                        FilterKind::StringSub, 5, 102));
  c.expect(wyao.total_bytes > 10 * wc.total_bytes,
           "yao " + std::to_string(wyao.total_bytes) + " vs 10x w-c " +
               std::to_string(wc.total_bytes));
  REQUIRE(c.ok);
}

TEST_CASE("criterion 3: variant byte ordering") {
  Criterion c{3, "variant-byte-ordering"};
  std::map<std::string, uint64_t> platform;
  for (auto vk : {Variant::Kind::NoSec, Variant::Kind::WYao, Variant::Kind::WC,
                  Variant::Kind::WI, Variant::Kind::W}) {
    RunReport rep = run_variant(make_run(vk, FilterKind::StringSub, 5, 103));
    c.expect(rep.clean(), std::string("aborts in ") + Variant{vk}.name());
    platform[Variant{vk}.name()] = rep.platform_bytes;
  }
  c.expect(platform["nosec"] < platform["w-c"], "nosec !< w-c");
  c.expect(platform["w-c"] <= platform["w-i"], "w-c !<= w-i");
  c.expect(platform["w-i"] <= platform["w"], "w-i !<= w");
  c.expect(platform["w"] < platform["w-yao"], "w !< w-yao");
  REQUIRE(c.ok);
}

TEST_CASE("criterion 4: tamper-abort suite") {
  Criterion c{4, "tamper-abort"};
  RunConfig cfg = make_run(Variant::Kind::W, FilterKind::StringSub, 1, 104);

  // A flip in a signed region must fail that region's check; a flip that
  // lands in one of the wire length prefixes may instead render the message
  // unparseable, which rejects as malformed (6) before any signature runs.
  // The trigger request's prefix offsets are statically known.
  std::set<size_t> t_prefix_offsets;
  {
    size_t endpoint_len = cfg.workload.applet.trigger_endpoint.size();
    size_t c_at_len = kTokenBytes + kCiphertextOverhead;
    for (size_t o = 0; o < 4; o++) {
      t_prefix_offsets.insert(o);                           // endpoint len
      t_prefix_offsets.insert(4 + endpoint_len + o);        // C_at len
      t_prefix_offsets.insert(8 + endpoint_len + c_at_len + o);  // C_trigInp len
    }
  }

  struct Target {
    const char* name;
    int primary;  // the code a content flip must produce
    std::function<bool(const FaultReport&)> code_ok;
  };
  std::vector<Target> targets = {
      {"trigger_request", 1,
       [&](const FaultReport& r) {
         if (t_prefix_offsets.count(r.region_offset)) {
           return r.code == 1 || r.code == 6;
         }
         return r.code == 1;
       }},
      {"tout", 1,
       [](const FaultReport& r) { return r.code == 1 || r.code == 6; }},
      {"ain", 5,
       [](const FaultReport& r) { return r.code == 5 || r.code == 6; }},
      {"proof", 5, [](const FaultReport& r) { return r.code == 5; }},
      {"chain", 1,
       [](const FaultReport& r) {
         // [ct len:4][ct][sig:64][epoch:4]
         if (r.region_offset < 4) return r.code == 6;
         if (r.region_offset >= r.region_size - 4) return r.code == 2;
         return r.code == 1;
       }},
  };

  for (const Target& t : targets) {
    int rejected = 0, code_ok = 0, primary = 0, effects = 0;
    for (uint64_t s = 0; s < 100; s++) {
      FaultSpec f;
      f.kind = FaultSpec::Kind::Tamper;
      f.target = t.name;
      f.seed = 1000 + s;
      FaultReport rep = inject_fault(cfg, f);
      if (rep.rejected) rejected++;
      if (t.code_ok(rep)) code_ok++;
      if (rep.code == t.primary) primary++;
      if (rep.effect_occurred) effects++;
    }
    c.expect(rejected == 100, std::string(t.name) + ": only " +
                                  std::to_string(rejected) + "/100 rejected");
    c.expect(code_ok == 100, std::string(t.name) + ": wrong code in " +
                                 std::to_string(100 - code_ok) + " runs");
    // Content flips dominate the region, so the primary code must dominate.
    c.expect(primary >= 60, std::string(t.name) + ": primary code only " +
                                std::to_string(primary) + "/100");
    c.expect(effects == 0, std::string(t.name) + ": action effects leaked");
  }
  REQUIRE(c.ok);
}

TEST_CASE("criterion 5: replay suite") {
  Criterion c{5, "replay-rejection"};
  TempDir dir("acc_replay");
  Deployment dep(make_config(Variant::Kind::W, dir, 105));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  dep.transport().record_transcript(true);

  std::vector<std::array<std::pair<Party, Bytes>, 2>> pairs;
  size_t scanned = 0;
  for (int cycle = 0; cycle < 100; cycle++) {
    dep.trigger_service().set_weather("w" + std::to_string(cycle));
    CycleResult res = dep.fire(id);
    c.expect(res.executed, "cycle failed");
    std::array<std::pair<Party, Bytes>, 2> pair;
    int found = 0;
    const auto& recs = dep.transport().transcript();
    for (; scanned < recs.size(); scanned++) {
      const auto& rec = recs[scanned];
      if (!rec.is_response && rec.to == Party::AS &&
          rec.data[0] == uint8_t(MsgType::ActionSubmit)) {
        pair[found++ % 2] = {rec.from, rec.data};
      }
    }
    c.expect(found == 2, "did not capture both submissions");
    pairs.push_back(pair);
  }
  c.expect(dep.action_service().outbox().size() == 100, "missing effects");

  int code4 = 0;
  for (auto& pair : pairs) {
    dep.transport().call(pair[0].first, Party::AS, pair[0].second);
    auto r1 = dep.transport().call(pair[1].first, Party::AS, pair[1].second);
    Response resp = parse_response(*r1);
    if (!resp.ok && resp.code == ErrCode::Replay) code4++;
    dep.action_service().sweep_pending();
  }
  c.expect(code4 == 100,
           "only " + std::to_string(code4) + "/100 replays got code 4");
  c.expect(dep.action_service().outbox().size() == 100,
           "a replay produced a second effect");
  REQUIRE(c.ok);
}

TEST_CASE("criterion 6: proof quantifier over all 6+6 cases") {
  Criterion c{6, "proof-quantifier"};
  TempDir dir("acc_proofs");
  Deployment dep(make_config(Variant::Kind::WI, dir, 106));
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  dep.transport().record_transcript(true);
  c.expect(dep.fire(id).executed, "clean cycle failed");

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
  SeededRng rng(1061);
  KeyPair rogue = generate_keypair(Party::User, rng);
  size_t outbox = dep.action_service().outbox().size();

  for (int b = 0; b < 2; b++) {
    for (int i = 0; i < 3; i++) {
      // Case A: remove proof i of server b.
      ActionSubmitMsg removal = submits[b];
      removal.proofs.erase(removal.proofs.begin() + i);
      auto ra = dep.transport().call(machine_of_server(b), Party::AS,
                                     removal.encode());
      Response resp_a = parse_response(*ra);
      c.expect(!resp_a.ok && resp_a.code == ErrCode::ProofFail,
               "removal (" + std::to_string(b) + "," + std::to_string(i) +
                   ") not blocked");

      // Case B: replace proof i with a non-TEE signature.
      ActionSubmitMsg subst = submits[b];
      subst.proofs[i].sig = sign(rogue, subst.ain.core_bytes()).bytes;
      auto rb = dep.transport().call(machine_of_server(b), Party::AS,
                                     subst.encode());
      Response resp_b = parse_response(*rb);
      c.expect(!resp_b.ok && resp_b.code == ErrCode::ProofFail,
               "substitution (" + std::to_string(b) + "," + std::to_string(i) +
                   ") not blocked");
      dep.action_service().sweep_pending();
    }
  }
  c.expect(dep.action_service().outbox().size() == outbox,
           "a tampered proof set executed an action");
  REQUIRE(c.ok);
}

TEST_CASE("criterion 7: token-chain liveness across epochs") {
  Criterion c{7, "token-chain-liveness"};
  RunConfig cfg = make_run(Variant::Kind::W, FilterKind::StringSub, 5, 107);
  cfg.workload.epochs = 5;
  cfg.workload.tokens.access_lifetime_epochs = 1;
  RunReport rep = run_variant(cfg);
  c.expect(rep.clean(), "an epoch failed to fire");
  c.expect(rep.effects.size() == 5, "expected one effect per epoch");
  for (const auto& ch : rep.channels) {
    if ((ch.from == "user" || ch.to == "user") && ch.phase != "setup") {
      c.expect(false, "user traffic outside setup: " + ch.from + "->" + ch.to);
    }
  }

  // A stale epoch-0 chain presented at epoch 2 is rejected as expired.
  TempDir dir("acc_chain");
  Deployment::Config dc = make_config(Variant::Kind::W, dir, 1070);
  dc.tokens.access_lifetime_epochs = 1;
  Deployment dep(dc);
  std::string id = dep.install(weather_applet(FilterKind::StringSub));
  TokenChain chain0 = *dep.machine(0).state(id).chain_ts;
  c.expect(dep.fire(id).executed, "epoch 0 fire failed");
  dep.advance_epoch();
  dep.advance_epoch();
  TriggerPollMsg poll;
  poll.t = dep.machine(0).state(id).app->t;
  poll.sig_t = dep.machine(0).state(id).app->sig_t;
  poll.chain = chain0;
  auto reply = dep.transport().call(Party::M0, Party::TS, poll.encode());
  Response resp = parse_response(*reply);
  c.expect(!resp.ok && resp.code == ErrCode::Expired,
           std::string("stale chain got ") + err_name(resp.code));
  REQUIRE(c.ok);
}

TEST_CASE("criterion 8: crypto property suite") {
  Criterion c{8, "crypto-properties"};
  auto t0 = std::chrono::steady_clock::now();
  SeededRng rng(108);

  for (int i = 0; i < 1000; i++) {
    Bytes secret = rng.bytes(rng.below(65));
    auto [a, b] = share(secret, rng);
    c.expect(reconstruct(a, b) == secret, "share round-trip failed");
  }

  int ones[8] = {0};
  Bytes one_byte = to_bytes("A");
  for (int s = 0; s < 10000; s++) {
    auto [a, b] = share(one_byte, rng);
    for (int bit = 0; bit < 8; bit++) {
      if (a.bytes[0] >> bit & 1) ones[bit]++;
    }
  }
  for (int bit = 0; bit < 8; bit++) {
    double freq = double(ones[bit]) / 10000.0;
    c.expect(freq >= 0.45 && freq <= 0.55,
             "bit " + std::to_string(bit) + " frequency " +
                 std::to_string(freq));
  }

  KeyPair ts = generate_keypair(Party::TS, rng);
  Bytes msg = rng.bytes(100);
  Ciphertext ct = pk_encrypt(ts, msg, rng);
  for (int k = 0; k < 100; k++) {
    Ciphertext bad = ct;
    bad.bytes[(k * bad.bytes.size()) / 100] ^= uint8_t(1 + rng.below(255));
    bool failed = false;
    try {
      pk_decrypt(ts, bad);
    } catch (const Error&) {
      failed = true;
    }
    c.expect(failed, "tampered ciphertext decrypted");
  }

  Signature sig = sign(ts, msg);
  c.expect(sig.bytes.size() == 64, "signature size");
  c.expect(verify(ts, msg, sig), "valid signature rejected");
  for (int k = 0; k < 100; k++) {
    Bytes bad_msg = msg;
    bad_msg[k % msg.size()] ^= 1;
    c.expect(!verify(ts, bad_msg, sig), "flipped message verified");
    Signature bad_sig = sig;
    bad_sig.bytes[k % 64] ^= 1;
    c.expect(!verify(ts, msg, bad_sig), "flipped signature verified");
  }
  KeyPair fresh = generate_keypair(Party::User, rng);
  for (int k = 0; k < 1000; k++) {
    c.expect(!verify(fresh.public_key, rng.bytes(32), rng.bytes(64)),
             "random signature verified");
  }

  double secs = seconds_since(t0);
  c.expect(secs < 30.0, "took " + std::to_string(secs) + "s (limit 30)");
  REQUIRE(c.ok);
}

TEST_CASE("criterion 9: yao oracle equivalence") {
  Criterion c{9, "yao-oracle-equivalence"};
  SeededRng rng(109);

  // Exhaustive 8-bit CustomSelect: every value byte through the full
  // two-party protocol equals the plaintext circuit evaluation.
  std::vector<std::optional<Bytes>> consts;
  consts.emplace_back(Bytes{0x42});
  consts.emplace_back(Bytes{0x07});
  SelectPlan plan = build_select_plan_raw(1, consts, {Bytes{0xaa}, Bytes{0xbb}},
                                          Bytes{0xcc});
  for (int v = 0; v < 256; v++) {
    Bytes value{uint8_t(v)};
    Bytes s0 = rng.bytes(1);
    Bytes s1 = xor_bytes(s0, value);
    Bytes mask = rng.bytes(1);
    BitVec g = plan.garbler_bits(s0, mask);
    BitVec e = plan.evaluator_bits(s1);
    BitVec plain = eval_plain(plan.circuit, g, e);
    auto res = yao::two_party_eval(plan.circuit, g, e, rng);
    c.expect(res.evaluator_output == plain,
             "mismatch at value " + std::to_string(v));
  }

  // 100 random inputs on a 1000-gate random circuit.
  BooleanCircuit rc = BooleanCircuit::with_inputs(8, 8);
  for (int i = 0; i < 1000; i++) {
    GateOp op = GateOp(rng.below(4));
    rc.add(op, uint32_t(rng.below(rc.num_wires)),
           uint32_t(rng.below(rc.num_wires)));
  }
  for (int i = 0; i < 8; i++) rc.mark_output(rc.num_wires - 1 - i);
  for (int run = 0; run < 100; run++) {
    BitVec g(8), e(8);
    for (auto& x : g) x = uint8_t(rng.below(2));
    for (auto& x : e) x = uint8_t(rng.below(2));
    yao::GarbledCircuit gc = yao::garble(rc, rng);
    std::vector<yao::Label> active(rc.input_count());
    for (uint32_t i = 0; i < 8; i++) {
      active[i] = g[i] ? gc.inputs[i].l1 : gc.inputs[i].l0;
      active[8 + i] = e[i] ? gc.inputs[8 + i].l1 : gc.inputs[8 + i].l0;
    }
    BitVec got =
        yao::decode_outputs(gc.decode, yao::evaluate(rc, gc.tables, active));
    c.expect(got == eval_plain(rc, g, e),
             "random circuit mismatch at run " + std::to_string(run));
  }
  REQUIRE(c.ok);
}

TEST_CASE("criterion 10: leakage descriptor checks") {
  Criterion c{10, "leakage-descriptor"};
  PaddingPolicy p2 = PaddingPolicy::next_power_of_two();

  AppletSpec spec = Workload::builtin(FilterKind::StringSub).applet;
  LeakageDescriptor d = leakage_of(spec, p2);
  std::set<std::string> contributing;
  for (const auto& [k, names] : d.contributing_keys) {
    contributing.insert(names.begin(), names.end());
  }
  c.expect(contributing == std::set<std::string>{"new_weather_type"},
           "contributing keys not exactly {new_weather_type}");
  c.expect(d.positions.at("body") == std::set<size_t>{1},
           "body substitution position is not block 1");

  // The canonical three-block coalescing: position 1 of 3.
  AppletSpec worked = spec;
  worked.act_inp_templates["body"] = "Slept {{duration}}. Sleep early";
  LeakageDescriptor wd = leakage_of(worked, p2);
  c.expect(wd.block_counts.at("body") == 3, "expected three coalesced blocks");
  c.expect(wd.positions.at("body") == std::set<size_t>{1},
           "expected substitution at block 1 of 3");
  REQUIRE(c.ok);
}

TEST_CASE("criterion 11: pricing model unit responses") {
  Criterion c{11, "pricing-model"};
  c.expect(dollar_cost(0.0, 0.0) == 0.0, "zero-resource cost not $0");
  c.expect(dollar_cost(1.0, 0.0) == 0.198, "1 cpu-hour != $0.198");
  c.expect(dollar_cost(0.0, 1.0) == 0.087, "1 GB != $0.087");
  CostModel model;
  c.expect(model.cpu_dollars_per_hour == 0.198, "C != 0.198");
  c.expect(model.network_dollars_per_gb == 0.087, "D != 0.087");
  REQUIRE(c.ok);
}
