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

#include "walnut/garble.hpp"

using namespace walnut;
using walnut::yao::Label;

namespace {

const PaddingPolicy kP2 = PaddingPolicy::next_power_of_two();

BooleanCircuit random_circuit(Rng& rng, uint32_t g_in, uint32_t e_in,
                              size_t n_gates, size_t n_outputs) {
  BooleanCircuit c = BooleanCircuit::with_inputs(g_in, e_in);
  for (size_t i = 0; i < n_gates; i++) {
    GateOp op = GateOp(rng.below(4));
    uint32_t a = uint32_t(rng.below(c.num_wires));
    uint32_t b = uint32_t(rng.below(c.num_wires));
    c.add(op, a, b);
  }
  for (size_t i = 0; i < n_outputs; i++) {
    c.mark_output(c.num_wires - 1 - uint32_t(i));
  }
  return c;
}

BitVec random_bits(Rng& rng, size_t n) {
  BitVec v(n);
  for (auto& b : v) b = uint8_t(rng.below(2));
  return v;
}

// Direct garble/evaluate with the garbler handing over both input labels,
// bypassing OT.
BitVec garbled_eval_direct(const BooleanCircuit& c, const BitVec& g_in,
                           const BitVec& e_in, Rng& rng) {
  yao::GarbledCircuit gc = yao::garble(c, rng);
  std::vector<Label> active(c.input_count());
  for (uint32_t i = 0; i < c.garbler_inputs; i++) {
    active[i] = g_in[i] ? gc.inputs[i].l1 : gc.inputs[i].l0;
  }
  for (uint32_t i = 0; i < c.evaluator_inputs; i++) {
    const auto& p = gc.inputs[c.garbler_inputs + i];
    active[c.garbler_inputs + i] = e_in[i] ? p.l1 : p.l0;
  }
  return yao::decode_outputs(gc.decode, yao::evaluate(c, gc.tables, active));
}

}  // namespace

TEST_CASE("garbled elementary gates match truth tables") {
  SeededRng rng(40);
  for (auto op : {GateOp::And, GateOp::Xor, GateOp::Or}) {
    BooleanCircuit c = BooleanCircuit::with_inputs(1, 1);
    c.mark_output(c.add(op, 0, 1));
    for (uint8_t a = 0; a <= 1; a++) {
      for (uint8_t b = 0; b <= 1; b++) {
        CHECK(garbled_eval_direct(c, {a}, {b}, rng) ==
              eval_plain(c, {a}, {b}));
      }
    }
  }
}

TEST_CASE("inverters are free and correct") {
  SeededRng rng(41);
  BooleanCircuit c = BooleanCircuit::with_inputs(1, 1);
  c.mark_output(c.not_(c.xor_(0, 1)));
  yao::GarbledCircuit gc = yao::garble(c, rng);
  CHECK(gc.tables.size() == 1);  // only the xor gets a table
  for (uint8_t a = 0; a <= 1; a++) {
    for (uint8_t b = 0; b <= 1; b++) {
      CHECK(garbled_eval_direct(c, {a}, {b}, rng) == BitVec{uint8_t(1 ^ a ^ b)});
    }
  }
}

TEST_CASE("small circuits, exhaustive inputs") {
  SeededRng rng(42);
  for (int t = 0; t < 10; t++) {
    BooleanCircuit c = random_circuit(rng, 2, 2, 12, 3);
    for (int x = 0; x < 16; x++) {
      BitVec g{uint8_t(x & 1), uint8_t(x >> 1 & 1)};
      BitVec e{uint8_t(x >> 2 & 1), uint8_t(x >> 3 & 1)};
      CHECK(garbled_eval_direct(c, g, e, rng) == eval_plain(c, g, e));
    }
  }
}

TEST_CASE("random 1000-gate circuits match the plaintext oracle") {
  SeededRng rng(43);
  for (int t = 0; t < 10; t++) {
    BooleanCircuit c = random_circuit(rng, 8, 8, 1000, 8);
    for (int run = 0; run < 10; run++) {
      BitVec g = random_bits(rng, 8), e = random_bits(rng, 8);
      CHECK(garbled_eval_direct(c, g, e, rng) == eval_plain(c, g, e));
    }
  }
}

TEST_CASE("oblivious transfer") {
  SeededRng rng(44);

  SECTION("chooses the right message") {
    Bytes m0 = to_bytes("message zero 0000");
    Bytes m1 = to_bytes("message one  1111");
    CHECK(ot_transfer(m0, m1, 0, rng) == m0);
    CHECK(ot_transfer(m0, m1, 1, rng) == m1);
  }

  SECTION("1000 random transfers are all correct") {
    OtSenderSetup setup = ot_setup_sender(rng);
    for (int i = 0; i < 1000; i++) {
      Bytes m0 = rng.bytes(16), m1 = rng.bytes(16);
      int choice = int(rng.below(2));
      OtChoice c = ot_choose(setup.s_point, choice, rng);
      auto [e0, e1] = ot_respond(setup, c.r_point, m0, m1, uint64_t(i));
      Bytes got = ot_finish(c, setup.s_point, e0, e1, choice, uint64_t(i));
      CHECK(got == (choice ? m1 : m0));
    }
  }

  SECTION("length mismatch is rejected") {
    OtSenderSetup setup = ot_setup_sender(rng);
    OtChoice c = ot_choose(setup.s_point, 0, rng);
    CHECK_THROWS_AS(ot_respond(setup, c.r_point, Bytes(8), Bytes(9), 0), Error);
  }

  SECTION("receiver message carries no choice field") {
    OtSenderSetup setup = ot_setup_sender(rng);
    OtChoice c0 = ot_choose(setup.s_point, 0, rng);
    OtChoice c1 = ot_choose(setup.s_point, 1, rng);
    CHECK(c0.r_point.size() == kOtPointBytes);
    CHECK(c1.r_point.size() == kOtPointBytes);
    // Fresh randomness per transfer: same choice, different transcript.
    OtChoice c0b = ot_choose(setup.s_point, 0, rng);
    CHECK(c0.r_point != c0b.r_point);
  }
}

TEST_CASE("session frame layout is bit-exact") {
  Bytes session(16, 0xab);
  Bytes payload = {1, 2, 3};
  Bytes f = yao::frame(session, 3, payload);
  REQUIRE(f.size() == 16 + 1 + 4 + 3);
  CHECK(Bytes(f.begin(), f.begin() + 16) == session);
  CHECK(f[16] == 3);                      // phase
  CHECK(f[17] == 0);                      // payload length, big-endian
  CHECK(f[20] == 3);
  CHECK(Bytes(f.begin() + 21, f.end()) == payload);

  yao::Frame back = yao::parse_frame(f);
  CHECK(back.session == session);
  CHECK(back.phase == 3);
  CHECK(back.payload == payload);
  CHECK_THROWS_AS(yao::frame(Bytes(15, 0), 1, payload), Error);
}

TEST_CASE("two-party evaluation over the session protocol") {
  SeededRng rng(45);

  SECTION("xor-reconstruct of zero shares is zero") {
    BooleanCircuit c = build_reconstruct_circuit(32);
    BitVec zeros(32, 0);
    auto res = yao::two_party_eval(c, zeros, zeros, rng);
    CHECK(res.evaluator_output == BitVec(32, 0));
    CHECK(res.bytes_transferred > 0);
  }

  SECTION("reconstruct of random shares") {
    BooleanCircuit c = build_reconstruct_circuit(64);
    Bytes g = rng.bytes(8), e = rng.bytes(8);
    auto res =
        yao::two_party_eval(c, bits_from_bytes(g), bits_from_bytes(e), rng);
    CHECK(bytes_from_bits(res.evaluator_output) == xor_bytes(g, e));
  }

  SECTION("weather select circuit routes the matching template") {
    FilterCodeDescriptor fc;
    fc.kind = FilterKind::CustomSelect;
    fc.key = "new_weather_type";
    fc.target = "body";
    fc.cases = {{"sunny", "Clear skies ahead"}, {"rainy", "Bring an umbrella"}};
    fc.default_templ = "No forecast available";

    for (const std::string& value : {"sunny", "rainy"}) {
      Bytes enc = padded_plaintext(value, kP2);
      SelectPlan plan = build_select_circuit(fc, uint32_t(enc.size()), kP2);
      Bytes s0 = rng.bytes(enc.size());
      Bytes s1 = xor_bytes(s0, enc);
      Bytes mask = rng.bytes(plan.out_bytes);

      auto res = yao::two_party_eval(plan.circuit, plan.garbler_bits(s0, mask),
                                     plan.evaluator_bits(s1), rng);
      Bytes selected =
          xor_bytes(bytes_from_bits(res.evaluator_output), mask);
      CHECK(strip_segments(selected, kP2) == fc.select_plain(value));

      // Garbled tables dominate the transcript.
      CHECK(res.bytes_transferred >=
            plan.circuit.count(GateOp::And) * yao::kGarbledTableBytes);
    }
  }
}

TEST_CASE("tampered garbled material aborts, never misdecodes") {
  SeededRng rng(46);
  BooleanCircuit c = build_reconstruct_circuit(32);
  Bytes g = rng.bytes(4), e = rng.bytes(4);

  // Flip bytes of the garbler's active input labels: every one is
  // load-bearing, so evaluation must end in a decode abort.
  const size_t frame_header = 16 + 1 + 4;
  const size_t labels_off =
      frame_header + c.tabled_gates() * yao::kGarbledTableBytes;
  const size_t labels_len = c.garbler_inputs * sizeof(yao::Label);

  for (size_t flip : {size_t(0), size_t(17), size_t(200)}) {
    yao::Evaluator ev(c, bits_from_bytes(e), rng);
    Bytes session(16, 1);
    bool first = true;
    CHECK_THROWS_AS(
        yao::run_garbler(c, bits_from_bytes(g), session,
                         [&](const Bytes& msg) {
                           Bytes m = msg;
                           if (first) {
                             m[labels_off + flip % labels_len] ^= 0x01;
                             first = false;
                           }
                           return ev.handle(yao::parse_frame(m));
                         },
                         rng),
        Error);
    CHECK_FALSE(ev.done());
  }

  // A flip in an inactive table row may go unseen, but it can never change
  // the decoded result: either abort or the correct value.
  for (int t = 0; t < 40; t++) {
    yao::Evaluator ev(c, bits_from_bytes(e), rng);
    Bytes session(16, 2);
    size_t table_bytes = c.tabled_gates() * yao::kGarbledTableBytes;
    size_t pos = frame_header + rng.below(table_bytes);
    bool first = true;
    bool aborted = false;
    try {
      yao::run_garbler(c, bits_from_bytes(g), session,
                       [&](const Bytes& msg) {
                         Bytes m = msg;
                         if (first) {
                           m[pos] ^= uint8_t(1 + rng.below(255));
                           first = false;
                         }
                         return ev.handle(yao::parse_frame(m));
                       },
                       rng);
    } catch (const Error&) {
      aborted = true;
    }
    if (!aborted) {
      CHECK(bytes_from_bits(ev.output_bits()) == xor_bytes(g, e));
    }
  }
}
