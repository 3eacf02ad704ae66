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
// Classic point-and-permute garbling: 16-byte wire labels whose low bit of
// the last byte is the permute bit, 4-row tables for AND/OR/XOR, free
// inverters (label swap). Output decode hashes double as the integrity
// check: an evaluation perturbed anywhere yields a label that matches
// neither decode hash and aborts.
//
// Two-party session framing: [session id:16][phase:1][payload len:4][payload],
// garbler-driven.
//   phase 1  garbler->evaluator  tables, garbler input labels, decode hashes,
//                                OT sender point
//   phase 2  evaluator->garbler  one OT point per evaluator input bit
//   phase 3  garbler->evaluator  OT ciphertext pairs
//   phase 4  evaluator->garbler  status (0 ok, 1 abort)

#ifndef WALNUT_GARBLE_HPP
#define WALNUT_GARBLE_HPP

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "walnut/circuit.hpp"
#include "walnut/ot.hpp"

namespace walnut::yao {

using Label = std::array<uint8_t, 16>;

struct WirePair {
  Label l0{}, l1{};
};

inline int ptr_bit(const Label& l) { return l[15] & 1; }

namespace detail {

inline Label gate_hash(uint32_t gate_index, const Label& a, const Label& b) {
  uint8_t in[4 + 1 + 32];
  in[0] = uint8_t(gate_index >> 24);
  in[1] = uint8_t(gate_index >> 16);
  in[2] = uint8_t(gate_index >> 8);
  in[3] = uint8_t(gate_index);
  in[4] = 0x00;  // domain: row encryption
  std::copy(a.begin(), a.end(), in + 5);
  std::copy(b.begin(), b.end(), in + 21);
  Label out;
  crypto_generichash(out.data(), out.size(), in, sizeof in, nullptr, 0);
  return out;
}

inline Label decode_hash(uint32_t output_index, const Label& l) {
  uint8_t in[4 + 1 + 16];
  in[0] = uint8_t(output_index >> 24);
  in[1] = uint8_t(output_index >> 16);
  in[2] = uint8_t(output_index >> 8);
  in[3] = uint8_t(output_index);
  in[4] = 0x01;  // domain: output decode
  std::copy(l.begin(), l.end(), in + 5);
  Label out;
  crypto_generichash(out.data(), out.size(), in, sizeof in, nullptr, 0);
  return out;
}

inline Label xor_labels(const Label& a, const Label& b) {
  Label out;
  for (size_t i = 0; i < out.size(); i++) out[i] = a[i] ^ b[i];
  return out;
}

inline WirePair fresh_pair(Rng& rng) {
  WirePair p;
  rng.fill(p.l0.data(), p.l0.size());
  rng.fill(p.l1.data(), p.l1.size());
  p.l1[15] = uint8_t((p.l1[15] & ~1) | (~p.l0[15] & 1));
  return p;
}

}  // namespace detail

inline constexpr size_t kGarbledRowBytes = sizeof(Label);
inline constexpr size_t kGarbledTableBytes = 4 * kGarbledRowBytes;

struct GarbledCircuit {
  // One 4-row table per AND/OR/XOR gate, in gate order.
  std::vector<std::array<Label, 4>> tables;
  // Decode hash pair (for 0, for 1) per output wire.
  std::vector<std::pair<Label, Label>> decode;
  // Label pairs for every input wire; stays with the garbler.
  std::vector<WirePair> inputs;
};

inline GarbledCircuit garble(const BooleanCircuit& c, Rng& rng) {
  GarbledCircuit gc;
  std::vector<WirePair> wires(c.num_wires);
  for (uint32_t w = 0; w < c.input_count(); w++) {
    wires[w] = detail::fresh_pair(rng);
  }
  gc.inputs.assign(wires.begin(), wires.begin() + c.input_count());

  gc.tables.reserve(c.tabled_gates());
  for (uint32_t gi = 0; gi < c.gates.size(); gi++) {
    const Gate& g = c.gates[gi];
    if (g.op == GateOp::Not) {
      wires[g.out] = {wires[g.a].l1, wires[g.a].l0};
      continue;
    }
    WirePair out = detail::fresh_pair(rng);
    wires[g.out] = out;
    std::array<Label, 4> table{};
    for (int va = 0; va <= 1; va++) {
      for (int vb = 0; vb <= 1; vb++) {
        const Label& la = va ? wires[g.a].l1 : wires[g.a].l0;
        const Label& lb = vb ? wires[g.b].l1 : wires[g.b].l0;
        int vo;
        switch (g.op) {
          case GateOp::And: vo = va & vb; break;
          case GateOp::Or: vo = va | vb; break;
          default: vo = va ^ vb; break;
        }
        const Label& lo = vo ? out.l1 : out.l0;
        table[ptr_bit(la) * 2 + ptr_bit(lb)] =
            detail::xor_labels(detail::gate_hash(gi, la, lb), lo);
      }
    }
    gc.tables.push_back(table);
  }

  gc.decode.reserve(c.outputs.size());
  for (uint32_t k = 0; k < c.outputs.size(); k++) {
    const WirePair& p = wires[c.outputs[k]];
    gc.decode.emplace_back(detail::decode_hash(k, p.l0),
                           detail::decode_hash(k, p.l1));
  }
  return gc;
}

/// Walks the gates with one active label per wire.
inline std::vector<Label> evaluate(
    const BooleanCircuit& c, const std::vector<std::array<Label, 4>>& tables,
    const std::vector<Label>& input_labels) {
  if (input_labels.size() != c.input_count()) {
    throw Error("evaluate: missing input label");
  }
  if (tables.size() != c.tabled_gates()) {
    throw Error("evaluate: table count mismatch");
  }
  std::vector<Label> wires(c.num_wires);
  std::copy(input_labels.begin(), input_labels.end(), wires.begin());
  size_t ti = 0;
  for (uint32_t gi = 0; gi < c.gates.size(); gi++) {
    const Gate& g = c.gates[gi];
    if (g.op == GateOp::Not) {
      wires[g.out] = wires[g.a];
      continue;
    }
    const Label& la = wires[g.a];
    const Label& lb = wires[g.b];
    const Label& row = tables[ti++][ptr_bit(la) * 2 + ptr_bit(lb)];
    wires[g.out] = detail::xor_labels(row, detail::gate_hash(gi, la, lb));
  }
  std::vector<Label> out;
  out.reserve(c.outputs.size());
  for (uint32_t w : c.outputs) out.push_back(wires[w]);
  return out;
}

/// Maps active output labels to bits via the decode hashes; any label that
/// matches neither hash is treated as tampering.
inline BitVec decode_outputs(const std::vector<std::pair<Label, Label>>& decode,
                             const std::vector<Label>& labels) {
  if (decode.size() != labels.size()) throw Error("decode: size mismatch");
  BitVec bits(labels.size());
  for (uint32_t k = 0; k < labels.size(); k++) {
    Label h = detail::decode_hash(k, labels[k]);
    if (h == decode[k].first) {
      bits[k] = 0;
    } else if (h == decode[k].second) {
      bits[k] = 1;
    } else {
      throw Error("decode: output label matches neither hash (tampered?)");
    }
  }
  return bits;
}

// ---------------------------------------------------------------------------
// Two-party session

inline Bytes frame(std::span<const uint8_t> session, uint8_t phase,
                   std::span<const uint8_t> payload) {
  if (session.size() != 16) throw Error("yao: session id must be 16 bytes");
  Writer w;
  w.put_raw(session);
  w.put_u8(phase);
  w.put_bytes(payload);
  return w.take();
}

struct Frame {
  Bytes session;
  uint8_t phase = 0;
  Bytes payload;
};

inline Frame parse_frame(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  Frame f;
  f.session = r.get_raw(16);
  f.phase = r.get_u8();
  f.payload = r.get_bytes();
  r.expect_end();
  return f;
}

/// Evaluator endpoint: owns the circuit and its input bits, answers the
/// garbler's frames, and holds the decoded output share when done.
class Evaluator {
 public:
  Evaluator(BooleanCircuit circuit, BitVec inputs, Rng& rng)
      : circuit_(std::move(circuit)), inputs_(std::move(inputs)), rng_(rng) {
    if (inputs_.size() != circuit_.evaluator_inputs) {
      throw Error("yao evaluator: input size mismatch");
    }
  }

  Bytes handle(const Frame& f) {
    switch (f.phase) {
      case 1: return frame(f.session, 2, on_garbled(f.payload));
      case 3: return frame(f.session, 4, on_ot_response(f.payload));
      default: throw Error("yao evaluator: unexpected phase");
    }
  }

  bool done() const { return done_; }
  const BitVec& output_bits() const {
    if (!done_) throw Error("yao evaluator: not finished");
    return output_;
  }

 private:
  Bytes on_garbled(std::span<const uint8_t> payload) {
    Reader r(payload);
    tables_.resize(circuit_.tabled_gates());
    for (auto& t : tables_) {
      for (auto& row : t) {
        Bytes b = r.get_raw(row.size());
        std::copy(b.begin(), b.end(), row.begin());
      }
    }
    garbler_labels_.resize(circuit_.garbler_inputs);
    for (auto& l : garbler_labels_) {
      Bytes b = r.get_raw(l.size());
      std::copy(b.begin(), b.end(), l.begin());
    }
    decode_.resize(circuit_.outputs.size());
    for (auto& d : decode_) {
      Bytes b0 = r.get_raw(d.first.size());
      Bytes b1 = r.get_raw(d.second.size());
      std::copy(b0.begin(), b0.end(), d.first.begin());
      std::copy(b1.begin(), b1.end(), d.second.begin());
    }
    ot_s_point_ = r.get_raw(kOtPointBytes);
    r.expect_end();

    Writer w;
    choices_.clear();
    choices_.reserve(inputs_.size());
    for (uint8_t bit : inputs_) {
      choices_.push_back(ot_choose(ot_s_point_, bit, rng_));
      w.put_raw(choices_.back().r_point);
    }
    return w.take();
  }

  Bytes on_ot_response(std::span<const uint8_t> payload) {
    Reader r(payload);
    std::vector<Label> active(circuit_.input_count());
    std::copy(garbler_labels_.begin(), garbler_labels_.end(), active.begin());
    Writer w;
    try {
      for (size_t j = 0; j < inputs_.size(); j++) {
        Bytes e0 = r.get_raw(sizeof(Label));
        Bytes e1 = r.get_raw(sizeof(Label));
        Bytes m = ot_finish(choices_[j], ot_s_point_, e0, e1, inputs_[j], j);
        std::copy(m.begin(), m.end(),
                  active[circuit_.garbler_inputs + j].begin());
      }
      r.expect_end();
      output_ = decode_outputs(decode_, evaluate(circuit_, tables_, active));
      done_ = true;
      w.put_u8(0);
    } catch (const Error&) {
      w.put_u8(1);
    }
    return w.take();
  }

  BooleanCircuit circuit_;
  BitVec inputs_;
  Rng& rng_;
  std::vector<std::array<Label, 4>> tables_;
  std::vector<Label> garbler_labels_;
  std::vector<std::pair<Label, Label>> decode_;
  Bytes ot_s_point_;
  std::vector<OtChoice> choices_;
  BitVec output_;
  bool done_ = false;
};

/// Drives the garbler side of one session. `round` transports a framed
/// message to the evaluator and returns its framed reply.
inline void run_garbler(const BooleanCircuit& circuit, const BitVec& g_bits,
                        std::span<const uint8_t> session,
                        const std::function<Bytes(const Bytes&)>& round,
                        Rng& rng) {
  if (g_bits.size() != circuit.garbler_inputs) {
    throw Error("yao garbler: input size mismatch");
  }
  GarbledCircuit gc = garble(circuit, rng);
  OtSenderSetup ot = ot_setup_sender(rng);

  Writer w1;
  for (const auto& t : gc.tables) {
    for (const auto& row : t) w1.put_raw(row);
  }
  for (uint32_t i = 0; i < circuit.garbler_inputs; i++) {
    w1.put_raw(g_bits[i] ? gc.inputs[i].l1 : gc.inputs[i].l0);
  }
  for (const auto& d : gc.decode) {
    w1.put_raw(d.first);
    w1.put_raw(d.second);
  }
  w1.put_raw(ot.s_point);

  Frame reply = parse_frame(round(frame(session, 1, w1.bytes())));
  if (reply.phase != 2) throw Error("yao garbler: bad reply phase");
  Reader r(reply.payload);
  Writer w3;
  for (uint32_t j = 0; j < circuit.evaluator_inputs; j++) {
    Bytes r_point = r.get_raw(kOtPointBytes);
    const WirePair& p = gc.inputs[circuit.garbler_inputs + j];
    Bytes m0(p.l0.begin(), p.l0.end());
    Bytes m1(p.l1.begin(), p.l1.end());
    auto [e0, e1] = ot_respond(ot, r_point, m0, m1, j);
    w3.put_raw(e0);
    w3.put_raw(e1);
  }
  r.expect_end();

  Frame status = parse_frame(round(frame(session, 3, w3.bytes())));
  if (status.phase != 4 || status.payload.size() != 1 ||
      status.payload[0] != 0) {
    throw Error("yao garbler: evaluator aborted");
  }
}

struct TwoPartyResult {
  BitVec evaluator_output;  // f(x) ^ mask when the circuit re-shares
  size_t bytes_transferred = 0;
  size_t messages = 0;
};

/// In-process pairing of the two roles over a counted loopback. Protocol
/// paths route the same frames through the deployment transport instead.
inline TwoPartyResult two_party_eval(const BooleanCircuit& circuit,
                                     const BitVec& garbler_bits,
                                     const BitVec& evaluator_bits, Rng& rng) {
  TwoPartyResult res;
  Evaluator ev(circuit, evaluator_bits, rng);
  Bytes session(16, 0x5a);
  run_garbler(circuit, garbler_bits, session,
              [&](const Bytes& msg) {
                res.bytes_transferred += msg.size();
                res.messages++;
                Bytes reply = ev.handle(parse_frame(msg));
                res.bytes_transferred += reply.size();
                res.messages++;
                return reply;
              },
              rng);
  res.evaluator_output = ev.output_bits();
  return res;
}

}  // namespace walnut::yao

#endif  // WALNUT_GARBLE_HPP
