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
// Boolean circuits and the builders for the two circuit shapes the platform
// garbles: reconstruct-and-reshare substitution, and case/template selection.

#ifndef WALNUT_CIRCUIT_HPP
#define WALNUT_CIRCUIT_HPP

#include <optional>
#include <string>
#include <vector>

#include "walnut/blocks.hpp"
#include "walnut/bytes.hpp"
#include "walnut/filtercode.hpp"

namespace walnut {

using BitVec = std::vector<uint8_t>;  // one 0/1 value per entry

inline BitVec bits_from_bytes(std::span<const uint8_t> b) {
  BitVec out(b.size() * 8);
  for (size_t i = 0; i < b.size(); i++) {
    for (int j = 0; j < 8; j++) out[i * 8 + j] = b[i] >> j & 1;
  }
  return out;
}

inline Bytes bytes_from_bits(const BitVec& bits) {
  if (bits.size() % 8 != 0) throw Error("bytes_from_bits: ragged bit count");
  Bytes out(bits.size() / 8, 0);
  for (size_t i = 0; i < bits.size(); i++) {
    out[i / 8] |= uint8_t((bits[i] & 1) << (i % 8));
  }
  return out;
}

enum class GateOp : uint8_t { And = 0, Xor = 1, Or = 2, Not = 3 };

struct Gate {
  GateOp op;
  uint32_t a = 0;
  uint32_t b = 0;  // unused for Not
  uint32_t out = 0;
};

/// Gates are appended in topological order and every gate writes a fresh
/// wire, so wire index order is evaluation order.
struct BooleanCircuit {
  uint32_t garbler_inputs = 0;
  uint32_t evaluator_inputs = 0;
  uint32_t num_wires = 0;  // inputs + one per gate
  std::vector<Gate> gates;
  std::vector<uint32_t> outputs;

  static BooleanCircuit with_inputs(uint32_t garbler, uint32_t evaluator) {
    BooleanCircuit c;
    c.garbler_inputs = garbler;
    c.evaluator_inputs = evaluator;
    c.num_wires = garbler + evaluator;
    return c;
  }

  uint32_t input_count() const { return garbler_inputs + evaluator_inputs; }

  uint32_t add(GateOp op, uint32_t a, uint32_t b = 0) {
    if (a >= num_wires || (op != GateOp::Not && b >= num_wires)) {
      throw Error("circuit: gate input wire not yet defined");
    }
    uint32_t out = num_wires++;
    gates.push_back({op, a, b, out});
    return out;
  }

  uint32_t and_(uint32_t a, uint32_t b) { return add(GateOp::And, a, b); }
  uint32_t xor_(uint32_t a, uint32_t b) { return add(GateOp::Xor, a, b); }
  uint32_t or_(uint32_t a, uint32_t b) { return add(GateOp::Or, a, b); }
  uint32_t not_(uint32_t a) { return add(GateOp::Not, a); }

  void mark_output(uint32_t w) {
    if (w >= num_wires) throw Error("circuit: output wire not defined");
    outputs.push_back(w);
  }

  size_t count(GateOp op) const {
    size_t n = 0;
    for (const Gate& g : gates) {
      if (g.op == op) n++;
    }
    return n;
  }

  // Gates that get a garbled table (inverters are free).
  size_t tabled_gates() const { return gates.size() - count(GateOp::Not); }
};

/// Plaintext evaluation; the oracle every garbled execution is checked
/// against.
inline BitVec eval_plain(const BooleanCircuit& c, const BitVec& garbler_in,
                         const BitVec& evaluator_in) {
  if (garbler_in.size() != c.garbler_inputs ||
      evaluator_in.size() != c.evaluator_inputs) {
    throw Error("eval_plain: input size mismatch");
  }
  BitVec wire(c.num_wires, 0);
  std::copy(garbler_in.begin(), garbler_in.end(), wire.begin());
  std::copy(evaluator_in.begin(), evaluator_in.end(),
            wire.begin() + c.garbler_inputs);
  for (const Gate& g : c.gates) {
    switch (g.op) {
      case GateOp::And: wire[g.out] = wire[g.a] & wire[g.b]; break;
      case GateOp::Xor: wire[g.out] = wire[g.a] ^ wire[g.b]; break;
      case GateOp::Or: wire[g.out] = wire[g.a] | wire[g.b]; break;
      case GateOp::Not: wire[g.out] = wire[g.a] ^ 1; break;
    }
  }
  BitVec out;
  out.reserve(c.outputs.size());
  for (uint32_t w : c.outputs) out.push_back(wire[w]);
  return out;
}

// ---------------------------------------------------------------------------
// Sub-circuit helpers

/// a == b over equal-width wire spans: per-bit XOR + inverter, then an AND
/// tree. Width W costs W XOR, W NOT, W-1 AND gates.
inline uint32_t add_equality(BooleanCircuit& c, std::span<const uint32_t> a,
                             std::span<const uint32_t> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error("equality: width mismatch");
  }
  std::vector<uint32_t> same;
  same.reserve(a.size());
  for (size_t i = 0; i < a.size(); i++) {
    same.push_back(c.not_(c.xor_(a[i], b[i])));
  }
  while (same.size() > 1) {
    std::vector<uint32_t> next;
    for (size_t i = 0; i + 1 < same.size(); i += 2) {
      next.push_back(c.and_(same[i], same[i + 1]));
    }
    if (same.size() % 2 == 1) next.push_back(same.back());
    same = std::move(next);
  }
  return same[0];
}

/// sel ? a : b, per bit: b ^ (sel & (a ^ b)).
inline std::vector<uint32_t> add_mux(BooleanCircuit& c, uint32_t sel,
                                     std::span<const uint32_t> a,
                                     std::span<const uint32_t> b) {
  if (a.size() != b.size()) throw Error("mux: width mismatch");
  std::vector<uint32_t> out;
  out.reserve(a.size());
  for (size_t i = 0; i < a.size(); i++) {
    out.push_back(c.xor_(b[i], c.and_(sel, c.xor_(a[i], b[i]))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruct / substitution circuits
//
// Both servers feed their concatenated share bytes; the circuit XORs them
// back together and, when a mask is present, re-shares the result with the
// garbler-chosen mask. Garbler inputs: share || mask. Evaluator: share.

inline BooleanCircuit build_reconstruct_circuit(uint32_t width_bits) {
  BooleanCircuit c = BooleanCircuit::with_inputs(width_bits, width_bits);
  for (uint32_t i = 0; i < width_bits; i++) {
    c.mark_output(c.xor_(i, width_bits + i));
  }
  return c;
}

inline BooleanCircuit build_substitution_circuit(uint32_t width_bits) {
  BooleanCircuit c = BooleanCircuit::with_inputs(2 * width_bits, width_bits);
  for (uint32_t i = 0; i < width_bits; i++) {
    uint32_t share_g = i;
    uint32_t mask = width_bits + i;
    uint32_t share_e = 2 * width_bits + i;
    c.mark_output(c.xor_(c.xor_(share_g, share_e), mask));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Selection circuit (CustomSelect filterCode)

inline constexpr uint32_t kMaxSelectValueBytes = 4096;

/// The byte-level plan for one CustomSelect execution: constants and
/// templates segment-encoded exactly as the share pipeline would encode them,
/// plus the circuit over those widths.
struct SelectPlan {
  uint32_t value_bytes = 0;  // width of the shared trigOut block
  uint32_t out_bytes = 0;    // width of the selected output block
  std::vector<std::optional<Bytes>> case_consts;  // nullopt: cannot match
  std::vector<Bytes> case_templates;
  Bytes default_templ;
  BooleanCircuit circuit;

  // Garbler input layout: value_share || mask || consts... || templates... ||
  // default. Evaluator input: value_share.
  BitVec garbler_bits(std::span<const uint8_t> value_share,
                      std::span<const uint8_t> mask) const {
    if (value_share.size() != value_bytes || mask.size() != out_bytes) {
      throw Error("select: garbler input size mismatch");
    }
    Bytes all(value_share.begin(), value_share.end());
    all.insert(all.end(), mask.begin(), mask.end());
    for (const auto& c : case_consts) {
      if (c) all.insert(all.end(), c->begin(), c->end());
    }
    for (const auto& t : case_templates) all.insert(all.end(), t.begin(), t.end());
    all.insert(all.end(), default_templ.begin(), default_templ.end());
    return bits_from_bytes(all);
  }

  BitVec evaluator_bits(std::span<const uint8_t> value_share) const {
    if (value_share.size() != value_bytes) {
      throw Error("select: evaluator input size mismatch");
    }
    return bits_from_bytes(value_share);
  }
};

/// Lays out the compare-and-select circuit over already-encoded constants.
/// Every template must be out_bytes wide; a nullopt constant marks a case
/// that can never match and is compiled out.
inline SelectPlan build_select_plan_raw(
    uint32_t value_bytes, std::vector<std::optional<Bytes>> case_consts,
    std::vector<Bytes> case_templates, Bytes default_templ) {
  if (value_bytes == 0 || value_bytes > kMaxSelectValueBytes) {
    throw Error("select: value length " + std::to_string(value_bytes) +
                " outside configured maximum " +
                std::to_string(kMaxSelectValueBytes));
  }
  if (case_consts.size() != case_templates.size() || case_consts.empty()) {
    throw Error("select: case/template count mismatch");
  }
  SelectPlan plan;
  plan.value_bytes = value_bytes;
  plan.out_bytes = uint32_t(default_templ.size());
  for (const auto& t : case_templates) {
    if (t.size() != plan.out_bytes) throw Error("select: ragged templates");
  }
  for (const auto& cc : case_consts) {
    if (cc && cc->size() != value_bytes) {
      throw Error("select: constant width mismatch");
    }
  }
  plan.case_consts = std::move(case_consts);
  plan.case_templates = std::move(case_templates);
  plan.default_templ = std::move(default_templ);

  const uint32_t vbits = plan.value_bytes * 8;
  const uint32_t obits = plan.out_bytes * 8;
  const uint32_t n_cases = uint32_t(plan.case_consts.size());
  uint32_t live_cases = 0;
  for (const auto& cc : plan.case_consts) {
    if (cc) live_cases++;
  }
  const uint32_t g_inputs =
      vbits + obits + live_cases * vbits + (n_cases + 1) * obits;

  BooleanCircuit& c = plan.circuit;
  c = BooleanCircuit::with_inputs(g_inputs, vbits);

  uint32_t off = 0;
  auto next_wires = [&](uint32_t n) {
    std::vector<uint32_t> w(n);
    for (uint32_t i = 0; i < n; i++) w[i] = off + i;
    off += n;
    return w;
  };
  std::vector<uint32_t> w_value_g = next_wires(vbits);
  std::vector<uint32_t> w_mask = next_wires(obits);
  std::vector<std::vector<uint32_t>> w_consts;
  for (const auto& cc : plan.case_consts) {
    w_consts.push_back(cc ? next_wires(vbits) : std::vector<uint32_t>{});
  }
  std::vector<std::vector<uint32_t>> w_templates;
  for (uint32_t i = 0; i < n_cases; i++) w_templates.push_back(next_wires(obits));
  std::vector<uint32_t> w_default = next_wires(obits);
  std::vector<uint32_t> w_value_e = next_wires(vbits);

  // Reconstruct the trigOut value.
  std::vector<uint32_t> value(vbits);
  for (uint32_t i = 0; i < vbits; i++) {
    value[i] = c.xor_(w_value_g[i], w_value_e[i]);
  }

  // Earlier cases win; fold the mux chain from the back.
  std::vector<uint32_t> selected = w_default;
  for (int i = int(n_cases) - 1; i >= 0; i--) {
    if (!plan.case_consts[i]) continue;
    uint32_t eq = add_equality(c, value, w_consts[i]);
    selected = add_mux(c, eq, w_templates[i], selected);
  }

  for (uint32_t i = 0; i < obits; i++) {
    c.mark_output(c.xor_(selected[i], w_mask[i]));
  }
  return plan;
}

/// Encodes constants/templates at the padded width of the received trigOut
/// block and lays out the select circuit. A case constant whose padded
/// profile differs from the received block's can never match it.
inline SelectPlan build_select_circuit(const FilterCodeDescriptor& fc,
                                       uint32_t value_length,
                                       const PaddingPolicy& policy) {
  if (fc.kind != FilterKind::CustomSelect) {
    throw Error("select: descriptor is not custom select");
  }
  fc.validate();

  auto encoded = [&](const std::string& t) { return padded_plaintext(t, policy); };
  uint32_t out_bytes = uint32_t(encoded(fc.default_templ).size());
  for (const auto& c : fc.cases) {
    out_bytes = std::max<uint32_t>(out_bytes, uint32_t(encoded(c.templ).size()));
  }
  auto extend = [&](Bytes b) {
    b.resize(out_bytes, 0);
    return b;
  };

  std::vector<std::optional<Bytes>> consts;
  std::vector<Bytes> templates;
  for (const auto& c : fc.cases) {
    Bytes enc = encoded(c.match);
    if (enc.size() == value_length) {
      consts.emplace_back(std::move(enc));
    } else {
      consts.emplace_back(std::nullopt);
    }
    templates.push_back(extend(encoded(c.templ)));
  }
  return build_select_plan_raw(value_length, std::move(consts),
                               std::move(templates),
                               extend(encoded(fc.default_templ)));
}

}  // namespace walnut

#endif  // WALNUT_CIRCUIT_HPP
