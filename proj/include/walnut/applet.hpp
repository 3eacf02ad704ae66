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

#ifndef WALNUT_APPLET_HPP
#define WALNUT_APPLET_HPP

#include <map>
#include <optional>
#include <string>

#include "walnut/filtercode.hpp"
#include "walnut/messages.hpp"

namespace walnut {

/// The user-authored applet, in the clear. Only the user (and the NoSec
/// baseline) ever holds this whole structure.
struct AppletSpec {
  std::string id;
  std::string title;
  std::string trigger_endpoint;
  std::map<std::string, std::string> trig_inp;
  std::string action_endpoint;
  std::map<std::string, std::string> act_inp_templates;
  FilterCodeDescriptor filter;

  void validate() const {
    if (id.empty()) throw Error("applet: missing id");
    if (trigger_endpoint.empty() || action_endpoint.empty()) {
      throw Error("applet: missing endpoint");
    }
    filter.validate();
    for (const auto& [k, t] : act_inp_templates) {
      split_blocks(t);  // throws on bad syntax
    }
    if (filter.kind == FilterKind::CustomSelect &&
        act_inp_templates.count(filter.target)) {
      throw Error("applet: select target \"" + filter.target +
                  "\" also has a template");
    }
  }

  Bytes trig_inp_blob() const {
    Writer w;
    encode_kv_map(w, trig_inp);
    return w.take();
  }
};

/// App_b: one server's half of an installed applet. All literal template
/// content is XOR-shared and both tokens are ciphertexts; nothing sensitive
/// is in the clear.
struct AppletShare {
  std::string applet_id;
  uint8_t server = 0;
  TriggerRequestT t;
  std::optional<Bytes> sig_t;   // active mode
  Bytes pk_ts;                  // for the TEEs' tout checks
  std::string action_endpoint;
  Bytes c_at_as;
  KeyedShareMap sh_act_inp;
  FilterCodeDescriptor fc;
  std::optional<TokenChain> chain_ts;
  std::optional<TokenChain> chain_as;
  Bytes c_rt_ts;  // encrypted refresh tokens; M0 presents them on refresh
  Bytes c_rt_as;

  Bytes encode() const {
    Writer w;
    w.put_str(applet_id);
    w.put_u8(server);
    t.encode_core(w);
    encode_opt_bytes(w, sig_t);
    w.put_bytes(pk_ts);
    w.put_str(action_endpoint);
    w.put_bytes(c_at_as);
    encode_keyed_share_map(w, sh_act_inp);
    fc.encode(w);
    encode_opt_chain(w, chain_ts);
    encode_opt_chain(w, chain_as);
    w.put_bytes(c_rt_ts);
    w.put_bytes(c_rt_as);
    return w.take();
  }

  static AppletShare decode(Reader& r) {
    AppletShare a;
    a.applet_id = r.get_str();
    a.server = r.get_u8();
    a.t = TriggerRequestT::decode_core(r);
    a.sig_t = decode_opt_bytes(r);
    a.pk_ts = r.get_bytes();
    a.action_endpoint = r.get_str();
    a.c_at_as = r.get_bytes();
    a.sh_act_inp = decode_keyed_share_map(r);
    a.fc = FilterCodeDescriptor::decode(r);
    a.chain_ts = decode_opt_chain(r);
    a.chain_as = decode_opt_chain(r);
    a.c_rt_ts = r.get_bytes();
    a.c_rt_as = r.get_bytes();
    return a;
  }

  /// Secret bytes both halves of one server agree on; seeds the per-execution
  /// output mask so the three TEE pairs of a server re-share identically.
  Bytes mask_seed() const {
    Writer w;
    encode_keyed_share_map(w, sh_act_inp);
    w.put_str(applet_id);
    w.put_u8(server);
    return derive_bytes(w.bytes(), "walnut.mask.seed", 32);
  }
};

/// The NoSec baseline keeps the plain spec plus raw tokens.
struct NoSecApplet {
  AppletSpec spec;
  Bytes at_ts, at_as;

  Bytes encode() const {
    Writer w;
    w.put_str(spec.id);
    w.put_str(spec.title);
    w.put_str(spec.trigger_endpoint);
    encode_kv_map(w, spec.trig_inp);
    w.put_str(spec.action_endpoint);
    encode_kv_map(w, spec.act_inp_templates);
    spec.filter.encode(w);
    w.put_bytes(at_ts);
    w.put_bytes(at_as);
    return w.take();
  }

  static NoSecApplet decode(Reader& r) {
    NoSecApplet a;
    a.spec.id = r.get_str();
    a.spec.title = r.get_str();
    a.spec.trigger_endpoint = r.get_str();
    a.spec.trig_inp = decode_kv_map(r);
    a.spec.action_endpoint = r.get_str();
    a.spec.act_inp_templates = decode_kv_map(r);
    a.spec.filter = FilterCodeDescriptor::decode(r);
    a.at_ts = r.get_bytes();
    a.at_as = r.get_bytes();
    return a;
  }
};

}  // namespace walnut

#endif  // WALNUT_APPLET_HPP
