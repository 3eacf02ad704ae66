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
// Measurement layer: runs a system variant over a declarative workload for N
// cycles, accounts bytes per directed channel and phase plus CPU per party,
// prices the run, and drives fault injection. The JSON report is the stable
// machine-readable output; its timing fields (cpu seconds and the dollar
// figures derived from them) are the only nondeterministic parts.

#ifndef WALNUT_HARNESS_HPP
#define WALNUT_HARNESS_HPP

#include <json.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "walnut/deployment.hpp"
#include "walnut/leakage.hpp"

namespace walnut {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Workloads

struct TriggerValuePlan {
  enum class Mode : uint8_t { Pool, Random, Mixed };
  Mode mode = Mode::Mixed;
  std::vector<std::string> pool = {"sunny", "rainy", "cloudy", "partly cloudy"};
  uint32_t max_random_length = 16;
  double random_weight = 0.5;

  std::string value_for_cycle(Rng& rng) const {
    bool random = mode == Mode::Random ||
                  (mode == Mode::Mixed &&
                   double(rng.below(1000)) < random_weight * 1000);
    if (!random && !pool.empty()) return pool[rng.below(pool.size())];
    static const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyz 0123456789.,!?";
    size_t len = 1 + rng.below(std::max<uint32_t>(1, max_random_length));
    std::string s;
    for (size_t i = 0; i < len; i++) {
      s.push_back(alphabet[rng.below(alphabet.size())]);
    }
    return s;
  }
};

struct Workload {
  std::string name;
  AppletSpec applet;
  TriggerValuePlan values;
  uint32_t epochs = 1;
  TokenPolicy tokens;

  static Workload from_json(const Json& j) {
    Workload w;
    w.name = j.at("name").get<std::string>();
    const Json& a = j.at("applet");
    w.applet.id = a.at("id").get<std::string>();
    w.applet.title = a.value("title", std::string{});
    w.applet.trigger_endpoint = a.at("trigger").at("endpoint").get<std::string>();
    Json trig_input = a.at("trigger").value("input", Json::object());
    for (auto& [k, v] : trig_input.items()) {
      w.applet.trig_inp[k] = v.get<std::string>();
    }
    w.applet.action_endpoint = a.at("action").at("endpoint").get<std::string>();
    Json templates = a.at("action").value("templates", Json::object());
    for (auto& [k, v] : templates.items()) {
      w.applet.act_inp_templates[k] = v.get<std::string>();
    }
    const Json& fc = a.at("filter_code");
    std::string kind = fc.at("kind").get<std::string>();
    if (kind == "pass_around") {
      w.applet.filter.kind = FilterKind::PassAround;
    } else if (kind == "string_sub") {
      w.applet.filter.kind = FilterKind::StringSub;
    } else if (kind == "custom_select") {
      w.applet.filter.kind = FilterKind::CustomSelect;
      w.applet.filter.key = fc.at("key").get<std::string>();
      w.applet.filter.target = fc.at("target").get<std::string>();
      for (const Json& c : fc.at("cases")) {
        w.applet.filter.cases.push_back({c.at("match").get<std::string>(),
                                         c.at("template").get<std::string>()});
      }
      w.applet.filter.default_templ = fc.at("default").get<std::string>();
    } else {
      throw Error("workload: unknown filter kind \"" + kind + "\"");
    }

    if (j.contains("trigger_values")) {
      const Json& tv = j.at("trigger_values");
      std::string mode = tv.value("mode", std::string("mixed"));
      w.values.mode = mode == "pool"     ? TriggerValuePlan::Mode::Pool
                      : mode == "random" ? TriggerValuePlan::Mode::Random
                                         : TriggerValuePlan::Mode::Mixed;
      if (tv.contains("pool")) {
        w.values.pool.clear();
        for (const Json& p : tv.at("pool")) {
          w.values.pool.push_back(p.get<std::string>());
        }
      }
      w.values.max_random_length = tv.value("max_random_length", 16u);
      w.values.random_weight = tv.value("random_weight", 0.5);
    }
    if (j.contains("schedule")) {
      const Json& s = j.at("schedule");
      w.epochs = s.value("epochs", 1u);
      w.tokens.access_lifetime_epochs =
          s.value("access_token_lifetime_epochs", 0u);
      w.tokens.refresh_lifetime_epochs =
          s.value("refresh_token_lifetime_epochs", 0u);
    }
    w.applet.validate();
    return w;
  }

  static Workload load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read workload file " + file.string());
    Json j = Json::parse(in);
    return from_json(j);
  }

  /// The three built-in weather->email workloads.
  static Workload builtin(FilterKind kind) {
    Workload w;
    w.applet.title = "Daily weather email";
    w.applet.trigger_endpoint = "weather/current";
    w.applet.trig_inp = {{"city", "SB"}};
    w.applet.action_endpoint = "email/send";
    w.applet.act_inp_templates["to"] = "user@example.com";
    switch (kind) {
      case FilterKind::PassAround:
        w.name = "weather-email-passaround";
        w.applet.id = "wx-pass";
        w.applet.filter.kind = FilterKind::PassAround;
        w.applet.act_inp_templates["body"] = "{{new_weather_type}}";
        break;
      case FilterKind::StringSub:
        w.name = "weather-email-stringsub";
        w.applet.id = "wx-sub";
        w.applet.filter.kind = FilterKind::StringSub;
        w.applet.act_inp_templates["body"] =
            "This is an example of a substituted string. The new type of "
            "weather is {{new_weather_type}}";
        break;
      case FilterKind::CustomSelect:
        w.name = "weather-email-custom";
        w.applet.id = "wx-select";
        w.applet.filter.kind = FilterKind::CustomSelect;
        w.applet.filter.key = "new_weather_type";
        w.applet.filter.target = "body";
        w.applet.filter.cases = {
            {"sunny", "Clear skies today. The new type of weather is sunny"},
            {"rainy", "Take an umbrella. The new type of weather is rainy"}};
        w.applet.filter.default_templ = "No forecast available for this weather";
        w.values.max_random_length = 12;
        break;
    }
    return w;
  }
};

// ---------------------------------------------------------------------------
// Pricing (dollars = cpu_hours * C + gigabytes * D)

struct CostModel {
  double cpu_dollars_per_hour = 0.198;
  double network_dollars_per_gb = 0.087;
};

inline double dollar_cost(double cpu_hours, double gigabytes,
                          const CostModel& model = {}) {
  return cpu_hours * model.cpu_dollars_per_hour +
         gigabytes * model.network_dollars_per_gb;
}

// ---------------------------------------------------------------------------
// Reports

struct RunReport {
  std::string variant;
  std::string workload;
  uint32_t cycles = 0;
  uint32_t epochs = 1;
  uint64_t seed = 0;

  struct ChannelRow {
    std::string from, to, phase;
    uint64_t bytes = 0, messages = 0;
  };
  std::vector<ChannelRow> channels;
  std::map<std::string, double> cpu_seconds;

  uint64_t total_bytes = 0;
  uint64_t platform_bytes = 0;
  uint64_t inter_server_bytes = 0;
  std::map<std::string, uint64_t> inter_server_by_phase;
  uint64_t trigger_service_bytes = 0;
  uint64_t action_service_bytes = 0;

  std::map<std::string, uint64_t> storage;
  std::vector<OutboxEntry> effects;

  struct AbortRow {
    uint32_t cycle = 0;
    std::string phase, party;
    int code = 0;
    std::string code_name, detail;
  };
  std::vector<AbortRow> aborts;

  Json leakage;
  double cpu_hours = 0, gigabytes = 0;
  CostModel cost_model;

  bool clean() const { return aborts.empty(); }

  Json to_json() const {
    Json j;
    j["run"] = {{"variant", variant},
                {"workload", workload},
                {"cycles", cycles},
                {"epochs", epochs},
                {"seed", seed}};
    j["leakage"] = leakage;
    Json chans = Json::array();
    for (const auto& c : channels) {
      chans.push_back({{"from", c.from},
                       {"to", c.to},
                       {"phase", c.phase},
                       {"bytes", c.bytes},
                       {"messages", c.messages}});
    }
    j["channels"] = std::move(chans);
    j["cpu_seconds"] = cpu_seconds;
    j["totals"] = {{"total_bytes", total_bytes},
                   {"platform_bytes", platform_bytes},
                   {"inter_server_bytes", inter_server_bytes},
                   {"inter_server_by_phase", inter_server_by_phase},
                   {"trigger_service_bytes", trigger_service_bytes},
                   {"action_service_bytes", action_service_bytes}};
    j["storage"] = storage;
    Json eff = Json::array();
    for (const auto& e : effects) {
      eff.push_back({{"endpoint", e.endpoint}, {"fields", e.fields}});
    }
    j["effects"] = std::move(eff);
    Json ab = Json::array();
    for (const auto& a : aborts) {
      ab.push_back({{"cycle", a.cycle},
                    {"phase", a.phase},
                    {"party", a.party},
                    {"code", a.code},
                    {"code_name", a.code_name},
                    {"detail", a.detail}});
    }
    j["aborts"] = std::move(ab);
    j["dollars"] = {{"cpu_hours", cpu_hours},
                    {"gigabytes", gigabytes},
                    {"cpu_rate_per_hour", cost_model.cpu_dollars_per_hour},
                    {"network_rate_per_gb", cost_model.network_dollars_per_gb},
                    {"cpu_dollars", cpu_hours * cost_model.cpu_dollars_per_hour},
                    {"network_dollars",
                     gigabytes * cost_model.network_dollars_per_gb},
                    {"total_dollars",
                     dollar_cost(cpu_hours, gigabytes, cost_model)}};
    return j;
  }

  void save(const std::filesystem::path& file) const {
    std::ofstream out(file);
    out << to_json().dump(2) << "\n";
  }
};

/// Strips the timing-derived fields; what remains is bytewise reproducible
/// under a fixed seed.
inline Json canonical_report(Json j) {
  j.erase("cpu_seconds");
  if (j.contains("dollars")) {
    j["dollars"].erase("cpu_hours");
    j["dollars"].erase("cpu_dollars");
    j["dollars"].erase("total_dollars");
  }
  return j;
}

/// Paths at which two reports differ (cpu/dollar timing fields excluded by
/// default).
inline std::vector<std::string> report_diff(const Json& a, const Json& b,
                                            bool ignore_cpu = true) {
  std::vector<std::string> diffs;
  std::function<void(const Json&, const Json&, const std::string&)> walk =
      [&](const Json& x, const Json& y, const std::string& path) {
        if (x.is_object() && y.is_object()) {
          for (auto& [k, v] : x.items()) {
            if (!y.contains(k)) {
              diffs.push_back(path + "/" + k + " (only in first)");
            } else {
              walk(v, y.at(k), path + "/" + k);
            }
          }
          for (auto& [k, v] : y.items()) {
            if (!x.contains(k)) diffs.push_back(path + "/" + k + " (only in second)");
          }
        } else if (x != y) {
          diffs.push_back(path);
        }
      };
  Json ca = ignore_cpu ? canonical_report(a) : a;
  Json cb = ignore_cpu ? canonical_report(b) : b;
  walk(ca, cb, "");
  return diffs;
}

// ---------------------------------------------------------------------------
// Running variants

struct RunConfig {
  Variant variant;
  Workload workload;
  uint32_t cycles = 1;
  uint64_t seed = 1;
  std::filesystem::path state_dir;  // empty: scratch dir, removed afterwards
};

inline Json leakage_json(const LeakageDescriptor& d) {
  Json j;
  Json k = Json::object(), p = Json::object(), n = Json::object();
  for (const auto& [key, names] : d.contributing_keys) {
    k[key] = names;
    p[key] = d.positions.at(key);
    n[key] = d.block_counts.at(key);
  }
  j["contributing_keys"] = std::move(k);
  j["positions"] = std::move(p);
  j["block_counts"] = std::move(n);
  j["filter_kind"] = filter_kind_name(d.filter.kind);
  j["trigger_endpoint"] = d.trigger_endpoint;
  j["action_endpoint"] = d.action_endpoint;
  return j;
}

namespace detail {

class ScratchDir {
 public:
  explicit ScratchDir(std::filesystem::path explicit_dir) {
    if (explicit_dir.empty()) {
      path_ = std::filesystem::temp_directory_path() /
              ("walnut_run_" + std::to_string(counter_++) + "_" +
               std::to_string(uint64_t(::getpid())));
      std::filesystem::remove_all(path_);
      owned_ = true;
    } else {
      path_ = std::move(explicit_dir);
    }
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    if (owned_) std::filesystem::remove_all(path_);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
  bool owned_ = false;
};

}  // namespace detail

/// Deploys the variant, installs the workload applet, fires `cycles` cycles
/// spread over the workload's epochs, and assembles the report.
inline RunReport run_variant(const RunConfig& cfg) {
  detail::ScratchDir scratch(cfg.state_dir);

  Deployment::Config dc;
  dc.variant = cfg.variant;
  dc.seed = cfg.seed;
  dc.deterministic = true;
  dc.tokens = cfg.workload.tokens;
  dc.state_dir = scratch.path();
  Deployment dep(dc);

  std::string id = dep.install(cfg.workload.applet);

  // Trigger values come from their own stream so every variant sees the same
  // sequence under one seed.
  SeededRng values_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  RunReport rep;
  rep.variant = cfg.variant.name();
  rep.workload = cfg.workload.name;
  rep.cycles = cfg.cycles;
  rep.epochs = cfg.workload.epochs;
  rep.seed = cfg.seed;
  rep.leakage = leakage_json(leakage_of(cfg.workload.applet, dep.ctx().pad));

  uint32_t epochs = std::max<uint32_t>(1, cfg.workload.epochs);
  uint32_t per_epoch = std::max<uint32_t>(1, cfg.cycles / epochs);
  uint32_t fired = 0;
  for (uint32_t e = 0; e < epochs && fired < cfg.cycles; e++) {
    if (e > 0) {
      for (const AbortRecord& a : dep.advance_epoch()) {
        rep.aborts.push_back({fired, phase_name(a.phase), party_name(a.party),
                              int(a.code), err_name(a.code), a.detail});
      }
    }
    for (uint32_t c = 0; c < per_epoch && fired < cfg.cycles; c++, fired++) {
      dep.trigger_service().set_weather(
          cfg.workload.values.value_for_cycle(values_rng));
      CycleResult res = dep.fire(id);
      for (const AbortRecord& a : res.aborts) {
        rep.aborts.push_back({fired, phase_name(a.phase), party_name(a.party),
                              int(a.code), err_name(a.code), a.detail});
      }
    }
  }

  const Transport& t = dep.transport();
  for (const auto& [key, st] : t.stats()) {
    rep.channels.push_back({party_name(std::get<0>(key)),
                            party_name(std::get<1>(key)),
                            phase_name(std::get<2>(key)), st.bytes,
                            st.messages});
  }
  for (Party p : kAllParties) {
    double s = t.cpu().seconds(p);
    if (s > 0) rep.cpu_seconds[party_name(p)] = s;
  }
  rep.total_bytes = t.total_bytes();
  rep.platform_bytes = t.platform_bytes();
  rep.inter_server_bytes = t.inter_server_bytes();
  for (Phase ph : kAllPhases) {
    rep.inter_server_by_phase[phase_name(ph)] = t.inter_server_bytes(ph);
  }
  rep.trigger_service_bytes = t.service_bytes(Party::TS);
  rep.action_service_bytes = t.service_bytes(Party::AS);
  rep.storage = dep.applet_storage();
  rep.effects = dep.action_service().outbox().entries();
  rep.cpu_hours = t.cpu().total_seconds() / 3600.0;
  rep.gigabytes = double(t.total_bytes()) / (1024.0 * 1024.0 * 1024.0);
  return rep;
}

// ---------------------------------------------------------------------------
// Fault injection

struct FaultSpec {
  enum class Kind : uint8_t { Tamper, Replay, Drop, MaliciousM };
  // Tamper targets: "trigger_request", "tout", "ain", "chain", "proof".
  // Drop targets: "ain0", "ain1", "tout_push".
  Kind kind = Kind::Tamper;
  std::string target = "trigger_request";
  Misbehavior script = Misbehavior::None;  // MaliciousM
  uint64_t seed = 1;
};

struct FaultReport {
  bool rejected = false;       // some party rejected (or the cycle timed out)
  bool effect_occurred = false;
  std::string party;
  int code = 0;
  std::string code_name;
  std::string detail;
  size_t flip_offset = 0;      // absolute offset of the flipped byte (tamper)
  size_t region_offset = 0;    // offset within the targeted region
  size_t region_size = 0;

  /// A fault that still produced an action effect is a broken security
  /// property, not a passing test.
  bool security_failure() const { return effect_occurred; }
};

namespace detail {

struct TamperPlan {
  size_t region_begin = 0;
  size_t region_size = 0;
  bool applies = false;
};

/// Locates the byte region a tamper target refers to inside a request frame.
inline TamperPlan tamper_region(const std::string& target, Party to,
                                bool is_response, const Bytes& data) {
  TamperPlan plan;
  if (is_response || data.empty()) return plan;
  MsgType ty = MsgType(data[0]);
  Reader r(std::span<const uint8_t>(data.data() + 1, data.size() - 1));
  try {
    if (target == "trigger_request" && ty == MsgType::TriggerPoll) {
      TriggerPollMsg m = TriggerPollMsg::decode(r);
      plan = {1, m.t.core_bytes().size(), true};
    } else if (target == "tout" && ty == MsgType::ToutToTee) {
      ToutToTeeMsg m = ToutToTeeMsg::decode(r);
      plan = {1 + 4 + m.applet_id.size(), m.body.tout.core_bytes().size(),
              true};
    } else if (target == "ain" && ty == MsgType::ActionSubmit) {
      ActionSubmitMsg m = ActionSubmitMsg::decode(r);
      plan = {3, m.ain.core_bytes().size(), true};
    } else if (target == "proof" && ty == MsgType::ActionSubmit) {
      ActionSubmitMsg m = ActionSubmitMsg::decode(r);
      if (!m.proofs.empty()) {
        plan = {3 + m.ain.core_bytes().size() + 1, m.proofs.size() * (2 + 64),
                true};
      }
    } else if (target == "chain" && ty == MsgType::TriggerPoll && to == Party::TS) {
      TriggerPollMsg m = TriggerPollMsg::decode(r);
      if (m.chain) {
        size_t chain_size = 4 + m.chain->ciphertext.size() + 64 + 4;
        plan = {data.size() - chain_size, chain_size, true};
      }
    }
  } catch (const Error&) {
    return {};
  }
  return plan;
}

}  // namespace detail

/// Runs one faulted cycle of the workload under the given variant and
/// records who rejected it.
inline FaultReport inject_fault(const RunConfig& cfg, const FaultSpec& fault) {
  detail::ScratchDir scratch(cfg.state_dir);
  Deployment::Config dc;
  dc.variant = cfg.variant;
  dc.seed = cfg.seed;
  dc.deterministic = true;
  dc.tokens = cfg.workload.tokens;
  dc.state_dir = scratch.path();
  Deployment dep(dc);
  std::string id = dep.install(cfg.workload.applet);

  FaultReport rep;
  SeededRng fault_rng(fault.seed);

  if (fault.kind == FaultSpec::Kind::Replay) {
    // One clean cycle, then the captured action submissions again.
    dep.transport().record_transcript(true);
    CycleResult clean = dep.fire(id);
    if (!clean.executed) {
      rep.detail = "clean cycle failed";
      return rep;
    }
    std::vector<std::pair<Party, Bytes>> submits;
    for (const auto& rec : dep.transport().transcript()) {
      if (!rec.is_response && rec.to == Party::AS &&
          rec.data[0] == uint8_t(MsgType::ActionSubmit)) {
        submits.push_back({rec.from, rec.data});
      }
    }
    size_t before = dep.action_service().outbox().size();
    Response last;
    for (auto& [from, bytes] : submits) {
      auto reply = dep.transport().call(from, Party::AS, bytes);
      if (reply) last = parse_response(*reply);
    }
    dep.action_service().sweep_pending();
    rep.rejected = !last.ok;
    rep.party = party_name(Party::AS);
    rep.code = int(last.code);
    rep.code_name = err_name(last.code);
    rep.effect_occurred = dep.action_service().outbox().size() > before;
    return rep;
  }

  if (fault.kind == FaultSpec::Kind::MaliciousM) {
    if (fault.script == Misbehavior::ReplayAction) {
      dep.fire(id);  // give the machine something to replay
    }
    dep.machine(0).set_misbehavior(fault.script);
    size_t before = dep.action_service().outbox().size();
    CycleResult res = dep.fire(id);
    dep.machine(0).set_misbehavior(Misbehavior::None);
    rep.rejected = !res.aborts.empty();
    if (!res.aborts.empty()) {
      rep.party = party_name(res.aborts[0].party);
      rep.code = int(res.aborts[0].code);
      rep.code_name = err_name(res.aborts[0].code);
      rep.detail = res.aborts[0].detail;
    }
    rep.effect_occurred = dep.action_service().outbox().size() > before;
    return rep;
  }

  // Tamper / Drop: a transport hook on the first matching frame.
  bool done = false;
  dep.transport().set_fault_hook([&](Party, Party to, Phase, bool is_resp,
                                     Bytes& data) {
    if (done) return FaultAction::Pass;
    if (fault.kind == FaultSpec::Kind::Drop) {
      bool match = false;
      if (!is_resp && !data.empty() &&
          data[0] == uint8_t(MsgType::ActionSubmit) && to == Party::AS) {
        Reader r(std::span<const uint8_t>(data.data() + 1, data.size() - 1));
        ActionSubmitMsg m = ActionSubmitMsg::decode(r);
        match = (fault.target == "ain0" && m.server == 0) ||
                (fault.target == "ain1" && m.server == 1);
      } else if (!is_resp && !data.empty() &&
                 data[0] == uint8_t(MsgType::ToutPush) &&
                 fault.target == "tout_push") {
        match = true;
      }
      if (match) {
        done = true;
        return FaultAction::Drop;
      }
      return FaultAction::Pass;
    }
    detail::TamperPlan plan =
        detail::tamper_region(fault.target, to, is_resp, data);
    if (!plan.applies) return FaultAction::Pass;
    size_t off = plan.region_begin + fault_rng.below(plan.region_size);
    data[off] ^= uint8_t(1 + fault_rng.below(255));
    rep.flip_offset = off;
    rep.region_offset = off - plan.region_begin;
    rep.region_size = plan.region_size;
    done = true;
    return FaultAction::Pass;
  });

  size_t before = dep.action_service().outbox().size();
  CycleResult res = dep.fire(id);
  dep.transport().clear_fault_hook();
  rep.rejected = !res.aborts.empty();
  if (!res.aborts.empty()) {
    rep.party = party_name(res.aborts[0].party);
    rep.code = int(res.aborts[0].code);
    rep.code_name = err_name(res.aborts[0].code);
    rep.detail = res.aborts[0].detail;
  }
  rep.effect_occurred = dep.action_service().outbox().size() > before;
  return rep;
}

}  // namespace walnut

#endif  // WALNUT_HARNESS_HPP
