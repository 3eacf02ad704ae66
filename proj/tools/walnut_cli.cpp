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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "walnut/walnut.hpp"

namespace {

using namespace walnut;
namespace fs = std::filesystem;

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  return Json::parse(in);
}

/// Accepts either a full workload file or a bare applet spec.
Workload load_workload_or_spec(const fs::path& p) {
  Json j = read_json(p);
  if (!j.contains("applet")) {
    Json wrapped;
    wrapped["name"] = p.stem().string();
    wrapped["applet"] = std::move(j);
    return Workload::from_json(wrapped);
  }
  return Workload::from_json(j);
}

struct StateConfig {
  std::string variant = "w";
  std::string padding = "pow2";
  uint32_t access_lifetime = 0;
  uint32_t refresh_lifetime = 0;
};

// pow2 | multiple:N | fixed:N
PaddingPolicy parse_padding(const std::string& s) {
  if (s == "pow2") return PaddingPolicy::next_power_of_two();
  if (s.rfind("multiple:", 0) == 0) {
    return PaddingPolicy::multiple_of(uint32_t(std::stoul(s.substr(9))));
  }
  if (s.rfind("fixed:", 0) == 0) {
    return PaddingPolicy::fixed_max(uint32_t(std::stoul(s.substr(6))));
  }
  throw Error("unknown padding policy \"" + s + "\"");
}

void write_state_config(const fs::path& dir, const StateConfig& c) {
  Json j;
  j["variant"] = c.variant;
  j["padding"] = c.padding;
  j["access_token_lifetime_epochs"] = c.access_lifetime;
  j["refresh_token_lifetime_epochs"] = c.refresh_lifetime;
  std::ofstream out(dir / "config.json");
  out << j.dump(2) << "\n";
}

StateConfig read_state_config(const fs::path& dir) {
  StateConfig c;
  fs::path p = dir / "config.json";
  if (!fs::exists(p)) return c;
  Json j = read_json(p);
  c.variant = j.value("variant", std::string("w"));
  c.padding = j.value("padding", std::string("pow2"));
  c.access_lifetime = j.value("access_token_lifetime_epochs", 0u);
  c.refresh_lifetime = j.value("refresh_token_lifetime_epochs", 0u);
  return c;
}

Deployment::Config make_deploy_config(const Variant& v, uint64_t seed,
                                      bool deterministic, const fs::path& dir,
                                      const TokenPolicy& tokens,
                                      const PaddingPolicy& pad) {
  Deployment::Config dc;
  dc.variant = v;
  dc.seed = seed;
  dc.deterministic = deterministic;
  dc.tokens = tokens;
  dc.state_dir = dir;
  dc.pad = pad;
  return dc;
}

int cmd_run(const std::string& variant, const std::string& workload_file,
            const std::string& builtin, uint32_t cycles, uint64_t seed,
            const std::string& report_path, const std::string& state_dir) {
  RunConfig cfg;
  cfg.variant = Variant::parse(variant);
  if (!workload_file.empty()) {
    cfg.workload = Workload::load(workload_file);
  } else if (builtin == "pass_around") {
    cfg.workload = Workload::builtin(FilterKind::PassAround);
  } else if (builtin == "string_sub") {
    cfg.workload = Workload::builtin(FilterKind::StringSub);
  } else if (builtin == "custom_select") {
    cfg.workload = Workload::builtin(FilterKind::CustomSelect);
  } else {
    std::cerr << "run: need --workload <file> or --builtin <kind>\n";
    return 2;
  }
  cfg.cycles = cycles;
  cfg.seed = seed;
  cfg.state_dir = state_dir;

  RunReport rep = run_variant(cfg);
  if (!report_path.empty()) {
    rep.save(report_path);
    std::cout << "report written to " << report_path << "\n";
  } else {
    std::cout << rep.to_json().dump(2) << "\n";
  }
  std::cout << "variant=" << rep.variant << " cycles=" << rep.cycles
            << " effects=" << rep.effects.size()
            << " aborts=" << rep.aborts.size()
            << " total_bytes=" << rep.total_bytes
            << " platform_bytes=" << rep.platform_bytes << "\n";
  return rep.clean() ? 0 : 1;
}

int cmd_install(const std::string& spec_file, const std::string& state_dir,
                const std::string& variant, const std::string& padding,
                uint64_t seed, bool deterministic, uint32_t access_lifetime) {
  Workload w = load_workload_or_spec(spec_file);
  StateConfig sc;
  sc.variant = variant;
  sc.padding = padding;
  sc.access_lifetime = access_lifetime ? access_lifetime
                                       : w.tokens.access_lifetime_epochs;
  sc.refresh_lifetime = w.tokens.refresh_lifetime_epochs;

  TokenPolicy tokens{sc.access_lifetime, sc.refresh_lifetime};
  Deployment dep(make_deploy_config(Variant::parse(variant), seed,
                                    deterministic, state_dir, tokens,
                                    parse_padding(padding)));
  std::string id = dep.install(w.applet);
  write_state_config(state_dir, sc);

  Json leak = leakage_json(leakage_of(w.applet, dep.ctx().pad));
  std::cout << "installed applet \"" << id << "\" (variant " << variant
            << ") in " << state_dir << "\n";
  std::cout << "leakage: " << leak.dump() << "\n";
  return 0;
}

int cmd_fire(const std::string& applet_id, const std::string& state_dir,
             const std::string& weather, uint64_t seed, bool deterministic,
             bool advance) {
  StateConfig sc = read_state_config(state_dir);
  TokenPolicy tokens{sc.access_lifetime, sc.refresh_lifetime};
  Deployment dep(make_deploy_config(Variant::parse(sc.variant), seed,
                                    deterministic, state_dir, tokens,
                                    parse_padding(sc.padding)));
  if (advance) {
    for (const AbortRecord& a : dep.advance_epoch()) {
      std::cout << "refresh abort: " << party_name(a.party) << " "
                << err_name(a.code) << " " << a.detail << "\n";
    }
    std::cout << "epoch now " << dep.ctx().clock.current << "\n";
  }
  if (!weather.empty()) dep.trigger_service().set_weather(weather);

  CycleResult res = dep.fire(applet_id);
  if (res.executed) {
    const OutboxEntry& e = dep.action_service().outbox().entries().back();
    std::cout << "executed: endpoint=" << e.endpoint;
    for (const auto& [k, v] : e.fields) std::cout << " " << k << "=\"" << v << "\"";
    std::cout << "\n";
  }
  for (const AbortRecord& a : res.aborts) {
    std::cout << "abort: phase=" << phase_name(a.phase)
              << " party=" << party_name(a.party) << " code=" << int(a.code)
              << " (" << err_name(a.code) << ") " << a.detail << "\n";
  }
  std::cout << "outbox size: " << dep.action_service().outbox().size() << "\n";
  return res.executed ? 0 : 1;
}

int cmd_fault(const std::string& kind, const std::string& target,
              const std::string& script, const std::string& variant,
              const std::string& workload_file, const std::string& builtin,
              uint64_t seed) {
  RunConfig cfg;
  cfg.variant = Variant::parse(variant);
  if (!workload_file.empty()) {
    cfg.workload = Workload::load(workload_file);
  } else {
    cfg.workload = Workload::builtin(builtin == "custom_select"
                                         ? FilterKind::CustomSelect
                                     : builtin == "pass_around"
                                         ? FilterKind::PassAround
                                         : FilterKind::StringSub);
  }
  cfg.cycles = 1;
  cfg.seed = seed;

  FaultSpec f;
  f.seed = seed;
  if (kind == "tamper") {
    f.kind = FaultSpec::Kind::Tamper;
    f.target = target;
  } else if (kind == "replay") {
    f.kind = FaultSpec::Kind::Replay;
  } else if (kind == "drop") {
    f.kind = FaultSpec::Kind::Drop;
    f.target = target;
  } else if (kind == "malicious") {
    f.kind = FaultSpec::Kind::MaliciousM;
    std::map<std::string, Misbehavior> scripts = {
        {"tamper-trigger-request", Misbehavior::TamperTriggerRequest},
        {"tamper-tout", Misbehavior::TamperTout},
        {"wrong-generate", Misbehavior::WrongGenerate},
        {"tamper-ain", Misbehavior::TamperAin},
        {"replay-action", Misbehavior::ReplayAction},
        {"withhold-action", Misbehavior::WithholdAction},
    };
    auto it = scripts.find(script);
    if (it == scripts.end()) {
      std::cerr << "fault: unknown script \"" << script << "\"\n";
      return 2;
    }
    f.script = it->second;
  } else {
    std::cerr << "fault: unknown kind \"" << kind << "\"\n";
    return 2;
  }

  FaultReport rep = inject_fault(cfg, f);
  Json j;
  j["rejected"] = rep.rejected;
  j["party"] = rep.party;
  j["code"] = rep.code;
  j["code_name"] = rep.code_name;
  j["detail"] = rep.detail;
  j["effect_occurred"] = rep.effect_occurred;
  j["security_failure"] = rep.security_failure();
  std::cout << j.dump(2) << "\n";
  return rep.security_failure() ? 1 : 0;
}

int cmd_report_diff(const std::string& a, const std::string& b, bool all) {
  Json ja = read_json(a);
  Json jb = read_json(b);
  std::vector<std::string> diffs = report_diff(ja, jb, /*ignore_cpu=*/!all);
  if (diffs.empty()) {
    std::cout << "reports match" << (all ? "" : " (timing fields ignored)")
              << "\n";
    return 0;
  }
  for (const std::string& d : diffs) std::cout << "differs: " << d << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"walnut: two-server low-trust trigger-action platform"};
  app.require_subcommand(1);

  // run
  std::string variant = "w", workload_file, builtin, report_path, state_dir;
  uint32_t cycles = 1;
  uint64_t seed = 1;
  auto* run = app.add_subcommand("run", "run a variant over a workload");
  run->add_option("--variant", variant, "nosec|w-yao|w-c|w-i|w")->required();
  run->add_option("--workload", workload_file, "workload JSON file");
  run->add_option("--builtin", builtin,
                  "pass_around|string_sub|custom_select (instead of --workload)");
  run->add_option("--cycles", cycles, "trigger-action cycles")->required();
  run->add_option("--seed", seed, "deterministic seed")->required();
  run->add_option("--report", report_path, "write the JSON report here");
  run->add_option("--state-dir", state_dir,
                  "persistent state directory (default: scratch)");

  // install
  std::string spec_file, in_state, in_variant = "w", in_padding = "pow2";
  uint64_t in_seed = 0;
  bool in_system_rng = false;
  uint32_t in_lifetime = 0;
  auto* install = app.add_subcommand("install", "install an applet");
  install->add_option("--spec", spec_file, "applet spec or workload JSON")
      ->required();
  install->add_option("--state-dir", in_state, "deployment state directory")
      ->required();
  install->add_option("--variant", in_variant, "nosec|w-yao|w-c|w-i|w");
  install->add_option("--padding", in_padding, "pow2|multiple:N|fixed:N");
  install->add_option("--seed", in_seed, "deterministic seed");
  install->add_flag("--system-rng", in_system_rng, "use the OS CSPRNG");
  install->add_option("--access-lifetime", in_lifetime,
                      "access-token lifetime in epochs (0 = no expiry)");

  // fire
  std::string applet_id, fire_state, weather;
  uint64_t fire_seed = 0;
  bool fire_system_rng = false, fire_advance = false;
  auto* fire = app.add_subcommand("fire", "run one cycle of an applet");
  fire->add_option("applet-id", applet_id, "installed applet id")->required();
  fire->add_option("--state-dir", fire_state, "deployment state directory")
      ->required();
  fire->add_option("--weather", weather, "what the weather trigger observes");
  fire->add_option("--seed", fire_seed, "deterministic seed");
  fire->add_flag("--system-rng", fire_system_rng, "use the OS CSPRNG");
  fire->add_flag("--advance-epoch", fire_advance,
                 "advance the epoch (and refresh chains) before firing");

  // fault
  std::string f_kind, f_target, f_script, f_variant = "w", f_workload,
              f_builtin = "string_sub";
  uint64_t f_seed = 1;
  auto* fault = app.add_subcommand("fault", "run one faulted cycle");
  fault->add_option("--kind", f_kind, "tamper|replay|drop|malicious")
      ->required();
  fault->add_option("--target", f_target,
                    "tamper: trigger_request|tout|ain|chain|proof; "
                    "drop: ain0|ain1|tout_push");
  fault->add_option("--script", f_script,
                    "malicious: tamper-trigger-request|tamper-tout|"
                    "wrong-generate|tamper-ain|replay-action|withhold-action");
  fault->add_option("--variant", f_variant, "nosec|w-yao|w-c|w-i|w");
  fault->add_option("--workload", f_workload, "workload JSON file");
  fault->add_option("--builtin", f_builtin, "built-in workload kind");
  fault->add_option("--seed", f_seed, "deterministic seed");

  // report diff
  std::string diff_a, diff_b;
  bool diff_all = false;
  auto* report = app.add_subcommand("report", "report utilities");
  auto* diff = report->add_subcommand("diff", "compare two reports");
  diff->add_option("a", diff_a, "first report")->required();
  diff->add_option("b", diff_b, "second report")->required();
  diff->add_flag("--all", diff_all, "compare timing fields too");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return cmd_run(variant, workload_file, builtin, cycles, seed,
                     report_path, state_dir);
    }
    if (*install) {
      return cmd_install(spec_file, in_state, in_variant, in_padding,
                         in_seed ? in_seed : 1, !in_system_rng, in_lifetime);
    }
    if (*fire) {
      return cmd_fire(applet_id, fire_state, weather,
                      fire_seed ? fire_seed : uint64_t(::getpid()),
                      !fire_system_rng, fire_advance);
    }
    if (*fault) {
      return cmd_fault(f_kind, f_target, f_script, f_variant, f_workload,
                       f_builtin, f_seed);
    }
    if (*diff) return cmd_report_diff(diff_a, diff_b, diff_all);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
