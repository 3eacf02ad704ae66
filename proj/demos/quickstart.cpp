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
// Minimal tour: install the weather->email applet, fire a cycle in the full
// variant, and show what the two servers saw versus what the action service
// reconstructed.

#include <iostream>

#include "walnut/walnut.hpp"

int main() {
  using namespace walnut;
  namespace fs = std::filesystem;

  fs::path state = fs::temp_directory_path() / "walnut_quickstart";
  fs::remove_all(state);

  Deployment::Config cfg;
  cfg.variant = Variant{Variant::Kind::W};
  cfg.seed = 2026;
  cfg.state_dir = state;
  Deployment dep(cfg);

  Workload workload = Workload::builtin(FilterKind::StringSub);
  std::string id = dep.install(workload.applet);
  dep.trigger_service().set_weather("partly cloudy");

  CycleResult res = dep.fire(id);
  std::cout << "cycle executed: " << std::boolalpha << res.executed << "\n";

  const auto& st0 = dep.machine(0).state(id);
  const auto& st1 = dep.machine(1).state(id);
  const Bytes& share0 = st0.tout->tout.shares.at("new_weather_type").blocks[0].bytes;
  const Bytes& share1 = st1.tout->tout.shares.at("new_weather_type").blocks[0].bytes;
  std::cout << "server 0 sees   : " << to_hex(share0) << "\n";
  std::cout << "server 1 sees   : " << to_hex(share1) << "\n";
  std::cout << "xor reconstructs: "
            << strip_segments(xor_bytes(share0, share1),
                              PaddingPolicy::next_power_of_two())
            << "\n";

  const OutboxEntry& mail = dep.action_service().outbox().entries().back();
  std::cout << "email body      : " << mail.fields.at("body") << "\n";
  std::cout << "inter-server bytes during action generation: "
            << dep.transport().inter_server_bytes(Phase::ActionGeneration)
            << "\n";

  fs::remove_all(state);
  return 0;
}
