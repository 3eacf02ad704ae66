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
// The simulated channel all parties talk through. Single-threaded and
// deterministic: a call dispatches the registered handler inline. The
// transport owns the byte/message meters (per directed channel, per protocol
// phase), the per-party CPU attribution, the optional transcript, and the
// fault-injection hook.

#ifndef WALNUT_TRANSPORT_HPP
#define WALNUT_TRANSPORT_HPP

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "walnut/bytes.hpp"
#include "walnut/party.hpp"

namespace walnut {

enum class Phase : uint8_t {
  Setup = 0,
  TriggerPolling = 1,
  ActionGeneration = 2,
  ActionExecution = 3,
  TokenRefresh = 4,
};

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Setup: return "setup";
    case Phase::TriggerPolling: return "trigger_polling";
    case Phase::ActionGeneration: return "action_generation";
    case Phase::ActionExecution: return "action_execution";
    case Phase::TokenRefresh: return "token_refresh";
  }
  return "?";
}

inline constexpr std::array<Phase, 5> kAllPhases = {
    Phase::Setup, Phase::TriggerPolling, Phase::ActionGeneration,
    Phase::ActionExecution, Phase::TokenRefresh};

// Phases that make up a run cycle (setup is one-off and excluded from the
// run-cost accounting, as is conventional).
inline constexpr std::array<Phase, 4> kRunPhases = {
    Phase::TriggerPolling, Phase::ActionGeneration, Phase::ActionExecution,
    Phase::TokenRefresh};

struct ChannelStat {
  uint64_t bytes = 0;
  uint64_t messages = 0;
};

/// Wall-of-work CPU attribution with a scope stack: entering a scope pauses
/// the enclosing party's clock, so nested handler dispatch bills the callee.
class CpuMeter {
 public:
  class Scope {
   public:
    Scope(CpuMeter& m, Party p) : m_(m) { m_.push(p); }
    ~Scope() { m_.pop(); }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    CpuMeter& m_;
  };

  Scope scope(Party p) { return Scope(*this, p); }

  double seconds(Party p) const {
    auto it = ns_.find(p);
    return it == ns_.end() ? 0.0 : double(it->second) * 1e-9;
  }

  double total_seconds() const {
    double t = 0;
    for (const auto& [p, ns] : ns_) t += double(ns) * 1e-9;
    return t;
  }

 private:
  using Clock = std::chrono::steady_clock;

  void push(Party p) {
    Clock::time_point now = Clock::now();
    if (!stack_.empty()) {
      ns_[stack_.back().first] += (now - stack_.back().second).count();
      stack_.back().second = now;
    }
    stack_.emplace_back(p, now);
  }

  void pop() {
    Clock::time_point now = Clock::now();
    ns_[stack_.back().first] += (now - stack_.back().second).count();
    stack_.pop_back();
    if (!stack_.empty()) stack_.back().second = now;
  }

  std::map<Party, int64_t> ns_;
  std::vector<std::pair<Party, Clock::time_point>> stack_;
};

enum class FaultAction : uint8_t { Pass = 0, Drop = 1 };

/// Inspects (and may mutate or drop) every transported frame.
using FaultHook = std::function<FaultAction(Party from, Party to, Phase phase,
                                            bool is_response, Bytes& data)>;

struct TranscriptRecord {
  Party from, to;
  Phase phase;
  bool is_response;
  Bytes data;
};

class Transport {
 public:
  using Handler = std::function<Bytes(Party from, const Bytes& msg)>;

  void register_handler(Party p, Handler h) { handlers_[p] = std::move(h); }

  void set_phase(Phase p) { phase_ = p; }
  Phase phase() const { return phase_; }

  void set_fault_hook(FaultHook h) { fault_ = std::move(h); }
  void clear_fault_hook() { fault_ = nullptr; }

  void record_transcript(bool on) { record_ = on; }
  const std::vector<TranscriptRecord>& transcript() const { return records_; }

  /// Request/response exchange. nullopt when either direction was dropped.
  std::optional<Bytes> call(Party from, Party to, Bytes msg) {
    if (!deliver(from, to, false, msg)) return std::nullopt;
    Bytes reply = dispatch(from, to, msg);
    if (!deliver(to, from, true, reply)) return std::nullopt;
    return reply;
  }

  /// One-way delivery; nothing flows back.
  void send(Party from, Party to, Bytes msg) {
    if (!deliver(from, to, false, msg)) return;
    dispatch(from, to, msg);
  }

  CpuMeter& cpu() { return cpu_; }
  const CpuMeter& cpu() const { return cpu_; }

  const std::map<std::tuple<Party, Party, Phase>, ChannelStat>& stats() const {
    return stats_;
  }

  uint64_t total_bytes() const { return total_bytes_; }

  uint64_t bytes(Party from, Party to,
                 std::optional<Phase> phase = std::nullopt) const {
    uint64_t n = 0;
    for (const auto& [key, st] : stats_) {
      if (std::get<0>(key) == from && std::get<1>(key) == to &&
          (!phase || std::get<2>(key) == *phase)) {
        n += st.bytes;
      }
    }
    return n;
  }

  /// Bytes crossing the server boundary, both directions.
  uint64_t inter_server_bytes(std::optional<Phase> phase = std::nullopt) const {
    uint64_t n = 0;
    for (const auto& [key, st] : stats_) {
      int sa = server_of(std::get<0>(key));
      int sb = server_of(std::get<1>(key));
      if (sa >= 0 && sb >= 0 && sa != sb &&
          (!phase || std::get<2>(key) == *phase)) {
        n += st.bytes;
      }
    }
    return n;
  }

  /// Bytes on any channel touching a platform party, run phases only.
  uint64_t platform_bytes() const {
    uint64_t n = 0;
    for (const auto& [key, st] : stats_) {
      Phase ph = std::get<2>(key);
      if (ph == Phase::Setup) continue;
      if (is_platform(std::get<0>(key)) || is_platform(std::get<1>(key))) {
        n += st.bytes;
      }
    }
    return n;
  }

  /// Bytes on service-facing channels (either endpoint TS or AS), run phases.
  uint64_t service_bytes(Party service) const {
    uint64_t n = 0;
    for (const auto& [key, st] : stats_) {
      if (std::get<2>(key) == Phase::Setup) continue;
      if (std::get<0>(key) == service || std::get<1>(key) == service) {
        n += st.bytes;
      }
    }
    return n;
  }

 private:
  bool deliver(Party from, Party to, bool is_response, Bytes& data) {
    if (fault_) {
      if (fault_(from, to, phase_, is_response, data) == FaultAction::Drop) {
        return false;
      }
    }
    auto& st = stats_[{from, to, phase_}];
    st.bytes += data.size();
    st.messages += 1;
    total_bytes_ += data.size();
    if (record_) records_.push_back({from, to, phase_, is_response, data});
    return true;
  }

  Bytes dispatch(Party from, Party to, const Bytes& msg) {
    auto it = handlers_.find(to);
    if (it == handlers_.end()) {
      throw Error(std::string("transport: no handler for ") + party_name(to));
    }
    CpuMeter::Scope s = cpu_.scope(to);
    return it->second(from, msg);
  }

  std::map<Party, Handler> handlers_;
  std::map<std::tuple<Party, Party, Phase>, ChannelStat> stats_;
  uint64_t total_bytes_ = 0;
  Phase phase_ = Phase::Setup;
  CpuMeter cpu_;
  FaultHook fault_;
  bool record_ = false;
  std::vector<TranscriptRecord> records_;
};

}  // namespace walnut

#endif  // WALNUT_TRANSPORT_HPP
