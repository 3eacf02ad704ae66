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
// Shared fixtures: the weather->email applet in its three filterCode
// flavours, scratch state directories, transcript search helpers.

#ifndef WALNUT_TESTS_TEST_UTIL_HPP
#define WALNUT_TESTS_TEST_UTIL_HPP

#include <filesystem>
#include <string>

#include "walnut/deployment.hpp"
#include "walnut/leakage.hpp"

namespace walnut::testutil {

inline const char* kSubTemplate =
    "This is an example of a substituted string. The new type of weather is "
    "{{new_weather_type}}";

inline AppletSpec weather_applet(FilterKind kind) {
  AppletSpec spec;
  spec.title = "Daily weather email";
  spec.trigger_endpoint = "weather/current";
  spec.trig_inp = {{"city", "SB"}};
  spec.action_endpoint = "email/send";
  spec.act_inp_templates["to"] = "user@example.com";
  spec.filter.kind = kind;
  switch (kind) {
    case FilterKind::PassAround:
      spec.id = "wx-pass";
      spec.act_inp_templates["body"] = "{{new_weather_type}}";
      break;
    case FilterKind::StringSub:
      spec.id = "wx-sub";
      spec.act_inp_templates["body"] = kSubTemplate;
      break;
    case FilterKind::CustomSelect:
      spec.id = "wx-select";
      spec.filter.key = "new_weather_type";
      spec.filter.target = "body";
      spec.filter.cases = {
          {"sunny", "Clear skies today. The new type of weather is sunny"},
          {"rainy", "Take an umbrella. The new type of weather is rainy"}};
      spec.filter.default_templ = "No forecast available for this weather";
      break;
  }
  return spec;
}

/// Scratch state directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("walnut_test_" + tag + "_" + std::to_string(counter_++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline Deployment::Config make_config(Variant::Kind kind, const TempDir& dir,
                                      uint64_t seed = 7) {
  Deployment::Config cfg;
  cfg.variant = Variant{kind};
  cfg.seed = seed;
  cfg.deterministic = true;
  cfg.state_dir = dir.path();
  return cfg;
}

inline bool bytes_contain(std::span<const uint8_t> haystack,
                          std::span<const uint8_t> needle) {
  if (needle.empty() || haystack.size() < needle.size()) return false;
  for (size_t i = 0; i + needle.size() <= haystack.size(); i++) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + i)) {
      return true;
    }
  }
  return false;
}

inline bool transcript_contains(const std::vector<TranscriptRecord>& records,
                                std::span<const uint8_t> needle,
                                const std::function<bool(const TranscriptRecord&)>&
                                    filter = {}) {
  for (const auto& rec : records) {
    if (filter && !filter(rec)) continue;
    if (bytes_contain(rec.data, needle)) return true;
  }
  return false;
}

}  // namespace walnut::testutil

#endif  // WALNUT_TESTS_TEST_UTIL_HPP
