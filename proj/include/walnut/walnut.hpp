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

#ifndef WALNUT_WALNUT_HPP
#define WALNUT_WALNUT_HPP

#include "walnut/blocks.hpp"
#include "walnut/crypto.hpp"
#include "walnut/deployment.hpp"
#include "walnut/garble.hpp"
#include "walnut/harness.hpp"
#include "walnut/leakage.hpp"
#include "walnut/oauth.hpp"
#include "walnut/platform.hpp"
#include "walnut/services.hpp"
#include "walnut/stringsub.hpp"
#include "walnut/variant.hpp"

#endif  // WALNUT_WALNUT_HPP
