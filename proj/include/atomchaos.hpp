// Copyright 2026 The atomchaos Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "atomchaos/params.hpp"
#include "atomchaos/dynamics.hpp"
#include "atomchaos/rng.hpp"
#include "atomchaos/jumps.hpp"
#include "atomchaos/lyapunov.hpp"
#include "atomchaos/analytic.hpp"
#include "atomchaos/stats.hpp"
#include "atomchaos/ensemble.hpp"
#include "atomchaos/oracles.hpp"
#include "atomchaos/config.hpp"
#include "atomchaos/io.hpp"
