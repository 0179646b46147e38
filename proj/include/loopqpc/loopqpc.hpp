// Copyright 2026 The loopqpc Authors
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

#ifndef LOOPQPC_LOOPQPC_HPP
#define LOOPQPC_LOOPQPC_HPP

#include "loopqpc/calibrate.hpp"
#include "loopqpc/io.hpp"
#include "loopqpc/loopchip.hpp"
#include "loopqpc/losses.hpp"
#include "loopqpc/mesh.hpp"
#include "loopqpc/model.hpp"
#include "loopqpc/montecarlo.hpp"
#include "loopqpc/types.hpp"

#endif  // LOOPQPC_LOOPQPC_HPP
