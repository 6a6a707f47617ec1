// Copyright 2026 The weakorder Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "weakorder/classical.hpp"
#include "weakorder/error.hpp"
#include "weakorder/estimators.hpp"
#include "weakorder/extrapolation.hpp"
#include "weakorder/operator_core.hpp"
#include "weakorder/parallel.hpp"
#include "weakorder/pointer.hpp"
#include "weakorder/presets.hpp"
#include "weakorder/runner.hpp"
#include "weakorder/sequential.hpp"
