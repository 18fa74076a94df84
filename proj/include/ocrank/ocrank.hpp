/*
 * Copyright 2026 The ocrank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "ocrank/baselines.hpp"
#include "ocrank/bprmf.hpp"
#include "ocrank/dataset.hpp"
#include "ocrank/ensemble.hpp"
#include "ocrank/evaluation.hpp"
#include "ocrank/io.hpp"
#include "ocrank/pipeline.hpp"
#include "ocrank/ppr.hpp"
#include "ocrank/random.hpp"
#include "ocrank/transition_network.hpp"
#include "ocrank/two_stage.hpp"
#include "ocrank/types.hpp"
