/*
 * Copyright 2026 The oneshot-eval Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Umbrella header.

#pragma once

#include "oneshot/correlation.hpp"
#include "oneshot/cwl_measures.hpp"
#include "oneshot/error.hpp"
#include "oneshot/labelers.hpp"
#include "oneshot/neighbors.hpp"
#include "oneshot/pooling.hpp"
#include "oneshot/pr_analysis.hpp"
#include "oneshot/significance.hpp"
#include "oneshot/student_t.hpp"
#include "oneshot/trec_io.hpp"
