/*
 * Copyright 2026 The UniRec Authors.
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
#pragma once

// Umbrella header.

#include "unirec/adam.hpp"
#include "unirec/bench.hpp"
#include "unirec/checkpoint.hpp"
#include "unirec/config.hpp"
#include "unirec/corpus.hpp"
#include "unirec/error.hpp"
#include "unirec/evaluation.hpp"
#include "unirec/losses.hpp"
#include "unirec/metrics.hpp"
#include "unirec/model.hpp"
#include "unirec/ops.hpp"
#include "unirec/rng.hpp"
#include "unirec/sampling.hpp"
#include "unirec/synthetic.hpp"
#include "unirec/tensor.hpp"
#include "unirec/training.hpp"
