// Copyright 2026 The prosotok Authors.
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

#ifndef PROSOTOK_PROSOTOK_HPP
#define PROSOTOK_PROSOTOK_HPP

#include "prosotok/audio_features.hpp"
#include "prosotok/contour_synth.hpp"
#include "prosotok/corpus.hpp"
#include "prosotok/csv.hpp"
#include "prosotok/error.hpp"
#include "prosotok/eval_metrics.hpp"
#include "prosotok/ingest.hpp"
#include "prosotok/parallel.hpp"
#include "prosotok/quantizer.hpp"
#include "prosotok/sequence_codec.hpp"
#include "prosotok/stats.hpp"
#include "prosotok/text_normalize.hpp"

#endif  // PROSOTOK_PROSOTOK_HPP
