/*
 * Copyright 2026 The isect Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Versioned JSON sketch documents.
//
//   {"format": "maxsketch-v1", "base_seed": "<decimal>", "m": <int>,
//    "empty": <bool>, "maxima": ["0x<16 hex digits>", ...], "count_observed": <int>}
//   {"format": "hll-v1", "base_seed": "<decimal>", "m": <int>,
//    "registers": [<int>, ...], "count_observed": <int>}
//
// Seeds are decimal strings and maxima hex strings so that 64-bit values
// survive JSON readers that parse numbers as doubles. An empty max-sketch has
// "empty": true and no maxima. Unknown format tags are rejected.

#include <string>
#include <variant>

#include "json.hpp"

#include "isect/sketch.hpp"

namespace isect {

using AnySketch = std::variant<MaxSketch, HllSketch>;

inline constexpr const char* kMaxSketchFormat = "maxsketch-v1";
inline constexpr const char* kHllFormat = "hll-v1";

nlohmann::ordered_json to_json(const MaxSketch& sketch);
nlohmann::ordered_json to_json(const HllSketch& sketch);
nlohmann::ordered_json to_json(const AnySketch& sketch);

/// Throws FormatError on unknown tags, missing fields or inconsistent sizes.
AnySketch sketch_from_json(const nlohmann::json& doc);

/// Serialized text (two-space indent, trailing newline); byte-stable for equal sketches.
std::string dump_sketch(const AnySketch& sketch);
AnySketch parse_sketch(const std::string& text);

/// Throws IoError when the file cannot be written or read.
void write_sketch_file(const std::string& path, const AnySketch& sketch);
AnySketch read_sketch_file(const std::string& path);

}  // namespace isect
