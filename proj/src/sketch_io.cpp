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

#include "isect/sketch_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "isect/errors.hpp"

namespace isect {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[19] = {'0', 'x'};
  std::snprintf(buf + 2, sizeof(buf) - 2, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_u64(std::string_view text, int base, const char* what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v, base);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw FormatError(std::string("bad ") + what + ": \"" + std::string(text) + "\"");
  }
  return v;
}

std::uint64_t parse_hex64(const std::string& text) {
  if (text.size() < 3 || text.size() > 18 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
    throw FormatError("bad hex maximum: \"" + text + "\"");
  }
  return parse_u64(std::string_view(text).substr(2), 16, "hex maximum");
}

template <typename T>
T field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw FormatError(std::string("sketch document lacks \"") + key + "\"");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sketch field \"") + key + "\": " + e.what());
  }
}

HashFamily family_from(const nlohmann::json& doc) {
  const auto seed = parse_u64(field<std::string>(doc, "base_seed"), 10, "base_seed");
  const auto m = field<std::int64_t>(doc, "m");
  if (m < 1) throw FormatError("sketch m must be positive");
  return HashFamily(seed, static_cast<std::size_t>(m));
}

}  // namespace

nlohmann::ordered_json to_json(const MaxSketch& sketch) {
  nlohmann::ordered_json doc;
  doc["format"] = kMaxSketchFormat;
  doc["base_seed"] = std::to_string(sketch.family().base_seed());
  doc["m"] = sketch.m();
  doc["empty"] = sketch.empty();
  auto maxima = nlohmann::ordered_json::array();
  if (!sketch.empty()) {
    for (auto v : sketch.maxima()) maxima.push_back(hex64(v));
  }
  doc["maxima"] = std::move(maxima);
  doc["count_observed"] = sketch.count_observed();
  return doc;
}

nlohmann::ordered_json to_json(const HllSketch& sketch) {
  nlohmann::ordered_json doc;
  doc["format"] = kHllFormat;
  doc["base_seed"] = std::to_string(sketch.family().base_seed());
  doc["m"] = sketch.m();
  auto regs = nlohmann::ordered_json::array();
  for (auto r : sketch.registers()) regs.push_back(static_cast<int>(r));
  doc["registers"] = std::move(regs);
  doc["count_observed"] = sketch.count_observed();
  return doc;
}

nlohmann::ordered_json to_json(const AnySketch& sketch) {
  return std::visit([](const auto& s) { return to_json(s); }, sketch);
}

AnySketch sketch_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw FormatError("sketch document must be a JSON object");
  const auto format = field<std::string>(doc, "format");
  const auto count = field<std::uint64_t>(doc, "count_observed");
  if (format == kMaxSketchFormat) {
    HashFamily family = family_from(doc);
    const bool empty = field<bool>(doc, "empty");
    const auto hex = field<std::vector<std::string>>(doc, "maxima");
    if (empty) {
      if (!hex.empty()) throw FormatError("empty max-sketch must not carry maxima");
      return MaxSketch(std::move(family));
    }
    std::vector<std::uint64_t> maxima;
    maxima.reserve(hex.size());
    for (const auto& h : hex) maxima.push_back(parse_hex64(h));
    return MaxSketch::from_maxima(std::move(family), std::move(maxima), count);
  }
  if (format == kHllFormat) {
    HashFamily family = family_from(doc);
    const auto raw = field<std::vector<int>>(doc, "registers");
    std::vector<std::uint8_t> regs;
    regs.reserve(raw.size());
    for (int r : raw) {
      if (r < 0 || r > 64) throw FormatError("HyperLogLog register out of range");
      regs.push_back(static_cast<std::uint8_t>(r));
    }
    try {
      return HllSketch::from_registers(std::move(family), std::move(regs), count);
    } catch (const UnsupportedSizeError& e) {
      throw FormatError(e.what());
    }
  }
  throw FormatError("unknown sketch format \"" + format + "\"");
}

std::string dump_sketch(const AnySketch& sketch) { return to_json(sketch).dump(2) + "\n"; }

AnySketch parse_sketch(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("sketch is not valid JSON: ") + e.what());
  }
  return sketch_from_json(doc);
}

void write_sketch_file(const std::string& path, const AnySketch& sketch) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << dump_sketch(sketch);
  if (!out.flush()) throw IoError("failed writing " + path);
}

AnySketch read_sketch_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path);
  return parse_sketch(buf.str());
}

}  // namespace isect
