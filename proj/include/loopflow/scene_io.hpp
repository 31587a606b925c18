// Copyright 2026 The loopflow Authors.
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

// SceneSpec <-> JSON.
//
//   {"name": "...", "height": 64, "width": 64, "seed": 1, "background_seed": 2,
//    "objects": [{"polygon": [[x, y], ...], "texture_seed": 3, "z": 1,
//                 "motion": {"theta": 0.1, "center": [cx, cy],
//                            "translation": [dx, dy]}}]}
//
// Seeds are written as decimal strings so 64-bit values survive JSON
// readers that use doubles.

#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "loopflow/scenes.hpp"

namespace loopflow {

namespace detail {

inline std::uint64_t seed_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return 0;
  const auto& v = j.at(key);
  if (v.is_string()) return std::stoull(v.get<std::string>());
  if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::uint64_t>();
  throw DataError(std::string("scene json: bad seed field '") + key + "'");
}

inline Point2d point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("scene json: points are [x, y] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline nlohmann::json to_json(const SceneSpec& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["height"] = s.dims.h;
  j["width"] = s.dims.w;
  j["seed"] = std::to_string(s.seed);
  j["background_seed"] = std::to_string(s.background_seed);
  j["objects"] = nlohmann::json::array();
  for (const auto& o : s.objects) {
    nlohmann::json jo;
    jo["polygon"] = nlohmann::json::array();
    for (auto v : o.polygon) jo["polygon"].push_back({v.x, v.y});
    jo["texture_seed"] = std::to_string(o.texture_seed);
    jo["z"] = o.z;
    jo["motion"] = {{"theta", o.motion.theta},
                    {"center", {o.motion.center.x, o.motion.center.y}},
                    {"translation", {o.motion.translation.x, o.motion.translation.y}}};
    j["objects"].push_back(jo);
  }
  return j;
}

inline SceneSpec scene_from_json(const nlohmann::json& j) {
  try {
    SceneSpec s;
    s.name = j.value("name", std::string{});
    s.dims = {j.at("height").get<int>(), j.at("width").get<int>()};
    s.seed = detail::seed_from_json(j, "seed");
    s.background_seed = detail::seed_from_json(j, "background_seed");
    for (const auto& jo : j.value("objects", nlohmann::json::array())) {
      SceneObject o;
      for (const auto& v : jo.at("polygon")) o.polygon.push_back(detail::point_from_json(v));
      o.texture_seed = detail::seed_from_json(jo, "texture_seed");
      o.z = jo.at("z").get<int>();
      if (jo.contains("motion")) {
        const auto& m = jo.at("motion");
        o.motion.theta = m.value("theta", 0.0);
        if (m.contains("center")) o.motion.center = detail::point_from_json(m.at("center"));
        if (m.contains("translation")) o.motion.translation = detail::point_from_json(m.at("translation"));
      }
      s.objects.push_back(std::move(o));
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scene json: ") + e.what());
  } catch (const std::logic_error& e) {
    throw DataError(std::string("scene json: bad number: ") + e.what());
  }
}

}  // namespace loopflow
