#pragma once

// TokenMask JSON emission and bounding-box JSON ingestion.

#include <string>

#include "json.hpp"

#include "arcd/error.hpp"
#include "arcd/mask_gen.hpp"

namespace arcd {

/// {"L", "G", "tau", "length", "positives", "digest", "values", "segments"}
inline std::string token_mask_to_json(const TokenMask& mask, double tau) {
  nlohmann::ordered_json j;
  j["L"] = mask.spec.L;
  j["G"] = {mask.spec.G_h, mask.spec.G_w};
  j["tau"] = tau;
  j["length"] = mask.values.size();
  j["positives"] = mask.positives();
  j["digest"] = mask.digest();
  auto values = nlohmann::ordered_json::array();
  for (Bit b : mask.values) values.push_back(static_cast<int>(b));
  j["values"] = std::move(values);
  auto segments = nlohmann::ordered_json::array();
  for (Segment s : mask.segment_map) segments.push_back(std::string(segment_name(s)));
  j["segments"] = std::move(segments);
  return j.dump() + "\n";
}

/// {"x_min": ..., "y_min": ..., "x_max": ..., "y_max": ...}
inline BBox bbox_from_json(const std::string& text) {
  BBox box;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw_input("bbox: expected a JSON object");
    box.x_min = j.at("x_min").get<double>();
    box.y_min = j.at("y_min").get<double>();
    box.x_max = j.at("x_max").get<double>();
    box.y_max = j.at("y_max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw_input(std::string("bbox: ") + e.what());
  }
  box.validate();
  return box;
}

}  // namespace arcd
