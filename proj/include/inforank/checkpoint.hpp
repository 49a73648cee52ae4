#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "inforank/model.hpp"

namespace inforank::model {

// Versioned JSON dump of the full parameter vector plus a schema
// fingerprint; loading refuses checkpoints written for a different schema
// or different dimensions.
inline void save_checkpoint(const ModelParams& p, const std::string& kind,
                            const std::string& path) {
  nlohmann::json j;
  j["format"] = "inforank.checkpoint";
  j["version"] = 1;
  j["kind"] = kind;
  j["fingerprint"] = model_fingerprint(p);
  j["dims"] = {{"d", p.dims.d}, {"heads", p.dims.heads}, {"iota", p.dims.iota}};
  nlohmann::json schema = nlohmann::json::array();
  for (const auto& slot : p.schema)
    schema.push_back({{"kind", slot.kind == SlotKind::categorical ? "categorical" : "real"},
                      {"vocab", slot.vocab}});
  j["schema"] = schema;
  j["values"] = p.values;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out << j.dump() << '\n';
}

inline ModelParams load_checkpoint(const std::string& path, std::string* kind_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError("bad checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", "") != "inforank.checkpoint" || j.value("version", 0) != 1)
    throw ParseError("unsupported checkpoint format: " + path);
  ModelParams p;
  p.dims.d = j["dims"]["d"].get<int>();
  p.dims.heads = j["dims"]["heads"].get<int>();
  p.dims.iota = j["dims"]["iota"].get<double>();
  for (const auto& slot : j["schema"]) {
    FeatureSlot s;
    s.kind = slot["kind"].get<std::string>() == "categorical" ? SlotKind::categorical
                                                              : SlotKind::real;
    s.vocab = slot["vocab"].get<int>();
    p.schema.push_back(s);
  }
  p.layout = build_layout(p.schema, p.dims);
  p.values = j["values"].get<Vec>();
  if (p.values.size() != p.layout->total)
    throw ParseError("checkpoint parameter count does not match schema: " + path);
  if (model_fingerprint(p) != j.value("fingerprint", ""))
    throw ParseError("checkpoint fingerprint mismatch: " + path);
  if (kind_out) *kind_out = j.value("kind", "");
  return p;
}

}  // namespace inforank::model
