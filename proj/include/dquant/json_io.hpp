#pragma once

// JSON forms of quantizers, decoders, graphs and GBI traces.
// Requires nlohmann/json.

#include <dquant/dataset.hpp>
#include <dquant/error.hpp>
#include <dquant/gbi.hpp>
#include <dquant/graph.hpp>
#include <dquant/quantcore.hpp>

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dquant {

using Json = nlohmann::json;

namespace detail {

template <class T>
T json_get(const Json& object, const char* field) {
  if (!object.is_object() || !object.contains(field)) {
    throw SchemaError(std::string("missing field \"") + field + "\"");
  }
  try {
    return object.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("field \"") + field + "\" has the wrong type: " + e.what());
  }
}

}  // namespace detail

inline Json rate_to_json(const Rate& rate) {
  return rate.is_unbounded() ? Json("unbounded") : Json(rate.value());
}

inline Rate rate_from_json(const Json& value) {
  if (value.is_string() && value.get<std::string>() == "unbounded") return Rate::unbounded();
  if (value.is_number_unsigned()) return Rate::bits(value.get<std::uint32_t>());
  throw SchemaError("rate must be a non-negative integer or \"unbounded\"");
}

// { "n": int, "groups": [[int]], "rates": [int | "unbounded"], "boundaries": [[float]] }
inline Json quantizer_to_json(const GridQuantizer& quantizer) {
  Json rates = Json::array();
  for (const auto& r : quantizer.partition().rates()) rates.push_back(rate_to_json(r));
  return Json{{"n", quantizer.n()},
              {"groups", quantizer.partition().groups()},
              {"rates", rates},
              {"boundaries", quantizer.all_boundaries()}};
}

inline GridQuantizer quantizer_from_json(const Json& json) {
  const auto n = detail::json_get<std::size_t>(json, "n");
  const auto groups = detail::json_get<std::vector<std::vector<std::size_t>>>(json, "groups");
  const auto rates_json = detail::json_get<Json>(json, "rates");
  const auto boundaries = detail::json_get<std::vector<std::vector<double>>>(json, "boundaries");
  if (!rates_json.is_array()) throw SchemaError("\"rates\" must be an array");
  std::vector<Rate> rates;
  for (const auto& r : rates_json) rates.push_back(rate_from_json(r));
  try {
    return GridQuantizer(FeaturePartition(n, groups, rates), boundaries);
  } catch (const error& e) {
    throw SchemaError(std::string("inconsistent quantizer: ") + e.what());
  }
}

// { "cells": [{ "key": [[int]], "class": int }], "default_class": int }
inline Json decoder_to_json(const DecoderTable& decoder) {
  Json cells = Json::array();
  for (const auto& [key, label] : decoder.classes) {
    cells.push_back(Json{{"key", key.nodes}, {"class", label}});
  }
  return Json{{"cells", cells}, {"default_class", decoder.default_class}};
}

inline DecoderTable decoder_from_json(const Json& json) {
  DecoderTable decoder;
  decoder.default_class = detail::json_get<ClassLabel>(json, "default_class");
  const auto cells = detail::json_get<Json>(json, "cells");
  if (!cells.is_array()) throw SchemaError("\"cells\" must be an array");
  for (const auto& cell : cells) {
    CellKey key{detail::json_get<std::vector<std::vector<std::uint32_t>>>(cell, "key")};
    if (!decoder.classes.emplace(std::move(key), detail::json_get<ClassLabel>(cell, "class")).second) {
      throw SchemaError("decoder lists a cell twice");
    }
  }
  return decoder;
}

// { "vertices": int, "edges": [[int, int]] }
inline Json graph_to_json(const UndirectedGraph& graph) {
  Json edges = Json::array();
  for (const auto& [q1, q2] : graph.edges()) edges.push_back({q1, q2});
  return Json{{"vertices", graph.vertex_count()}, {"edges", edges}};
}

inline UndirectedGraph graph_from_json(const Json& json) {
  const auto vertices = detail::json_get<std::uint32_t>(json, "vertices");
  const auto edges = detail::json_get<std::vector<std::pair<std::uint32_t, std::uint32_t>>>(json, "edges");
  try {
    return UndirectedGraph::from_unordered(vertices, edges);
  } catch (const error& e) {
    throw SchemaError(std::string("invalid graph: ") + e.what());
  }
}

// { "vertices": 2 * side, "sides": [side, side], "edges": [[v1, v2]] }
inline Json bipartite_to_json(const BipartiteGraph& graph) {
  Json edges = Json::array();
  for (const auto& [v1, v2] : graph.edges()) edges.push_back({v1, v2});
  return Json{{"vertices", 2 * graph.side()}, {"sides", {graph.side(), graph.side()}}, {"edges", edges}};
}

inline BipartiteGraph bipartite_from_json(const Json& json) {
  const auto sides = detail::json_get<std::vector<std::uint32_t>>(json, "sides");
  if (sides.size() != 2 || sides[0] != sides[1]) throw SchemaError("\"sides\" must be two equal sizes");
  const auto edges = detail::json_get<std::vector<std::pair<std::uint32_t, std::uint32_t>>>(json, "edges");
  try {
    return BipartiteGraph(sides[0], {edges.begin(), edges.end()});
  } catch (const error& e) {
    throw SchemaError(std::string("invalid bipartite graph: ") + e.what());
  }
}

inline Json trace_to_json(const GbiTrace& trace) {
  Json steps = Json::array();
  for (const auto& s : trace.steps) {
    steps.push_back(Json{{"feature", s.feature},
                         {"value", s.value},
                         {"misclassified", s.misclassified},
                         {"loss", s.loss},
                         {"purity", s.purity},
                         {"candidates_evaluated", s.candidates_evaluated}});
  }
  return steps;
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(what + " is not valid JSON: " + e.what());
  }
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path);
}

}  // namespace dquant
