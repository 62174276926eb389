#include "taac/serialization.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "taac/errors.hpp"

namespace taac {

using json = nlohmann::ordered_json;

WeightSet capture_weights(const NamedParams& params) {
  WeightSet ws;
  ws.reserve(params.size());
  for (const auto& [name, t] : params) ws.push_back({name, t.shape(), {t.data().begin(), t.data().end()}});
  return ws;
}

void restore_weights(const WeightSet& weights, const NamedParams& target, bool allow_extra) {
  std::map<std::string, const WeightEntry*> by_name;
  for (const auto& w : weights) {
    if (!by_name.emplace(w.name, &w).second) throw ConfigError(w.name, "duplicate parameter");
  }
  for (const auto& [name, t] : target) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError(name, "missing parameter");
    const WeightEntry& w = *it->second;
    if (w.shape != t.shape() || w.data.size() != t.size()) {
      throw ConfigError(name, "shape " + w.shape.str() + " does not match architecture " + t.shape().str());
    }
    by_name.erase(it);
  }
  if (!allow_extra && !by_name.empty()) throw ConfigError(by_name.begin()->first, "unexpected parameter");
  std::map<std::string, const WeightEntry*> lookup;
  for (const auto& w : weights) lookup[w.name] = &w;
  for (const auto& [name, t] : target) {
    Tensor dst = t;
    auto src = lookup.at(name);
    std::copy(src->data.begin(), src->data.end(), dst.mutable_data().begin());
  }
}

std::string weights_to_json(const WeightSet& weights) {
  json doc = json::object();
  for (const auto& w : weights) doc[w.name] = {{"shape", {w.shape.rows, w.shape.cols}}, {"data", w.data}};
  return doc.dump();
}

WeightSet weights_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("weights: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "weights: expected a JSON object");
  WeightSet ws;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const json& e = it.value();
    if (!e.is_object() || !e.contains("shape") || !e.contains("data")) {
      throw ConfigError(it.key(), "expected {shape, data}");
    }
    const auto& shape = e["shape"];
    if (!shape.is_array() || shape.size() != 2 || !shape[0].is_number_unsigned() || !shape[1].is_number_unsigned()) {
      throw ConfigError(it.key(), "shape must be [rows, cols]");
    }
    WeightEntry w;
    w.name = it.key();
    w.shape = {shape[0].get<std::size_t>(), shape[1].get<std::size_t>()};
    if (!e["data"].is_array()) throw ConfigError(it.key(), "data must be an array");
    w.data.reserve(e["data"].size());
    for (const auto& x : e["data"]) {
      if (!x.is_number()) throw ConfigError(it.key(), "data must hold numbers");
      w.data.push_back(x.get<double>());
    }
    if (w.data.size() != w.shape.size()) throw ConfigError(it.key(), "data length does not match shape");
    ws.push_back(std::move(w));
  }
  return ws;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("", "cannot write " + tmp);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ConfigError("", "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace taac
