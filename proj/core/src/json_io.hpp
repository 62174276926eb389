#pragma once

// Internal JSON plumbing shared by the config, snapshot and report writers.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taac/errors.hpp"
#include "taac/nets.hpp"
#include "taac/optim.hpp"
#include "taac/soccer.hpp"

namespace taac::jsonio {

// Insertion-ordered, so documents keep parameter and field order.
using json = nlohmann::ordered_json;

// Strict reader over one JSON object: every key must be consumed, and each
// value must have the expected type. Errors carry the dotted key path.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string path);

  bool has(const char* key) const { return obj_.contains(key); }
  void read(const char* key, double& out);
  void read(const char* key, int& out);
  void read(const char* key, std::uint64_t& out);
  void read(const char* key, bool& out);
  void read(const char* key, std::string& out);
  void read(const char* key, std::vector<int>& out);
  void read(const char* key, std::vector<std::string>& out);
  template <typename E, typename Parse>
  void read_enum(const char* key, E& out, Parse parse) {
    std::string s;
    if (!has(key)) return;
    read(key, s);
    try {
      out = parse(s);
    } catch (const std::exception& e) {
      throw ConfigError(qualify(key), e.what());
    }
  }
  // Nested object; an absent key yields an empty object.
  FieldReader child(const char* key);
  // Throws on the first key that was never read.
  void finish() const;

  std::string qualify(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& at(const char* key);

  const json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
  static const json empty_;
};

json to_json(const ArchConfig& a);
void read_into(FieldReader r, ArchConfig& a);
json to_json(const AblationConfig& a);
void read_into(FieldReader r, AblationConfig& a);
json to_json(const soccer::EnvConfig& e);
void read_into(FieldReader r, soccer::EnvConfig& e);

json to_json(const AdamState& s);
AdamState adam_state_from_json(const json& j);

json parse_or_throw(std::string_view text, const std::string& what);

}  // namespace taac::jsonio
