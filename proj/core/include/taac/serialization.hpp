#pragma once

// Flat JSON weight documents: {"<param path>": {"shape": [r, c], "data": [...]}}.
// Doubles are written with round-trip precision, so save/load is bit-exact.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "taac/nn.hpp"

namespace taac {

struct WeightEntry {
  std::string name;
  Shape shape;
  std::vector<double> data;
  bool operator==(const WeightEntry&) const = default;
};
using WeightSet = std::vector<WeightEntry>;

WeightSet capture_weights(const NamedParams& params);
// Copies values into `target`. Every target must be present with an identical
// shape; entries not in `target` are an error unless `allow_extra`.
void restore_weights(const WeightSet& weights, const NamedParams& target, bool allow_extra = false);

std::string weights_to_json(const WeightSet& weights);
WeightSet weights_from_json(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
// Writes via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace taac
