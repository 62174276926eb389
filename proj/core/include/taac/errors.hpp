#pragma once

#include <stdexcept>
#include <string>

namespace taac {

// Invalid configuration or file contents. `key()` names the offending key path
// (for example "learner.gamma") when one applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)), detail_(message) {}
  const std::string& key() const { return key_; }
  // The message without the key prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::string key_;
  std::string detail_;
};

// A non-finite value appeared in a loss or gradient; the update was aborted.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace taac
