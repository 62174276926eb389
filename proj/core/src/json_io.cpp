#include "json_io.hpp"

#include <algorithm>
#include <limits>

namespace taac::jsonio {

const json FieldReader::empty_ = json::object();

FieldReader::FieldReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
  if (!obj_.is_object()) throw ConfigError(path_, "expected a JSON object");
}

const json& FieldReader::at(const char* key) {
  seen_.emplace_back(key);
  return obj_.at(key);
}

void FieldReader::read(const char* key, double& out) {
  if (!has(key)) return;
  const json& v = at(key);
  if (!v.is_number()) throw ConfigError(qualify(key), "expected a number");
  out = v.get<double>();
}

void FieldReader::read(const char* key, int& out) {
  if (!has(key)) return;
  const json& v = at(key);
  if (!v.is_number_integer()) throw ConfigError(qualify(key), "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(qualify(key), "integer out of range");
  }
  out = static_cast<int>(x);
}

void FieldReader::read(const char* key, std::uint64_t& out) {
  if (!has(key)) return;
  const json& v = at(key);
  if (!v.is_number_unsigned()) throw ConfigError(qualify(key), "expected a nonnegative integer");
  out = v.get<std::uint64_t>();
}

void FieldReader::read(const char* key, bool& out) {
  if (!has(key)) return;
  const json& v = at(key);
  if (!v.is_boolean()) throw ConfigError(qualify(key), "expected true or false");
  out = v.get<bool>();
}

void FieldReader::read(const char* key, std::string& out) {
  if (!has(key)) return;
  const json& v = at(key);
  if (!v.is_string()) throw ConfigError(qualify(key), "expected a string");
  out = v.get<std::string>();
}

void FieldReader::read(const char* key, std::vector<int>& out) {
  if (!has(key)) return;
  const json& v = at(key);
  if (!v.is_array()) throw ConfigError(qualify(key), "expected an array of integers");
  std::vector<int> xs;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError(qualify(key), "expected an array of integers");
    xs.push_back(e.get<int>());
  }
  out = std::move(xs);
}

void FieldReader::read(const char* key, std::vector<std::string>& out) {
  if (!has(key)) return;
  const json& v = at(key);
  if (!v.is_array()) throw ConfigError(qualify(key), "expected an array of strings");
  std::vector<std::string> xs;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError(qualify(key), "expected an array of strings");
    xs.push_back(e.get<std::string>());
  }
  out = std::move(xs);
}

FieldReader FieldReader::child(const char* key) {
  if (!has(key)) return FieldReader(empty_, qualify(key));
  return FieldReader(at(key), qualify(key));
}

void FieldReader::finish() const {
  for (auto it = obj_.begin(); it != obj_.end(); ++it) {
    if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
      throw ConfigError(qualify(it.key().c_str()), "unknown key");
    }
  }
}

json parse_or_throw(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", what + ": invalid JSON: " + e.what());
  }
}

// ---- architecture ---------------------------------------------------------

json to_json(const ArchConfig& a) {
  return {{"obs_dim", a.obs_dim},           {"action_count", a.action_count},
          {"d_model", a.d_model},           {"actor_heads", a.actor_heads},
          {"critic_heads", a.critic_heads}, {"embed_hidden", a.embed_hidden},
          {"post_hidden", a.post_hidden},   {"ppo_hidden", a.ppo_hidden},
          {"activation", to_string(a.activation)}, {"logit_init_gain", a.logit_init_gain}, {"input_scale", a.input_scale}};
}

void read_into(FieldReader r, ArchConfig& a) {
  r.read("obs_dim", a.obs_dim);
  r.read("action_count", a.action_count);
  r.read("d_model", a.d_model);
  r.read("actor_heads", a.actor_heads);
  r.read("critic_heads", a.critic_heads);
  r.read("embed_hidden", a.embed_hidden);
  r.read("post_hidden", a.post_hidden);
  r.read("ppo_hidden", a.ppo_hidden);
  r.read_enum("activation", a.activation, activation_from_string);
  r.read("logit_init_gain", a.logit_init_gain);
  r.read("input_scale", a.input_scale);
  r.finish();
}

json to_json(const AblationConfig& a) {
  return {{"actor_attention_off", a.actor_attention_off}, {"critic_v_fixed", a.critic_v_fixed}};
}

void read_into(FieldReader r, AblationConfig& a) {
  r.read("actor_attention_off", a.actor_attention_off);
  r.read("critic_v_fixed", a.critic_v_fixed);
  r.finish();
}

// ---- environment ----------------------------------------------------------

json to_json(const soccer::EnvConfig& e) {
  return {{"pitch_length", e.pitch_length},
          {"pitch_width", e.pitch_width},
          {"player_radius", e.player_radius},
          {"ball_radius", e.ball_radius},
          {"player_speed", e.player_speed},
          {"kick_impulse", e.kick_impulse},
          {"wall_restitution", e.wall_restitution},
          {"ball_damping", e.ball_damping},
          {"goal_width", e.goal_width},
          {"goal_depth", e.goal_depth},
          {"steps_per_game", e.steps_per_game},
          {"team_size", e.team_size},
          {"theta_explore", e.theta_explore},
          {"theta_ball", e.theta_ball},
          {"theta_dist", e.theta_dist},
          {"theta_max", e.theta_max},
          {"goal_reward", e.goal_reward}};
}

void read_into(FieldReader r, soccer::EnvConfig& e) {
  r.read("pitch_length", e.pitch_length);
  r.read("pitch_width", e.pitch_width);
  r.read("player_radius", e.player_radius);
  r.read("ball_radius", e.ball_radius);
  r.read("player_speed", e.player_speed);
  r.read("kick_impulse", e.kick_impulse);
  r.read("wall_restitution", e.wall_restitution);
  r.read("ball_damping", e.ball_damping);
  r.read("goal_width", e.goal_width);
  r.read("goal_depth", e.goal_depth);
  r.read("steps_per_game", e.steps_per_game);
  r.read("team_size", e.team_size);
  r.read("theta_explore", e.theta_explore);
  r.read("theta_ball", e.theta_ball);
  r.read("theta_dist", e.theta_dist);
  r.read("theta_max", e.theta_max);
  r.read("goal_reward", e.goal_reward);
  r.finish();
}

// ---- optimizer state ------------------------------------------------------

json to_json(const AdamState& s) {
  return {{"steps", s.steps}, {"m", s.first_moment}, {"v", s.second_moment}};
}

AdamState adam_state_from_json(const json& j) {
  AdamState s;
  s.steps = j.at("steps").get<std::int64_t>();
  s.first_moment = j.at("m").get<std::vector<std::vector<double>>>();
  s.second_moment = j.at("v").get<std::vector<std::vector<double>>>();
  return s;
}

}  // namespace taac::jsonio
