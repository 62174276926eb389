#include "taac/config.hpp"

#include "json_io.hpp"

namespace taac {

using jsonio::json;

namespace {

const char* to_string(AdvantageMode m) { return m == AdvantageMode::coma ? "coma" : "monte_carlo"; }
const char* to_string(CriticTarget t) { return t == CriticTarget::td ? "td" : "monte_carlo"; }
const char* to_string(soccer::SpawnMode m) {
  return m == soccer::SpawnMode::fixed_formation ? "fixed_formation" : "random_spawns";
}

AdvantageMode advantage_from_string(const std::string& s) {
  if (s == "monte_carlo") return AdvantageMode::monte_carlo;
  if (s == "coma") return AdvantageMode::coma;
  throw std::invalid_argument("expected monte_carlo or coma, got '" + s + "'");
}

CriticTarget critic_target_from_string(const std::string& s) {
  if (s == "monte_carlo") return CriticTarget::monte_carlo;
  if (s == "td") return CriticTarget::td;
  throw std::invalid_argument("expected monte_carlo or td, got '" + s + "'");
}

soccer::SpawnMode spawn_from_string(const std::string& s) {
  if (s == "random_spawns") return soccer::SpawnMode::random_spawns;
  if (s == "fixed_formation") return soccer::SpawnMode::fixed_formation;
  throw std::invalid_argument("expected random_spawns or fixed_formation, got '" + s + "'");
}

[[noreturn]] void fail(const std::string& key, const std::string& msg) { throw ConfigError(key, msg); }

}  // namespace

void RunConfig::validate() const {
  if (threads < 1) fail("threads", "must be at least 1");
  if (output_dir.empty()) fail("output_dir", "must not be empty");
  env.validate();
  arch.validate();
  if (arch.obs_dim != soccer::observation_width(env)) {
    fail("arch.obs_dim", "must equal the observation width " + std::to_string(soccer::observation_width(env)) +
                             " for team_size " + std::to_string(env.team_size));
  }
  if (arch.action_count != soccer::kActionCount) fail("arch.action_count", "must be 18");

  const auto& l = learner;
  if (!(l.gamma >= 0.0 && l.gamma <= 1.0)) fail("learner.gamma", "gamma must lie in [0, 1]");
  if (!(l.actor_lr > 0.0)) fail("learner.actor_lr", "must be positive");
  if (!(l.critic_lr > 0.0)) fail("learner.critic_lr", "must be positive");
  if (!(l.max_grad_norm >= 0.0)) fail("learner.max_grad_norm", "must be nonnegative");
  if (!(l.theta_s >= 0.0)) fail("learner.theta_s", "must be nonnegative");
  if (!(l.theta_b >= -1.0 && l.theta_b <= 1.0)) fail("learner.theta_b", "must lie in [-1, 1]");
  if (!(l.entropy_coef >= 0.0)) fail("learner.entropy_coef", "must be nonnegative");

  if (!(ppo.clip > 0.0 && ppo.clip < 1.0)) fail("ppo.clip", "must lie in (0, 1)");
  if (!(ppo.gae_lambda >= 0.0 && ppo.gae_lambda <= 1.0)) fail("ppo.gae_lambda", "must lie in [0, 1]");
  if (ppo.epochs < 1) fail("ppo.epochs", "must be at least 1");
  if (ppo.minibatches < 1) fail("ppo.minibatches", "must be at least 1");
  if (!(ppo.value_coef >= 0.0)) fail("ppo.value_coef", "must be nonnegative");
  if (!(ppo.entropy_coef >= 0.0)) fail("ppo.entropy_coef", "must be nonnegative");
  if (!(ppo.learning_rate > 0.0)) fail("ppo.learning_rate", "must be positive");
  if (!(ppo.max_grad_norm >= 0.0)) fail("ppo.max_grad_norm", "must be nonnegative");

  for (int g : curriculum.stage_games)
    if (g < 0) fail("curriculum.stage_games", "game counts must be nonnegative");
  if (curriculum.games_per_update < 1) fail("curriculum.games_per_update", "must be at least 1");
  if (curriculum.snapshot_interval < 1) fail("curriculum.snapshot_interval", "must be at least 1");

  if (league.games < 0) fail("league.games", "must be nonnegative");
  if (!(league.k > 0.0)) fail("league.k", "must be positive");
  if (!std::isfinite(league.initial_rating)) fail("league.initial_rating", "must be finite");
  if (!(league.band.d_min >= 0.0)) fail("league.d_min", "must be nonnegative");
  if (!(league.band.d_max >= league.band.d_min)) fail("league.d_max", "must be at least d_min");
}

RunConfig parse_config_text(std::string_view text) {
  const json doc = jsonio::parse_or_throw(text, "config");
  jsonio::FieldReader top(doc, "");
  RunConfig c;
  top.read_enum("kind", c.kind, policy_kind_from_string);
  top.read("seed", c.seed);
  top.read("output_dir", c.output_dir);
  top.read("threads", c.threads);
  jsonio::read_into(top.child("env"), c.env);
  c.arch.obs_dim = soccer::observation_width(c.env);
  jsonio::read_into(top.child("arch"), c.arch);
  jsonio::read_into(top.child("ablation"), c.ablation);
  {
    auto r = top.child("learner");
    r.read("gamma", c.learner.gamma);
    r.read("actor_lr", c.learner.actor_lr);
    r.read("critic_lr", c.learner.critic_lr);
    r.read("max_grad_norm", c.learner.max_grad_norm);
    r.read("theta_s", c.learner.theta_s);
    r.read("theta_b", c.learner.theta_b);
    r.read("entropy_coef", c.learner.entropy_coef);
    r.read("conformity", c.learner.conformity);
    r.read_enum("advantage", c.learner.advantage, advantage_from_string);
    r.read_enum("critic_target", c.learner.critic_target, critic_target_from_string);
    r.read("normalize_advantages", c.learner.normalize_advantages);
    r.finish();
  }
  {
    auto r = top.child("ppo");
    r.read("clip", c.ppo.clip);
    r.read("gae_lambda", c.ppo.gae_lambda);
    r.read("epochs", c.ppo.epochs);
    r.read("minibatches", c.ppo.minibatches);
    r.read("value_coef", c.ppo.value_coef);
    r.read("entropy_coef", c.ppo.entropy_coef);
    r.read("learning_rate", c.ppo.learning_rate);
    r.read("max_grad_norm", c.ppo.max_grad_norm);
    r.finish();
  }
  {
    auto r = top.child("curriculum");
    std::vector<int> stages(c.curriculum.stage_games.begin(), c.curriculum.stage_games.end());
    r.read("stage_games", stages);
    if (stages.size() != 4) fail("curriculum.stage_games", "expected exactly 4 game counts");
    std::copy(stages.begin(), stages.end(), c.curriculum.stage_games.begin());
    r.read("games_per_update", c.curriculum.games_per_update);
    r.read("snapshot_interval", c.curriculum.snapshot_interval);
    r.finish();
  }
  {
    auto r = top.child("league");
    r.read("games", c.league.games);
    r.read("k", c.league.k);
    r.read("initial_rating", c.league.initial_rating);
    r.read("d_min", c.league.band.d_min);
    r.read("d_max", c.league.band.d_max);
    r.read_enum("spawn", c.league.spawn, spawn_from_string);
    r.read("save_replays", c.league.save_replays);
    r.finish();
  }
  top.finish();
  c.ppo.gamma = c.learner.gamma;
  c.validate();
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("", e.what());
  }
  try {
    return parse_config_text(text);
  } catch (const ConfigError& e) {
    throw ConfigError(e.key(), path.string() + ": " + e.detail());
  }
}

std::string config_to_json(const RunConfig& c) {
  json doc;
  doc["kind"] = to_string(c.kind);
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["threads"] = c.threads;
  doc["env"] = jsonio::to_json(c.env);
  doc["arch"] = jsonio::to_json(c.arch);
  doc["ablation"] = jsonio::to_json(c.ablation);
  doc["learner"] = {{"gamma", c.learner.gamma},
                    {"actor_lr", c.learner.actor_lr},
                    {"critic_lr", c.learner.critic_lr},
                    {"max_grad_norm", c.learner.max_grad_norm},
                    {"theta_s", c.learner.theta_s},
                    {"theta_b", c.learner.theta_b},
                    {"entropy_coef", c.learner.entropy_coef},
                    {"conformity", c.learner.conformity},
                    {"advantage", to_string(c.learner.advantage)},
                    {"critic_target", to_string(c.learner.critic_target)},
                    {"normalize_advantages", c.learner.normalize_advantages}};
  doc["ppo"] = {{"clip", c.ppo.clip},
                {"gae_lambda", c.ppo.gae_lambda},
                {"epochs", c.ppo.epochs},
                {"minibatches", c.ppo.minibatches},
                {"value_coef", c.ppo.value_coef},
                {"entropy_coef", c.ppo.entropy_coef},
                {"learning_rate", c.ppo.learning_rate},
                {"max_grad_norm", c.ppo.max_grad_norm}};
  doc["curriculum"] = {{"stage_games", c.curriculum.stage_games},
                       {"games_per_update", c.curriculum.games_per_update},
                       {"snapshot_interval", c.curriculum.snapshot_interval}};
  doc["league"] = {{"games", c.league.games},
                   {"k", c.league.k},
                   {"initial_rating", c.league.initial_rating},
                   {"d_min", c.league.band.d_min},
                   {"d_max", c.league.band.d_max},
                   {"spawn", to_string(c.league.spawn)},
                   {"save_replays", c.league.save_replays}};
  return doc.dump(2);
}

void echo_config(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(std::filesystem::path(cfg.output_dir) / "config.json", config_to_json(cfg) + "\n");
}

}  // namespace taac
