#include "taac/curriculum.hpp"

#include <stdexcept>

namespace taac {

std::vector<StageSpec> stage_specs(const CurriculumConfig& cfg) {
  using soccer::SpawnMode;
  return {{1, SpawnMode::random_spawns, OpponentSource::inactive, cfg.stage_games[0]},
          {2, SpawnMode::random_spawns, OpponentSource::random, cfg.stage_games[1]},
          {3, SpawnMode::random_spawns, OpponentSource::league, cfg.stage_games[2]},
          {4, SpawnMode::fixed_formation, OpponentSource::league, cfg.stage_games[3]}};
}

void SnapshotLeague::add(const PolicySnapshot& snap) {
  snapshots_.push_back(std::make_shared<const PolicySnapshot>(snap));
}

SnapshotPtr SnapshotLeague::sample(Rng& rng) const {
  if (snapshots_.empty()) throw std::logic_error("SnapshotLeague::sample: league is empty");
  return snapshots_[rng.below(snapshots_.size())];
}

GameRollout collect_game(const TeamPolicy& learner, const TeamPolicy& opponent, const soccer::EnvConfig& env,
                         soccer::SpawnMode spawn, bool opponent_active, int learner_side, std::uint64_t seed) {
  if (learner_side != 0 && learner_side != 1) throw std::invalid_argument("collect_game: side must be 0 or 1");
  if (!opponent_active && learner_side != 0) {
    throw std::invalid_argument("collect_game: an inactive opponent always plays side 1");
  }
  const int other = 1 - learner_side;
  const std::size_t n = static_cast<std::size_t>(env.team_size);
  soccer::Game game(env, spawn, opponent_active, derive_seed(seed, 0));
  Rng rng_learner(derive_seed(seed, 1));
  Rng rng_opponent(derive_seed(seed, 2));
  soccer::JointAction joint(static_cast<std::size_t>(env.player_count()), soccer::kNoOpAction);

  GameRollout out;
  Trajectory current{n, static_cast<std::size_t>(soccer::observation_width(env)), {}, {}};
  Tensor obs = team_observations(game.state(), learner_side, env);
  while (!game.done()) {
    const TeamAct act = learner.act(obs, rng_learner);
    place_team_actions(joint, learner_side, act.actions, env);
    if (opponent_active) {
      place_team_actions(joint, other, opponent.act(team_observations(game.state(), other, env), rng_opponent).actions,
                         env);
    }
    const soccer::StepResult r = game.advance(joint);
    Transition tr;
    tr.observations.assign(obs.data().begin(), obs.data().end());
    tr.actions = act.actions;
    tr.log_probs = act.log_probs;
    for (std::size_t k = 0; k < n; ++k) tr.rewards.push_back(r.rewards[static_cast<std::size_t>(learner_side) * n + k]);
    const Tensor next = team_observations(r.state, learner_side, env);
    tr.next_observations.assign(next.data().begin(), next.data().end());
    tr.episode_done = r.events.goal_scored.has_value() || r.events.game_done;
    tr.step = r.state.step;
    current.transitions.push_back(std::move(tr));
    if (current.transitions.back().episode_done) {
      out.episodes.push_back(std::move(current));
      current = Trajectory{n, static_cast<std::size_t>(soccer::observation_width(env)), {}, {}};
    }
    // After a goal the game has respawned; observe the fresh state.
    obs = r.events.goal_scored ? team_observations(game.state(), learner_side, env) : next;
  }
  out.goals_for = game.state().score[static_cast<std::size_t>(learner_side)];
  out.goals_against = game.state().score[static_cast<std::size_t>(other)];
  return out;
}

}  // namespace taac
