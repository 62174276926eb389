#include "taac/trainer.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json_io.hpp"

namespace taac {

namespace fs = std::filesystem;
using jsonio::json;

std::uint64_t init_seed(const RunConfig& cfg) { return derive_seed(cfg.seed, 0); }

std::unique_ptr<Learner> make_learner(const RunConfig& cfg) {
  LearnerOptions opts = cfg.learner;
  if (opts.nan_dump_path.empty()) opts.nan_dump_path = (fs::path(cfg.output_dir) / "nan_batch.json").string();
  switch (cfg.kind) {
    case PolicyKind::taac: return std::make_unique<TaacLearner>(cfg.arch, AblationConfig{}, opts, init_seed(cfg));
    case PolicyKind::taac_ablation:
      return std::make_unique<TaacLearner>(cfg.arch, cfg.ablation, opts, init_seed(cfg));
    case PolicyKind::ppo: {
      PpoOptions p = cfg.ppo;
      p.gamma = cfg.learner.gamma;
      return std::make_unique<PpoLearner>(cfg.arch, p, init_seed(cfg));
    }
    case PolicyKind::random: return nullptr;
  }
  return nullptr;
}

namespace {

struct Checkpoint {
  int games = 0;
  int updates = 0;
  std::size_t log_lines = 0;
  std::vector<std::string> league;
  std::string learner_state;
  std::string config;
};

void write_checkpoint(const fs::path& path, const Checkpoint& c) {
  json doc = {{"games", c.games},          {"updates", c.updates}, {"log_lines", c.log_lines},
              {"league", c.league},        {"config", c.config}};
  doc["learner"] = jsonio::parse_or_throw(c.learner_state, "learner state");
  write_text_file(path, doc.dump());
}

Checkpoint read_checkpoint(const fs::path& path) {
  const json doc = jsonio::parse_or_throw(read_text_file(path), path.string());
  try {
    Checkpoint c;
    c.games = doc.at("games").get<int>();
    c.updates = doc.at("updates").get<int>();
    c.log_lines = doc.at("log_lines").get<std::size_t>();
    c.league = doc.at("league").get<std::vector<std::string>>();
    c.config = doc.at("config").get<std::string>();
    c.learner_state = doc.at("learner").dump();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint", path.string() + ": " + e.what());
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  if (!fs::exists(path)) return lines;
  std::istringstream in(read_text_file(path));
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string snapshot_name(int games) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.json", games);
  return buf;
}

struct PlannedGame {
  std::uint64_t seed = 0;
  int side = 0;
  SnapshotPtr opponent;  // null: inactive or random, per the stage
};

}  // namespace

TrainResult run_curriculum(const RunConfig& cfg, const std::function<void(const std::string&)>& on_update) {
  cfg.validate();
  const fs::path out(cfg.output_dir);
  try {
    fs::create_directories(out / "snapshots");
  } catch (const fs::filesystem_error& e) {
    throw ConfigError("output_dir", e.what());
  }
  echo_config(cfg);
  const fs::path log_path = out / "train_log.jsonl";
  const fs::path checkpoint_path = out / "checkpoint.json";
  const std::string config_text = config_to_json(cfg);

  TrainResult result;
  std::unique_ptr<Learner> learner = make_learner(cfg);
  if (!learner) {
    result.final_snapshot = initial_snapshot(cfg.kind, cfg.arch, cfg.ablation, init_seed(cfg));
    write_text_file(log_path, "");
    save_snapshot(out / "final_snapshot.json", result.final_snapshot);
    return result;
  }

  SnapshotLeague league;
  Checkpoint state;
  std::vector<std::string> log_lines;
  if (fs::exists(checkpoint_path)) {
    state = read_checkpoint(checkpoint_path);
    // The stored config omits output_dir from the comparison.
    RunConfig stored = parse_config_text(state.config);
    stored.output_dir = cfg.output_dir;
    if (config_to_json(stored) != config_text) {
      throw ConfigError("checkpoint", checkpoint_path.string() + " was written with a different configuration");
    }
    learner->load_state(state.learner_state);
    for (const auto& name : state.league) league.add(load_snapshot(out / "snapshots" / name));
    log_lines = read_lines(log_path);
    if (log_lines.size() < state.log_lines) {
      throw ConfigError("checkpoint", "training log is shorter than the checkpoint records");
    }
    log_lines.resize(state.log_lines);
    result.resumed = true;
  } else {
    const PolicySnapshot first = learner->snapshot(0);
    save_snapshot(out / "snapshots" / snapshot_name(0), first);
    league.add(first);
    state.league.push_back(snapshot_name(0));
  }
  {
    std::string text;
    for (const auto& l : log_lines) text += l + "\n";
    write_text_file(log_path, text);
  }
  std::ofstream log(log_path, std::ios::app);
  state.config = config_text;

  auto save_checkpoint = [&] {
    state.learner_state = learner->save_state();
    state.log_lines = log_lines.size();
    write_checkpoint(checkpoint_path, state);
  };

  const std::uint64_t game_base = derive_seed(cfg.seed, 1);
  int stage_start = 0;
  for (const StageSpec& stage : stage_specs(cfg.curriculum)) {
    const int stage_end = stage_start + stage.games;
    while (state.games < stage_end) {
      const int cycle = std::min(cfg.curriculum.games_per_update, stage_end - state.games);
      std::vector<PlannedGame> plan;
      for (int g = 0; g < cycle; ++g) {
        PlannedGame p;
        p.seed = derive_seed(game_base, static_cast<std::uint64_t>(state.games + g));
        Rng pick(derive_seed(p.seed, 7));
        p.side = stage.opponent == OpponentSource::inactive ? 0 : static_cast<int>(pick.below(2));
        if (stage.opponent == OpponentSource::league && !league.empty()) p.opponent = league.sample(pick);
        plan.push_back(std::move(p));
      }
      const PolicySnapshot live = learner->snapshot(state.updates);
      std::vector<GameRollout> rollouts(plan.size());
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      auto worker = [&] {
        try {
          const auto policy = policy_from_snapshot(live);
          const RandomPolicy random;
          const InactivePolicy inactive;
          for (std::size_t g = next++; g < plan.size(); g = next++) {
            const auto& p = plan[g];
            std::unique_ptr<TeamPolicy> league_policy;
            const TeamPolicy* opponent = &random;
            if (stage.opponent == OpponentSource::inactive) opponent = &inactive;
            if (p.opponent) {
              league_policy = policy_from_snapshot(*p.opponent);
              opponent = league_policy.get();
            }
            rollouts[g] = collect_game(*policy, *opponent, cfg.env, stage.spawn,
                                       stage.opponent != OpponentSource::inactive, p.side, p.seed);
          }
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = plan.size();
        }
      };
      const int workers = std::max(1, std::min(cfg.threads, cycle));
      if (workers == 1) {
        worker();
      } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
      }
      if (failure) std::rethrow_exception(failure);

      std::vector<Trajectory> episodes;
      int goals_for = 0, goals_against = 0;
      for (auto& r : rollouts) {
        goals_for += r.goals_for;
        goals_against += r.goals_against;
        for (auto& e : r.episodes) episodes.push_back(std::move(e));
      }
      const std::size_t episode_count = episodes.size();
      const UpdateReport rep = learner->update(std::move(episodes));
      const int before = state.games;
      state.games += cycle;
      ++state.updates;

      json rec = {{"update", state.updates},
                  {"stage", stage.tag},
                  {"games", state.games},
                  {"episodes", episode_count},
                  {"samples", rep.samples},
                  {"goals_for", goals_for},
                  {"goals_against", goals_against},
                  {"policy_loss", rep.policy_loss},
                  {"critic_loss", rep.critic_loss},
                  {"entropy", rep.entropy},
                  {"mean_advantage", rep.mean_advantage},
                  {"conformity", rep.conformity}};
      const std::string line = rec.dump();
      log << line << '\n';
      log.flush();
      log_lines.push_back(line);
      if (on_update) on_update(line);

      const int interval = cfg.curriculum.snapshot_interval;
      if (state.games / interval != before / interval) {
        const std::string name = snapshot_name(state.games);
        const PolicySnapshot snap = learner->snapshot(state.updates);
        save_snapshot(out / "snapshots" / name, snap);
        league.add(snap);
        state.league.push_back(name);
        save_checkpoint();
      }
    }
    stage_start = stage_end;
  }
  save_checkpoint();
  result.final_snapshot = learner->snapshot(state.updates);
  save_snapshot(out / "final_snapshot.json", result.final_snapshot);
  result.games = state.games;
  result.updates = state.updates;
  return result;
}

}  // namespace taac
