#include "taac/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json_io.hpp"

namespace taac {

using jsonio::json;

std::pair<double, double> elo_update(double r_a, double r_b, Outcome outcome, double k) {
  if (!std::isfinite(r_a) || !std::isfinite(r_b)) throw std::invalid_argument("elo_update: non-finite rating");
  const double e_a = 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
  const double s_a = outcome == Outcome::win_a ? 1.0 : outcome == Outcome::win_b ? 0.0 : 0.5;
  // Deltas live on a 2^-20 grid so adding and subtracting them is exact and
  // the pair sum never drifts.
  const double delta = std::round(k * (s_a - e_a) * 0x1p20) * 0x1p-20;
  return {r_a + delta, r_b - delta};
}

EloTable::EloTable(std::size_t teams, double k, double initial)
    : k_(k), ratings_(teams, initial), history_{ratings_} {}

void EloTable::record(std::size_t a, std::size_t b, Outcome outcome) {
  if (a == b) throw std::invalid_argument("EloTable: a team cannot play itself");
  std::tie(ratings_.at(a), ratings_.at(b)) = elo_update(ratings_.at(a), ratings_.at(b), outcome, k_);
  history_.push_back(ratings_);
}

Outcome MatchRecord::outcome() const {
  if (score[0] > score[1]) return Outcome::win_a;
  if (score[1] > score[0]) return Outcome::win_b;
  return Outcome::tie;
}

bool MatchRecord::operator==(const MatchRecord& o) const {
  auto same_collab = [](const CollabMetrics& x, const CollabMetrics& y) {
    return x.mean_distance == y.mean_distance && x.possession_swaps == y.possession_swaps &&
           x.connectivity == y.connectivity;
  };
  if (goals.size() != o.goals.size()) return false;
  for (std::size_t i = 0; i < goals.size(); ++i)
    if (goals[i].step != o.goals[i].step || goals[i].episode != o.goals[i].episode || goals[i].team != o.goals[i].team)
      return false;
  return team_a == o.team_a && team_b == o.team_b && seed == o.seed && score == o.score &&
         episode_lengths == o.episode_lengths && same_collab(collab[0], o.collab[0]) &&
         same_collab(collab[1], o.collab[1]) && replay_path == o.replay_path;
}

MatchRecord play_match(const TeamPolicy& a, const TeamPolicy& b, const soccer::EnvConfig& env, std::uint64_t seed,
                       const MatchOptions& options, Replay* replay) {
  env.validate();
  MatchRecord rec;
  rec.seed = seed;
  soccer::Game game(env, options.spawn, !options.b_inactive, derive_seed(seed, 0));
  Rng rng_a(derive_seed(seed, 1));
  Rng rng_b(derive_seed(seed, 2));
  CollabAccumulator acc_a(0, env, options.band);
  CollabAccumulator acc_b(1, env, options.band);
  soccer::JointAction joint(static_cast<std::size_t>(env.player_count()), soccer::kNoOpAction);
  int episode_length = 0;
  while (!game.done()) {
    const auto& s = game.state();
    place_team_actions(joint, 0, a.act(team_observations(s, 0, env), rng_a).actions, env);
    if (!options.b_inactive) place_team_actions(joint, 1, b.act(team_observations(s, 1, env), rng_b).actions, env);
    const soccer::StepResult r = game.advance(joint);
    acc_a.add_frame(r.state, r.events.ball_touches);
    acc_b.add_frame(r.state, r.events.ball_touches);
    if (replay) replay->frames.push_back(make_frame(r, joint));
    ++episode_length;
    if (r.events.goal_scored) {
      rec.goals.push_back({r.state.step, r.state.episode, *r.events.goal_scored});
      rec.episode_lengths.push_back(episode_length);
      episode_length = 0;
      acc_a.reset_possession();
      acc_b.reset_possession();
    }
  }
  if (episode_length > 0) rec.episode_lengths.push_back(episode_length);
  rec.score = game.state().score;
  rec.collab = {acc_a.result(), acc_b.result()};
  return rec;
}

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.std += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(m.std / static_cast<double>(xs.size()));
  return m;
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::win_a: return "win_a";
    case Outcome::win_b: return "win_b";
    case Outcome::tie: return "tie";
  }
  return "tie";
}

}  // namespace

LeagueReport run_league(const std::vector<LeagueTeam>& teams, const soccer::EnvConfig& env, const LeagueConfig& cfg,
                        std::uint64_t seed, int threads, const std::filesystem::path& replay_dir) {
  const std::size_t n = teams.size();
  if (n < 2) throw std::invalid_argument("run_league: need at least two teams");
  if (cfg.games < 0) throw std::invalid_argument("run_league: negative game count");
  for (const auto& t : teams)
    if (!t.snapshot) throw std::invalid_argument("run_league: team '" + t.name + "' has no snapshot");
  env.validate();

  struct Fixture {
    std::size_t a, b;
    std::uint64_t seed;
  };
  std::vector<Fixture> schedule;
  Rng pick(seed);
  for (int g = 0; g < cfg.games; ++g) {
    const std::size_t a = pick.below(n);
    std::size_t b = pick.below(n - 1);
    if (b >= a) ++b;
    schedule.push_back({a, b, derive_seed(seed, static_cast<std::uint64_t>(g) + 1)});
  }

  std::vector<MatchRecord> results(schedule.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    std::vector<std::unique_ptr<TeamPolicy>> policies(n);
    auto policy = [&](std::size_t i) -> const TeamPolicy& {
      if (!policies[i]) policies[i] = policy_from_snapshot(*teams[i].snapshot);
      return *policies[i];
    };
    try {
      for (std::size_t g = next++; g < schedule.size(); g = next++) {
        const auto& f = schedule[g];
        MatchOptions opts;
        opts.spawn = cfg.spawn;
        opts.band = cfg.band;
        Replay replay;
        MatchRecord rec = play_match(policy(f.a), policy(f.b), env, f.seed, opts, cfg.save_replays ? &replay : nullptr);
        rec.team_a = f.a;
        rec.team_b = f.b;
        if (cfg.save_replays && !replay_dir.empty()) {
          char name[32];
          std::snprintf(name, sizeof name, "match_%05zu.jsonl", g);
          replay.team_a = teams[f.a].name;
          replay.team_b = teams[f.b].name;
          replay.seed = f.seed;
          replay.env = env;
          write_replay(replay_dir / name, replay);
          rec.replay_path = (replay_dir / name).string();
        }
        results[g] = std::move(rec);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = schedule.size();
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(schedule.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  LeagueReport rep;
  for (const auto& t : teams) rep.teams.push_back(t.name);
  rep.wins.assign(n, std::vector<int>(n, 0));
  rep.goal_diff.assign(n, std::vector<int>(n, 0));
  rep.record.assign(n, {0, 0, 0});
  EloTable elo(n, cfg.k, cfg.initial_rating);
  std::vector<std::vector<double>> dist(n), swaps(n), conn(n);
  for (const auto& m : results) {
    const Outcome o = m.outcome();
    elo.record(m.team_a, m.team_b, o);
    rep.goal_diff[m.team_a][m.team_b] += m.goal_differential();
    rep.goal_diff[m.team_b][m.team_a] -= m.goal_differential();
    if (o == Outcome::win_a) {
      ++rep.wins[m.team_a][m.team_b];
      ++rep.record[m.team_a][0];
      ++rep.record[m.team_b][1];
    } else if (o == Outcome::win_b) {
      ++rep.wins[m.team_b][m.team_a];
      ++rep.record[m.team_b][0];
      ++rep.record[m.team_a][1];
    } else {
      ++rep.record[m.team_a][2];
      ++rep.record[m.team_b][2];
    }
    const std::array<std::size_t, 2> side{m.team_a, m.team_b};
    for (int s = 0; s < 2; ++s) {
      dist[side[s]].push_back(m.collab[s].mean_distance);
      swaps[side[s]].push_back(m.collab[s].possession_swaps);
      conn[side[s]].push_back(m.collab[s].connectivity);
    }
  }
  rep.matches = std::move(results);
  rep.elo_history = elo.history();
  rep.final_elo = elo.ratings();
  for (std::size_t i = 0; i < n; ++i) rep.collab.push_back({mean_std(dist[i]), mean_std(swaps[i]), mean_std(conn[i])});
  return rep;
}

std::string league_report_json(const LeagueReport& r) {
  json doc;
  doc["teams"] = r.teams;
  doc["games"] = r.matches.size();
  doc["final_elo"] = r.final_elo;
  doc["elo_history"] = r.elo_history;
  doc["win_matrix"] = r.wins;
  doc["goal_diff_matrix"] = r.goal_diff;
  json records = json::array();
  json collab = json::array();
  for (std::size_t i = 0; i < r.teams.size(); ++i) {
    records.push_back({{"wins", r.record[i][0]}, {"losses", r.record[i][1]}, {"ties", r.record[i][2]}});
    auto ms = [](const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; };
    collab.push_back({{"distance", ms(r.collab[i].distance)},
                      {"possession_swaps", ms(r.collab[i].swaps)},
                      {"connectivity", ms(r.collab[i].connectivity)}});
  }
  doc["records"] = records;
  doc["collaboration"] = collab;
  return doc.dump(2);
}

std::string matches_csv(const LeagueReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "game,team_a,team_b,seed,score_a,score_b,goal_diff,outcome,episodes,distance_a,distance_b,swaps_a,swaps_b,"
        "connectivity_a,connectivity_b,replay\n";
  for (std::size_t g = 0; g < r.matches.size(); ++g) {
    const auto& m = r.matches[g];
    os << g << ',' << r.teams[m.team_a] << ',' << r.teams[m.team_b] << ',' << m.seed << ',' << m.score[0] << ','
       << m.score[1] << ',' << m.goal_differential() << ',' << outcome_name(m.outcome()) << ','
       << m.episode_lengths.size() << ',' << m.collab[0].mean_distance << ',' << m.collab[1].mean_distance << ','
       << m.collab[0].possession_swaps << ',' << m.collab[1].possession_swaps << ',' << m.collab[0].connectivity
       << ',' << m.collab[1].connectivity << ',' << m.replay_path << '\n';
  }
  return os.str();
}

void write_league_report(const std::filesystem::path& dir, const LeagueReport& report) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "league_report.json", league_report_json(report));
  write_text_file(dir / "matches.csv", matches_csv(report));
}

}  // namespace taac
