#include "taac/replay.hpp"

#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "taac/serialization.hpp"

namespace taac {

using jsonio::json;
using soccer::Vec2;

namespace {

json vec(Vec2 v) { return json::array({v.x, v.y}); }
Vec2 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json frame_to_json(const ReplayFrame& f) {
  json players = json::array();
  for (Vec2 p : f.players) players.push_back(vec(p));
  json touches = json::array();
  for (const auto& t : f.touches) touches.push_back({t.player, t.team});
  json j = {{"step", f.step},        {"episode", f.episode}, {"players", players},
            {"ball", vec(f.ball)},   {"ball_velocity", vec(f.ball_velocity)},
            {"score", f.score},      {"actions", f.actions}, {"touches", touches}};
  j["goal"] = f.goal_scored ? json(*f.goal_scored) : json(nullptr);
  return j;
}

ReplayFrame frame_from_json(const json& j) {
  ReplayFrame f;
  f.step = j.at("step").get<int>();
  f.episode = j.at("episode").get<int>();
  for (const auto& p : j.at("players")) f.players.push_back(vec_from(p));
  f.ball = vec_from(j.at("ball"));
  f.ball_velocity = vec_from(j.at("ball_velocity"));
  f.score = j.at("score").get<std::array<int, 2>>();
  f.actions = j.at("actions").get<std::vector<int>>();
  for (const auto& t : j.at("touches")) f.touches.push_back({t.at(0).get<int>(), t.at(1).get<int>()});
  if (!j.at("goal").is_null()) f.goal_scored = j.at("goal").get<int>();
  return f;
}

}  // namespace

ReplayFrame make_frame(const soccer::StepResult& r, const soccer::JointAction& actions) {
  ReplayFrame f;
  f.step = r.state.step;
  f.episode = r.state.episode;
  for (const auto& p : r.state.players) f.players.push_back(p.position);
  f.ball = r.state.ball.position;
  f.ball_velocity = r.state.ball.velocity;
  f.score = r.state.score;
  f.actions = actions;
  f.touches = r.events.ball_touches;
  f.goal_scored = r.events.goal_scored;
  return f;
}

void write_replay(const std::filesystem::path& path, const Replay& replay) {
  std::ostringstream os;
  json header = {{"team_a", replay.team_a}, {"team_b", replay.team_b}, {"seed", replay.seed},
                 {"env", jsonio::to_json(replay.env)}};
  os << header.dump() << '\n';
  for (const auto& f : replay.frames) os << frame_to_json(f).dump() << '\n';
  write_text_file(path, os.str());
}

Replay read_replay(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  Replay r;
  if (!std::getline(in, line)) throw ConfigError("replay", path.string() + ": empty replay file");
  try {
    const json header = jsonio::parse_or_throw(line, "replay header");
    r.team_a = header.at("team_a").get<std::string>();
    r.team_b = header.at("team_b").get<std::string>();
    r.seed = header.at("seed").get<std::uint64_t>();
    jsonio::read_into(jsonio::FieldReader(header.at("env"), "env"), r.env);
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      r.frames.push_back(frame_from_json(jsonio::parse_or_throw(line, "replay line " + std::to_string(lineno))));
    }
  } catch (const json::exception& e) {
    throw ConfigError("replay", path.string() + ": " + e.what());
  }
  return r;
}

void export_replay_csv(const Replay& replay, std::ostream& out, ConnectivityBand band) {
  const auto& cfg = replay.env;
  const int players = cfg.player_count();
  out << "step,episode,score_0,score_1,ball_x,ball_y";
  for (int i = 0; i < players; ++i) out << ",p" << i << "_x,p" << i << "_y";
  out << ",distance_0,distance_1,connectivity_0,connectivity_1,swaps_0,swaps_1\n";
  std::array<int, 2> last{-1, -1};
  std::array<int, 2> swaps{0, 0};
  int episode = replay.frames.empty() ? 0 : replay.frames.front().episode;
  out.precision(10);
  for (const auto& f : replay.frames) {
    soccer::WorldState s;
    for (Vec2 p : f.players) s.players.push_back({p, {}, false});
    for (const auto& t : f.touches) {
      for (int team = 0; team < 2; ++team) {
        if (t.team == team && last[team] >= 0 && soccer::team_of(last[team], cfg) == team && t.player != last[team])
          ++swaps[team];
        last[team] = t.player;
      }
    }
    out << f.step << ',' << f.episode << ',' << f.score[0] << ',' << f.score[1] << ',' << f.ball.x << ','
        << f.ball.y;
    for (Vec2 p : f.players) out << ',' << p.x << ',' << p.y;
    out << ',' << pairwise_distance(s, 0, cfg) << ',' << pairwise_distance(s, 1, cfg) << ','
        << connectivity(s, 0, cfg, band) << ',' << connectivity(s, 1, cfg, band) << ',' << swaps[0] << ','
        << swaps[1] << '\n';
    if (f.goal_scored || f.episode != episode) last = {-1, -1};
    episode = f.episode;
  }
}

}  // namespace taac
