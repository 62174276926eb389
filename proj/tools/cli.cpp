#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "taac/config.hpp"
#include "taac/errors.hpp"
#include "taac/gradient_suite.hpp"
#include "taac/trainer.hpp"

namespace taac::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string output;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "JSON run configuration");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "Override the configured seed");
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--output", c.output, "Output directory (overrides TAAC_OUTPUT_DIR and the config)");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? parse_config_text("{}") : parse_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (const char* env = std::getenv("TAAC_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
  if (!c.output.empty()) cfg.output_dir = c.output;
  cfg.validate();
  return cfg;
}

int cmd_train(const Common& c, std::ostream& out) {
  const RunConfig cfg = load_config(c);
  const TrainResult r = run_curriculum(cfg);
  out << (r.resumed ? "resumed; " : "") << "trained " << to_string(cfg.kind) << " for " << r.games << " games ("
      << r.updates << " updates); output in " << cfg.output_dir << "\n";
  return kOk;
}

std::vector<LeagueTeam> load_teams(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("teams", dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<LeagueTeam> teams;
  for (const auto& f : files)
    teams.push_back({f.stem().string(), std::make_shared<const PolicySnapshot>(load_snapshot(f))});
  if (teams.size() < 2) throw ConfigError("teams", dir.string() + " holds fewer than two snapshot files");
  return teams;
}

int cmd_league(const Common& c, const std::string& teams_dir, std::ostream& out) {
  const RunConfig cfg = load_config(c);
  const auto teams = load_teams(teams_dir);
  const fs::path dir = fs::path(cfg.output_dir) / "league";
  fs::create_directories(dir);
  const fs::path replay_dir = dir / "replays";
  if (cfg.league.save_replays) fs::create_directories(replay_dir);
  const LeagueReport rep = run_league(teams, cfg.env, cfg.league, cfg.seed, cfg.threads,
                                      cfg.league.save_replays ? replay_dir : fs::path{});
  write_league_report(dir, rep);
  for (std::size_t i = 0; i < rep.teams.size(); ++i) {
    out << rep.teams[i] << " elo " << rep.final_elo[i] << " w/l/t " << rep.record[i][0] << '/' << rep.record[i][1]
        << '/' << rep.record[i][2] << "\n";
  }
  out << "report written to " << dir.string() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string a, b, out, replay;
  int games = 10;
};

int cmd_eval(const Common& c, const EvalArgs& e, std::ostream& out) {
  const RunConfig cfg = load_config(c);
  const PolicySnapshot sa = load_snapshot(e.a);
  const PolicySnapshot sb = load_snapshot(e.b);
  const auto pa = policy_from_snapshot(sa);
  const auto pb = policy_from_snapshot(sb);
  MatchOptions opts;
  opts.spawn = cfg.league.spawn;
  opts.band = cfg.league.band;
  int wins_a = 0, wins_b = 0, ties = 0, goals_a = 0, goals_b = 0;
  double elo_a = cfg.league.initial_rating, elo_b = cfg.league.initial_rating;
  json games = json::array();
  for (int g = 0; g < e.games; ++g) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(g));
    // Alternate sides so neither snapshot always kicks off from the west.
    const bool a_west = g % 2 == 0;
    Replay replay;
    const bool record = g == 0 && !e.replay.empty();
    MatchRecord m = a_west ? play_match(*pa, *pb, cfg.env, seed, opts, record ? &replay : nullptr)
                           : play_match(*pb, *pa, cfg.env, seed, opts, record ? &replay : nullptr);
    if (record) {
      replay.team_a = a_west ? "a" : "b";
      replay.team_b = a_west ? "b" : "a";
      replay.seed = seed;
      replay.env = cfg.env;
      write_replay(e.replay, replay);
    }
    const int score_a = m.score[a_west ? 0 : 1];
    const int score_b = m.score[a_west ? 1 : 0];
    goals_a += score_a;
    goals_b += score_b;
    const Outcome o = score_a > score_b ? Outcome::win_a : score_b > score_a ? Outcome::win_b : Outcome::tie;
    (o == Outcome::win_a ? wins_a : o == Outcome::win_b ? wins_b : ties)++;
    std::tie(elo_a, elo_b) = elo_update(elo_a, elo_b, o, cfg.league.k);
    games.push_back({{"game", g}, {"seed", seed}, {"a_side", a_west ? 0 : 1}, {"score_a", score_a}, {"score_b", score_b}});
  }
  const double n = std::max(1, e.games);
  json report = {{"a", e.a},
                 {"b", e.b},
                 {"kind_a", to_string(sa.kind)},
                 {"kind_b", to_string(sb.kind)},
                 {"games", e.games},
                 {"wins_a", wins_a},
                 {"wins_b", wins_b},
                 {"ties", ties},
                 {"win_rate_a", (wins_a + 0.5 * ties) / n},
                 {"mean_goal_diff", (goals_a - goals_b) / n},
                 {"elo_a", elo_a},
                 {"elo_b", elo_b},
                 {"per_game", games}};
  const std::string text = report.dump(2) + "\n";
  if (e.out.empty()) {
    out << text;
  } else {
    write_text_file(e.out, text);
    out << "report written to " << e.out << "\n";
  }
  return kOk;
}

int cmd_gradcheck(int seeds, std::ostream& out) {
  const GradientSuiteReport r = run_gradient_suite(seeds);
  for (const auto& c : r.cases) {
    out << c.name << " seed " << c.seed << " coords " << c.coordinates << " max_rel_err " << c.max_relative_error
        << "\n";
  }
  out << "max relative error " << r.max_relative_error() << (r.passed() ? " (pass)" : " (FAIL)") << "\n";
  return r.passed() ? kOk : kValidation;
}

int cmd_replay(const std::string& match, const std::string& dest, ConnectivityBand band, std::ostream& out) {
  const Replay replay = read_replay(match);
  std::ostringstream csv;
  export_replay_csv(replay, csv, band);
  write_text_file(dest, csv.str());
  out << replay.frames.size() << " frames written to " << dest << "\n";
  return kOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Team-attention actor-critic soccer: training, league play and diagnostics", "taac"};
  app.require_subcommand(1);

  Common train_opts, league_opts, eval_opts;
  auto* train = app.add_subcommand("train", "Run the four-stage training curriculum");
  add_common(train, train_opts, true);

  std::string teams_dir;
  auto* league = app.add_subcommand("league", "Play a league between snapshot files");
  add_common(league, league_opts, true);
  league->add_option("--teams", teams_dir, "Directory of snapshot .json files, one team each")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Head-to-head evaluation of two snapshots");
  add_common(eval, eval_opts, false);
  eval->add_option("--a", eval_args.a, "First snapshot")->required();
  eval->add_option("--b", eval_args.b, "Second snapshot")->required();
  eval->add_option("--games", eval_args.games, "Number of games")->check(CLI::NonNegativeNumber);
  eval->add_option("--out", eval_args.out, "Write the JSON report here instead of stdout");
  eval->add_option("--replay", eval_args.replay, "Record the first game as a JSONL replay");

  int seeds = 10;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every training loss");
  gradcheck->add_option("--seeds", seeds, "Random instances per loss")->check(CLI::PositiveNumber);

  std::string match, dest;
  ConnectivityBand band;
  auto* replay = app.add_subcommand("replay", "Export a replay with per-frame metrics as CSV");
  replay->add_option("--match", match, "Replay JSONL file")->required();
  replay->add_option("--out", dest, "CSV destination")->required();
  replay->add_option("--d-min", band.d_min, "Connectivity lower distance");
  replay->add_option("--d-max", band.d_max, "Connectivity upper distance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*train) return cmd_train(train_opts, out);
    if (*league) return cmd_league(league_opts, teams_dir, out);
    if (*eval) return cmd_eval(eval_opts, eval_args, out);
    if (*gradcheck) return cmd_gradcheck(seeds, out);
    if (*replay) return cmd_replay(match, dest, band, out);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  err << app.help();
  return kUsage;
}

}  // namespace taac::cli
