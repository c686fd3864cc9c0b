// vguide: scenario runner for the variable-assistance joint simulator.
//
// Subcommands:
//   run      simulate one episode, write episode/steps/metrics CSVs
//   sweep    run an assistance-factor sweep and the trend checks
//   shapes   emit the guide tube geometry for overlay plots
//   selftest quick subset of the library invariants
//
// Exit codes: 0 ok, 2 usage/config error, 3 I/O error, 4 diverged episode,
// 5 violation under --strict.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vguide/csv.hpp"
#include "vguide/scenario.hpp"
#include "vguide/sim.hpp"
#include "vguide/units.hpp"

namespace fs = std::filesystem;
using namespace vguide;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitStrict = 5;

constexpr double kViolationSlack = 1e-3;  // rad, discrete-time containment slack

struct CommonOpts {
  std::string scenario_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

Scenario load_scenario(const CommonOpts& opts) {
  Scenario sc = parse_scenario(opts.scenario_path);
  if (opts.seed_set) sc.episode.seed = opts.seed;
  return sc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void echo_effective_config(const Scenario& sc, const fs::path& out) {
  write_text(out / "effective_config.json", effective_config_json(sc));
}

int cmd_run(const CommonOpts& opts, bool strict) {
  Scenario sc = load_scenario(opts);
  fs::path out = prepare_out_dir(opts.out_dir);
  echo_effective_config(sc, out);

  JointSetup joint = build_joint(sc);
  EpisodeResult res = run_episode(sc.episode, joint);

  write_episode_csv(res.log, (out / sc.output.episode_csv).string());
  write_steps_csv(res.log, (out / sc.output.steps_csv).string());
  write_metrics_csv(res.metrics, (out / sc.output.metrics_csv).string());

  std::cout << "run: " << res.log.ticks.size() << " ticks, " << res.log.steps.size()
            << " steps, rms_err=" << res.metrics.rms_tracking_error
            << " rad, max_violation=" << res.metrics.max_tube_violation
            << " rad, containment=" << res.metrics.containment_fraction
            << (res.status == EpisodeStatus::diverged ? " [DIVERGED]" : "") << "\n";

  if (res.status == EpisodeStatus::diverged) return kExitDiverged;
  if (strict && res.metrics.max_tube_violation > kViolationSlack) return kExitStrict;
  return kExitOk;
}

int cmd_sweep(const CommonOpts& opts, const std::string& xi_csv,
              const std::string& users_csv, int reps, bool full_logs, bool strict) {
  Scenario sc = load_scenario(opts);
  fs::path out = prepare_out_dir(opts.out_dir);
  echo_effective_config(sc, out);

  std::vector<double> xis;
  {
    std::stringstream ss(xi_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) xis.push_back(std::stod(tok));
    }
  }
  if (xis.empty()) throw CLI::ValidationError("--xi", "empty assistance factor list");

  std::vector<UserKind> users;
  {
    std::stringstream ss(users_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) users.push_back(user_kind_from_string(tok));
    }
  }
  if (users.empty()) throw CLI::ValidationError("--users", "empty user list");

  JointSetup joint = build_joint(sc);
  SweepTable table = run_sweep(sc.episode, joint, xis, users, reps, 0);

  write_sweep_csv(table, (out / sc.output.sweep_csv).string());
  write_sweep_aggregate_csv(table, (out / sc.output.sweep_aggregate_csv).string());

  if (full_logs) {
    for (const auto& cell : table.cells) {
      EpisodeConfig cfg = sc.episode;
      cfg.xi_schedule = {{0.0, cell.xi}};
      cfg.seed = cell.seed;
      JointSetup js = joint;
      js.user.kind = cell.user;
      EpisodeResult res = run_episode(cfg, js);
      std::ostringstream name;
      name << "cell_xi" << cell.xi << '_' << to_string(cell.user) << "_r" << cell.rep
           << ".csv";
      write_episode_csv(res.log, (out / name.str()).string());
    }
  }

  // Trend checks on the aggregated means, in increasing xi.
  std::vector<double> sorted_xi = xis;
  std::sort(sorted_xi.begin(), sorted_xi.end());
  auto monotone_decreasing_in_xi = [&](UserKind user, double Metrics::*field) {
    double prev = std::numeric_limits<double>::infinity();
    for (double xi : sorted_xi) {
      double v = table.mean_of(xi, user, field);
      if (std::isnan(v)) return false;
      if (v > prev) return false;
      prev = v;
    }
    return true;
  };

  bool any_violation = false;
  for (const auto& cell : table.cells) {
    if (cell.status == EpisodeStatus::diverged) return kExitDiverged;
    if (cell.metrics.max_tube_violation > kViolationSlack) any_violation = true;
  }

  std::cout << "sweep: " << table.cells.size() << " episodes\n";
  for (UserKind user : users) {
    if (user == UserKind::passive) {
      std::cout << "trend passive rms error non-increasing in xi: "
                << (monotone_decreasing_in_xi(user, &Metrics::rms_tracking_error)
                        ? "monotone: yes"
                        : "monotone: no")
                << "\n";
    }
    if (user == UserKind::active) {
      std::cout << "trend active user effort non-increasing in xi: "
                << (monotone_decreasing_in_xi(user, &Metrics::user_effort)
                        ? "monotone: yes"
                        : "monotone: no")
                << "\n";
    }
  }
  if (strict && any_violation) return kExitStrict;
  return kExitOk;
}

int cmd_shapes(const CommonOpts& opts, double grid_dt) {
  Scenario sc = load_scenario(opts);
  fs::path out = prepare_out_dir(opts.out_dir);
  echo_effective_config(sc, out);

  JointSetup joint = build_joint(sc);
  double T = joint.gait->period();
  GuideSpec guide =
      joint.guide_factory(AssistanceFactor(xi_at(sc.episode.xi_schedule, 0.0)));
  if (grid_dt <= 0.0) grid_dt = sc.episode.control_dt;

  std::ofstream file(out / "shape_geometry.csv", std::ios::binary);
  if (!file) throw std::runtime_error("cannot write shape_geometry.csv");
  file << "phase,qbound,q_nom,upper,lower\n";
  long n = std::lround(T / grid_dt);
  for (long i = 0; i <= n; ++i) {
    double p = std::min(i * grid_dt, T);
    double w = guide.width(p);
    double qn = joint.gait->q(p);
    file << format_double(p) << ',' << format_double(w) << ',' << format_double(qn)
         << ',' << format_double(qn + w) << ',' << format_double(qn - w) << '\n';
  }
  std::cout << "shapes: wrote " << (n + 1) << " samples of "
            << to_string(guide.shape()) << " tube geometry\n";
  return kExitOk;
}

int check(bool ok, const char* name) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
  return ok ? 0 : 1;
}

int cmd_selftest() {
  int failures = 0;

  failures += check(
      std::abs(qbound_from_xi(AssistanceFactor(0.5)) - deg_to_rad(4.0)) < 1e-12 &&
          std::abs(qbound_from_xi(AssistanceFactor(1.0)) - deg_to_rad(0.5)) < 1e-12 &&
          std::abs(qbound_from_xi(AssistanceFactor(0.0)) - deg_to_rad(7.5)) < 1e-12,
      "assistance-factor width constants");

  {
    SinusoidGait gait(0.3, 0.8);
    auto s = make_deadbeat_spline(gait.q(0) + 0.02, gait.dq(0) - 0.4, gait, 0.25);
    bool ok = std::abs(s.value(0.0) - 0.02) < 1e-12 &&
              std::abs(s.deriv(0.0) + 0.4) < 1e-12 && s.value(s.window) == 0.0 &&
              s.deriv(s.window) == 0.0;
    failures += check(ok, "deadbeat boundary residuals");
  }

  {
    Rng rng(2024);
    bool ok = true;
    for (int i = 0; i < 200; ++i) {
      double h = rng.uniform(-1.0, 1.0);
      double xi = rng.uniform01();
      double lam = eval_lambda(AssistanceFactor(xi), h);
      ok = ok && lam >= 0.0 && lam <= 1.0;
      ok = ok && eval_lambda(AssistanceFactor(1.0), h) == 1.0;
    }
    failures += check(ok, "blend coefficient bounds");
  }

  {
    JointPlant plant;
    JointState s{0.0, 0.0};
    for (int i = 0; i < 100; ++i) s = step_dynamics(plant, s, 3.0, 0.0, 1e-3);
    bool ok = std::abs(s.dq - 3.0 * 0.1 / plant.inertia) < 1e-12;
    failures += check(ok, "integrator constant-torque exactness");
  }

  {
    JointSetup js;
    js.gait = std::make_shared<SinusoidGait>(0.25, 0.8);
    js.guide_factory = make_guide_factory(GuideShape::constant, {}, 0.8);
    js.user.kind = UserKind::scripted;
    js.user.script = {{0.0, 25.0}, {0.7, -30.0}, {1.6, 35.0}};
    EpisodeConfig cfg;
    cfg.n_steps = 3;
    cfg.control_dt = 2e-3;
    cfg.xi_schedule = {{0.0, 0.25}};
    auto a = run_episode(cfg, js);
    auto b = run_episode(cfg, js);
    bool identical = a.log.ticks.size() == b.log.ticks.size();
    double h_min = 1.0;
    for (std::size_t i = 0; identical && i < a.log.ticks.size(); ++i) {
      identical = a.log.ticks[i].q == b.log.ticks[i].q &&
                  a.log.ticks[i].u_cmd == b.log.ticks[i].u_cmd;
      h_min = std::min(h_min, a.log.ticks[i].h);
    }
    failures += check(identical, "episode determinism");
    failures += check(a.status == EpisodeStatus::ok && h_min >= -1e-3,
                      "containment under a scripted disturbance");
  }

  std::cout << (failures == 0 ? "selftest: all checks passed\n"
                              : "selftest: FAILURES\n");
  return failures == 0 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-assistance virtual guide simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts, sweep_opts, shapes_opts;
  bool run_strict = false, sweep_strict = false, full_logs = false;
  std::string xi_csv = "0,0.25,0.5,0.75,1.0";
  std::string users_csv = "passive,active";
  int reps = 5;
  double shapes_dt = 0.0;

  auto add_common = [](CLI::App* cmd, CommonOpts& o, bool need_scenario = true) {
    auto* s = cmd->add_option("--scenario", o.scenario_path, "Scenario file (JSON)");
    if (need_scenario) s->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Override the scenario seed")
        ->each([&o](const std::string&) { o.seed_set = true; });
  };

  auto* run = app.add_subcommand("run", "Simulate one episode");
  add_common(run, run_opts);
  run->add_flag("--strict", run_strict,
                "Exit nonzero on divergence or tube violation");

  auto* sweep = app.add_subcommand("sweep", "Run an assistance-factor sweep");
  add_common(sweep, sweep_opts);
  sweep->add_option("--xi", xi_csv, "Comma-separated assistance factors")
      ->capture_default_str();
  sweep->add_option("--users", users_csv, "Comma-separated user kinds")
      ->capture_default_str();
  sweep->add_option("--reps", reps, "Repetitions per cell")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--full-logs", full_logs, "Write one episode CSV per cell");
  sweep->add_flag("--strict", sweep_strict,
                  "Exit nonzero on divergence or tube violation");

  auto* shapes = app.add_subcommand("shapes", "Emit guide tube geometry");
  add_common(shapes, shapes_opts);
  shapes->add_option("--dt", shapes_dt, "Phase grid spacing (default: control_dt)");

  app.add_subcommand("selftest", "Run the fast invariant subset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts, run_strict);
    if (sweep->parsed()) {
      return cmd_sweep(sweep_opts, xi_csv, users_csv, reps, full_logs, sweep_strict);
    }
    if (shapes->parsed()) return cmd_shapes(shapes_opts, shapes_dt);
    return cmd_selftest();
  } catch (const ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
