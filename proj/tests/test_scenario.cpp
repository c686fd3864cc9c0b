#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vguide/scenario.hpp"

using namespace vguide;

TEST_SUITE_BEGIN("scenario");

namespace {
const char* kMinimal = R"({
  "gait": {"type": "sinusoid", "amplitude_rad": 0.25, "period_s": 0.8},
  "guide": {"xi": 0.5}
})";
}

TEST_CASE("minimal scenario parses with defaults applied") {
  auto sc = parse_scenario_text(kMinimal, "");
  CHECK(sc.plant.inertia == 1.5);
  CHECK(sc.filter.kp == 2400.0);
  CHECK(sc.user.active_kp == 600.0);
  CHECK(sc.episode.n_steps == 9);
  CHECK(sc.episode.step_duration_s == doctest::Approx(0.8));
  CHECK(sc.episode.xi_schedule.size() == 1);
  CHECK(sc.episode.xi_schedule[0].xi == 0.5);
  CHECK(sc.filter.lambda_d_fd_dt == sc.episode.control_dt);

  auto js = build_joint(sc);
  CHECK(js.gait->period() == doctest::Approx(0.8));
  CHECK(js.pid.kp == sc.filter.kp);
}

TEST_CASE("range violations name the exact key") {
  std::string bad = R"({
    "gait": {"type": "sinusoid"},
    "guide": {"xi": 1.3}
  })";
  CHECK_THROWS_WITH_AS(parse_scenario_text(bad, ""),
                       doctest::Contains("guide.xi"), ScenarioError);
}

TEST_CASE("unknown keys are rejected by name") {
  std::string bad = R"({
    "gait": {"type": "sinusoid", "amplitud_rad": 0.2},
    "guide": {"xi": 0.5}
  })";
  CHECK_THROWS_WITH_AS(parse_scenario_text(bad, ""),
                       doctest::Contains("gait.amplitud_rad"), ScenarioError);
}

TEST_CASE("required sections and exclusive keys") {
  CHECK_THROWS_WITH_AS(parse_scenario_text(R"({"guide": {"xi": 0.5}})", ""),
                       doctest::Contains("gait"), ScenarioError);
  std::string both = R"({
    "gait": {"type": "sinusoid"},
    "guide": {"xi": 0.5, "xi_schedule": [{"t": 0, "xi": 1.0}]}
  })";
  CHECK_THROWS_AS(parse_scenario_text(both, ""), ScenarioError);
  std::string neither = R"({"gait": {"type": "sinusoid"}, "guide": {}})";
  CHECK_THROWS_WITH_AS(parse_scenario_text(neither, ""),
                       doctest::Contains("guide.xi"), ScenarioError);
}

TEST_CASE("effective config echo round-trips") {
  std::string text = R"({
    "plant": {"inertia": 2.0, "u_max": 90.0},
    "gait": {"type": "sinusoid", "amplitude_rad": 0.3, "period_s": 0.8, "cycles": 2},
    "guide": {"shape": "sinusoidal", "modulation": 0.4,
              "xi_schedule": [{"t": 0, "xi": 1.0}, {"t": 3.2, "xi": 0.25}]},
    "filter": {"kp": 200.0, "zeta": 0.1},
    "user": {"kind": "active", "noise_std": 1.0},
    "episode": {"n_steps": 5, "seed": 77,
                "early_impact": {"probability": 0.3, "frac_lo": 0.9, "frac_hi": 1.0}}
  })";
  auto sc = parse_scenario_text(text, "");
  std::string echo = effective_config_json(sc);
  auto sc2 = parse_scenario_text(echo, "");
  CHECK(effective_config_json(sc2) == echo);
  CHECK(sc2.plant.u_max == 90.0);
  CHECK(sc2.filter.kp == 200.0);
  CHECK(sc2.episode.xi_schedule.size() == 2);
  CHECK(sc2.user.kind == UserKind::active);
}

TEST_CASE("gait table referenced by a scenario") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "vguide_scenario_test";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "gait.csv");
    out << "phase_s,q_rad,dq_rad_s\n";
    SinusoidGait g(0.2, 0.8);
    for (int i = 0; i <= 32; ++i) {
      double p = 0.8 * i / 32;
      out << p << ',' << g.q(p) << ',' << g.dq(p) << '\n';
    }
  }
  std::string text = R"({
    "gait": {"type": "table", "csv": "gait.csv"},
    "guide": {"xi": 0.5}
  })";
  auto sc = parse_scenario_text(text, dir.string());
  auto gait = build_gait(sc);
  CHECK(gait->period() == doctest::Approx(0.8));
  CHECK(sc.episode.step_duration_s == doctest::Approx(0.8));
  fs::remove_all(dir);
}

TEST_CASE("invalid JSON and invalid shapes fail with context") {
  CHECK_THROWS_AS(parse_scenario_text("{nope", ""), ScenarioError);
  std::string bad_shape = R"({
    "gait": {"type": "sinusoid"},
    "guide": {"xi": 0.5, "shape": "sinusoidal", "modulation": 1.5}
  })";
  CHECK_THROWS_AS(parse_scenario_text(bad_shape, ""), ScenarioError);
}

TEST_SUITE_END();
