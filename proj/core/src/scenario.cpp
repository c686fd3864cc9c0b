#include "vguide/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vguide {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ScenarioError(key + ": " + what);
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) fail(section + "." + it.key(), "unknown key");
  }
}

double get_num(const json& obj, const std::string& section, const char* key,
               double def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(section + "." + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& section, const char* key, int def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(section + "." + key, "expected an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const json& obj, const std::string& section, const char* key,
                      std::uint64_t def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer()) {
    fail(section + "." + key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& section, const char* key, bool def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(section + "." + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& section, const char* key,
                    const std::string& def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(section + "." + key, "expected a string");
  return v.get<std::string>();
}

void require_range(const std::string& key, double v, double lo, double hi) {
  if (!(v >= lo) || !(v <= hi)) {
    std::ostringstream os;
    os << "value " << v << " outside [" << lo << ", " << hi << "]";
    fail(key, os.str());
  }
}

void require_positive(const std::string& key, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be finite and > 0");
}

std::string resolve_path(const std::string& base_dir, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute() || base_dir.empty()) return rel;
  return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ScenarioError("scenario: top level must be an object");
  check_keys(root, "scenario",
             {"plant", "gait", "guide", "filter", "assist", "user", "episode", "output"});

  Scenario sc;
  sc.base_dir = base_dir;

  // plant
  {
    json obj = root.value("plant", json::object());
    check_keys(obj, "plant",
               {"inertia", "k_dry", "k_viscous", "gravity_amp", "u_max",
                "uext_min", "uext_max", "friction_on_position"});
    sc.plant.inertia = get_num(obj, "plant", "inertia", sc.plant.inertia);
    sc.plant.k_dry = get_num(obj, "plant", "k_dry", sc.plant.k_dry);
    sc.plant.k_viscous = get_num(obj, "plant", "k_viscous", sc.plant.k_viscous);
    sc.plant.gravity_amp = get_num(obj, "plant", "gravity_amp", sc.plant.gravity_amp);
    sc.plant.u_max = get_num(obj, "plant", "u_max", sc.plant.u_max);
    sc.plant.uext_min = get_num(obj, "plant", "uext_min", sc.plant.uext_min);
    sc.plant.uext_max = get_num(obj, "plant", "uext_max", sc.plant.uext_max);
    sc.plant.friction_on_position =
        get_bool(obj, "plant", "friction_on_position", sc.plant.friction_on_position);
    try {
      sc.plant.validate();
    } catch (const std::exception& e) {
      throw ScenarioError(std::string("plant: ") + e.what());
    }
  }

  // gait (required)
  {
    if (!root.contains("gait")) throw ScenarioError("gait: section is required");
    const json& obj = root.at("gait");
    check_keys(obj, "gait",
               {"type", "amplitude_rad", "period_s", "offset_rad", "phase0_rad",
                "cycles", "csv"});
    sc.gait.type = get_str(obj, "gait", "type", sc.gait.type);
    if (sc.gait.type != "sinusoid" && sc.gait.type != "table") {
      fail("gait.type", "must be 'sinusoid' or 'table'");
    }
    sc.gait.amplitude_rad = get_num(obj, "gait", "amplitude_rad", sc.gait.amplitude_rad);
    sc.gait.period_s = get_num(obj, "gait", "period_s", sc.gait.period_s);
    sc.gait.offset_rad = get_num(obj, "gait", "offset_rad", sc.gait.offset_rad);
    sc.gait.phase0_rad = get_num(obj, "gait", "phase0_rad", sc.gait.phase0_rad);
    sc.gait.cycles = get_int(obj, "gait", "cycles", sc.gait.cycles);
    sc.gait.csv = get_str(obj, "gait", "csv", sc.gait.csv);
    if (sc.gait.type == "sinusoid") {
      require_positive("gait.period_s", sc.gait.period_s);
      if (sc.gait.cycles < 1) fail("gait.cycles", "must be >= 1");
    } else if (sc.gait.csv.empty()) {
      fail("gait.csv", "required for gait.type = 'table'");
    }
  }

  // guide (xi or xi_schedule required)
  {
    if (!root.contains("guide")) throw ScenarioError("guide: section is required");
    const json& obj = root.at("guide");
    check_keys(obj, "guide",
               {"shape", "xi", "xi_schedule", "modulation", "taper_start",
                "taper_end", "csv"});
    sc.guide.shape = get_str(obj, "guide", "shape", sc.guide.shape);
    guide_shape_from_string(sc.guide.shape);  // name check
    sc.guide.modulation = get_num(obj, "guide", "modulation", sc.guide.modulation);
    sc.guide.taper_start = get_num(obj, "guide", "taper_start", sc.guide.taper_start);
    sc.guide.taper_end = get_num(obj, "guide", "taper_end", sc.guide.taper_end);
    sc.guide.csv = get_str(obj, "guide", "csv", sc.guide.csv);

    bool has_xi = obj.contains("xi");
    bool has_schedule = obj.contains("xi_schedule");
    if (has_xi && has_schedule) {
      fail("guide.xi", "mutually exclusive with guide.xi_schedule");
    }
    if (!has_xi && !has_schedule) {
      fail("guide.xi", "required (or provide guide.xi_schedule)");
    }
    if (has_xi) {
      double xi = get_num(obj, "guide", "xi", 0.5);
      require_range("guide.xi", xi, 0.0, 1.0);
      sc.episode.xi_schedule = {{0.0, xi}};
    } else {
      const json& sched = obj.at("xi_schedule");
      if (!sched.is_array() || sched.empty()) {
        fail("guide.xi_schedule", "expected a non-empty array of {t, xi}");
      }
      sc.episode.xi_schedule.clear();
      std::size_t i = 0;
      for (const auto& item : sched) {
        std::string key = "guide.xi_schedule[" + std::to_string(i++) + "]";
        if (!item.is_object() || !item.contains("t") || !item.contains("xi")) {
          fail(key, "expected an object with keys t and xi");
        }
        check_keys(item, key, {"t", "xi"});
        double t = get_num(item, key, "t", 0.0);
        double xi = get_num(item, key, "xi", 0.0);
        require_range(key + ".xi", xi, 0.0, 1.0);
        sc.episode.xi_schedule.push_back({t, xi});
      }
    }
  }

  // filter
  {
    json obj = root.value("filter", json::object());
    check_keys(obj, "filter",
               {"kp", "kd", "zeta", "horizon_grid_n", "flow_dt", "lambda_d_fd_dt",
                "flow_includes_feedforward"});
    sc.filter.kp = get_num(obj, "filter", "kp", sc.filter.kp);
    sc.filter.kd = get_num(obj, "filter", "kd", sc.filter.kd);
    sc.filter.zeta = get_num(obj, "filter", "zeta", sc.filter.zeta);
    sc.filter.horizon_grid_n =
        get_int(obj, "filter", "horizon_grid_n", sc.filter.horizon_grid_n);
    sc.filter.flow_dt = get_num(obj, "filter", "flow_dt", sc.filter.flow_dt);
    sc.filter.lambda_d_fd_dt =
        get_num(obj, "filter", "lambda_d_fd_dt", sc.filter.lambda_d_fd_dt);
    sc.filter.flow_includes_feedforward = get_bool(
        obj, "filter", "flow_includes_feedforward", sc.filter.flow_includes_feedforward);
    try {
      sc.filter.validate();
    } catch (const std::exception& e) {
      throw ScenarioError(std::string("filter: ") + e.what());
    }
  }

  // assist
  {
    json obj = root.value("assist", json::object());
    check_keys(obj, "assist",
               {"ki", "integral_limit", "idealization_intensity",
                "feedforward_intensity"});
    sc.assist.ki = get_num(obj, "assist", "ki", sc.assist.ki);
    sc.assist.integral_limit =
        get_num(obj, "assist", "integral_limit", sc.assist.integral_limit);
    sc.assist.idealization_intensity = get_num(obj, "assist", "idealization_intensity",
                                               sc.assist.idealization_intensity);
    sc.assist.feedforward_intensity = get_num(obj, "assist", "feedforward_intensity",
                                              sc.assist.feedforward_intensity);
    if (sc.assist.ki < 0.0) fail("assist.ki", "must be >= 0");
    if (sc.assist.integral_limit < 0.0) fail("assist.integral_limit", "must be >= 0");
    require_range("assist.idealization_intensity", sc.assist.idealization_intensity,
                  0.0, 1.0);
    require_range("assist.feedforward_intensity", sc.assist.feedforward_intensity,
                  0.0, 1.0);
  }

  // user
  {
    json obj = root.value("user", json::object());
    check_keys(obj, "user",
               {"kind", "damping", "active_kp", "active_kd", "noise_std",
                "noise_cutoff_hz", "script"});
    sc.user.kind = user_kind_from_string(get_str(obj, "user", "kind", "passive"));
    sc.user.damping = get_num(obj, "user", "damping", sc.user.damping);
    // Active-user PD defaults to a quarter of the backup gains.
    sc.user.active_kp = get_num(obj, "user", "active_kp", 0.25 * sc.filter.kp);
    sc.user.active_kd = get_num(obj, "user", "active_kd", 0.25 * sc.filter.kd);
    sc.user.noise_std = get_num(obj, "user", "noise_std", sc.user.noise_std);
    sc.user.noise_cutoff_hz =
        get_num(obj, "user", "noise_cutoff_hz", sc.user.noise_cutoff_hz);
    if (sc.user.damping < 0.0) fail("user.damping", "must be >= 0");
    if (sc.user.noise_std < 0.0) fail("user.noise_std", "must be >= 0");
    require_positive("user.noise_cutoff_hz", sc.user.noise_cutoff_hz);
    if (obj.contains("script")) {
      const json& script = obj.at("script");
      if (!script.is_array()) fail("user.script", "expected an array of [t, torque]");
      sc.user.script.clear();
      std::size_t i = 0;
      for (const auto& item : script) {
        std::string key = "user.script[" + std::to_string(i++) + "]";
        if (!item.is_array() || item.size() != 2 || !item[0].is_number() ||
            !item[1].is_number()) {
          fail(key, "expected [t, torque]");
        }
        sc.user.script.emplace_back(item[0].get<double>(), item[1].get<double>());
      }
    }
  }

  // episode
  {
    json obj = root.value("episode", json::object());
    check_keys(obj, "episode",
               {"n_steps", "control_dt", "seed", "step_length_m", "deadbeat_alpha",
                "selection", "early_impact", "init_q_offset", "init_dq_offset",
                "respline_at_start"});
    sc.episode.n_steps = get_int(obj, "episode", "n_steps", sc.episode.n_steps);
    sc.episode.control_dt = get_num(obj, "episode", "control_dt", sc.episode.control_dt);
    sc.episode.seed = get_u64(obj, "episode", "seed", sc.episode.seed);
    sc.episode.step_length_m =
        get_num(obj, "episode", "step_length_m", sc.episode.step_length_m);
    sc.episode.deadbeat_alpha =
        get_num(obj, "episode", "deadbeat_alpha", sc.episode.deadbeat_alpha);
    std::string sel = get_str(obj, "episode", "selection", "always");
    if (sel == "always") sc.episode.selection = SelectionMode::always_assisted;
    else if (sel == "alternate") sc.episode.selection = SelectionMode::alternate_by_step;
    else if (sel == "never") sc.episode.selection = SelectionMode::never_assisted;
    else fail("episode.selection", "must be 'always', 'alternate', or 'never'");
    if (obj.contains("early_impact")) {
      const json& ei = obj.at("early_impact");
      check_keys(ei, "episode.early_impact", {"probability", "frac_lo", "frac_hi"});
      sc.episode.early_impact.probability = get_num(
          ei, "episode.early_impact", "probability", sc.episode.early_impact.probability);
      sc.episode.early_impact.frac_lo =
          get_num(ei, "episode.early_impact", "frac_lo", sc.episode.early_impact.frac_lo);
      sc.episode.early_impact.frac_hi =
          get_num(ei, "episode.early_impact", "frac_hi", sc.episode.early_impact.frac_hi);
    }
    sc.episode.init_q_offset =
        get_num(obj, "episode", "init_q_offset", sc.episode.init_q_offset);
    sc.episode.init_dq_offset =
        get_num(obj, "episode", "init_dq_offset", sc.episode.init_dq_offset);
    sc.episode.respline_at_start =
        get_bool(obj, "episode", "respline_at_start", sc.episode.respline_at_start);
    sc.episode.idealization_intensity = sc.assist.idealization_intensity;
    sc.episode.feedforward_intensity = sc.assist.feedforward_intensity;
  }

  // output
  {
    json obj = root.value("output", json::object());
    check_keys(obj, "output",
               {"episode_csv", "steps_csv", "metrics_csv", "sweep_csv",
                "sweep_aggregate_csv"});
    sc.output.episode_csv = get_str(obj, "output", "episode_csv", sc.output.episode_csv);
    sc.output.steps_csv = get_str(obj, "output", "steps_csv", sc.output.steps_csv);
    sc.output.metrics_csv = get_str(obj, "output", "metrics_csv", sc.output.metrics_csv);
    sc.output.sweep_csv = get_str(obj, "output", "sweep_csv", sc.output.sweep_csv);
    sc.output.sweep_aggregate_csv =
        get_str(obj, "output", "sweep_aggregate_csv", sc.output.sweep_aggregate_csv);
  }

  // Cross-section consistency: the gait defines the step duration, and the
  // filter's backward-difference interval follows the control rate.
  std::shared_ptr<const NominalGait> gait = build_gait(sc);
  sc.episode.step_duration_s = gait->period();
  sc.filter.lambda_d_fd_dt = sc.episode.control_dt;
  sc.filter.feedforward_intensity = sc.assist.feedforward_intensity;
  try {
    sc.episode.validate();
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("episode: ") + e.what());
  }
  if (!sc.guide.csv.empty() && sc.guide.shape != "custom" &&
      sc.guide.shape != "custom_sampled") {
    fail("guide.csv", "only valid with guide.shape = 'custom'");
  }
  build_joint(sc);  // materialize once so shape/table errors surface at parse time
  return sc;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(),
                             std::filesystem::path(path).parent_path().string());
}

std::string effective_config_json(const Scenario& sc) {
  json root;
  root["plant"] = {{"inertia", sc.plant.inertia},
                   {"k_dry", sc.plant.k_dry},
                   {"k_viscous", sc.plant.k_viscous},
                   {"gravity_amp", sc.plant.gravity_amp},
                   {"u_max", sc.plant.u_max},
                   {"uext_min", sc.plant.uext_min},
                   {"uext_max", sc.plant.uext_max},
                   {"friction_on_position", sc.plant.friction_on_position}};
  json gait = {{"type", sc.gait.type}};
  if (sc.gait.type == "sinusoid") {
    gait["amplitude_rad"] = sc.gait.amplitude_rad;
    gait["period_s"] = sc.gait.period_s;
    gait["offset_rad"] = sc.gait.offset_rad;
    gait["phase0_rad"] = sc.gait.phase0_rad;
    gait["cycles"] = sc.gait.cycles;
  } else {
    gait["csv"] = sc.gait.csv;
  }
  root["gait"] = gait;
  json guide = {{"shape", sc.guide.shape}};
  if (sc.guide.shape == "sinusoidal") guide["modulation"] = sc.guide.modulation;
  if (sc.guide.shape == "tapered") {
    guide["taper_start"] = sc.guide.taper_start;
    guide["taper_end"] = sc.guide.taper_end;
  }
  if (!sc.guide.csv.empty()) guide["csv"] = sc.guide.csv;
  json sched = json::array();
  for (const auto& k : sc.episode.xi_schedule) {
    sched.push_back({{"t", k.t}, {"xi", k.xi}});
  }
  guide["xi_schedule"] = sched;
  root["guide"] = guide;
  root["filter"] = {{"kp", sc.filter.kp},
                    {"kd", sc.filter.kd},
                    {"zeta", sc.filter.zeta},
                    {"horizon_grid_n", sc.filter.horizon_grid_n},
                    {"flow_dt", sc.filter.flow_dt},
                    {"lambda_d_fd_dt", sc.filter.lambda_d_fd_dt},
                    {"flow_includes_feedforward", sc.filter.flow_includes_feedforward}};
  root["assist"] = {{"ki", sc.assist.ki},
                    {"integral_limit", sc.assist.integral_limit},
                    {"idealization_intensity", sc.assist.idealization_intensity},
                    {"feedforward_intensity", sc.assist.feedforward_intensity}};
  json user = {{"kind", to_string(sc.user.kind)},
               {"damping", sc.user.damping},
               {"active_kp", sc.user.active_kp},
               {"active_kd", sc.user.active_kd},
               {"noise_std", sc.user.noise_std},
               {"noise_cutoff_hz", sc.user.noise_cutoff_hz}};
  if (!sc.user.script.empty()) {
    json script = json::array();
    for (const auto& [t, u] : sc.user.script) script.push_back({t, u});
    user["script"] = script;
  }
  root["user"] = user;
  root["episode"] = {
      {"n_steps", sc.episode.n_steps},
      {"control_dt", sc.episode.control_dt},
      {"seed", sc.episode.seed},
      {"step_length_m", sc.episode.step_length_m},
      {"deadbeat_alpha", sc.episode.deadbeat_alpha},
      {"selection", sc.episode.selection == SelectionMode::always_assisted ? "always"
                    : sc.episode.selection == SelectionMode::alternate_by_step
                        ? "alternate"
                        : "never"},
      {"early_impact",
       {{"probability", sc.episode.early_impact.probability},
        {"frac_lo", sc.episode.early_impact.frac_lo},
        {"frac_hi", sc.episode.early_impact.frac_hi}}},
      {"init_q_offset", sc.episode.init_q_offset},
      {"init_dq_offset", sc.episode.init_dq_offset},
      {"respline_at_start", sc.episode.respline_at_start}};
  root["output"] = {{"episode_csv", sc.output.episode_csv},
                    {"steps_csv", sc.output.steps_csv},
                    {"metrics_csv", sc.output.metrics_csv},
                    {"sweep_csv", sc.output.sweep_csv},
                    {"sweep_aggregate_csv", sc.output.sweep_aggregate_csv}};
  return root.dump(2) + "\n";
}

std::shared_ptr<const NominalGait> build_gait(const Scenario& sc) {
  if (sc.gait.type == "sinusoid") {
    return std::make_shared<SinusoidGait>(sc.gait.amplitude_rad, sc.gait.period_s,
                                          sc.gait.offset_rad, sc.gait.phase0_rad,
                                          sc.gait.cycles);
  }
  auto gait = std::make_shared<SampledGait>(
      SampledGait::from_csv(resolve_path(sc.base_dir, sc.gait.csv)));
  validate_gait(*gait);
  return gait;
}

JointSetup build_joint(const Scenario& sc) {
  JointSetup js;
  js.plant = sc.plant;
  js.gait = build_gait(sc);
  double period = js.gait->period();

  GuideShape shape = guide_shape_from_string(sc.guide.shape);
  ShapeParams params;
  params.modulation = sc.guide.modulation;
  params.taper_start = sc.guide.taper_start;
  params.taper_end = sc.guide.taper_end;
  if (shape == GuideShape::custom_sampled) {
    if (sc.guide.csv.empty()) fail("guide.csv", "required for guide.shape = 'custom'");
    ShapeParams loaded = shape_params_from_csv(resolve_path(sc.base_dir, sc.guide.csv));
    params.sample_phase = loaded.sample_phase;
    params.sample_width = loaded.sample_width;
  }
  try {
    make_shape(shape, params, AssistanceFactor(xi_at(sc.episode.xi_schedule, 0.0)),
               period);  // surface shape errors now
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("guide: ") + e.what());
  }
  js.guide_factory = make_guide_factory(shape, params, period);

  js.filter = sc.filter;
  js.pid = PidGains{sc.filter.kp, sc.filter.kd, sc.assist.ki, sc.assist.integral_limit};
  js.user = sc.user;
  return js;
}

}  // namespace vguide
