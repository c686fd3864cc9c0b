#include "vguide/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>

#include "vguide/csv.hpp"
#include "vguide/units.hpp"

namespace vguide {

const char* to_string(UserKind kind) {
  switch (kind) {
    case UserKind::passive: return "passive";
    case UserKind::active: return "active";
    case UserKind::scripted: return "scripted";
  }
  return "?";
}

UserKind user_kind_from_string(const std::string& name) {
  if (name == "passive") return UserKind::passive;
  if (name == "active") return UserKind::active;
  if (name == "scripted") return UserKind::scripted;
  throw std::invalid_argument("unknown user kind: " + name);
}

double xi_at(std::span<const XiKnot> schedule, double t) {
  if (schedule.empty()) throw std::invalid_argument("xi schedule is empty");
  double xi = schedule.front().xi;
  for (const auto& k : schedule) {
    if (k.t <= t) xi = k.xi;
    else break;
  }
  return xi;
}

std::vector<XiKnot> protocol_schedule(double target_xi, double t_full,
                                      double t_ramp, int ramp_steps) {
  if (ramp_steps < 1 || t_full < 0.0 || t_ramp <= 0.0) {
    throw std::invalid_argument("protocol_schedule: bad segment layout");
  }
  std::vector<XiKnot> knots{{0.0, 1.0}};
  for (int i = 1; i <= ramp_steps; ++i) {
    double t = t_full + (i - 1) * t_ramp / ramp_steps;
    double xi = 1.0 + (target_xi - 1.0) * i / (ramp_steps + 1);
    knots.push_back({t, xi});
  }
  knots.push_back({t_full + t_ramp, target_xi});
  return knots;
}

void EpisodeConfig::validate() const {
  if (n_steps < 1) throw std::invalid_argument("episode.n_steps must be >= 1");
  if (!(control_dt > 0.0)) throw std::invalid_argument("episode.control_dt must be > 0");
  if (!(step_duration_s > 0.0)) {
    throw std::invalid_argument("episode.step_duration_s must be > 0");
  }
  if (!(deadbeat_alpha > 0.0) || deadbeat_alpha > 1.0) {
    throw std::invalid_argument("episode.deadbeat_alpha must be in (0, 1]");
  }
  if (xi_schedule.empty()) throw std::invalid_argument("episode.xi_schedule is empty");
  if (xi_schedule.front().t != 0.0) {
    throw std::invalid_argument("episode.xi_schedule must start at t = 0");
  }
  for (std::size_t i = 0; i < xi_schedule.size(); ++i) {
    AssistanceFactor check(xi_schedule[i].xi);  // range check
    if (i > 0 && !(xi_schedule[i].t > xi_schedule[i - 1].t)) {
      throw std::invalid_argument("episode.xi_schedule times must increase");
    }
  }
  if (!(early_impact.probability >= 0.0) || early_impact.probability > 1.0) {
    throw std::invalid_argument("episode.early_impact.probability must be in [0, 1]");
  }
  if (!(early_impact.frac_lo > 0.0) || early_impact.frac_lo > early_impact.frac_hi ||
      early_impact.frac_hi > 1.0) {
    throw std::invalid_argument("episode.early_impact fractions must satisfy 0 < lo <= hi <= 1");
  }
  if (!(idealization_intensity >= 0.0) || idealization_intensity > 1.0 ||
      !(feedforward_intensity >= 0.0) || feedforward_intensity > 1.0) {
    throw std::invalid_argument("episode intensities must be in [0, 1]");
  }
  if (!all_finite({init_q_offset, init_dq_offset})) {
    throw std::invalid_argument("episode initial offsets must be finite");
  }
}

double draw_impact_phase(const EpisodeConfig& config, double period, Rng& rng) {
  // Always consume two draws so the stream stays aligned across steps.
  double u = rng.uniform01();
  double frac = rng.uniform(config.early_impact.frac_lo, config.early_impact.frac_hi);
  if (u < config.early_impact.probability) return frac * period;
  return period;
}

GuideFactory make_guide_factory(GuideShape shape, ShapeParams params,
                                double period) {
  return [shape, params = std::move(params), period](AssistanceFactor xi) {
    return make_shape(shape, params, xi, period);
  };
}

namespace {

// Physical friction + gravity load on the joint. Always velocity-based: the
// friction_on_position switch only affects the compensation torque, so the
// literal-formula variant shows up as imperfect idealization, not new physics.
double passive_load_torque(const JointPlant& p, JointState s) {
  return -(p.k_dry * sign0(s.dq) + p.k_viscous * s.dq + gravity_torque(p, s.q));
}

class UserSim {
 public:
  UserSim(const UserModel& model, const JointPlant& plant, std::uint64_t seed,
          double dt)
      : model_(model), plant_(plant), rng_(seed) {
    double a = std::exp(-2.0 * kPi * model.noise_cutoff_hz * dt);
    lp_a_ = a;
    sigma_w_ = model.noise_std > 0.0 ? model.noise_std * std::sqrt((1.0 + a) / (1.0 - a))
                                     : 0.0;
  }

  double torque(double t, double phase, JointState state, const NominalGait& gait) {
    double u = 0.0;
    switch (model_.kind) {
      case UserKind::passive:
        u = -model_.damping * state.dq;
        break;
      case UserKind::active: {
        double p = std::min(phase, gait.period());
        u = model_.active_kp * (gait.q(p) - state.q) +
            model_.active_kd * (gait.dq(p) - state.dq);
        if (sigma_w_ > 0.0) {
          noise_ = lp_a_ * noise_ + (1.0 - lp_a_) * sigma_w_ * rng_.normal();
          u += noise_;
        }
        break;
      }
      case UserKind::scripted: {
        for (const auto& [ts, torque] : model_.script) {
          if (ts <= t) u = torque;
          else break;
        }
        break;
      }
    }
    return std::clamp(u, plant_.uext_min, plant_.uext_max);
  }

 private:
  UserModel model_;
  const JointPlant& plant_;
  Rng rng_;
  double lp_a_ = 0.0;
  double sigma_w_ = 0.0;
  double noise_ = 0.0;
};

struct JointRuntime {
  const JointSetup* setup = nullptr;
  FilterParams filter{};  // setup's params with the commanded u_f intensity
  JointState state{};
  DeadbeatSpline spline{};
  std::optional<GuideSpec> guide;
  PidState pid{};
  std::optional<BarrierValue> prev;
  std::optional<UserSim> user;
  FilterWorkspace ws;
  LegPhase leg = LegPhase::swing;
  EpisodeLog log;
};

}  // namespace

std::vector<EpisodeResult> run_episode(const EpisodeConfig& config,
                                       std::span<const JointSetup> joints) {
  config.validate();
  if (joints.empty()) throw std::invalid_argument("run_episode: no joints");

  const double dt = config.control_dt;
  const double T = config.step_duration_s;

  std::vector<JointRuntime> rt(joints.size());
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const JointSetup& js = joints[j];
    if (!js.gait) throw std::invalid_argument("run_episode: joint has no gait");
    if (!js.guide_factory) throw std::invalid_argument("run_episode: joint has no guide factory");
    js.plant.validate();
    js.filter.validate();
    if (std::abs(js.gait->period() - T) > 1e-9) {
      throw std::invalid_argument("run_episode: gait period != episode.step_duration_s");
    }
    rt[j].setup = &js;
    rt[j].filter = js.filter;
    // The flow must model the u_f actually commanded; flow_includes_feedforward
    // remains the explicit ablation switch.
    rt[j].filter.feedforward_intensity = config.feedforward_intensity;
    rt[j].state = {js.gait->q(0.0) + config.init_q_offset,
                   js.gait->dq(0.0) + config.init_dq_offset};
    rt[j].user.emplace(js.user, js.plant,
                       Rng::derive(config.seed, {0xB, static_cast<std::uint64_t>(j)}), dt);
    rt[j].leg = js.initial_leg_phase;
  }

  Rng impact_rng(Rng::derive(config.seed, {0xA}));

  double xi = xi_at(config.xi_schedule, 0.0);
  auto begin_step = [&](double t_i, bool initial) {
    xi = xi_at(config.xi_schedule, t_i);
    for (auto& r : rt) {
      if (!initial || config.respline_at_start) {
        r.spline = make_deadbeat_spline(r.state.q, r.state.dq, *r.setup->gait,
                                        config.deadbeat_alpha, t_i);
      } else {
        r.spline = DeadbeatSpline::zero(config.deadbeat_alpha, T, t_i);
      }
      r.guide.emplace(r.setup->guide_factory(AssistanceFactor(xi)));
      r.pid.reset();
      r.prev.reset();
      if (!initial && config.selection == SelectionMode::alternate_by_step) {
        r.leg = r.leg == LegPhase::swing ? LegPhase::stance : LegPhase::swing;
      }
    }
  };

  begin_step(0.0, true);
  double impact_target = draw_impact_phase(config, T, impact_rng);

  bool diverged = false;
  long tick = 0, tick_impact = 0;
  int step = 0;

  while (step < config.n_steps && !diverged) {
    const double t = tick * dt;
    const double phase = (tick - tick_impact) * dt;
    const double eval_phase = std::min(phase, T);

    for (auto& r : rt) {
      const JointSetup& js = *r.setup;
      TrajectoryContext traj{js.gait.get(), r.spline};
      Setpoint sp = traj.desired(eval_phase);

      FilterOutput fo = filter_torque(r.filter, js.plant, *r.guide, traj,
                                      r.state, eval_phase, r.prev, &r.ws);
      r.prev = fo.barrier;

      double u_i = config.idealization_intensity * idealization_torque(js.plant, r.state);
      double u_f = feedforward_torque(js.plant, *js.gait, eval_phase,
                                      config.feedforward_intensity);
      double u_t = baseline_torque(js.pid, js.plant, r.state, sp.q, sp.dq, r.pid, dt);

      bool assisted = false;
      switch (config.selection) {
        case SelectionMode::always_assisted: assisted = true; break;
        case SelectionMode::alternate_by_step: assisted = r.leg == LegPhase::swing; break;
        case SelectionMode::never_assisted: assisted = false; break;
      }
      JointSelection sel{assisted, assisted ? LegPhase::swing : r.leg};
      TorqueBreakdown tb = compose_command(js.plant, u_i, u_f, fo.u_v, u_t, sel);

      double u_ext = r.user->torque(t, eval_phase, r.state, *js.gait);
      Vibration vib = haptic_vibration(r.state.q, sp.q, r.guide->width(eval_phase),
                                       AssistanceFactor(xi));

      TickRecord rec;
      rec.t = t;
      rec.phase = phase;
      rec.q = r.state.q;
      rec.dq = r.state.dq;
      rec.q_des = sp.q;
      rec.qbound = r.guide->width(eval_phase);
      rec.h = fo.barrier.h_now;
      rec.h_omega = fo.barrier.h_omega;
      rec.lambda = fo.lambda;
      rec.lambda_d = fo.lambda_d;
      rec.u_i = tb.u_i;
      rec.u_f = tb.u_f;
      rec.u_v = tb.u_v;
      rec.u_t = tb.u_t;
      rec.u_cmd = tb.u_cmd;
      rec.u_ext = u_ext;
      rec.vib = vib.intensity;
      rec.vib_side = vib.side;
      rec.xi = xi;
      rec.step_idx = step;
      rec.u_b = fo.u_b;
      rec.assisted = assisted;
      r.log.ticks.push_back(rec);

      double load = passive_load_torque(js.plant, r.state);
      r.state = step_dynamics(js.plant, r.state, tb.u_cmd, u_ext + load, dt);
      if (std::abs(r.state.q) > 10.0 || !std::isfinite(r.state.q) ||
          !std::isfinite(r.state.dq)) {
        diverged = true;
      }
    }

    ++tick;
    double next_phase = (tick - tick_impact) * dt;
    if (next_phase >= impact_target - 1e-12) {
      for (auto& r : rt) {
        r.log.steps.push_back({step, tick * dt, next_phase, xi});
      }
      ++step;
      tick_impact = tick;
      if (step < config.n_steps) {
        begin_step(tick * dt, false);
        impact_target = draw_impact_phase(config, T, impact_rng);
      }
    }
  }

  std::vector<EpisodeResult> results(rt.size());
  for (std::size_t j = 0; j < rt.size(); ++j) {
    results[j].status = diverged ? EpisodeStatus::diverged : EpisodeStatus::ok;
    results[j].log = std::move(rt[j].log);
    results[j].metrics = compute_metrics(results[j].log);
  }
  return results;
}

EpisodeResult run_episode(const EpisodeConfig& config, const JointSetup& joint) {
  auto results = run_episode(config, std::span<const JointSetup>(&joint, 1));
  return std::move(results.front());
}

Metrics compute_metrics(const EpisodeLog& log) {
  Metrics m;
  m.n_ticks = log.ticks.size();
  if (log.ticks.empty()) throw std::invalid_argument("compute_metrics: empty log");

  double sq_sum = 0.0;
  std::size_t contained = 0;
  for (const auto& r : log.ticks) {
    double e = r.q - r.q_des;
    sq_sum += e * e;
    double over = std::abs(e) - r.qbound;
    if (over > m.max_tube_violation) m.max_tube_violation = over;
    if (std::abs(e) <= r.qbound + 1e-12) ++contained;
  }
  m.rms_tracking_error = std::sqrt(sq_sum / static_cast<double>(log.ticks.size()));
  m.containment_fraction = static_cast<double>(contained) /
                           static_cast<double>(log.ticks.size());

  for (std::size_t i = 1; i < log.ticks.size(); ++i) {
    const auto& a = log.ticks[i - 1];
    const auto& b = log.ticks[i];
    double w = 0.5 * (b.t - a.t);
    m.user_effort += w * (a.u_ext * a.u_ext + b.u_ext * b.u_ext);
    m.assist_energy += w * (std::abs(a.u_v * a.dq) + std::abs(b.u_v * b.dq));
  }
  return m;
}

Metrics combine_metrics(std::span<const Metrics> per_joint) {
  if (per_joint.empty()) throw std::invalid_argument("combine_metrics: empty span");
  Metrics m;
  double sq = 0.0, contained = 0.0;
  for (const auto& j : per_joint) {
    m.n_ticks += j.n_ticks;
    sq += j.rms_tracking_error * j.rms_tracking_error * static_cast<double>(j.n_ticks);
    contained += j.containment_fraction * static_cast<double>(j.n_ticks);
    m.max_tube_violation = std::max(m.max_tube_violation, j.max_tube_violation);
    m.user_effort += j.user_effort;
    m.assist_energy += j.assist_energy;
  }
  m.rms_tracking_error = std::sqrt(sq / static_cast<double>(m.n_ticks));
  m.containment_fraction = contained / static_cast<double>(m.n_ticks);
  return m;
}

unsigned resolve_thread_cap(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VG_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

SweepTable run_sweep(const EpisodeConfig& base, const JointSetup& joint,
                     std::span<const double> xi_values,
                     std::span<const UserKind> users, int repetitions,
                     unsigned max_threads) {
  if (xi_values.empty()) throw std::invalid_argument("run_sweep: empty xi list");
  if (users.empty()) throw std::invalid_argument("run_sweep: empty user list");
  if (repetitions < 1) throw std::invalid_argument("run_sweep: repetitions must be >= 1");

  SweepTable table;
  for (double xi : xi_values) {
    AssistanceFactor check(xi);  // range check before launching work
    for (std::size_t u = 0; u < users.size(); ++u) {
      for (int rep = 0; rep < repetitions; ++rep) {
        SweepCell cell;
        cell.xi = xi;
        cell.user = users[u];
        cell.rep = rep;
        // Seeds pair cells across xi: same (user, rep) shares randomness.
        cell.seed = Rng::derive(base.seed, {u, static_cast<std::uint64_t>(rep)});
        table.cells.push_back(cell);
      }
    }
  }

  auto run_cell = [&](SweepCell& cell) {
    EpisodeConfig cfg = base;
    cfg.xi_schedule = {{0.0, cell.xi}};
    cfg.seed = cell.seed;
    JointSetup js = joint;
    js.user.kind = cell.user;
    EpisodeResult res = run_episode(cfg, js);
    cell.status = res.status;
    cell.metrics = res.metrics;
  };

  unsigned n_threads = std::min<std::size_t>(resolve_thread_cap(max_threads),
                                             table.cells.size());
  if (n_threads <= 1) {
    for (auto& cell : table.cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
      workers.emplace_back([&] {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= table.cells.size()) break;
          run_cell(table.cells[i]);
        }
      });
    }
    for (auto& w : workers) w.join();
  }
  return table;
}

std::vector<SweepAggregate> SweepTable::aggregates() const {
  std::vector<SweepAggregate> out;
  auto find = [&](double xi, UserKind user) -> SweepAggregate* {
    for (auto& a : out) {
      if (a.xi == xi && a.user == user) return &a;
    }
    return nullptr;
  };

  for (const auto& c : cells) {
    if (!find(c.xi, c.user)) out.push_back({c.xi, c.user, 0, {}, {}});
  }

  for (auto& agg : out) {
    std::vector<const Metrics*> ms;
    for (const auto& c : cells) {
      if (c.xi == agg.xi && c.user == agg.user && c.status == EpisodeStatus::ok) {
        ms.push_back(&c.metrics);
      }
    }
    agg.n_ok = static_cast<int>(ms.size());
    if (ms.empty()) continue;
    auto accumulate = [&](double Metrics::*field, double Metrics::*mean_to,
                          double Metrics::*std_to) {
      double mean = 0.0;
      for (auto* m : ms) mean += m->*field;
      mean /= static_cast<double>(ms.size());
      double var = 0.0;
      for (auto* m : ms) var += (m->*field - mean) * (m->*field - mean);
      var /= static_cast<double>(ms.size());
      agg.mean.*mean_to = mean;
      agg.stddev.*std_to = std::sqrt(var);
    };
    accumulate(&Metrics::rms_tracking_error, &Metrics::rms_tracking_error,
               &Metrics::rms_tracking_error);
    accumulate(&Metrics::max_tube_violation, &Metrics::max_tube_violation,
               &Metrics::max_tube_violation);
    accumulate(&Metrics::user_effort, &Metrics::user_effort, &Metrics::user_effort);
    accumulate(&Metrics::assist_energy, &Metrics::assist_energy,
               &Metrics::assist_energy);
    accumulate(&Metrics::containment_fraction, &Metrics::containment_fraction,
               &Metrics::containment_fraction);
  }
  return out;
}

double SweepTable::mean_of(double xi, UserKind user, double Metrics::*field) const {
  for (const auto& a : aggregates()) {
    if (a.xi == xi && a.user == user) return a.mean.*field;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// --- CSV output ---

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline games
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace

void write_episode_csv(const EpisodeLog& log, const std::string& path) {
  auto out = open_out(path);
  out << "t,phase,q,dq,q_des,qbound,h,h_omega,lambda,lambda_d,"
         "u_i,u_f,u_v,u_t,u_cmd,u_ext,vib,vib_side,xi,step_idx\n";
  for (const auto& r : log.ticks) {
    out << format_double(r.t) << ',' << format_double(r.phase) << ','
        << format_double(r.q) << ',' << format_double(r.dq) << ','
        << format_double(r.q_des) << ',' << format_double(r.qbound) << ','
        << format_double(r.h) << ',' << format_double(r.h_omega) << ','
        << format_double(r.lambda) << ',' << format_double(r.lambda_d) << ','
        << format_double(r.u_i) << ',' << format_double(r.u_f) << ','
        << format_double(r.u_v) << ',' << format_double(r.u_t) << ','
        << format_double(r.u_cmd) << ',' << format_double(r.u_ext) << ','
        << format_double(r.vib) << ',' << to_string(r.vib_side) << ','
        << format_double(r.xi) << ',' << r.step_idx << '\n';
  }
}

void write_steps_csv(const EpisodeLog& log, const std::string& path) {
  auto out = open_out(path);
  out << "step_idx,t_impact,impact_phase,xi\n";
  for (const auto& s : log.steps) {
    out << s.step_idx << ',' << format_double(s.t_impact) << ','
        << format_double(s.impact_phase) << ',' << format_double(s.xi) << '\n';
  }
}

void write_metrics_csv(const Metrics& m, const std::string& path) {
  auto out = open_out(path);
  out << "rms_tracking_error,max_tube_violation,user_effort,assist_energy,"
         "containment_fraction,n_ticks\n";
  out << format_double(m.rms_tracking_error) << ','
      << format_double(m.max_tube_violation) << ','
      << format_double(m.user_effort) << ',' << format_double(m.assist_energy)
      << ',' << format_double(m.containment_fraction) << ',' << m.n_ticks << '\n';
}

void write_sweep_csv(const SweepTable& table, const std::string& path) {
  auto out = open_out(path);
  out << "xi,user,rep,seed,status,rms_tracking_error,max_tube_violation,"
         "user_effort,assist_energy,containment_fraction,n_ticks\n";
  for (const auto& c : table.cells) {
    out << format_double(c.xi) << ',' << to_string(c.user) << ',' << c.rep << ','
        << c.seed << ',' << (c.status == EpisodeStatus::ok ? "ok" : "diverged")
        << ',' << format_double(c.metrics.rms_tracking_error) << ','
        << format_double(c.metrics.max_tube_violation) << ','
        << format_double(c.metrics.user_effort) << ','
        << format_double(c.metrics.assist_energy) << ','
        << format_double(c.metrics.containment_fraction) << ','
        << c.metrics.n_ticks << '\n';
  }
}

void write_sweep_aggregate_csv(const SweepTable& table, const std::string& path) {
  auto out = open_out(path);
  out << "xi,user,n,mean_rms_tracking_error,std_rms_tracking_error,"
         "mean_max_tube_violation,mean_user_effort,std_user_effort,"
         "mean_assist_energy,mean_containment_fraction\n";
  for (const auto& a : table.aggregates()) {
    out << format_double(a.xi) << ',' << to_string(a.user) << ',' << a.n_ok << ','
        << format_double(a.mean.rms_tracking_error) << ','
        << format_double(a.stddev.rms_tracking_error) << ','
        << format_double(a.mean.max_tube_violation) << ','
        << format_double(a.mean.user_effort) << ','
        << format_double(a.stddev.user_effort) << ','
        << format_double(a.mean.assist_energy) << ','
        << format_double(a.mean.containment_fraction) << '\n';
  }
}

}  // namespace vguide
