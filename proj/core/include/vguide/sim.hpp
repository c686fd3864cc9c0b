#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vguide/assist.hpp"
#include "vguide/filter.hpp"
#include "vguide/gait.hpp"
#include "vguide/guide.hpp"
#include "vguide/plant.hpp"
#include "vguide/rng.hpp"

namespace vguide {

enum class UserKind { passive, active, scripted };

const char* to_string(UserKind kind);
UserKind user_kind_from_string(const std::string& name);

/// Synthetic stand-in for the human on one joint. All kinds are clamped to
/// the plant's [uext_min, uext_max].
///
///   passive:  pure damping, -damping * dq.
///   active:   PD toward the nominal gait (gains typically a fraction of the
///             backup's) plus band-limited Gaussian noise.
///   scripted: zero-order hold over (time, torque) samples.
struct UserModel {
  UserKind kind = UserKind::passive;
  double damping = 1.5;         // N m s/rad
  double active_kp = 600.0;     // N m/rad, a quarter of the default backup kp
  double active_kd = 27.5;      // N m s/rad
  double noise_std = 1.0;       // N m, steady-state std of the filtered noise
  double noise_cutoff_hz = 5.0; // first-order low-pass corner
  std::vector<std::pair<double, double>> script;  // (t, torque), sorted by t
};

/// Piecewise-constant assistance factor vs. episode time. Sampled at each
/// impact, so the factor is constant within a step.
struct XiKnot {
  double t = 0.0;
  double xi = 1.0;
};

double xi_at(std::span<const XiKnot> schedule, double t);

/// Builds the three-segment trial protocol: full assistance, a stepped ramp
/// toward the target factor, then the target held to the end.
std::vector<XiKnot> protocol_schedule(double target_xi, double t_full,
                                      double t_ramp, int ramp_steps);

struct EarlyImpact {
  double probability = 0.0;  // chance a step ends before phase T
  double frac_lo = 0.9;      // impact phase fraction, uniform in [lo, hi]
  double frac_hi = 1.0;
};

enum class SelectionMode { always_assisted, alternate_by_step, never_assisted };

struct EpisodeConfig {
  double step_length_m = 0.16;   // metadata only, carried into outputs
  double step_duration_s = 0.8;  // must equal the gait period
  int n_steps = 9;
  std::vector<XiKnot> xi_schedule{{0.0, 0.5}};
  EarlyImpact early_impact{};
  std::uint64_t seed = 1;
  double control_dt = 1e-3;
  double deadbeat_alpha = 0.25;
  SelectionMode selection = SelectionMode::always_assisted;

  double idealization_intensity = 1.0;
  double feedforward_intensity = 1.0;

  // Initial-state injection for containment/fault experiments. The offsets
  // are absorbed by the deadbeat blend unless respline_at_start is cleared.
  double init_q_offset = 0.0;
  double init_dq_offset = 0.0;
  bool respline_at_start = true;

  void validate() const;
};

/// Draws where the next step ends: phase T, or earlier with the configured
/// probability and fraction distribution.
double draw_impact_phase(const EpisodeConfig& config, double period, Rng& rng);

/// One logged control tick. Serialized column order:
///   t,phase,q,dq,q_des,qbound,h,h_omega,lambda,lambda_d,
///   u_i,u_f,u_v,u_t,u_cmd,u_ext,vib,vib_side,xi,step_idx
struct TickRecord {
  double t = 0.0, phase = 0.0;
  double q = 0.0, dq = 0.0, q_des = 0.0, qbound = 0.0;
  double h = 0.0, h_omega = 0.0, lambda = 0.0, lambda_d = 0.0;
  double u_i = 0.0, u_f = 0.0, u_v = 0.0, u_t = 0.0, u_cmd = 0.0, u_ext = 0.0;
  double vib = 0.0;
  VibrationSide vib_side = VibrationSide::none;
  double xi = 0.0;
  int step_idx = 0;
  double u_b = 0.0;     // not serialized; kept for equivalence checks
  bool assisted = true; // not serialized
};

struct StepRecord {
  int step_idx = 0;
  double t_impact = 0.0;     // episode time the step ended
  double impact_phase = 0.0; // step phase at impact
  double xi = 0.0;
};

struct EpisodeLog {
  std::vector<TickRecord> ticks;
  std::vector<StepRecord> steps;
};

struct Metrics {
  double rms_tracking_error = 0.0; // rad, against q_des
  double max_tube_violation = 0.0; // rad beyond the guide, 0 if contained
  double user_effort = 0.0;        // integral of u_ext^2 dt
  double assist_energy = 0.0;      // integral of |u_v * dq| dt
  double containment_fraction = 1.0;
  std::size_t n_ticks = 0;
};

Metrics compute_metrics(const EpisodeLog& log);
Metrics combine_metrics(std::span<const Metrics> per_joint);

enum class EpisodeStatus { ok, diverged };

struct EpisodeResult {
  EpisodeStatus status = EpisodeStatus::ok;
  EpisodeLog log;
  Metrics metrics;
};

/// Rebuilds the guide each step for that step's assistance factor.
using GuideFactory = std::function<GuideSpec(AssistanceFactor)>;

GuideFactory make_guide_factory(GuideShape shape, ShapeParams params,
                                double period);

/// Everything that defines one simulated joint.
struct JointSetup {
  std::string name = "hip";
  JointPlant plant{};
  std::shared_ptr<const NominalGait> gait;
  GuideFactory guide_factory;
  FilterParams filter{};
  PidGains pid{};
  UserModel user{};
  LegPhase initial_leg_phase = LegPhase::swing;  // alternate_by_step only
};

/// Runs one closed-loop episode. The joint starts on the nominal gait (plus
/// the configured offsets); each step ends at its drawn impact, where the
/// desired trajectory is re-splined from the measured state, the guide is
/// rebuilt for the scheduled assistance factor, and the PID integral resets.
/// Deterministic given config.seed. A state beyond |q| > 10 rad aborts with
/// status diverged and the partial log.
EpisodeResult run_episode(const EpisodeConfig& config, const JointSetup& joint);

/// Multi-joint variant: independent filtered joints sharing the phase clock
/// and impact events. In alternate_by_step mode each joint is assisted only
/// on the steps where its leg swings.
std::vector<EpisodeResult> run_episode(const EpisodeConfig& config,
                                       std::span<const JointSetup> joints);

struct SweepCell {
  double xi = 0.0;
  UserKind user = UserKind::passive;
  int rep = 0;
  std::uint64_t seed = 0;
  EpisodeStatus status = EpisodeStatus::ok;
  Metrics metrics;
};

struct SweepAggregate {
  double xi = 0.0;
  UserKind user = UserKind::passive;
  int n_ok = 0;
  Metrics mean;
  Metrics stddev;
};

struct SweepTable {
  std::vector<SweepCell> cells;
  std::vector<SweepAggregate> aggregates() const;

  /// Mean of one metric for the (xi, user) cell group; NaN if absent.
  double mean_of(double xi, UserKind user,
                 double Metrics::*field) const;
};

/// Runs repetitions x |xi_values| x |users| episodes. Episode seeds depend
/// on (user, rep) but not on xi, so cells are paired across assistance
/// factors. Cells run in parallel (capped by max_threads, or the VG_THREADS
/// environment variable when max_threads is 0) and merge deterministically.
SweepTable run_sweep(const EpisodeConfig& base, const JointSetup& joint,
                     std::span<const double> xi_values,
                     std::span<const UserKind> users, int repetitions,
                     unsigned max_threads = 0);

unsigned resolve_thread_cap(unsigned requested);

// --- CSV serialization (fixed column orders, %.17g cells) ---

void write_episode_csv(const EpisodeLog& log, const std::string& path);
void write_steps_csv(const EpisodeLog& log, const std::string& path);
void write_metrics_csv(const Metrics& metrics, const std::string& path);
void write_sweep_csv(const SweepTable& table, const std::string& path);
void write_sweep_aggregate_csv(const SweepTable& table, const std::string& path);

}  // namespace vguide
