#pragma once

#include <optional>
#include <vector>

#include "vguide/gait.hpp"
#include "vguide/guide.hpp"
#include "vguide/plant.hpp"

namespace vguide {

/// Virtual guide filter parameters.
///
/// The default backup gains are deliberately stiff: holding a tube a couple
/// of degrees wide against tens of N m of user torque requires a steady-state
/// deflection u_ext/kp well inside the tube, otherwise the safe backward
/// image is empty and the filter degenerates to the always-on backup.
struct FilterParams {
  double kp = 2400.0; // backup proportional gain, N m/rad
  double kd = 110.0;  // backup derivative gain, N m s/rad (near critical)
  double zeta = 0.05; // damping gain on dh/dt, s

  int horizon_grid_n = 128;     // tube samples along the remaining horizon
  double flow_dt = 1e-3;        // max integration substep for the flow, s
  double lambda_d_fd_dt = 1e-3; // tick interval for the h backward difference, s

  // The flow model includes the commanded feedforward channel; disable for
  // ablation studies. The intensity must match the commanded u_f channel.
  bool flow_includes_feedforward = true;
  double feedforward_intensity = 1.0;

  void validate() const;
};

enum class DisturbanceExtreme { min_torque, max_torque };

/// Value of the safe-backward-image description function at one state.
struct BarrierValue {
  double h_omega = 1.0;    // min of h along the backup flow, both extremes
  double h_now = 1.0;      // instantaneous h at the queried state
  double argmin_tau = 0.0; // horizon offset achieving the min, s
  DisturbanceExtreme binding_extreme = DisturbanceExtreme::min_torque;
};

struct FlowSample {
  double phase = 0.0;  // absolute step phase of the sample
  JointState state{};
};

/// Everything filter_torque computes for one control tick.
struct FilterOutput {
  double u_v = 0.0;      // filtered guide torque, N m
  double u_b = 0.0;      // saturated backup torque, N m
  double lambda = 0.0;   // position blend coefficient
  double lambda_d = 0.0; // damping blend coefficient
  double blend = 0.0;    // lambda + (1 - lambda) * lambda_d
  BarrierValue barrier{};
};

/// Reusable scratch buffers for the horizon evaluation. Optional: every entry
/// point accepts a null workspace and allocates locally. One workspace per
/// joint/thread; the filter itself stays pure.
struct FilterWorkspace {
  std::vector<double> sub_dt;
  std::vector<Setpoint> sp_begin, sp_mid;
  std::vector<double> uf_begin, uf_mid;
  std::vector<std::size_t> sample_substep;  // substep index where sample k starts
  std::vector<double> tau, qdes_sample, qbound_sample;
};

/// Backup policy: PD toward the desired trajectory, saturated into the set
/// of admissible torques [-u_max, u_max].
double backup_torque(const FilterParams& params, const JointPlant& plant,
                     JointState state, double q_des, double dq_des);

/// Integrates the closed loop J*ddq = sat(u_b) + u_f + u_ext_const from
/// `phase` to the end of the step and returns horizon_grid_n + 1 uniformly
/// spaced samples (the first is the initial state). Deterministic.
std::vector<FlowSample> flow_under_backup(const FilterParams& params,
                                          const JointPlant& plant,
                                          const TrajectoryContext& traj,
                                          JointState state, double phase,
                                          double u_ext_const,
                                          FilterWorkspace* ws = nullptr);

/// Robust safe-backward-image value
///   h_T(t, x) = min over tau in [0, T-t] and u_ext in {uext_min, uext_max}
///               of h(t+tau, flow(tau; x, u_b, u_ext)).
/// The min over the user torque range reduces to the two extremes because
/// the closed loop is monotone in a constant disturbance. At phase = T the
/// horizon is empty and the value equals h_now.
BarrierValue eval_h_omega(const FilterParams& params, const JointPlant& plant,
                          const GuideSpec& guide, const TrajectoryContext& traj,
                          JointState state, double phase,
                          FilterWorkspace* ws = nullptr);

/// Position blend coefficient, coupled to the assistance factor:
///   lambda = (1 + (xi^10 - 1) * h)^3, clamped to [0, 1].
/// Equals 1 for xi = 1 (rigid tracking) and whenever h <= 0 (full backup).
double eval_lambda(AssistanceFactor xi, double h_omega);

/// Damping blend coefficient from the backward difference of h_omega across
/// control ticks: zeta * (h_prev - h_now) / dt, clamped to [0, 1]. Positive
/// only while h_omega is falling, so the term can only add backup authority.
double eval_lambda_d(const FilterParams& params, double h_omega_now,
                     double h_omega_prev, double dt);

/// One tick of the virtual guide filter:
///   u_v = (lambda + (1 - lambda) * lambda_d) * u_b.
/// `prev` is the previous tick's barrier value (absent on the first tick of
/// a step, in which case lambda_d = 0); the returned barrier value feeds the
/// next tick.
FilterOutput filter_torque(const FilterParams& params, const JointPlant& plant,
                           const GuideSpec& guide, const TrajectoryContext& traj,
                           JointState state, double phase,
                           const std::optional<BarrierValue>& prev,
                           FilterWorkspace* ws = nullptr);

}  // namespace vguide
