#pragma once

#include "vguide/guide.hpp"
#include "vguide/plant.hpp"

namespace vguide {

/// Baseline tracking PID gains. The proportional and derivative gains are
/// the same ones the backup policy uses; the integral term is baseline-only.
struct PidGains {
  double kp = 2400.0;
  double kd = 110.0;
  double ki = 20.0;
  double integral_limit = 30.0;  // clamp on the integral contribution, N m
};

/// Integral state, owned by the caller and reset at impacts.
struct PidState {
  double integral = 0.0;  // accumulated error-time, rad s
  void reset() { integral = 0.0; }
};

enum class LegPhase { stance, swing };

/// Per-joint entry of the assisted-joints selection: a joint may receive the
/// assistive torque only while its leg swings.
struct JointSelection {
  bool assisted = true;
  LegPhase leg_phase = LegPhase::swing;
};

/// All torque channels of one control tick.
struct TorqueBreakdown {
  double u_i = 0.0;    // idealization (friction + gravity compensation)
  double u_f = 0.0;    // inertia feedforward
  double u_v = 0.0;    // virtual guide filter
  double u_a = 0.0;    // assistive total, u_i + u_f + u_v
  double u_t = 0.0;    // baseline tracking PID
  double u_cmd = 0.0;  // commanded after selection and saturation
};

/// Applies the assisted-joints selection and actuator saturation:
/// u_cmd = sat(u_a) when assisted, sat(u_t) otherwise. Throws
/// std::invalid_argument if the selection marks a stance joint assisted or
/// any component is non-finite.
TorqueBreakdown compose_command(const JointPlant& plant, double u_i, double u_f,
                                double u_v, double u_t, JointSelection selection);

/// Baseline tracking PID, saturated to the actuator limit. Accumulates the
/// integral by one rectangle step e*dt and clamps its contribution to
/// +/- integral_limit. With ki = 0 this reduces exactly to the backup PD.
double baseline_torque(const PidGains& gains, const JointPlant& plant,
                       JointState state, double q_des, double dq_des,
                       PidState& pid, double dt);

enum class VibrationSide { none, front, back };

const char* to_string(VibrationSide side);

struct Vibration {
  double intensity = 0.0;  // [0, 1]
  VibrationSide side = VibrationSide::none;
};

/// Haptic feedback level
///   |q - q_des| / half_width * (1 - exp(30 * (xi - 1))),
/// clamped to [0, 1]. The side names the boundary being approached: front
/// when the joint leads the target, back when it trails it.
Vibration haptic_vibration(double q, double q_des, double q_bound_half_width,
                           AssistanceFactor xi);

}  // namespace vguide
