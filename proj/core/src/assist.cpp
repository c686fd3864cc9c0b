#include "vguide/assist.hpp"

#include <cmath>
#include <stdexcept>

#include "vguide/units.hpp"

namespace vguide {

TorqueBreakdown compose_command(const JointPlant& plant, double u_i, double u_f,
                                double u_v, double u_t, JointSelection selection) {
  if (!all_finite({u_i, u_f, u_v, u_t})) {
    throw std::invalid_argument("compose_command: non-finite torque component");
  }
  if (selection.assisted && selection.leg_phase == LegPhase::stance) {
    throw std::invalid_argument("compose_command: stance joints cannot be assisted");
  }
  TorqueBreakdown b;
  b.u_i = u_i;
  b.u_f = u_f;
  b.u_v = u_v;
  b.u_a = u_i + u_f + u_v;
  b.u_t = u_t;
  b.u_cmd = saturate(selection.assisted ? b.u_a : b.u_t, plant.u_max);
  return b;
}

double baseline_torque(const PidGains& gains, const JointPlant& plant,
                       JointState state, double q_des, double dq_des,
                       PidState& pid, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("baseline_torque: dt must be > 0");
  double e = q_des - state.q;
  pid.integral += e * dt;
  double i_term = std::clamp(gains.ki * pid.integral, -gains.integral_limit,
                             gains.integral_limit);
  double u = gains.kp * e + gains.kd * (dq_des - state.dq) + i_term;
  return saturate(u, plant.u_max);
}

const char* to_string(VibrationSide side) {
  switch (side) {
    case VibrationSide::none: return "none";
    case VibrationSide::front: return "front";
    case VibrationSide::back: return "back";
  }
  return "?";
}

Vibration haptic_vibration(double q, double q_des, double q_bound_half_width,
                           AssistanceFactor xi) {
  if (!(q_bound_half_width > 0.0)) {
    throw std::invalid_argument("haptic_vibration: half width must be > 0");
  }
  Vibration v;
  double e = q - q_des;
  if (e > 0.0) v.side = VibrationSide::front;
  else if (e < 0.0) v.side = VibrationSide::back;
  double level = std::abs(e) / q_bound_half_width *
                 (1.0 - std::exp(30.0 * (xi.value() - 1.0)));
  v.intensity = std::clamp(level, 0.0, 1.0);
  return v;
}

}  // namespace vguide
