#include "vguide/plant.hpp"

#include <cmath>
#include <stdexcept>

#include "vguide/units.hpp"

namespace vguide {

void JointPlant::validate() const {
  if (!all_finite({inertia, k_dry, k_viscous, gravity_amp, u_max, uext_min, uext_max})) {
    throw std::invalid_argument("plant: non-finite parameter");
  }
  if (!(inertia > 0.0)) throw std::invalid_argument("plant: inertia must be > 0");
  if (!(u_max > 0.0)) throw std::invalid_argument("plant: u_max must be > 0");
  if (!(uext_min <= 0.0) || !(uext_max >= 0.0)) {
    throw std::invalid_argument("plant: user torque bounds must straddle 0");
  }
  if (!(std::abs(uext_min) < u_max) || !(uext_max < u_max)) {
    throw std::invalid_argument("plant: user torque bounds must be < u_max");
  }
  if (k_dry < 0.0 || k_viscous < 0.0 || gravity_amp < 0.0) {
    throw std::invalid_argument("plant: friction and gravity amplitudes must be >= 0");
  }
}

double gravity_torque(const JointPlant& plant, double q) {
  return plant.gravity_amp * std::sin(q);
}

double idealization_torque(const JointPlant& plant, JointState state) {
  double v = plant.friction_on_position ? state.q : state.dq;
  return plant.k_dry * sign0(v) + plant.k_viscous * v + gravity_torque(plant, state.q);
}

double feedforward_torque(const JointPlant& plant, const NominalGait& gait,
                          double phase, double intensity) {
  if (!(intensity >= 0.0) || intensity > 1.0) {
    throw std::invalid_argument("feedforward_torque: intensity must be in [0, 1]");
  }
  if (intensity == 0.0) return 0.0;
  return intensity * plant.inertia * eval_nominal_accel(gait, phase);
}

JointState step_dynamics(const JointPlant& plant, JointState state,
                         double u_total, double u_ext, double dt) {
  if (!all_finite({u_total, u_ext, state.q, state.dq})) {
    throw std::invalid_argument("step_dynamics: non-finite input");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("step_dynamics: dt must be > 0");

  const double accel = (saturate(u_total, plant.u_max) + u_ext) / plant.inertia;

  // RK4 with constant acceleration over the step. Kept in full RK4 form so
  // this matches the integrator used for the backup flow stage for stage.
  auto deriv = [accel](JointState s) { return JointState{s.dq, accel}; };
  JointState k1 = deriv(state);
  JointState k2 = deriv({state.q + 0.5 * dt * k1.q, state.dq + 0.5 * dt * k1.dq});
  JointState k3 = deriv({state.q + 0.5 * dt * k2.q, state.dq + 0.5 * dt * k2.dq});
  JointState k4 = deriv({state.q + dt * k3.q, state.dq + dt * k3.dq});
  return {state.q + dt / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
          state.dq + dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq)};
}

}  // namespace vguide
