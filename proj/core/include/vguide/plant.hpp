#pragma once

#include "vguide/gait.hpp"

namespace vguide {

/// Idealized single-joint parameters.
///
/// Friction and gravity enter twice, with opposite roles: the episode engine
/// applies them as passive loads on the joint, and idealization_torque()
/// computes the equal-and-opposite compensation the actuator adds. Once
/// compensated, the joint reduces to J*ddq = u + u_ext, which is the model
/// the virtual guide filter integrates.
struct JointPlant {
  double inertia = 1.5;        // J, kg m^2
  double k_dry = 0.5;          // dry friction coefficient, N m
  double k_viscous = 0.2;      // viscous friction coefficient, N m s/rad
  double gravity_amp = 12.0;   // m*g*l of the equivalent pendulum, N m
  double u_max = 120.0;        // actuator torque limit, N m
  double uext_min = -40.0;     // user torque bounds, N m
  double uext_max = 40.0;
  bool friction_on_position = false;  // literal position-based variant

  /// Throws std::invalid_argument unless
  ///   J > 0, u_max > 0, uext_min <= 0 <= uext_max,
  ///   and both |uext_min| and uext_max are < u_max
  /// (the backup must out-torque the worst-case user).
  void validate() const;
};

struct JointState {
  double q = 0.0;   // rad
  double dq = 0.0;  // rad/s
};

/// Gravity compensation torque of the pendulum model: gravity_amp * sin(q).
double gravity_torque(const JointPlant& plant, double q);

/// Friction + gravity compensation making the joint feel transparent:
///   k_dry * sign(dq) + k_viscous * dq + gravity_torque(q),
/// with sign(0) = 0. With friction_on_position set, the friction terms use
/// q instead of dq.
double idealization_torque(const JointPlant& plant, JointState state);

/// Inertia compensation along the nominal motion:
///   intensity * J * ddq_nom(phase), intensity in [0, 1].
double feedforward_torque(const JointPlant& plant, const NominalGait& gait,
                          double phase, double intensity = 1.0);

/// One fixed-step RK4 update of (q, dq) under J*ddq = sat(u_total) + u_ext.
/// u_total is saturated to [-u_max, u_max]; u_ext is the unactuated channel
/// and bypasses saturation. Deterministic: identical inputs produce
/// bit-identical outputs. Throws std::invalid_argument on non-finite torque
/// or dt <= 0.
JointState step_dynamics(const JointPlant& plant, JointState state,
                         double u_total, double u_ext, double dt);

}  // namespace vguide
