#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace vguide {

/// Position/velocity setpoint pair.
struct Setpoint {
  double q = 0.0;   // rad
  double dq = 0.0;  // rad/s
};

/// Per-joint nominal trajectory over one step, parameterized by step phase
/// in [0, period()]. Implementations must be smooth enough that dq() is the
/// exact derivative of q() and ddq() is finite everywhere on the interval.
/// Immutable after construction; safe to share across threads.
class NominalGait {
 public:
  virtual ~NominalGait() = default;

  virtual double q(double phase) const = 0;
  virtual double dq(double phase) const = 0;
  virtual double ddq(double phase) const = 0;
  virtual double period() const = 0;  // nominal step duration T, s
};

/// q(p) = offset + amplitude * sin(2*pi*cycles*p/T + phase0).
/// With integer cycles the trajectory is periodic across steps.
class SinusoidGait final : public NominalGait {
 public:
  SinusoidGait(double amplitude, double period, double offset = 0.0,
               double phase0 = 0.0, int cycles = 1);

  double q(double phase) const override;
  double dq(double phase) const override;
  double ddq(double phase) const override;
  double period() const override { return period_; }

  double amplitude() const { return amplitude_; }
  double angular_frequency() const { return omega_; }

 private:
  double amplitude_;
  double period_;
  double offset_;
  double phase0_;
  double omega_;
};

/// Cubic Hermite interpolant through (phase, q, dq) knots, e.g. loaded from
/// a gait table. dq() is the exact derivative of the interpolant and matches
/// the knot velocities; ddq() is the piecewise-linear second derivative.
class SampledGait final : public NominalGait {
 public:
  /// Knot phases must start at 0, be strictly increasing, and end at T.
  SampledGait(std::vector<double> phase, std::vector<double> q,
              std::vector<double> dq);

  /// Loads a table with columns `phase_s,q_rad,dq_rad_s`.
  static SampledGait from_csv(const std::string& path);

  double q(double phase) const override;
  double dq(double phase) const override;
  double ddq(double phase) const override;
  double period() const override { return phase_.back(); }

  std::size_t knot_count() const { return phase_.size(); }

 private:
  std::size_t segment(double phase) const;

  std::vector<double> phase_, q_, dq_;
};

/// Checks the gait invariants: finiteness on a dense grid and consistency of
/// dq with a central finite difference of q (relative error <= tol).
/// Throws std::invalid_argument on violation.
void validate_gait(const NominalGait& gait, double tol = 1e-6);

/// Cubic blend s(t) that absorbs the post-impact tracking error: it starts
/// at the measured position/velocity error and lands on zero position and
/// velocity at t = window, after which it is identically zero.
struct DeadbeatSpline {
  std::array<double, 4> coeffs{};  // s(t) = c0 + c1*t + c2*t^2 + c3*t^3
  double window = 0.0;             // alpha * T, s
  double alpha = 0.0;
  double t_impact = 0.0;           // time of the latest impact, s

  double value(double t_since_impact) const;
  double deriv(double t_since_impact) const;

  /// Spline for a joint that impacted exactly on the nominal gait.
  static DeadbeatSpline zero(double alpha, double period, double t_impact = 0.0);
};

/// Solves the unique cubic (Hermite form) with
///   s(0) = q_at_impact - q_nom(0),  s'(0) = dq_at_impact - dq_nom(0),
///   s(alpha*T) = 0,                 s'(alpha*T) = 0.
/// Requires 0 < alpha <= 1 and finite inputs.
DeadbeatSpline make_deadbeat_spline(double q_at_impact, double dq_at_impact,
                                    const NominalGait& gait, double alpha,
                                    double t_impact = 0.0);

/// Desired trajectory q_des(t) = q_nom(t - t_i) + s(t - t_i) and its time
/// derivative. Requires t >= spline.t_impact. Past one nominal step the
/// phase saturates: the desired trajectory holds the end pose (velocity 0).
Setpoint eval_desired(const NominalGait& gait, const DeadbeatSpline& spline,
                      double t);

/// Same evaluation but parameterized directly by step phase t - t_i.
Setpoint eval_desired_phase(const NominalGait& gait, const DeadbeatSpline& spline,
                            double phase);

/// Nominal angular acceleration at a phase in [0, T].
double eval_nominal_accel(const NominalGait& gait, double phase);

/// Nominal gait plus the deadbeat blend active for the current step.
/// This is the trajectory context consumed by the controllers and the
/// virtual guide filter.
struct TrajectoryContext {
  const NominalGait* gait = nullptr;
  DeadbeatSpline spline{};

  Setpoint desired(double phase) const {
    return eval_desired_phase(*gait, spline, phase);
  }
  double period() const { return gait->period(); }
};

}  // namespace vguide
