#pragma once

#include <string>
#include <vector>

namespace vguide {

/// Assistance factor in [0, 1]: 1 is rigid baseline tracking (narrowest
/// guide), 0 grants the most freedom (widest guide).
class AssistanceFactor {
 public:
  explicit AssistanceFactor(double xi);  // throws std::out_of_range outside [0,1]
  double value() const { return xi_; }

 private:
  double xi_;
};

/// Tube half-width from the assistance factor: (0.5 + 7*(1 - xi)) degrees,
/// returned in radians. Affine and strictly decreasing in xi.
double qbound_from_xi(AssistanceFactor xi);

enum class GuideShape { constant, tapered, sinusoidal, custom_sampled };

const char* to_string(GuideShape shape);
GuideShape guide_shape_from_string(const std::string& name);

/// Shape parameters; only the fields relevant for the chosen tag are read.
struct ShapeParams {
  double modulation = 0.5;    // sinusoidal: fractional depth in [0, 1)
  double taper_start = 2.0;   // tapered: relative width at phase 0 (> 0)
  double taper_end = 1.0;     // tapered: relative width at phase T (> 0)
  std::vector<double> sample_phase;  // custom_sampled knots
  std::vector<double> sample_width;
};

/// Half-width profile of the virtual guide around the desired trajectory.
///
/// Non-constant shapes are normalized so their mean width over one step
/// equals qbound_from_xi(xi); the constant shape equals it pointwise.
/// Immutable after construction; width() is pure.
class GuideSpec {
 public:
  double width(double phase) const;  // q_bound at a step phase, rad, > 0
  double period() const { return period_; }
  AssistanceFactor xi() const { return xi_; }
  GuideShape shape() const { return shape_; }

  friend GuideSpec make_shape(GuideShape, const ShapeParams&, AssistanceFactor,
                              double);

 private:
  GuideSpec(GuideShape shape, AssistanceFactor xi, double period)
      : shape_(shape), xi_(xi), period_(period) {}

  GuideShape shape_;
  AssistanceFactor xi_;
  double period_;
  double mean_width_ = 0.0;
  double modulation_ = 0.0;           // sinusoidal
  double w0_ = 0.0, w1_ = 0.0;        // tapered, after normalization
  std::vector<double> knot_phase_;    // custom_sampled, after normalization
  std::vector<double> knot_width_;
};

/// Builds a guide of the requested shape for one step of duration `period`.
/// Throws std::invalid_argument if the parameters would produce a
/// non-positive width anywhere.
GuideSpec make_shape(GuideShape tag, const ShapeParams& params,
                     AssistanceFactor xi, double period);

/// Loads custom shape knots from a CSV with columns `phase_s,qbound_rad`.
ShapeParams shape_params_from_csv(const std::string& path);

/// Guide description function
///   h = 1 - ((q_des - q) / q_bound(phase))^2.
/// h = 1 at the tube center, 0 on the boundary, negative outside.
double eval_h(const GuideSpec& spec, double q_des, double q, double phase);

}  // namespace vguide
