#include "vguide/gait.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vguide/csv.hpp"
#include "vguide/units.hpp"

namespace vguide {

SinusoidGait::SinusoidGait(double amplitude, double period, double offset,
                           double phase0, int cycles)
    : amplitude_(amplitude),
      period_(period),
      offset_(offset),
      phase0_(phase0) {
  if (!all_finite({amplitude, period, offset, phase0}) || period <= 0.0) {
    throw std::invalid_argument("SinusoidGait: period must be positive and finite");
  }
  if (cycles < 1) throw std::invalid_argument("SinusoidGait: cycles must be >= 1");
  omega_ = 2.0 * kPi * static_cast<double>(cycles) / period_;
}

double SinusoidGait::q(double phase) const {
  return offset_ + amplitude_ * std::sin(omega_ * phase + phase0_);
}

double SinusoidGait::dq(double phase) const {
  return amplitude_ * omega_ * std::cos(omega_ * phase + phase0_);
}

double SinusoidGait::ddq(double phase) const {
  return -amplitude_ * omega_ * omega_ * std::sin(omega_ * phase + phase0_);
}

SampledGait::SampledGait(std::vector<double> phase, std::vector<double> q,
                         std::vector<double> dq)
    : phase_(std::move(phase)), q_(std::move(q)), dq_(std::move(dq)) {
  if (phase_.size() < 2 || phase_.size() != q_.size() || phase_.size() != dq_.size()) {
    throw std::invalid_argument("SampledGait: need >= 2 equally sized knot vectors");
  }
  if (phase_.front() != 0.0) {
    throw std::invalid_argument("SampledGait: first knot phase must be 0");
  }
  for (std::size_t i = 0; i + 1 < phase_.size(); ++i) {
    if (!(phase_[i + 1] > phase_[i])) {
      throw std::invalid_argument("SampledGait: knot phases must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < phase_.size(); ++i) {
    if (!all_finite({phase_[i], q_[i], dq_[i]})) {
      throw std::invalid_argument("SampledGait: non-finite knot");
    }
  }
}

SampledGait SampledGait::from_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int cp = t.column("phase_s"), cq = t.column("q_rad"), cd = t.column("dq_rad_s");
  if (cp < 0 || cq < 0 || cd < 0) {
    throw std::runtime_error(path + ": gait table needs columns phase_s,q_rad,dq_rad_s");
  }
  std::vector<double> phase, q, dq;
  for (const auto& row : t.rows) {
    phase.push_back(row[cp]);
    q.push_back(row[cq]);
    dq.push_back(row[cd]);
  }
  return SampledGait(std::move(phase), std::move(q), std::move(dq));
}

std::size_t SampledGait::segment(double phase) const {
  // Index of the knot interval containing phase, clamped to the table.
  auto it = std::upper_bound(phase_.begin(), phase_.end(), phase);
  std::size_t hi = static_cast<std::size_t>(it - phase_.begin());
  if (hi == 0) return 0;
  if (hi >= phase_.size()) return phase_.size() - 2;
  return hi - 1;
}

double SampledGait::q(double phase) const {
  std::size_t i = segment(phase);
  double h = phase_[i + 1] - phase_[i];
  double s = std::clamp((phase - phase_[i]) / h, 0.0, 1.0);
  double s2 = s * s, s3 = s2 * s;
  double h00 = 2 * s3 - 3 * s2 + 1;
  double h10 = s3 - 2 * s2 + s;
  double h01 = -2 * s3 + 3 * s2;
  double h11 = s3 - s2;
  return h00 * q_[i] + h10 * h * dq_[i] + h01 * q_[i + 1] + h11 * h * dq_[i + 1];
}

double SampledGait::dq(double phase) const {
  std::size_t i = segment(phase);
  double h = phase_[i + 1] - phase_[i];
  double s = std::clamp((phase - phase_[i]) / h, 0.0, 1.0);
  double s2 = s * s;
  double d00 = (6 * s2 - 6 * s) / h;
  double d10 = 3 * s2 - 4 * s + 1;
  double d01 = (-6 * s2 + 6 * s) / h;
  double d11 = 3 * s2 - 2 * s;
  return d00 * q_[i] + d10 * dq_[i] + d01 * q_[i + 1] + d11 * dq_[i + 1];
}

double SampledGait::ddq(double phase) const {
  std::size_t i = segment(phase);
  double h = phase_[i + 1] - phase_[i];
  double s = std::clamp((phase - phase_[i]) / h, 0.0, 1.0);
  double dd00 = (12 * s - 6) / (h * h);
  double dd10 = (6 * s - 4) / h;
  double dd01 = (-12 * s + 6) / (h * h);
  double dd11 = (6 * s - 2) / h;
  return dd00 * q_[i] + dd10 * dq_[i] + dd01 * q_[i + 1] + dd11 * dq_[i + 1];
}

void validate_gait(const NominalGait& gait, double tol) {
  const double T = gait.period();
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("gait: period must be positive and finite");
  }
  const int n = 256;
  const double fd = T * 1e-7;
  double scale = 1e-9;  // floor for the relative comparison
  for (int i = 0; i <= n; ++i) {
    double p = T * i / n;
    if (!all_finite({gait.q(p), gait.dq(p), gait.ddq(p)})) {
      throw std::invalid_argument("gait: non-finite value on [0, T]");
    }
    scale = std::max(scale, std::abs(gait.dq(p)));
  }
  for (int i = 1; i < n; ++i) {
    double p = T * i / n;
    double fd_dq = (gait.q(p + fd) - gait.q(p - fd)) / (2.0 * fd);
    if (std::abs(fd_dq - gait.dq(p)) > tol * scale) {
      throw std::invalid_argument("gait: dq is not the derivative of q");
    }
  }
}

double DeadbeatSpline::value(double t) const {
  if (t >= window || window <= 0.0) return 0.0;
  return coeffs[0] + t * (coeffs[1] + t * (coeffs[2] + t * coeffs[3]));
}

double DeadbeatSpline::deriv(double t) const {
  if (t >= window || window <= 0.0) return 0.0;
  return coeffs[1] + t * (2.0 * coeffs[2] + t * 3.0 * coeffs[3]);
}

DeadbeatSpline DeadbeatSpline::zero(double alpha, double period, double t_impact) {
  DeadbeatSpline s;
  s.alpha = alpha;
  s.window = alpha * period;
  s.t_impact = t_impact;
  return s;
}

DeadbeatSpline make_deadbeat_spline(double q_at_impact, double dq_at_impact,
                                    const NominalGait& gait, double alpha,
                                    double t_impact) {
  if (!all_finite({q_at_impact, dq_at_impact, t_impact})) {
    throw std::invalid_argument("make_deadbeat_spline: non-finite input");
  }
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw std::invalid_argument("make_deadbeat_spline: alpha must be in (0, 1]");
  }
  const double w = alpha * gait.period();
  const double e0 = q_at_impact - gait.q(0.0);
  const double v0 = dq_at_impact - gait.dq(0.0);

  // Hermite cubic with endpoint value/slope (e0, v0) -> (0, 0) over [0, w].
  DeadbeatSpline s;
  s.alpha = alpha;
  s.window = w;
  s.t_impact = t_impact;
  s.coeffs[0] = e0;
  s.coeffs[1] = v0;
  s.coeffs[2] = (-3.0 * e0 - 2.0 * v0 * w) / (w * w);
  s.coeffs[3] = (2.0 * e0 + v0 * w) / (w * w * w);
  return s;
}

Setpoint eval_desired_phase(const NominalGait& gait, const DeadbeatSpline& spline,
                            double phase) {
  if (!std::isfinite(phase) || phase < 0.0) {
    throw std::invalid_argument("eval_desired: phase must be finite and >= 0");
  }
  const double T = gait.period();
  if (phase > T) {
    // Overran the nominal step without an impact: hold the end pose.
    return {gait.q(T) + spline.value(T), 0.0};
  }
  return {gait.q(phase) + spline.value(phase),
          gait.dq(phase) + spline.deriv(phase)};
}

Setpoint eval_desired(const NominalGait& gait, const DeadbeatSpline& spline,
                      double t) {
  if (!std::isfinite(t) || t < spline.t_impact) {
    throw std::invalid_argument("eval_desired: t must be finite and >= t_impact");
  }
  return eval_desired_phase(gait, spline, t - spline.t_impact);
}

double eval_nominal_accel(const NominalGait& gait, double phase) {
  if (!(phase >= 0.0) || phase > gait.period()) {
    throw std::out_of_range("eval_nominal_accel: phase outside [0, T]");
  }
  return gait.ddq(phase);
}

}  // namespace vguide
