// Test-side reference implementations, kept independent of the library code
// paths they check. Brute force over cleverness on purpose.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "vguide/filter.hpp"
#include "vguide/gait.hpp"
#include "vguide/guide.hpp"
#include "vguide/plant.hpp"
#include "vguide/units.hpp"

namespace oracle {

/// Gaussian elimination with partial pivoting for tiny dense systems.
template <std::size_t N>
std::array<double, N> solve_linear(std::array<std::array<double, N>, N> a,
                                   std::array<double, N> b) {
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    if (a[col][col] == 0.0) throw std::runtime_error("singular system");
    for (std::size_t r = col + 1; r < N; ++r) {
      double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, N> x{};
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < N; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Monomial coefficients of the cubic with value/slope (e0, v0) at 0 and
/// (0, 0) at w, found by solving the 4x4 boundary-condition system.
inline std::array<double, 4> cubic_from_boundaries(double e0, double v0, double w) {
  std::array<std::array<double, 4>, 4> a{{
      {1.0, 0.0, 0.0, 0.0},
      {0.0, 1.0, 0.0, 0.0},
      {1.0, w, w * w, w * w * w},
      {0.0, 1.0, 2.0 * w, 3.0 * w * w},
  }};
  return solve_linear<4>(a, {e0, v0, 0.0, 0.0});
}

inline double eval_poly3(const std::array<double, 4>& c, double t) {
  return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
}

/// Second-order central difference of a scalar function.
inline double second_derivative_fd(const std::function<double(double)>& f, double x,
                                   double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline double first_derivative_fd(const std::function<double(double)>& f, double x,
                                  double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Plain RK4 integration of the backup closed loop
///   J ddq = sat(kp e + kd de) + u_f + u_ext,
/// written straight from the equations, with its own stepping (no shared
/// segment/sample machinery with the library flow).
inline vguide::JointState flow_endpoint(const vguide::FilterParams& params,
                                        const vguide::JointPlant& plant,
                                        const vguide::TrajectoryContext& traj,
                                        vguide::JointState x0, double phase_from,
                                        double duration, double u_ext, double dt) {
  auto accel = [&](double p, const vguide::JointState& s) {
    vguide::Setpoint sp = traj.desired(std::min(p, traj.period()));
    double ub = vguide::saturate(params.kp * (sp.q - s.q) + params.kd * (sp.dq - s.dq),
                                 plant.u_max);
    double uf = 0.0;
    if (params.flow_includes_feedforward && params.feedforward_intensity > 0.0) {
      uf = params.feedforward_intensity * plant.inertia *
           traj.gait->ddq(std::min(p, traj.period()));
    }
    return (ub + uf + u_ext) / plant.inertia;
  };

  vguide::JointState s = x0;
  double remaining = duration;
  double p = phase_from;
  while (remaining > 1e-15) {
    double step = std::min(dt, remaining);
    double a1 = accel(p, s);
    vguide::JointState s2{s.q + 0.5 * step * s.dq, s.dq + 0.5 * step * a1};
    double a2 = accel(p + 0.5 * step, s2);
    vguide::JointState s3{s.q + 0.5 * step * (s.dq + 0.5 * step * a1),
                          s.dq + 0.5 * step * a2};
    double a3 = accel(p + 0.5 * step, s3);
    vguide::JointState s4{s.q + step * (s.dq + 0.5 * step * a2), s.dq + step * a3};
    double a4 = accel(p + step, s4);
    s = vguide::JointState{s.q + step * s.dq + step * step / 6.0 * (a1 + a2 + a3),
                           s.dq + step / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)};
    p += step;
    remaining -= step;
  }
  return s;
}

/// Dense-grid, disturbance-sweep reference for the safe-backward-image value:
/// min of h over `n_tau` uniform horizon samples and `n_sweep` constant
/// disturbances spanning [uext_min, uext_max], integrated at `dt`.
struct HOmegaOracle {
  double h_min = 1.0;
  double h_min_extremes = 1.0;  // min restricted to the two extreme torques
};

inline HOmegaOracle h_omega_reference(const vguide::FilterParams& params,
                                      const vguide::JointPlant& plant,
                                      const vguide::GuideSpec& guide,
                                      const vguide::TrajectoryContext& traj,
                                      vguide::JointState x0, double phase,
                                      int n_tau, int n_sweep, double dt) {
  HOmegaOracle out;
  out.h_min = std::numeric_limits<double>::infinity();
  out.h_min_extremes = std::numeric_limits<double>::infinity();
  const double horizon = std::max(traj.period() - phase, 0.0);

  for (int k = 0; k < n_sweep; ++k) {
    double u_ext = plant.uext_min +
                   (plant.uext_max - plant.uext_min) * k / (n_sweep - 1);
    bool extreme = (k == 0 || k == n_sweep - 1);
    vguide::JointState s = x0;
    double prev_tau = 0.0;
    for (int i = 0; i <= n_tau; ++i) {
      double tau = horizon * i / n_tau;
      if (i > 0) {
        s = flow_endpoint(params, plant, traj, s, phase + prev_tau, tau - prev_tau,
                          u_ext, dt);
        prev_tau = tau;
      }
      double p = std::min(phase + tau, traj.period());
      double h = vguide::eval_h(guide, traj.desired(p).q, s.q, p);
      out.h_min = std::min(out.h_min, h);
      if (extreme) out.h_min_extremes = std::min(out.h_min_extremes, h);
    }
  }
  return out;
}

}  // namespace oracle
