#include "vguide/filter.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vguide/units.hpp"

namespace vguide {

void FilterParams::validate() const {
  if (!(kp > 0.0) || !(kd > 0.0)) {
    throw std::invalid_argument("filter: backup gains must be > 0");
  }
  if (!(zeta >= 0.0)) throw std::invalid_argument("filter: zeta must be >= 0");
  if (horizon_grid_n < 8) {
    throw std::invalid_argument("filter: horizon_grid_n must be >= 8");
  }
  if (!(flow_dt > 0.0)) throw std::invalid_argument("filter: flow_dt must be > 0");
  if (!(lambda_d_fd_dt > 0.0)) {
    throw std::invalid_argument("filter: lambda_d_fd_dt must be > 0");
  }
  if (!(feedforward_intensity >= 0.0) || feedforward_intensity > 1.0) {
    throw std::invalid_argument("filter: feedforward_intensity must be in [0, 1]");
  }
}

double backup_torque(const FilterParams& params, const JointPlant& plant,
                     JointState state, double q_des, double dq_des) {
  double u = params.kp * (q_des - state.q) + params.kd * (dq_des - state.dq);
  return saturate(u, plant.u_max);
}

namespace {

constexpr double kMinHorizon = 1e-12;

// Fills the workspace with the desired trajectory, feedforward torque, and
// guide width along the remaining horizon [phase, T]. Substep boundaries land
// exactly on the tau sample grid, so sampled flow states are integration
// states, not interpolants. Shared by both disturbance extremes.
void build_horizon(const FilterParams& params, const JointPlant& plant,
                   const GuideSpec* guide, const TrajectoryContext& traj,
                   double phase, double horizon, FilterWorkspace& ws) {
  const int n = params.horizon_grid_n;
  const double T = traj.period();

  ws.sub_dt.clear();
  ws.sp_begin.clear();
  ws.sp_mid.clear();
  ws.uf_begin.clear();
  ws.uf_mid.clear();
  ws.sample_substep.clear();
  ws.tau.clear();
  ws.qdes_sample.clear();
  ws.qbound_sample.clear();

  const bool with_ff =
      params.flow_includes_feedforward && params.feedforward_intensity > 0.0;
  auto uf_at = [&](double p) {
    if (!with_ff) return 0.0;
    return params.feedforward_intensity * plant.inertia *
           traj.gait->ddq(std::min(p, T));
  };

  for (int k = 0; k <= n; ++k) {
    double tau_k = horizon * k / n;
    double p_k = std::min(phase + tau_k, T);
    ws.tau.push_back(tau_k);
    ws.sample_substep.push_back(ws.sub_dt.size());
    Setpoint sp = traj.desired(p_k);
    ws.qdes_sample.push_back(sp.q);
    ws.qbound_sample.push_back(guide ? guide->width(p_k) : 1.0);

    if (k == n) break;
    double tau_next = horizon * (k + 1) / n;
    double seg = tau_next - tau_k;
    auto m = static_cast<std::size_t>(std::ceil(seg / params.flow_dt - 1e-9));
    if (m < 1) m = 1;
    double sub = seg / static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
      double t0 = phase + tau_k + static_cast<double>(j) * sub;
      ws.sub_dt.push_back(sub);
      ws.sp_begin.push_back(traj.desired(std::min(t0, T)));
      ws.sp_mid.push_back(traj.desired(std::min(t0 + 0.5 * sub, T)));
      ws.uf_begin.push_back(uf_at(t0));
      ws.uf_mid.push_back(uf_at(t0 + 0.5 * sub));
    }
  }
  // End-of-horizon slot doubles as the k4 stage of the last substep.
  ws.sp_begin.push_back(ws.sp_begin.empty() ? traj.desired(std::min(phase, T))
                                            : traj.desired(std::min(phase + horizon, T)));
  ws.uf_begin.push_back(uf_at(phase + horizon));
}

struct FlowMin {
  double h_min;
  double argmin_tau;
};

// Integrates one backup flow over the prepared horizon. on_sample is called
// with (sample_index, state) for every tau grid point, including tau = 0.
template <typename F>
void integrate_flow(const FilterParams& params, const JointPlant& plant,
                    const FilterWorkspace& ws, JointState x0, double u_ext,
                    F&& on_sample) {
  const double inv_j = 1.0 / plant.inertia;
  const double u_max = plant.u_max;
  const double kp = params.kp, kd = params.kd;

  auto accel = [&](const Setpoint& sp, double uf, const JointState& s) {
    double ub = saturate(kp * (sp.q - s.q) + kd * (sp.dq - s.dq), u_max);
    return (ub + uf + u_ext) * inv_j;
  };

  JointState s = x0;
  std::size_t sample = 0;
  on_sample(sample++, s);

  const std::size_t n_sub = ws.sub_dt.size();
  for (std::size_t i = 0; i < n_sub; ++i) {
    const double dt = ws.sub_dt[i];
    const Setpoint& sb = ws.sp_begin[i];
    const Setpoint& sm = ws.sp_mid[i];
    const Setpoint& se = ws.sp_begin[i + 1];
    const double ufb = ws.uf_begin[i], ufm = ws.uf_mid[i], ufe = ws.uf_begin[i + 1];

    // Classical RK4 on (q' = dq, dq' = accel), with the position stage
    // slopes expanded: q_next = q + dt*dq + dt^2/6 * (a1 + a2 + a3).
    double a1 = accel(sb, ufb, s);
    JointState s2{s.q + 0.5 * dt * s.dq, s.dq + 0.5 * dt * a1};
    double a2 = accel(sm, ufm, s2);
    JointState s3{s.q + 0.5 * dt * (s.dq + 0.5 * dt * a1), s.dq + 0.5 * dt * a2};
    double a3 = accel(sm, ufm, s3);
    JointState s4{s.q + dt * (s.dq + 0.5 * dt * a2), s.dq + dt * a3};
    double a4 = accel(se, ufe, s4);

    s = JointState{s.q + dt * s.dq + dt * dt / 6.0 * (a1 + a2 + a3),
                   s.dq + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)};

    if (sample < ws.sample_substep.size() && ws.sample_substep[sample] == i + 1) {
      on_sample(sample++, s);
    }
  }
}

}  // namespace

std::vector<FlowSample> flow_under_backup(const FilterParams& params,
                                          const JointPlant& plant,
                                          const TrajectoryContext& traj,
                                          JointState state, double phase,
                                          double u_ext_const,
                                          FilterWorkspace* ws) {
  params.validate();
  if (!(u_ext_const >= plant.uext_min) || !(u_ext_const <= plant.uext_max)) {
    throw std::invalid_argument("flow_under_backup: u_ext outside plant bounds");
  }
  if (!(phase >= 0.0) || phase > traj.period() + kMinHorizon) {
    throw std::invalid_argument("flow_under_backup: phase outside [0, T]");
  }
  FilterWorkspace local;
  FilterWorkspace& w = ws ? *ws : local;

  double horizon = std::max(traj.period() - phase, 0.0);
  std::vector<FlowSample> out;
  if (horizon <= kMinHorizon) {
    out.push_back({phase, state});
    return out;
  }
  build_horizon(params, plant, nullptr, traj, phase, horizon, w);
  out.resize(w.tau.size());
  integrate_flow(params, plant, w, state, u_ext_const,
                 [&](std::size_t k, const JointState& s) {
                   out[k] = FlowSample{phase + w.tau[k], s};
                 });
  return out;
}

BarrierValue eval_h_omega(const FilterParams& params, const JointPlant& plant,
                          const GuideSpec& guide, const TrajectoryContext& traj,
                          JointState state, double phase, FilterWorkspace* ws) {
  FilterWorkspace local;
  FilterWorkspace& w = ws ? *ws : local;

  const double T = traj.period();
  double horizon = std::max(T - phase, 0.0);

  BarrierValue bv;
  if (horizon <= kMinHorizon) {
    double p = std::min(phase, T);
    bv.h_now = eval_h(guide, traj.desired(p).q, state.q, p);
    bv.h_omega = bv.h_now;
    bv.argmin_tau = 0.0;
    return bv;
  }

  build_horizon(params, plant, &guide, traj, phase, horizon, w);

  bv.h_omega = std::numeric_limits<double>::infinity();
  for (DisturbanceExtreme ext :
       {DisturbanceExtreme::min_torque, DisturbanceExtreme::max_torque}) {
    double u_ext = ext == DisturbanceExtreme::min_torque ? plant.uext_min
                                                         : plant.uext_max;
    integrate_flow(params, plant, w, state, u_ext,
                   [&](std::size_t k, const JointState& s) {
                     double e = (w.qdes_sample[k] - s.q) / w.qbound_sample[k];
                     double h = 1.0 - e * e;
                     if (k == 0) bv.h_now = h;
                     if (h < bv.h_omega) {
                       bv.h_omega = h;
                       bv.argmin_tau = w.tau[k];
                       bv.binding_extreme = ext;
                     }
                   });
  }
  return bv;
}

double eval_lambda(AssistanceFactor xi, double h_omega) {
  double x = xi.value();
  double x2 = x * x, x4 = x2 * x2, x8 = x4 * x4;
  double x10 = x8 * x2;
  double base = 1.0 + (x10 - 1.0) * h_omega;
  return std::clamp(base * base * base, 0.0, 1.0);
}

double eval_lambda_d(const FilterParams& params, double h_omega_now,
                     double h_omega_prev, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("eval_lambda_d: dt must be > 0");
  // Positive while h_omega falls; clamped so the blend stays convex.
  return std::clamp(params.zeta * (h_omega_prev - h_omega_now) / dt, 0.0, 1.0);
}

FilterOutput filter_torque(const FilterParams& params, const JointPlant& plant,
                           const GuideSpec& guide, const TrajectoryContext& traj,
                           JointState state, double phase,
                           const std::optional<BarrierValue>& prev,
                           FilterWorkspace* ws) {
  FilterOutput out;
  out.barrier = eval_h_omega(params, plant, guide, traj, state, phase, ws);
  out.lambda = eval_lambda(guide.xi(), out.barrier.h_omega);
  out.lambda_d = prev ? eval_lambda_d(params, out.barrier.h_omega, prev->h_omega,
                                      params.lambda_d_fd_dt)
                      : 0.0;
  out.blend = std::clamp(out.lambda + (1.0 - out.lambda) * out.lambda_d, 0.0, 1.0);

  Setpoint sp = traj.desired(std::min(phase, traj.period()));
  out.u_b = backup_torque(params, plant, state, sp.q, sp.dq);
  out.u_v = out.blend * out.u_b;
  return out;
}

}  // namespace vguide
