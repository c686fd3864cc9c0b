#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "vguide/gait.hpp"
#include "vguide/units.hpp"

using namespace vguide;

TEST_SUITE_BEGIN("trajectory");

namespace {
const SinusoidGait kGait(0.3, 0.8);  // A = 0.3 rad, T = 0.8 s
}

TEST_CASE("deadbeat spline boundary conditions") {
  auto s = make_deadbeat_spline(kGait.q(0.0) + 0.02, kGait.dq(0.0) - 0.5, kGait, 0.25);
  const double w = s.window;
  CHECK(std::abs(s.value(0.0) - 0.02) < 1e-12);
  CHECK(std::abs(s.deriv(0.0) + 0.5) < 1e-12);
  // window endpoint approached from below (at and beyond it the branch is 0)
  double eps = 1e-9;
  CHECK(std::abs(s.value(w - eps)) < 1e-7);
  CHECK(std::abs(s.deriv(w - eps)) < 1e-6);
  CHECK(s.value(w) == 0.0);
  CHECK(s.deriv(w) == 0.0);
  CHECK(s.value(w + 0.1) == 0.0);
}

TEST_CASE("zero boundary error forces the zero cubic") {
  auto s = make_deadbeat_spline(kGait.q(0.0), kGait.dq(0.0), kGait, 0.25);
  for (double t : {0.0, 0.05, 0.1, 0.15, 0.2, 0.5}) {
    CHECK(s.value(t) == 0.0);
    CHECK(s.deriv(t) == 0.0);
  }
}

TEST_CASE("spline midpoint against the 4x4 boundary-solve oracle") {
  // 1 degree position error, zero velocity error, window 0.4 s.
  const double e0 = deg_to_rad(1.0);
  SinusoidGait gait16(0.3, 1.6);  // alpha 0.25 -> window 0.4
  auto s = make_deadbeat_spline(gait16.q(0.0) + e0, gait16.dq(0.0), gait16, 0.25);
  REQUIRE(s.window == doctest::Approx(0.4));

  auto ref = oracle::cubic_from_boundaries(e0, 0.0, 0.4);
  CHECK(std::abs(s.value(0.2) - oracle::eval_poly3(ref, 0.2)) < 1e-10);
  // Hermite symmetry: half the offset at the midpoint.
  CHECK(s.value(0.2) == doctest::Approx(deg_to_rad(0.5)).epsilon(1e-12));

  // Zero position error, pure velocity error: s(w/2) = v0 * w / 8.
  const double v0 = 0.7;
  auto sv = make_deadbeat_spline(gait16.q(0.0), gait16.dq(0.0) + v0, gait16, 0.25);
  auto refv = oracle::cubic_from_boundaries(0.0, v0, 0.4);
  CHECK(std::abs(sv.value(0.2) - oracle::eval_poly3(refv, 0.2)) < 1e-10);
  CHECK(sv.value(0.2) == doctest::Approx(v0 * 0.4 / 8.0).epsilon(1e-12));
}

TEST_CASE("deadbeat input validation") {
  CHECK_THROWS_AS(make_deadbeat_spline(std::nan(""), 0.0, kGait, 0.25),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_deadbeat_spline(0.0, 0.0, kGait, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_deadbeat_spline(0.0, 0.0, kGait, 1.5), std::invalid_argument);
}

TEST_CASE("eval_desired boundary values and blend handoff") {
  const double e0 = deg_to_rad(2.0);
  const double v_imp = kGait.dq(0.0) - 0.3;
  auto s = make_deadbeat_spline(kGait.q(0.0) + e0, v_imp, kGait, 0.25, 1.0);

  auto at_impact = eval_desired(kGait, s, 1.0);
  CHECK(at_impact.q == doctest::Approx(kGait.q(0.0) + e0).epsilon(1e-15));
  CHECK(at_impact.dq == doctest::Approx(v_imp).epsilon(1e-15));

  // After the blend window the spline vanishes exactly.
  auto past = eval_desired(kGait, s, 1.0 + 0.5);
  CHECK(past.q == kGait.q(0.5));
  CHECK(past.dq == kGait.dq(0.5));

  CHECK_THROWS_AS(eval_desired(kGait, s, 0.5), std::invalid_argument);
}

TEST_CASE("desired trajectory is C1 across the blend boundary") {
  auto s = make_deadbeat_spline(kGait.q(0.0) + 0.05, kGait.dq(0.0) + 1.0, kGait, 0.25);
  const double w = s.window;
  const double eps = 1e-12;
  auto lo = eval_desired_phase(kGait, s, w - eps);
  auto hi = eval_desired_phase(kGait, s, w + eps);
  CHECK(std::abs(hi.q - lo.q) < 1e-9);
  CHECK(std::abs(hi.dq - lo.dq) < 1e-9);
  // The spline branch itself lands exactly on zero at the window.
  CHECK(s.value(w) == 0.0);
  CHECK(s.deriv(w) == 0.0);
}

TEST_CASE("deadbeat idempotence and periodic composition") {
  // Impacting exactly on the gait leaves the desired trajectory bit-identical
  // to the nominal one, step after step. Phases are compared in the phase
  // domain, which is how the episode engine evaluates them (integer ticks).
  for (int step = 0; step < 3; ++step) {
    double t_i = kGait.period() * step;
    auto s = make_deadbeat_spline(kGait.q(0.0), kGait.dq(0.0), kGait, 0.25, t_i);
    for (int i = 0; i <= 64; ++i) {
      double phase = kGait.period() * i / 64;
      auto sp = eval_desired_phase(kGait, s, phase);
      CHECK(sp.q == kGait.q(phase));
      CHECK(sp.dq == kGait.dq(phase));
    }
    // Through absolute time the same holds up to time-subtraction rounding.
    auto sp = eval_desired(kGait, s, t_i + 0.3);
    CHECK(sp.q == doctest::Approx(kGait.q(0.3)).epsilon(1e-12));
  }
}

TEST_CASE("phase clamp holds the end pose") {
  auto s = DeadbeatSpline::zero(0.25, kGait.period());
  auto held = eval_desired(kGait, s, kGait.period() + 0.3);
  CHECK(held.q == kGait.q(kGait.period()));
  CHECK(held.dq == 0.0);
}

TEST_CASE("nominal acceleration against finite differences") {
  CHECK(eval_nominal_accel(kGait, 0.0) == doctest::Approx(0.0).scale(1.0));
  SinusoidGait flat(0.0, 0.8, 0.4);
  for (double p : {0.0, 0.3, 0.8}) CHECK(eval_nominal_accel(flat, p) == 0.0);

  const double omega = 2.0 * kPi / 0.8;
  double expected = -0.3 * omega * omega * std::sin(omega * 0.2);
  double fd = oracle::second_derivative_fd([&](double p) { return kGait.q(p); }, 0.2,
                                           1e-5);
  CHECK(eval_nominal_accel(kGait, 0.2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(eval_nominal_accel(kGait, 0.2) == doctest::Approx(fd).epsilon(1e-5));

  CHECK_THROWS_AS(eval_nominal_accel(kGait, -0.1), std::out_of_range);
  CHECK_THROWS_AS(eval_nominal_accel(kGait, 0.9), std::out_of_range);
}

TEST_CASE("gait invariants hold for both families") {
  CHECK_NOTHROW(validate_gait(kGait));

  // Hermite table sampled from the sinusoid: dq must be the exact derivative
  // of the interpolant, and values must track the analytic gait closely.
  std::vector<double> ph, q, dq;
  for (int i = 0; i <= 40; ++i) {
    double p = 0.8 * i / 40;
    ph.push_back(p);
    q.push_back(kGait.q(p));
    dq.push_back(kGait.dq(p));
  }
  SampledGait table(ph, q, dq);
  CHECK_NOTHROW(validate_gait(table));
  for (int i = 0; i <= 97; ++i) {
    double p = 0.8 * i / 97;
    CHECK(std::abs(table.q(p) - kGait.q(p)) < 1e-5);
    CHECK(std::abs(table.dq(p) - kGait.dq(p)) < 1e-3);
    CHECK(std::isfinite(table.ddq(p)));
  }
}

TEST_CASE("gait table CSV loading") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "vguide_test_gait.csv";
  {
    std::ofstream out(path);
    out << "phase_s,q_rad,dq_rad_s\n";
    for (int i = 0; i <= 16; ++i) {
      double p = 0.8 * i / 16;
      out << p << ',' << kGait.q(p) << ',' << kGait.dq(p) << '\n';
    }
  }
  auto table = SampledGait::from_csv(path.string());
  CHECK(table.period() == doctest::Approx(0.8));
  CHECK(table.knot_count() == 17);
  CHECK(table.q(0.0) == doctest::Approx(kGait.q(0.0)));

  {
    std::ofstream out(path);
    out << "phase_s,q_rad,dq_rad_s\n0,0,0\n0.4,0.1,0\n0.2,0.05,0\n";
  }
  CHECK_THROWS_AS(SampledGait::from_csv(path.string()), std::invalid_argument);
  fs::remove(path);
}

TEST_SUITE_END();
