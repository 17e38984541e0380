#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "perch/state_core.hpp"
#include "perch/thrust_reg.hpp"

#include <cmath>

using namespace perch;

namespace {

Trajectory hover_traj(const Vec3& p, double T) {
    State9 x;
    x.p = p;
    Trajectory traj;
    traj.segments.push_back(solve_bvp(x, x, T));
    return traj;
}

AttitudeRamp flat_ramp() { return AttitudeRamp{0.0, 0.0, 0.0}; } // phi == 0 throughout

// fine cumulative trapezoid for the planned-thrust moments
std::array<double, 4> oracle_moments(const FpSampler& fp, const AttitudeRamp& ramp, double mass,
                                     double T, double h) {
    const int n = static_cast<int>(std::ceil(T / h));
    const double dt = T / n;
    double ivy = 0.0, ipy = 0.0, ivz = 0.0, ipz = 0.0;
    double fy0 = fp(0.0) / mass * std::sin(ramp.phi(0.0));
    double fz0 = fp(0.0) / mass * std::cos(ramp.phi(0.0));
    for (int i = 0; i < n; ++i) {
        const double t1 = (i + 1) * dt;
        const double fy1 = fp(t1) / mass * std::sin(ramp.phi(t1));
        const double fz1 = fp(t1) / mass * std::cos(ramp.phi(t1));
        const double ivy1 = ivy + 0.5 * dt * (fy0 + fy1);
        const double ivz1 = ivz + 0.5 * dt * (fz0 + fz1);
        ipy += 0.5 * dt * (ivy + ivy1);
        ipz += 0.5 * dt * (ivz + ivz1);
        ivy = ivy1;
        ivz = ivz1;
        fy0 = fy1;
        fz0 = fz1;
    }
    return {ipy, ivy, ipz, ivz};
}

} // namespace

TEST_CASE("planned thrust magnitudes") {
    const double g = 9.81, m = 1.3;
    Trajectory hover = hover_traj(Vec3(0.0, 0.0, 1.0), 1.0);
    CHECK(planned_thrust(hover, 0.5, m, g) == doctest::Approx(m * g).epsilon(1e-12));

    // a_y = 0, a_z = g gives twice the hover thrust: climb segment midpoint
    State9 x0;
    x0.p = Vec3(0.0, 0.0, 1.0);
    x0.a = Vec3(0.0, 0.0, g);
    State9 xT = x0;
    xT.p.z() += 1.0;
    Trajectory climb;
    climb.segments.push_back(solve_bvp(x0, xT, 1.0));
    CHECK(planned_thrust(climb, 0.0, m, g) == doctest::Approx(2.0 * m * g).epsilon(1e-12));

    // held constant past the end of the plan
    const double at_end = planned_thrust(climb, 1.0, m, g);
    CHECK(planned_thrust(climb, 5.0, m, g) == doctest::Approx(at_end).epsilon(1e-15));
}

TEST_CASE("make_reg_problem maps the physical terminal through the transformation") {
    SurfaceTrack track;
    track.s0 = SurfaceState::make(Vec3(0.0, 4.0, 1.0), Vec3(0.0, 2.0, 0.0),
                                  Vec3(0.0, -0.9396926207859084, 0.3420201433256687));
    const PerchParams params{0.1, 1.0, 0.0, 9.81};
    const double m = 1.2, g = 9.81;
    const AttitudeRamp ramp{0.5, 2.0, 1.2217304763960306}; // 70 deg target
    const double T_F = ramp.T_F();
    REQUIRE(T_F > 0.0);

    const Eigen::Vector4d xq{0.1, 2.5, 1.1, -0.2};

    // zero planned thrust: only the gravity terms remain
    const RegProblem zero = make_reg_problem(xq, ramp, [](double) { return 0.0; }, track, params,
                                             m, g);
    CHECK((zero.X0 - xq).cwiseAbs().maxCoeff() == 0.0);
    const State9 xT = terminal_from_surface(predict(track, T_F), params);
    CHECK(zero.XT[0] == doctest::Approx(xT.p.y()).epsilon(1e-12));
    CHECK(zero.XT[1] == doctest::Approx(xT.v.y()).epsilon(1e-12));
    CHECK(zero.XT[2] == doctest::Approx(xT.p.z() + 0.5 * g * T_F * T_F).epsilon(1e-12));
    CHECK(zero.XT[3] == doctest::Approx(xT.v.z() + g * T_F).epsilon(1e-12));

    // correction integrals agree with an independent fine-step quadrature
    const FpSampler fp = [](double t) { return 10.0 + 3.0 * std::sin(2.0 * t); };
    const RegProblem prob = make_reg_problem(xq, ramp, fp, track, params, m, g);
    const auto mo = oracle_moments(fp, ramp, m, T_F, 1e-5);
    CHECK(prob.XT[0] == doctest::Approx(xT.p.y() + mo[0]).epsilon(1e-6));
    CHECK(prob.XT[1] == doctest::Approx(xT.v.y() + mo[1]).epsilon(1e-6));
    CHECK(prob.XT[2] ==
          doctest::Approx(xT.p.z() - mo[2] + 0.5 * g * T_F * T_F).epsilon(1e-6));
    CHECK(prob.XT[3] == doctest::Approx(xT.v.z() - mo[3] + g * T_F).epsilon(1e-6));

    // a ramp pointing the wrong way has no positive horizon
    CHECK_THROWS_AS(make_reg_problem(xq, AttitudeRamp{1.4, 1.0, 1.2}, fp, track, params, m, g),
                    std::invalid_argument);
}

TEST_CASE("propagate closed-form checks") {
    const RegState X0{0.3, -0.5, 1.2, 0.7};
    const double T = 0.8, m = 1.1;

    // zero input: pure double-integrator drift
    ThrustSchedule quiet{{0.2, 0.4, 0.5, 0.6}, 0.0, 0.0};
    const RegState drift = propagate(X0, quiet, flat_ramp(), T, m);
    CHECK(drift[0] == doctest::Approx(X0[0] + X0[1] * T).epsilon(1e-12));
    CHECK(drift[1] == doctest::Approx(X0[1]).epsilon(1e-12));
    CHECK(drift[2] == doctest::Approx(X0[2] + X0[3] * T).epsilon(1e-12));
    CHECK(drift[3] == doctest::Approx(X0[3]).epsilon(1e-12));

    // all-up pattern: f_ou over the whole horizon, phi == 0
    const double c = 2.7;
    ThrustSchedule up{{0.0, T, T, T}, -1.0, c};
    const RegState lifted = propagate(X0, up, flat_ramp(), T, m);
    CHECK(lifted[0] == doctest::Approx(X0[0] + X0[1] * T).epsilon(1e-9));
    CHECK(lifted[1] == doctest::Approx(X0[1]).epsilon(1e-9));
    CHECK(lifted[2] == doctest::Approx(X0[2] + X0[3] * T + 0.5 * c * T * T / m).epsilon(1e-9));
    CHECK(lifted[3] == doctest::Approx(X0[3] + c * T / m).epsilon(1e-9));

    // constant correction with phi == 0 leaves the y pair untouched
    ThrustSchedule flat{{T, T, T, T}, c, c};
    const RegState pushed = propagate(X0, flat, flat_ramp(), T, m);
    CHECK(pushed[0] == doctest::Approx(X0[0] + X0[1] * T).epsilon(1e-9));
    CHECK(pushed[3] == doctest::Approx(X0[3] + c * T / m).epsilon(1e-9));
    CHECK(pushed[2] == doctest::Approx(X0[2] + X0[3] * T + 0.5 * c * T * T / m).epsilon(1e-9));
}

TEST_CASE("propagate is insensitive to the candidate ordering and quadrature step") {
    const AttitudeRamp ramp{0.6, 2.0, 1.22};
    const double T = ramp.T_F();
    const RegState X0{0.1, 2.0, 1.0, -0.4};
    ThrustSchedule sorted_sched{{0.05, 0.12, 0.2, 0.28}, -3.4, 3.4};
    ThrustSchedule shuffled = sorted_sched;
    shuffled.switch_times = {0.2, 0.05, 0.28, 0.12};
    const RegState a = propagate(X0, sorted_sched, ramp, T, 1.0);
    const RegState b = propagate(X0, shuffled, ramp, T, 1.0);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    const RegState fine = propagate(X0, sorted_sched, ramp, T, 1.0, 0.5e-3);
    CHECK((a - fine).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("solver is exact when the target is reachable without correction") {
    const AttitudeRamp ramp{0.5, 2.0, 1.22};
    const double T = ramp.T_F();
    const RegState X0{0.0, 2.0, 1.0, 0.0};
    ThrustSchedule down{{T, T, T, T}, -3.0, 3.0};
    const RegState XT = propagate(X0, down, ramp, T, 1.0);

    const SolveOutcome out = solve_switching(X0, XT, RegWeights{}, -3.0, 3.0, ramp, T, 1.0);
    CHECK(out.J == 0.0);
    CHECK(out.J_down == 0.0);
    for (double t : out.sched.switch_times) {
        CHECK(t == doctest::Approx(T));
    }
}

TEST_CASE("solver recovers the required up-time on the one-axis toy") {
    const double T = 0.5, m = 1.0, f_ou = 4.0;
    const AttitudeRamp ramp = flat_ramp();
    const RegState X0{0.0, 0.0, 0.0, 0.0};
    const double rho = 0.37; // fraction of the horizon at full correction
    RegState XT = X0;
    XT[2] = 0.0 + 0.0;
    XT[3] = f_ou * rho * T / m;
    XT[2] = 0.5 * 0.0;
    // exact terminal position depends on placement; weight velocity only
    RegWeights w;
    w.gamma = Eigen::Vector4d(0.0, 0.0, 0.0, 1.0);

    const SolveOutcome out = solve_switching(X0, XT, w, 0.0, f_ou, ramp, T, m);
    const auto& ts = out.sched.switch_times;
    const double up_time = (ts[1] - ts[0]) + (ts[3] - ts[2]);
    CHECK(up_time == doctest::Approx(rho * T).epsilon(0.01));
    CHECK(out.J < 1e-8);
}

TEST_CASE("solver never loses to the constant baselines or zero correction") {
    for (int i = 0; i < 30; ++i) {
        const double phi0 = oracles::uni(91, i, 0, 0.3, 0.9);
        const double phi_s = oracles::uni(91, i, 1, 1.0, 1.3);
        const double T = oracles::uni(91, i, 2, 0.2, 0.6);
        const AttitudeRamp ramp{phi0, (phi_s - phi0) / T, phi_s};
        const double m = 1.0, f_ol = -3.4, f_ou = 3.4;
        RegState X0{oracles::uni(92, i, 0, -1.0, 1.0), oracles::uni(92, i, 1, 0.0, 4.0),
                    oracles::uni(92, i, 2, -1.0, 1.0), oracles::uni(92, i, 3, -1.0, 1.0)};
        // target: a random schedule's endpoint plus a small perturbation
        ThrustSchedule seed_sched{{oracles::uni(93, i, 0, 0.0, T), oracles::uni(93, i, 1, 0.0, T),
                                   oracles::uni(93, i, 2, 0.0, T), oracles::uni(93, i, 3, 0.0, T)},
                                  f_ol, f_ou};
        RegState XT = propagate(X0, seed_sched, ramp, T, m);
        for (int k = 0; k < 4; ++k) {
            XT[k] += oracles::uni(94, i, k, -0.05, 0.05);
        }

        const SolveOutcome out = solve_switching(X0, XT, RegWeights{}, f_ol, f_ou, ramp, T, m);
        CHECK(out.J <= out.J_down + 1e-12);
        CHECK(out.J <= out.J_up + 1e-12);

        // zero correction is representable in spirit: never do worse than it
        ThrustSchedule zero{{T, T, T, T}, 0.0, 0.0};
        const RegState drift = propagate(X0, zero, ramp, T, m);
        const RegState err = drift - XT;
        const double J0 = err.dot(RegWeights{}.gamma.asDiagonal() * err);
        CHECK(out.J <= J0 + 1e-9);
    }
}

TEST_CASE("thrust command follows the switching pattern") {
    ThrustSchedule sched{{0.1, 0.2, 0.3, 0.4}, -2.0, 2.0};
    const double f_p = 10.0;
    CHECK(thrust_command(sched, 0.05, f_p, 0.0, 100.0) == doctest::Approx(8.0));
    CHECK(thrust_command(sched, 0.15, f_p, 0.0, 100.0) == doctest::Approx(12.0));
    CHECK(thrust_command(sched, 0.25, f_p, 0.0, 100.0) == doctest::Approx(8.0));
    CHECK(thrust_command(sched, 0.35, f_p, 0.0, 100.0) == doctest::Approx(12.0));
    CHECK(thrust_command(sched, 0.45, f_p, 0.0, 100.0) == doctest::Approx(8.0));

    // collapsed first interval: low correction until the second pair
    ThrustSchedule collapsed{{0.1, 0.1, 0.3, 0.4}, -2.0, 2.0};
    CHECK(thrust_command(collapsed, 0.15, f_p, 0.0, 100.0) == doctest::Approx(8.0));
    CHECK(thrust_command(collapsed, 0.35, f_p, 0.0, 100.0) == doctest::Approx(12.0));

    // actuator clamp
    CHECK(thrust_command(sched, 0.15, f_p, 0.0, 11.0) == doctest::Approx(11.0));
    CHECK(thrust_command(sched, 0.05, f_p, 9.0, 100.0) == doctest::Approx(9.0));
}
