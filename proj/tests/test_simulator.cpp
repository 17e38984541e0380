#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "perch/campaign.hpp"
#include "perch/simulator.hpp"
#include "perch/state_core.hpp"

#include <cmath>

using namespace perch;

namespace {

ScenarioConfig smoke_scenario() {
    ScenarioConfig cfg;
    cfg.target.position = Vec3(0.0, 0.0, 1.0);
    cfg.target.velocity = Vec3::Zero();
    cfg.noise.detection_halfwidth.setZero();
    cfg.noise.fluct_halfwidth.setZero();
    cfg.noise.wind_mean.setZero();
    cfg.noise.wind_std.setZero();
    cfg.perch.v_n = 1.05;
    cfg.constraints.v_max = 3.5;
    cfg.constraints.z_min = 0.0;
    cfg.sim.quad_start_offset = Vec3(0.0, -4.5, 0.8);
    cfg.sim.t_max = 10.0;
    cfg.planner.lodw_N = 2;
    cfg.planner.lodw_T = 0.3;
    cfg.planner.grid.range = {1.5, 3.0};
    cfg.planner.grid.height = {-0.2, 0.6};
    cfg.planner.grid.resolution = 0.5;
    cfg.planner.sampling = {25, 120};
    return cfg;
}

LodwTable smoke_table(const ScenarioConfig& cfg, uint64_t seed = 1) {
    const SurfaceState surf = cfg.initial_surface();
    const State9 anchor = terminal_from_surface(surf, cfg.perch);
    return seek_lodws(anchor, surf.Z_s, cfg.planner.lodw_N, cfg.planner.lodw_T, cfg.start_var(),
                      cfg.noise_spec(), cfg.planner.grid, cfg.constraints, seed,
                      cfg.planner.sampling);
}

} // namespace

TEST_CASE("plant equilibrium, tilt, and ballistic flight") {
    VehicleParams vp;
    const double g = 9.81;

    PlantState hover;
    hover.p_z = 1.0;
    const PlantState next = step_plant(hover, vp.mass * g, 0.0, vp, {0.0, 0.0}, 1e-3, g);
    CHECK(std::abs(next.v_y) < 1e-12);
    CHECK(std::abs(next.v_z) < 1e-12);
    CHECK(std::abs(next.p_z - 1.0) < 1e-12);

    PlantState tilted;
    tilted.phi = M_PI / 2.0;
    const PlantState after = step_plant(tilted, vp.mass * g, 0.0, vp, {0.0, 0.0}, 1e-3, g);
    CHECK(after.v_y == doctest::Approx(-g * 1e-3).epsilon(1e-9));
    CHECK(after.v_z == doctest::Approx(-g * 1e-3).epsilon(1e-9));

    // one second of free fall within integrator accuracy
    PlantState drop;
    drop.p_z = 10.0;
    for (int i = 0; i < 1000; ++i) {
        drop = step_plant(drop, 0.0, 0.0, vp, {0.0, 0.0}, 1e-3, g);
    }
    CHECK(std::abs(drop.v_z + g) < 1e-3);

    // energy drift bound during the same fall
    const double E0 = vp.mass * g * 10.0;
    const double E1 = vp.mass * (0.5 * drop.v_z * drop.v_z + g * drop.p_z);
    CHECK(std::abs(E1 - E0) / E0 < 1e-3);
}

TEST_CASE("two-stage control matches the flatness inversion and the schedule") {
    VehicleParams vp;
    const double g = 9.81;

    State9 x0;
    x0.p = Vec3(0.0, 0.0, 1.0);
    State9 xT;
    xT.p = Vec3(0.0, 2.0, 1.5);
    xT.v = Vec3(0.0, 1.0, 0.0);
    Trajectory traj = piecewise_plan(x0, {xT}, {1.5});

    // exactly on the trajectory: pure feedforward inversion
    const double tau = 0.6;
    const State9 ref = traj.state_at(tau);
    PlantState on;
    on.p_y = ref.p.y();
    on.p_z = ref.p.z();
    on.v_y = ref.v.y();
    on.v_z = ref.v.z();
    on.phi = std::atan2(-ref.a.y(), ref.a.z() + g);
    const ControlCommand cmd = two_stage_control(on, traj, tau, 1.0, nullptr, 0.0, vp, g);
    CHECK(cmd.f == doctest::Approx(vp.mass * std::hypot(ref.a.y(), ref.a.z() + g)).epsilon(1e-9));
    // zero attitude error leaves only the roll-rate feedforward term
    const Vec3 jerk = traj.jerk_at(tau);
    const double tz = ref.a.z() + g;
    const double rate_ff = (-jerk.y() * tz + ref.a.y() * jerk.z()) /
                           std::max(ref.a.y() * ref.a.y() + tz * tz, 1.0);
    CHECK(cmd.M ==
          doctest::Approx(vp.inertia * vp.att_kd * (rate_ff - on.phi_dot)).epsilon(1e-9));

    // stage 2 without regulation: exactly the planned thrust
    Stage2Setup s2;
    s2.has_ramp = true;
    s2.ramp = AttitudeRamp{on.phi, 1.5, 70.0 * M_PI / 180.0};
    const ControlCommand at = two_stage_control(on, traj, tau, 0.1, &s2, 0.05, vp, g);
    CHECK(at.f == doctest::Approx(planned_thrust(traj, tau, vp.mass, g)).epsilon(1e-12));

    // stage 2 with regulation inside an up interval
    s2.sched = ThrustSchedule{{0.0, 0.2, 0.5, 0.5}, -2.0, 2.0};
    const ControlCommand tr = two_stage_control(on, traj, tau, 0.1, &s2, 0.05, vp, g);
    CHECK(tr.f == doctest::Approx(planned_thrust(traj, tau, vp.mass, g) + 2.0).epsilon(1e-12));
}

TEST_CASE("static-target smoke trial succeeds and is bit-stable") {
    const ScenarioConfig cfg = smoke_scenario();
    const LodwTable table = smoke_table(cfg);

    const Arm arm = Arm::parse("OW+TR");
    const TrialRecord rec = run_trial(cfg, arm, 0, &table);
    INFO("outcome via impact: p_ry=", rec.impact.p_ry, " v_rtau=", rec.impact.v_rtau,
         " v_rn=", rec.impact.v_rn, " phi_err=", rec.impact.phi_err,
         " abort=", rec.abort_reason);
    CHECK(rec.outcome == TrialOutcome::success);
    CHECK(rec.any_feasible_solve);
    CHECK(rec.minT_f > 0.0);

    const TrialRecord again = run_trial(cfg, arm, 0, &table);
    CHECK(trial_to_json(rec).dump() == trial_to_json(again).dump());
}

TEST_CASE("stage-2 thrust without regulation equals the planned thrust samples") {
    ScenarioConfig cfg = smoke_scenario();
    const LodwTable table = smoke_table(cfg);
    const TrialRecord rec = run_trial(cfg, Arm::parse("OW"), 3, &table);
    REQUIRE(rec.stage2_entry >= 0.0);

    // reconstruct: between stage-2 entry and impact the command must track the
    // planned thrust of the trajectory frozen at entry
    int checked = 0;
    for (const auto& ts : rec.ticks) {
        if (ts.stage == 2) {
            ++checked;
        }
    }
    CHECK(checked >= 1);

    // direct invariant through the recorded series: stage-2 ticks carry the
    // planned thrust magnitude (the plan is frozen, so the series is smooth)
    // and never the regulation offsets
    for (size_t i = 1; i < rec.ticks.size(); ++i) {
        if (rec.ticks[i].stage == 2 && rec.ticks[i - 1].stage == 2) {
            CHECK(std::abs(rec.ticks[i].f_cmd - rec.ticks[i - 1].f_cmd) < 2.0);
        }
    }
}

TEST_CASE("regulation leaves everything before stage-2 entry untouched") {
    ScenarioConfig cfg = smoke_scenario();
    cfg.noise.detection_halfwidth = {0.05, 0.05};
    cfg.noise.fluct_halfwidth = {0.1, 0.05};
    const LodwTable table = smoke_table(cfg);

    const TrialRecord with_tr = run_trial(cfg, Arm::parse("OW+TR"), 11, &table);
    const TrialRecord without = run_trial(cfg, Arm::parse("OW"), 11, &table);
    REQUIRE(with_tr.stage2_entry >= 0.0);
    CHECK(with_tr.stage2_entry == without.stage2_entry);

    const size_t n = std::min(with_tr.ticks.size(), without.ticks.size());
    for (size_t i = 0; i < n; ++i) {
        if (with_tr.ticks[i].t >= with_tr.stage2_entry) {
            break;
        }
        CHECK(with_tr.ticks[i].p_y == without.ticks[i].p_y);
        CHECK(with_tr.ticks[i].p_z == without.ticks[i].p_z);
        CHECK(with_tr.ticks[i].v_y == without.ticks[i].v_y);
        CHECK(with_tr.ticks[i].f_cmd == without.ticks[i].f_cmd);
    }
    // identical environment stream
    REQUIRE(with_tr.detection_noise.size() >= 2);
    const size_t m = std::min(with_tr.detection_noise.size(), without.detection_noise.size());
    for (size_t i = 0; i < m; ++i) {
        CHECK(with_tr.detection_noise[i][0] == without.detection_noise[i][0]);
        CHECK(with_tr.detection_noise[i][1] == without.detection_noise[i][1]);
    }
}

TEST_CASE("impact kinematics are consistent with the recorded series") {
    ScenarioConfig cfg = smoke_scenario();
    const LodwTable table = smoke_table(cfg);
    const TrialRecord rec = run_trial(cfg, Arm::parse("OW"), 0, &table);
    REQUIRE(rec.impact.impacted);

    const SurfaceState surf = cfg.initial_surface();
    // last tick before impact: velocities should be within one control period
    // of the recorded impact values
    const TickSample* last = nullptr;
    for (const auto& ts : rec.ticks) {
        if (ts.t <= rec.impact.t) {
            last = &ts;
        }
    }
    REQUIRE(last != nullptr);
    const Eigen::Vector2d v_rel{last->v_y - surf.v_s.y(), last->v_z - surf.v_s.z()};
    const double v_rn = v_rel[0] * surf.Z_s.y() + v_rel[1] * surf.Z_s.z();
    const double v_rtau = v_rel[0] * surf.Y_s.y() + v_rel[1] * surf.Y_s.z();
    CHECK(std::abs(v_rn - rec.impact.v_rn) < 0.5);
    CHECK(std::abs(v_rtau - rec.impact.v_rtau) < 0.5);
    CHECK(rec.impact.phi_err ==
          doctest::Approx(rec.impact.phi_c - surf.inclination()).epsilon(1e-12));
}

TEST_CASE("TE baseline runs without a table and both arms record solves") {
    ScenarioConfig cfg = smoke_scenario();
    const TrialRecord te = run_trial(cfg, Arm::parse("TE"), 0, nullptr);
    CHECK(te.any_feasible_solve);
    CHECK(te.impact.impacted);

    CHECK_THROWS_AS(run_trial(cfg, Arm::parse("OW"), 0, nullptr), ConfigError);
}

TEST_CASE("arm parsing") {
    CHECK(Arm::parse("OW+TR").regulation);
    CHECK(Arm::parse("OW+TR").planner == PlannerKind::OW);
    CHECK_FALSE(Arm::parse("OW").regulation);
    CHECK_FALSE(Arm::parse("OW+AT").regulation);
    CHECK(Arm::parse("TE+AT").planner == PlannerKind::TE);
    CHECK_THROWS_AS(Arm::parse("XX"), ConfigError);
    CHECK_THROWS_AS(Arm::parse("TE+TR"), ConfigError);
    CHECK(Arm::parse("OW+TR").name() == "OW+TR");
}
