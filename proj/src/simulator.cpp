#include "perch/simulator.hpp"

#include "perch/rng.hpp"
#include "perch/state_core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace perch {

namespace {
constexpr uint64_t kStreamDetection = 1;
constexpr uint64_t kStreamFluct = 2;
constexpr uint64_t kStreamWind = 3;
} // namespace

PlantState step_plant(const PlantState& x, double f, double M, const VehicleParams& vp,
                      const Eigen::Vector2d& wind_accel, double dt, double g) {
    f = std::clamp(f, vp.f_limits[0], vp.f_limits[1]);
    M = std::clamp(M, -vp.M_limit, vp.M_limit);
    const double a_y = -(f / vp.mass) * std::sin(x.phi) + wind_accel[0];
    const double a_z = (f / vp.mass) * std::cos(x.phi) - g + wind_accel[1];
    PlantState n = x;
    n.v_y += a_y * dt;
    n.v_z += a_z * dt;
    n.p_y += n.v_y * dt;
    n.p_z += n.v_z * dt;
    n.phi_dot += (M / vp.inertia) * dt;
    n.phi += n.phi_dot * dt;
    return n;
}

ControlCommand two_stage_control(const PlantState& x, const Trajectory& traj, double plan_tau,
                                 double T_f_remaining, const Stage2Setup* stage2,
                                 double t_since_entry, const VehicleParams& vp, double g,
                                 double hold_dt) {
    if (T_f_remaining >= vp.T_eps || stage2 == nullptr) {
        const State9 ref = traj.state_at(plan_tau);
        const double fb_cap = 8.0; // feedback acceleration authority [m/s^2]
        const double fb_y = std::clamp(
            vp.pos_kp * (ref.p.y() - x.p_y) + vp.pos_kd * (ref.v.y() - x.v_y), -fb_cap, fb_cap);
        const double fb_z = std::clamp(
            vp.pos_kp * (ref.p.z() - x.p_z) + vp.pos_kd * (ref.v.z() - x.v_z), -fb_cap, fb_cap);
        const double a_cy = ref.a.y() + fb_y;
        // keep the commanded thrust vector pointing up so the flatness
        // inversion cannot flip the attitude reference past 90 degrees
        const double tz = std::max(1.0, ref.a.z() + fb_z + g);
        const double f = vp.mass * std::hypot(a_cy, tz);
        const double phi_ref = std::atan2(-a_cy, tz);
        // flat roll-rate feedforward from the planned jerk
        const Vec3 jerk = traj.jerk_at(plan_tau);
        const double denom = ref.a.y() * ref.a.y() + tz * tz;
        const double phi_dot_ff =
            (-jerk.y() * tz + ref.a.y() * jerk.z()) / std::max(denom, 1.0);
        const double M = vp.inertia * (vp.att_kp * (phi_ref - x.phi) +
                                       vp.att_kd * (phi_dot_ff - x.phi_dot));
        return {f, M};
    }

    const double f_p = planned_thrust(traj, plan_tau, vp.mass, g);
    double phi_ref = stage2->ramp.phi_s;
    double phi_dot_ff = 0.0;
    double f = f_p;
    if (stage2->has_ramp) {
        const double raw = stage2->ramp.phi(t_since_entry);
        const bool ramping = (stage2->ramp.omega_bar > 0.0) ? raw < stage2->ramp.phi_s
                                                            : raw > stage2->ramp.phi_s;
        phi_ref = ramping ? raw : stage2->ramp.phi_s;
        phi_dot_ff = ramping ? stage2->ramp.omega_bar : 0.0;
        if (stage2->sched) {
            f = thrust_command(*stage2->sched, t_since_entry, f_p, vp.f_limits[0],
                               vp.f_limits[1], hold_dt);
        }
    }
    const double M =
        vp.inertia * (vp.att_kp * (phi_ref - x.phi) + vp.att_kd * (phi_dot_ff - x.phi_dot));
    return {f, M};
}

Arm Arm::parse(const std::string& name) {
    Arm arm;
    std::string base = name;
    bool at = false;
    if (auto pos = base.find('+'); pos != std::string::npos) {
        const std::string mod = base.substr(pos + 1);
        base = base.substr(0, pos);
        if (mod == "TR") {
            arm.regulation = true;
        } else if (mod == "AT") {
            at = true;
        } else {
            throw ConfigError("unknown arm modifier: " + name);
        }
    }
    if (base == "OW") {
        arm.planner = PlannerKind::OW;
    } else if (base == "TE") {
        arm.planner = PlannerKind::TE;
        if (arm.regulation) {
            throw ConfigError("TE arm has no thrust regulation variant: " + name);
        }
    } else {
        throw ConfigError("unknown arm: " + name);
    }
    (void)at; // "+AT" is the explicit no-regulation label
    return arm;
}

std::string Arm::name() const {
    std::string n = planner == PlannerKind::OW ? "OW" : "TE";
    if (regulation) {
        n += "+TR";
    }
    return n;
}

namespace {

struct Sagittal {
    Eigen::Vector2d Z; // outward normal (y, z)
    Eigen::Vector2d Y; // up-slope tangent (y, z)
};

// Replan start state: measured position/velocity, acceleration from the flat
// reference (the plan being tracked) so consecutive plans chain smoothly.
State9 plant_to_state9(const PlantState& x, const Trajectory* plan, double plan_tau) {
    State9 s;
    s.p = Vec3(0.0, x.p_y, x.p_z);
    s.v = Vec3(0.0, x.v_y, x.v_z);
    s.a = (plan != nullptr) ? plan->state_at(plan_tau).a : Vec3::Zero();
    return s;
}

} // namespace

TrialRecord run_trial(const ScenarioConfig& cfg, const Arm& arm, uint64_t seed,
                      const LodwTable* table) {
    if (arm.needs_table() && (table == nullptr || table->waypoints.size() < 2)) {
        throw ConfigError("OW arm requires an LODW table");
    }

    const double dt = cfg.sim.dt_physics;
    const double g = cfg.perch.g;
    const int steps_per_tick = std::max(1, static_cast<int>(std::round(1.0 / (cfg.sim.control_hz * dt))));
    const int max_steps = static_cast<int>(std::ceil(cfg.sim.t_max / dt));

    const SurfaceState surf0 = cfg.initial_surface();
    const double phi_s = surf0.inclination();
    const Sagittal sag{{surf0.Z_s.y(), surf0.Z_s.z()}, {surf0.Y_s.y(), surf0.Y_s.z()}};

    PlantState plant;
    plant.p_y = surf0.p_s.y() + cfg.sim.quad_start_offset.y();
    plant.p_z = surf0.p_s.z() + cfg.sim.quad_start_offset.z();
    if (cfg.sim.start_following) {
        const Vec3 v0 = cfg.target.nominal_velocity(0.0);
        plant.v_y = v0.y();
        plant.v_z = v0.z();
    }

    Eigen::Vector2d p_s_true{surf0.p_s.y(), surf0.p_s.z()};
    auto v_nom_at = [&cfg](double tt) {
        const Vec3 v = cfg.target.nominal_velocity(tt);
        return Eigen::Vector2d{v.y(), v.z()};
    };
    Eigen::Vector2d fluct = Eigen::Vector2d::Zero();

    TrialRecord rec;
    rec.arm = arm.name();
    rec.seed = seed;

    // OW planner state
    PlanContext ctx;
    if (table != nullptr) {
        ctx.table = *table;
    }
    // TE planner state
    Trajectory te_traj;
    bool te_has = false;

    Trajectory cur;        // trajectory currently tracked
    bool has_cur = false;
    int cur_branch = 0;

    int stage = 1;
    Stage2Setup s2;
    ControlCommand held{cfg.vehicle.mass * g, 0.0};

    const NoiseSpec nspec = cfg.noise_spec();
    auto distance_to_target = [&]() {
        return std::hypot(plant.p_y - p_s_true[0], plant.p_z - p_s_true[1]);
    };

    for (int step = 0; step <= max_steps; ++step) {
        const double t = step * dt;

        if (step % steps_per_tick == 0) {
            const uint64_t tick = static_cast<uint64_t>(step / steps_per_tick);
            fluct[0] = rng::uniform(seed, kStreamFluct, tick * 2, -cfg.noise.fluct_halfwidth[0],
                                    cfg.noise.fluct_halfwidth[0]);
            fluct[1] = rng::uniform(seed, kStreamFluct, tick * 2 + 1,
                                    -cfg.noise.fluct_halfwidth[1], cfg.noise.fluct_halfwidth[1]);
            const std::array<double, 2> dn = {
                rng::uniform(seed, kStreamDetection, tick * 2, -cfg.noise.detection_halfwidth[0],
                             cfg.noise.detection_halfwidth[0]),
                rng::uniform(seed, kStreamDetection, tick * 2 + 1,
                             -cfg.noise.detection_halfwidth[1], cfg.noise.detection_halfwidth[1])};
            rec.detection_noise.push_back(dn);

            const Eigen::Vector2d v_nom_now = v_nom_at(t);
            SurfaceState s_det = surf0;
            s_det.p_s = Vec3(0.0, p_s_true[0] + dn[0], p_s_true[1] + dn[1]);
            s_det.v_s = Vec3(0.0, v_nom_now[0] + fluct[0], v_nom_now[1] + fluct[1]);
            const SurfaceTrack track{s_det, nspec};

            if (stage == 1) {
                const State9 xq0 =
                    plant_to_state9(plant, has_cur ? &cur : nullptr, t - cur.t0);
                bool feasible = false;
                double solved_Tf = 0.0;
                if (arm.planner == PlannerKind::OW) {
                    if (ctx.has_plan) {
                        ctx.elapsed = t - ctx.last_traj.t0;
                    }
                    FindTimeOptions ft;
                    ft.window = cfg.planner.ft_window;
                    try {
                        ReplanResult res = replan(ctx, track, xq0, cfg.perch, cfg.constraints,
                                                  cfg.planner.weights, t, ft);
                        cur = res.traj;
                        has_cur = true;
                        cur_branch = res.record.branch == PlanBranch::complementary ? 1 : 0;
                        feasible = res.record.feasible_solve;
                        solved_Tf = res.record.T_f;
                        rec.plan_records.push_back(res.record);
                    } catch (const NoPlanError& e) {
                        rec.abort_reason = e.what();
                        rec.t_end = t;
                        rec.outcome = TrialOutcome::no_impact;
                        break;
                    }
                } else {
                    FindTimeOptions opts;
                    opts.window = cfg.planner.ft_window;
                    double hint;
                    if (te_has) {
                        hint = std::max(opts.floor,
                                        te_traj.t0 + te_traj.total_duration() - t);
                    } else {
                        hint = std::max(1.0, distance_to_target() /
                                                 std::max(1.0, 0.5 * cfg.constraints.v_max));
                        opts.window = std::max(opts.window, 3.0);
                    }
                    const auto T = find_min_time(track, xq0, cfg.perch, cfg.constraints, hint,
                                                 opts);
                    if (T) {
                        const State9 xT =
                            terminal_from_surface(predict(track, *T), cfg.perch);
                        te_traj = Trajectory{};
                        te_traj.segments.push_back(solve_bvp(xq0, xT, *T));
                        te_traj.t0 = t;
                        te_has = true;
                        feasible = true;
                        solved_Tf = *T;
                        cur = te_traj;
                        has_cur = true;
                        cur_branch = 0;
                        rec.plan_records.push_back(
                            {t, PlanBranch::main, *T, 0, xT, true});
                    } else if (!te_has) {
                        rec.abort_reason = "no feasible first plan";
                        rec.t_end = t;
                        rec.outcome = TrialOutcome::no_impact;
                        break;
                    }
                }
                if (feasible) {
                    rec.solves.push_back({t, solved_Tf, distance_to_target()});
                }

                const double T_f_rem = cur.t0 + cur.total_duration() - t;
                if (T_f_rem < cfg.vehicle.T_eps) {
                    stage = 2;
                    s2.entry_time = t;
                    s2.plan_offset = t - cur.t0;
                    rec.stage2_entry = t;
                    // alignment deadline: the first plan instant whose centroid
                    // is within l of the predicted surface plane (contact
                    // precedes the plan terminal, which sits l past the plane)
                    double t_contact = std::max(T_f_rem, 1e-3);
                    for (double tau = 0.0; tau <= T_f_rem; tau += 0.005) {
                        const State9 ref_tau = cur.state_at(s2.plan_offset + tau);
                        const SurfaceState s_tau = predict(track, tau);
                        const Eigen::Vector2d rel_tau{ref_tau.p.y() - s_tau.p_s.y(),
                                                      ref_tau.p.z() - s_tau.p_s.z()};
                        if (rel_tau.dot(sag.Z) <= cfg.vehicle.l) {
                            t_contact = std::max(tau, 1e-3);
                            break;
                        }
                    }
                    const double omega_bar = (phi_s - plant.phi) / std::max(t_contact, 0.05);
                    s2.ramp.phi0 = plant.phi;
                    s2.ramp.omega_bar = omega_bar;
                    s2.ramp.phi_s = phi_s;
                    const double T_F =
                        (std::abs(omega_bar) > 1e-6) ? (phi_s - plant.phi) / omega_bar : -1.0;
                    s2.has_ramp = T_F > 1e-3;
                    if (s2.has_ramp && arm.regulation) {
                        const Eigen::Vector4d xq4{plant.p_y, plant.v_y, plant.p_z, plant.v_z};
                        const Trajectory plan_at_entry = cur;
                        const double offset = s2.plan_offset;
                        const double mass = cfg.vehicle.mass;
                        const FpSampler fp = [plan_at_entry, offset, mass, g](double tt) {
                            return planned_thrust(plan_at_entry, offset + tt, mass, g);
                        };
                        const RegProblem prob = make_reg_problem(xq4, s2.ramp, fp, track,
                                                                 cfg.perch, mass, g);
                        const SolveOutcome out =
                            solve_switching(prob.X0, prob.XT, cfg.reg_weights, cfg.f_ol(),
                                            cfg.f_ou(), s2.ramp, prob.T_F, mass);
                        s2.sched = out.sched;
                        rec.reg.solved = true;
                        rec.reg.J = out.J;
                        rec.reg.J_down = out.J_down;
                        rec.reg.J_up = out.J_up;
                        rec.reg.switch_times = out.sched.switch_times;
                        rec.reg.instance_hash = out.instance_hash;
                        for (int d = 0; d < 4; ++d) {
                            rec.reg.X0[d] = prob.X0[d];
                            rec.reg.XT[d] = prob.XT[d];
                        }
                        const RegState xp =
                            propagate(prob.X0, out.sched, s2.ramp, prob.T_F, mass);
                        for (int d = 0; d < 4; ++d) {
                            rec.reg.Xpred[d] = xp[d];
                        }
                        rec.reg.T_F = prob.T_F;
                        const State9 want =
                            terminal_from_surface(predict(track, prob.T_F), cfg.perch);
                        rec.reg.desired_phys = {want.p.y(), want.v.y(), want.p.z(),
                                                want.v.z()};
                    }
                }
            }

            // stage 1 tracks the reference one control period ahead (the
            // command is held over the upcoming interval)
            const double lookahead = 1.0 / cfg.sim.control_hz;
            const double plan_tau = t - cur.t0 + (stage == 1 ? lookahead : 0.0);
            const double T_f_rem = cur.t0 + cur.total_duration() - t;
            held = two_stage_control(plant, cur, plan_tau, stage == 1 ? T_f_rem : -1.0,
                                     stage == 2 ? &s2 : nullptr, t - s2.entry_time, cfg.vehicle,
                                     g, lookahead);

            TickSample ts;
            ts.t = t;
            ts.p_y = plant.p_y;
            ts.p_z = plant.p_z;
            ts.v_y = plant.v_y;
            ts.v_z = plant.v_z;
            ts.phi = plant.phi;
            ts.phi_dot = plant.phi_dot;
            ts.f_cmd = held.f;
            ts.M_cmd = held.M;
            ts.stage = stage;
            ts.branch = cur_branch;
            ts.plan_Tf_rem = T_f_rem;
            rec.ticks.push_back(ts);
        }

        if (step == max_steps) {
            rec.t_end = t;
            rec.outcome = TrialOutcome::no_impact;
            break;
        }

        if (stage == 2 && rec.reg.solved && !rec.reg.actual_recorded &&
            t >= s2.entry_time + rec.reg.T_F) {
            rec.reg.actual_phys = {plant.p_y, plant.v_y, plant.p_z, plant.v_z};
            rec.reg.actual_recorded = true;
        }

        const Eigen::Vector2d wind{
            cfg.noise.wind_mean[0] +
                cfg.noise.wind_std[0] *
                    rng::normal01(seed, kStreamWind, static_cast<uint64_t>(step) * 2),
            cfg.noise.wind_mean[1] +
                cfg.noise.wind_std[1] *
                    rng::normal01(seed, kStreamWind, static_cast<uint64_t>(step) * 2 + 1)};
        plant = step_plant(plant, held.f, held.M, cfg.vehicle, wind, dt, g);
        p_s_true += (v_nom_at(t) + fluct) * dt;

        const double bottom_y = plant.p_y + cfg.vehicle.l * std::sin(plant.phi);
        const double bottom_z = plant.p_z - cfg.vehicle.l * std::cos(plant.phi);
        const Eigen::Vector2d rel{bottom_y - p_s_true[0], bottom_z - p_s_true[1]};
        const double d_n = rel.dot(sag.Z);
        const double d_tau = rel.dot(sag.Y);
        const double t_next = (step + 1) * dt;

        if (d_n <= 0.0) {
            rec.t_end = t_next;
            if (std::abs(d_tau) <= cfg.target.capture_band) {
                const Eigen::Vector2d v_s_now = v_nom_at(t_next) + fluct;
                const Eigen::Vector2d v_rel{plant.v_y - v_s_now[0],
                                            plant.v_z - v_s_now[1]};
                rec.impact.impacted = true;
                rec.impact.t = t_next;
                rec.impact.p_ry = d_tau;
                rec.impact.v_rtau = v_rel.dot(sag.Y);
                rec.impact.v_rn = v_rel.dot(sag.Z);
                rec.impact.phi_c = plant.phi;
                rec.impact.phi_err = plant.phi - phi_s;
                rec.outcome = classify_impact(rec.impact.p_ry, rec.impact.v_rtau,
                                              rec.impact.v_rn, rec.impact.phi_c, phi_s,
                                              cfg.success)
                                  ? TrialOutcome::success
                                  : TrialOutcome::fail;
            } else {
                rec.outcome = TrialOutcome::no_impact; // crossed the plane off the surface
            }
            break;
        }
        if (bottom_z <= 0.0) {
            rec.t_end = t_next;
            rec.outcome = TrialOutcome::no_impact; // ground contact
            break;
        }
    }

    rec.any_feasible_solve = !rec.solves.empty();
    if (rec.any_feasible_solve) {
        double min_tf = rec.solves.front().T_f;
        for (const auto& s : rec.solves) {
            min_tf = std::min(min_tf, s.T_f);
        }
        rec.minT_f = min_tf;
        rec.minDis = rec.solves.back().dist;
    }
    return rec;
}

nlohmann::json trial_to_json(const TrialRecord& rec) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["arm"] = rec.arm;
    j["seed"] = rec.seed;
    switch (rec.outcome) {
    case TrialOutcome::success: j["outcome"] = "success"; break;
    case TrialOutcome::fail: j["outcome"] = "fail"; break;
    case TrialOutcome::no_impact: j["outcome"] = "no-impact"; break;
    }
    j["impact"] = {{"impacted", rec.impact.impacted}, {"t", rec.impact.t},
                   {"p_ry", rec.impact.p_ry},         {"v_rtau", rec.impact.v_rtau},
                   {"v_rn", rec.impact.v_rn},         {"phi_c", rec.impact.phi_c},
                   {"phi_err", rec.impact.phi_err}};
    j["any_feasible_solve"] = rec.any_feasible_solve;
    j["minT_f"] = rec.minT_f;
    j["minDis"] = rec.minDis;
    j["stage2_entry"] = rec.stage2_entry;
    j["t_end"] = rec.t_end;
    j["abort_reason"] = rec.abort_reason;
    j["reg"] = {{"solved", rec.reg.solved},
                {"J", rec.reg.J},
                {"J_down", rec.reg.J_down},
                {"J_up", rec.reg.J_up},
                {"switch_times", rec.reg.switch_times},
                {"instance_hash", rec.reg.instance_hash},
                {"X0", rec.reg.X0},
                {"XT", rec.reg.XT},
                {"Xpred", rec.reg.Xpred},
                {"T_F", rec.reg.T_F},
                {"desired_phys", rec.reg.desired_phys},
                {"actual_phys", rec.reg.actual_phys},
                {"actual_recorded", rec.reg.actual_recorded}};
    j["solves"] = nlohmann::json::array();
    for (const auto& s : rec.solves) {
        j["solves"].push_back({{"t", s.t}, {"T_f", s.T_f}, {"dist", s.dist}});
    }
    j["detection_noise"] = rec.detection_noise;
    j["ticks"] = nlohmann::json::array();
    for (const auto& ts : rec.ticks) {
        j["ticks"].push_back({{"t", ts.t},
                              {"p_y", ts.p_y},
                              {"p_z", ts.p_z},
                              {"v_y", ts.v_y},
                              {"v_z", ts.v_z},
                              {"phi", ts.phi},
                              {"phi_dot", ts.phi_dot},
                              {"f_cmd", ts.f_cmd},
                              {"M_cmd", ts.M_cmd},
                              {"stage", ts.stage},
                              {"branch", ts.branch},
                              {"plan_Tf_rem", ts.plan_Tf_rem}});
    }
    return j;
}

void write_plan_records_jsonl(const TrialRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write plan records: " + path);
    }
    for (const auto& pr : rec.plan_records) {
        nlohmann::json j{{"t", pr.timestamp},
                         {"branch", pr.branch == PlanBranch::main ? "main" : "complementary"},
                         {"T_f", pr.T_f},
                         {"k", pr.k},
                         {"terminal",
                          {{"p", {pr.terminal.p.x(), pr.terminal.p.y(), pr.terminal.p.z()}},
                           {"v", {pr.terminal.v.x(), pr.terminal.v.y(), pr.terminal.v.z()}},
                           {"a", {pr.terminal.a.x(), pr.terminal.a.y(), pr.terminal.a.z()}}}},
                         {"feasible_solve", pr.feasible_solve}};
        out << j.dump() << "\n";
    }
}

void write_reg_records_jsonl(const TrialRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write regulation records: " + path);
    }
    if (rec.reg.solved) {
        nlohmann::json j{{"instance_hash", rec.reg.instance_hash},
                         {"J", rec.reg.J},
                         {"J_down", rec.reg.J_down},
                         {"J_up", rec.reg.J_up},
                         {"switch_times", rec.reg.switch_times},
                         {"T_F", rec.reg.T_F}};
        out << j.dump() << "\n";
    }
}

void write_trial_csv(const TrialRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write trial csv: " + path);
    }
    out << "t,p_y,p_z,v_y,v_z,phi,phi_dot,f_cmd,M_cmd,stage,branch,plan_Tf_rem\n";
    out.precision(17);
    for (const auto& ts : rec.ticks) {
        out << ts.t << ',' << ts.p_y << ',' << ts.p_z << ',' << ts.v_y << ',' << ts.v_z << ','
            << ts.phi << ',' << ts.phi_dot << ',' << ts.f_cmd << ',' << ts.M_cmd << ','
            << ts.stage << ',' << ts.branch << ',' << ts.plan_Tf_rem << '\n';
    }
}

} // namespace perch
