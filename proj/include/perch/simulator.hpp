#pragma once

#include "perch/config.hpp"
#include "perch/replanner.hpp"
#include "perch/thrust_reg.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace perch {

// Sagittal-plane rigid body: position/velocity in Y-Z plus roll.
struct PlantState {
    double p_y = 0.0, p_z = 0.0; // [m]
    double v_y = 0.0, v_z = 0.0; // [m/s]
    double phi = 0.0;            // roll [rad]
    double phi_dot = 0.0;        // [rad/s]
};

struct ControlCommand {
    double f = 0.0; // total thrust [N]
    double M = 0.0; // roll moment [N m]
};

// Semi-implicit Euler step of
//   a_y = -(f/m) sin phi + w_y,  a_z = (f/m) cos phi - g + w_z,  phi'' = M / J
// with f and M clamped to the actuator limits.
PlantState step_plant(const PlantState& x, double f, double M, const VehicleParams& vp,
                      const Eigen::Vector2d& wind_accel, double dt, double g);

// Attitude-tracking phase fixed at stage-2 entry.
struct Stage2Setup {
    double entry_time = 0.0;  // simulation clock [s]
    double plan_offset = 0.0; // plan-relative time at entry [s]
    bool has_ramp = false;
    AttitudeRamp ramp;
    std::optional<ThrustSchedule> sched; // present when regulation is on
};

// Two-stage tracking: position-velocity PD with feedforward (mapped through
// the flatness inversion) while T_f_remaining >= T_eps; afterwards the
// attitude ramp with either the planned thrust alone or the regulated total.
// plan_tau is the plan-relative evaluation time; stage2 is null in stage 1.
ControlCommand two_stage_control(const PlantState& x, const Trajectory& traj, double plan_tau,
                                 double T_f_remaining, const Stage2Setup* stage2,
                                 double t_since_entry, const VehicleParams& vp, double g,
                                 double hold_dt = 0.0);

enum class PlannerKind { OW, TE };

struct Arm {
    PlannerKind planner = PlannerKind::OW;
    bool regulation = false;

    // "OW+TR", "OW", "OW+AT", "TE", "TE+AT"
    static Arm parse(const std::string& name);
    std::string name() const;
    bool needs_table() const { return planner == PlannerKind::OW; }
};

enum class TrialOutcome { success, fail, no_impact };

struct SolveEvent {
    double t = 0.0;    // simulation clock [s]
    double T_f = 0.0;  // solved duration [s]
    double dist = 0.0; // vehicle-to-surface distance at solve time [m]
};

struct TickSample {
    double t = 0.0;
    double p_y = 0.0, p_z = 0.0, v_y = 0.0, v_z = 0.0, phi = 0.0, phi_dot = 0.0;
    double f_cmd = 0.0, M_cmd = 0.0;
    int stage = 1;
    int branch = 0; // 0 none/main, 1 complementary
    double plan_Tf_rem = 0.0;
};

struct ImpactInfo {
    bool impacted = false;
    double t = 0.0;
    double p_ry = 0.0;
    double v_rtau = 0.0;
    double v_rn = 0.0;
    double phi_c = 0.0;
    double phi_err = 0.0;
};

struct RegSolveInfo {
    bool solved = false;
    double J = 0.0, J_down = 0.0, J_up = 0.0;
    std::array<double, 4> switch_times{};
    uint64_t instance_hash = 0;
    // diagnostics: transformed start/target, predicted terminal, horizon,
    // the desired physical terminal, and the realized state at entry + T_F
    std::array<double, 4> X0{}, XT{}, Xpred{};
    double T_F = 0.0;
    std::array<double, 4> desired_phys{};
    std::array<double, 4> actual_phys{};
    bool actual_recorded = false;
};

struct TrialRecord {
    std::string arm;
    uint64_t seed = 0;
    TrialOutcome outcome = TrialOutcome::no_impact;
    ImpactInfo impact;
    bool any_feasible_solve = false;
    double minT_f = 0.0;  // smallest solved feasible duration
    double minDis = 0.0;  // distance at the last feasible solve
    std::vector<SolveEvent> solves;
    std::vector<PlanRecord> plan_records; // one per planning tick
    std::vector<TickSample> ticks;
    std::vector<std::array<double, 2>> detection_noise; // per tick (y, z)
    RegSolveInfo reg;
    double stage2_entry = -1.0;
    double t_end = 0.0;
    std::string abort_reason; // set when the trial ended without a plan
};

TrialRecord run_trial(const ScenarioConfig& cfg, const Arm& arm, uint64_t seed,
                      const LodwTable* table);

nlohmann::json trial_to_json(const TrialRecord& rec);
void write_trial_csv(const TrialRecord& rec, const std::string& path);
// per-tick plan records as JSON-lines (timestamp, branch, T_f, k, terminal)
void write_plan_records_jsonl(const TrialRecord& rec, const std::string& path);
// switching-time solve record as JSON-lines (instance hash, baselines, times)
void write_reg_records_jsonl(const TrialRecord& rec, const std::string& path);

} // namespace perch
