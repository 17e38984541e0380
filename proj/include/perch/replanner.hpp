#pragma once

#include "perch/lodw.hpp"
#include "perch/reachability.hpp"
#include "perch/target_model.hpp"
#include "perch/trajgen.hpp"
#include "perch/types.hpp"

#include <vector>

namespace perch {

// Rolling planner state for one vehicle. `elapsed` is the time flown on
// `last_traj` since it was solved.
struct PlanContext {
    Trajectory last_traj;
    double last_Tf = 0.0;
    double elapsed = 0.0;
    LodwTable table;
    bool has_plan = false;
};

// Sigmoid schedule for the virtual-terminal weighting: the terminal error
// dominates only once little time remains, so a fallback plan far from
// contact stays glued to the vehicle instead of teleporting its start point.
struct WeightSchedule {
    double k_T = 6.0; // [1/s]
    double T_o = 0.6; // [s]
};

enum class PlanBranch { main, complementary };

struct PlanRecord {
    double timestamp = 0.0;
    PlanBranch branch = PlanBranch::main;
    double T_f = 0.0;
    int k = 0;
    State9 terminal;
    bool feasible_solve = false; // a fresh feasible duration was found this tick
};

struct ReplanResult {
    Trajectory traj;
    PlanRecord record;
};

// Waypoints of the table translated to a new terminal: index i shifts by the
// backward flow of (xT_new - anchor) over i*horizon; index 0 becomes xT_new.
std::vector<State9> transform_table(const LodwTable& table, const State9& xT_new);

// Index of the nearest waypoint ahead of the vehicle: walking the chain from
// the deepest end toward the terminal, the first index i whose segment
// direction opposes the vehicle->waypoint vector selects i-1; if the vehicle
// is behind every waypoint the deepest index N is returned.
int forward_nearest(const State9& xq0, const std::vector<State9>& transformed);

// Terminal-error weight in (0, 1): close to one when little time remains,
// close to zero for long horizons (their terminal prediction is unreliable).
double sigmoid_weight(double T_f, const WeightSchedule& w);

// Fallback when no fresh feasible duration exists: shifts the tail of the
// last trajectory toward a virtual terminal chosen by the weighted quadratic
// trade-off between terminal error and start error. The returned trajectory
// has exactly the jerk profile of the tail it was built from.
Trajectory complementary_plan(const PlanContext& ctx, const State9& xT_star, const State9& xq0,
                              const WeightSchedule& weights);

// One planning tick: fresh feasible duration -> piecewise plan through the
// transformed waypoints; otherwise the complementary plan. Updates ctx.
// Throws NoPlanError when neither branch can produce a trajectory.
ReplanResult replan(PlanContext& ctx, const SurfaceTrack& track, const State9& xq0,
                    const PerchParams& params, const ConstraintSet& c,
                    const WeightSchedule& weights, double now,
                    const FindTimeOptions& ft_opts = {});

} // namespace perch
