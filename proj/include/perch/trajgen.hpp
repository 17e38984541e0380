#pragma once

#include "perch/state_core.hpp"
#include "perch/target_model.hpp"
#include "perch/types.hpp"

#include <optional>
#include <vector>

namespace perch {

// One quintic polynomial per axis over [0, duration]. The unique degree-5
// polynomial through full (p, v, a) boundary states.
struct QuinticSegment {
    std::array<std::array<double, 6>, 3> coeffs{}; // [axis][power]
    double duration = 0.0;

    State9 state_at(double t) const;
    Vec3 jerk_at(double t) const;
};

// Piecewise quintic, C2-continuous at the knots by construction.
struct Trajectory {
    std::vector<QuinticSegment> segments;
    double t0 = 0.0; // planning epoch on the simulation clock [s]

    double total_duration() const;
    // Evaluated at trajectory-relative time, clamped into [0, total_duration].
    State9 state_at(double t) const;
    Vec3 jerk_at(double t) const;
};

enum class ViolationKind { none, velocity, acceleration, thrust, body_rate, position };

struct FeasReport {
    bool ok = true;
    ViolationKind kind = ViolationKind::none;
    double t = 0.0; // trajectory-relative time of the first violation
    explicit operator bool() const { return ok; }
};

// full: every bound. actuation_only: thrust magnitude and body rate only
// (the state bounds on velocity, acceleration and position are skipped).
enum class CheckScope { full, actuation_only };

// Unique quintic matching p, v, a at both ends. Throws std::invalid_argument
// for non-positive T.
QuinticSegment solve_bvp(const State9& x0, const State9& xT, double T);

inline constexpr double kFeasSampleStep = 0.01; // [s]
inline constexpr double kFeasTol = 1e-6;

FeasReport check_feasible(const Trajectory& traj, const ConstraintSet& c,
                          CheckScope scope = CheckScope::full, double dt_check = kFeasSampleStep);

// Chain of independent BVPs through full-state waypoints.
Trajectory piecewise_plan(const State9& xq0, const std::vector<State9>& waypoints,
                          const std::vector<double>& segment_times);

struct FindTimeOptions {
    double grid_step = 0.05;   // [s]
    double window = 1.0;       // half-width around the hint [s]
    double floor = 0.2;        // smallest admissible duration [s]
    int max_evals = 200;       // evaluation budget
};

// Smallest duration T on the grid around T_hint such that the direct BVP from
// xq0 to the terminal state of the predicted surface at T is feasible.
// Absence of a feasible time is a value, not an error.
std::optional<double> find_min_time(const SurfaceTrack& track, const State9& xq0,
                                    const PerchParams& params, const ConstraintSet& c,
                                    double T_hint, const FindTimeOptions& opts = {});

} // namespace perch
