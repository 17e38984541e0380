#pragma once

#include "perch/target_model.hpp"
#include "perch/trajgen.hpp"
#include "perch/types.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <functional>

namespace perch {

// Linear attitude ramp commanded during terminal alignment: phi(t) = phi0 +
// omega_bar * t, reaching the surface inclination phi_s at T_F.
struct AttitudeRamp {
    double phi0 = 0.0;      // current roll [rad]
    double omega_bar = 1.0; // average planned roll rate [rad/s], nonzero
    double phi_s = 0.0;     // surface inclination [rad]

    double T_F() const { return (phi_s - phi0) / omega_bar; }
    double phi(double t) const { return phi0 + omega_bar * t; }
};

// Bang-bang thrust-correction profile over [0, T_F]: f_ol by default, f_ou on
// [t1, t2) and [t3, t4). The pattern depends only on the sorted times.
struct ThrustSchedule {
    std::array<double, 4> switch_times{};
    double f_ol = 0.0; // [N]
    double f_ou = 0.0; // [N]

    double f_o(double t) const {
        auto s = switch_times;
        std::sort(s.begin(), s.end());
        const bool up = (t >= s[0] && t < s[1]) || (t >= s[2] && t < s[3]);
        return up ? f_ou : f_ol;
    }

    // Mean of f_o over [t0, t0 + dt): impulse-preserving value for a
    // zero-order-hold controller whose period straddles switch times.
    double f_o_mean(double t0, double dt) const {
        if (dt <= 0.0) {
            return f_o(t0);
        }
        auto s = switch_times;
        std::sort(s.begin(), s.end());
        const double t1 = t0 + dt;
        const double up_time = std::max(0.0, std::min(s[1], t1) - std::max(s[0], t0)) +
                               std::max(0.0, std::min(s[3], t1) - std::max(s[2], t0));
        return f_ol + (f_ou - f_ol) * up_time / dt;
    }
};

// Transformed regulation state [X1 m, X2 m/s, X3 m, X4 m/s]: the physical
// sagittal state with the planned-thrust and gravity contributions folded in,
// so only the thrust correction drives it.
using RegState = Eigen::Vector4d;

struct RegWeights {
    Eigen::Vector4d gamma{0.0, 1.0, 0.0, 4.0};
};

// Thrust magnitude demanded by the planned trajectory at time t (held at the
// final value past the end): m * sqrt(a_y^2 + (a_z + g)^2).
double planned_thrust(const Trajectory& traj, double t, double mass, double g);

using FpSampler = std::function<double(double)>; // planned thrust vs stage time [N]

struct RegProblem {
    RegState X0 = RegState::Zero();
    RegState XT = RegState::Zero();
    AttitudeRamp ramp;
    double T_F = 0.0;
    double mass = 1.0;
};

// Builds the regulation instance at the start of attitude tracking. xq is the
// physical sagittal state [p_y, v_y, p_z, v_z]; the desired terminal is
// recomputed from the track at the predicted impact time T_F and mapped
// through the same transformation as the state. Throws std::invalid_argument
// when the ramp gives a non-positive T_F.
RegProblem make_reg_problem(const Eigen::Vector4d& xq, const AttitudeRamp& ramp,
                            const FpSampler& fp, const SurfaceTrack& track,
                            const PerchParams& params, double mass, double g);

inline constexpr double kRegQuadratureStep = 1e-3; // [s]

// Terminal transformed state under the schedule: double-integrator drift plus
// the input integral, evaluated by fixed-step quadrature split at the switch
// times.
RegState propagate(const RegState& X0, const ThrustSchedule& sched, const AttitudeRamp& ramp,
                   double T_F, double mass, double dt_q = kRegQuadratureStep);

struct SolveOptions {
    int starts = 8;
    int max_evals = 10000;     // total objective-evaluation budget
    double step_tol = 1e-4;   // stop when the move scale falls below tol*T_F
};

struct SolveOutcome {
    ThrustSchedule sched;
    double J = 0.0;
    double J_down = 0.0; // f_o == f_ol throughout
    double J_up = 0.0;   // f_o == f_ou throughout
    int evals = 0;
    uint64_t instance_hash = 0;
};

// Multi-start coordinate pattern search over the ordered switch times,
// minimizing the weighted terminal error. The two constant-thrust profiles
// are among the starts, so the result never loses to either baseline.
SolveOutcome solve_switching(const RegState& X0, const RegState& XT, const RegWeights& w,
                             double f_ol, double f_ou, const AttitudeRamp& ramp, double T_F,
                             double mass, const SolveOptions& opts = {});

// Total thrust command f_p + f_o, clamped into [f_min, f_max]. hold_dt > 0
// averages the correction over the hold interval of a discrete controller.
double thrust_command(const ThrustSchedule& sched, double t, double f_p, double f_min,
                      double f_max, double hold_dt = 0.0);

} // namespace perch
