#pragma once

#include "perch/lodw.hpp"
#include "perch/replanner.hpp"
#include "perch/target_model.hpp"
#include "perch/thrust_reg.hpp"
#include "perch/types.hpp"

#include <json.hpp>

#include <string>

namespace perch {

struct TargetConfig {
    Vec3 position{0.0, 0.0, 1.0};  // surface center at t = 0 [m]
    Vec3 velocity{0.0, 3.0, 0.0};  // cruise velocity [m/s]
    Vec3 initial_velocity{0.0, 3.0, 0.0}; // at t = 0; ramps toward cruise [m/s]
    double accel = 0.0;            // ramp rate toward cruise, 0 = constant [m/s^2]
    double incline_deg = 70.0;     // surface inclination [deg]
    double capture_band = 0.75;    // impact registration half-width along Y_s [m]

    // true nominal velocity at time t (linear ramp, then cruise)
    Vec3 nominal_velocity(double t) const {
        if (accel <= 0.0) {
            return velocity;
        }
        const Vec3 dv = velocity - initial_velocity;
        const double dist = dv.norm();
        if (dist < 1e-12) {
            return velocity;
        }
        const double reached = std::min(dist, accel * t);
        return initial_velocity + dv * (reached / dist);
    }
};

struct DisturbanceSpec {
    Eigen::Vector2d detection_halfwidth{0.1, 0.1}; // uniform, [m] (y, z)
    Eigen::Vector2d fluct_halfwidth{0.3, 0.1};     // uniform, [m/s]
    Eigen::Vector2d wind_mean{0.0, 0.0};           // [m/s^2]
    Eigen::Vector2d wind_std{0.0, 0.0};            // white, [m/s^2]
};

struct VehicleParams {
    double mass = 1.0;     // [kg]
    double inertia = 0.01; // [kg m^2]
    double l = 0.05;       // centroid-to-bottom [m]
    double att_kp = 900.0;
    double att_kd = 60.0;
    double pos_kp = 16.0;
    double pos_kd = 8.0;
    double T_eps = 0.4;                        // stage threshold [s]
    std::array<double, 2> f_limits{0.0, 25.0}; // [N]
    double M_limit = 3.0;                      // [N m]
};

struct PlannerConfig {
    int lodw_N = 3;
    double lodw_T = 0.5;      // per-segment horizon [s]
    WeightSchedule weights;   // sigmoid schedule for the complementary planner
    Vec3 sigma0_p{0.05, 0.05, 0.05}; // start-dispersion std, position [m]
    Vec3 sigma0_v{0.1, 0.1, 0.1};    // start-dispersion std, velocity [m/s]
    LodwSampling sampling;
    ScanGrid grid;
    std::string table_path;   // LODW table for the OW arms
    // duration-search half-width around the rolling hint; at 30 Hz a narrow
    // window keeps consecutive rendezvous solutions continuous
    double ft_window = 0.3;   // [s]
};

struct SimConfig {
    double dt_physics = 1e-3;  // [s]
    double control_hz = 30.0;
    double t_max = 15.0;       // trial cutoff [s]
    Vec3 quad_start_offset{0.0, -3.0, 0.5}; // relative to the target at t = 0 [m]
    bool start_following = true;            // start with the target's velocity
};

struct ScenarioConfig {
    TargetConfig target;
    DisturbanceSpec noise;
    PerchParams perch{0.05, 0.7, 0.0, 9.81};
    SuccessBounds success;
    ConstraintSet constraints;
    VehicleParams vehicle;
    PlannerConfig planner;
    RegWeights reg_weights;
    double f_o_frac = 0.35; // correction bounds as a fraction of m*g
    SimConfig sim;

    SurfaceState initial_surface() const;
    // sigma entries from the uniform widths: Var[U(-a, a)] = a^2 / 3
    NoiseSpec noise_spec() const;
    Vec9 start_var() const;
    double f_ol() const { return -f_o_frac * vehicle.mass * perch.g; }
    double f_ou() const { return f_o_frac * vehicle.mass * perch.g; }
};

// Parses and validates; throws ConfigError on malformed input. Unknown keys
// are rejected so typos do not silently fall back to defaults.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::string& path);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

} // namespace perch
