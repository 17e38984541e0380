#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>

namespace perch {

using Vec3 = Eigen::Vector3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;

// Full flat-output state [p, v, a] in the world frame (ENU-like, Z up).
// Also used for state deltas, which live in the same vector space.
struct State9 {
    Vec3 p = Vec3::Zero();  // position [m]
    Vec3 v = Vec3::Zero();  // velocity [m/s]
    Vec3 a = Vec3::Zero();  // acceleration [m/s^2]

    Vec9 to_vec() const {
        Vec9 x;
        x << p, v, a;
        return x;
    }
    static State9 from_vec(const Vec9& x) {
        return State9{x.segment<3>(0), x.segment<3>(3), x.segment<3>(6)};
    }

    State9 operator+(const State9& o) const { return {p + o.p, v + o.v, a + o.a}; }
    State9 operator-(const State9& o) const { return {p - o.p, v - o.v, a - o.a}; }

    bool finite() const {
        return p.allFinite() && v.allFinite() && a.allFinite();
    }
};

// Pose and motion of the target surface. Z_s is the unit outward normal
// (pointing toward the approaching vehicle), Y_s the unit up-slope tangent.
struct SurfaceState {
    Vec3 p_s = Vec3::Zero();
    Vec3 v_s = Vec3::Zero();
    Vec3 Z_s = Vec3::UnitZ();
    Vec3 Y_s = Vec3::UnitY();

    // Derives Y_s as the unit vector orthogonal to Z_s in the plane spanned by
    // Z_s and world-up, with positive Z component. Falls back to world +Y for
    // a horizontal surface, where the up-slope direction is undefined.
    static SurfaceState make(const Vec3& p, const Vec3& v, const Vec3& normal);

    bool valid(double tol = 1e-9) const {
        return std::abs(Z_s.norm() - 1.0) <= tol && std::abs(Y_s.norm() - 1.0) <= tol &&
               std::abs(Z_s.dot(Y_s)) <= tol;
    }

    // Inclination angle of the surface in the sagittal plane [rad].
    double inclination() const { return std::atan2(-Z_s.y(), Z_s.z()); }
};

struct PerchParams {
    double l = 0.1;     // centroid-to-bottom length [m]
    double v_n = 1.0;   // desired approach speed along -Z_s [m/s]
    double v_tau = 0.0; // desired up-slope speed [m/s]
    double g = 9.81;    // gravitational acceleration [m/s^2]
};

// Admissible impact window. Defaults are the gripper tolerances used
// throughout the experiments.
struct SuccessBounds {
    std::array<double, 2> p_tau_range = {-0.15, 0.15};   // [m]
    std::array<double, 2> v_tau_range = {-1.0, 2.2};     // [m/s]
    std::array<double, 2> v_n_range = {-2.0, -0.5};      // [m/s]
    std::array<double, 2> phi_err_range = {-0.31, 0.31}; // [rad]
};

// Kinodynamic (F) and geometric (G) feasibility bounds for planned trajectories.
struct ConstraintSet {
    double v_max = 5.0;                                 // [m/s]
    double a_max = 13.0;                                // [m/s^2]
    std::array<double, 2> thrust_over_mass = {2.0, 18.0}; // [m/s^2]
    double body_rate_max = 10.0;                        // [rad/s]
    double z_min = 0.1;                                 // ground clearance [m]
    double g = 9.81;                                    // used by the thrust check [m/s^2]
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoPlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyRegionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace perch
