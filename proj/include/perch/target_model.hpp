#pragma once

#include "perch/types.hpp"

namespace perch {

// Per-axis variances of the target track. sigma_v aggregates detection noise
// and velocity fluctuation of the target into one velocity variance per axis.
struct NoiseSpec {
    Vec3 sigma_p = Vec3::Zero(); // position variance [m^2]
    Vec3 sigma_v = Vec3::Zero(); // velocity variance [(m/s)^2]
};

// Constant-velocity surface track anchored at the latest detection sample.
struct SurfaceTrack {
    SurfaceState s0;
    NoiseSpec noise;
};

// Constant-velocity extrapolation of the surface, t seconds past the epoch.
SurfaceState predict(const SurfaceTrack& track, double t);

// Diagonal covariance of the predicted terminal state over a horizon T:
// position block T^2 sigma_v + sigma_p, velocity block sigma_v, acceleration
// block zero.
Vec9 terminal_covariance(const NoiseSpec& noise, double T);

} // namespace perch
