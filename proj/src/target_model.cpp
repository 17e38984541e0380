#include "perch/target_model.hpp"

namespace perch {

SurfaceState predict(const SurfaceTrack& track, double t) {
    SurfaceState s = track.s0;
    s.p_s = track.s0.p_s + track.s0.v_s * t;
    return s;
}

Vec9 terminal_covariance(const NoiseSpec& noise, double T) {
    Vec9 var;
    var.segment<3>(0) = T * T * noise.sigma_v + noise.sigma_p;
    var.segment<3>(3) = noise.sigma_v;
    var.segment<3>(6) = Vec3::Zero();
    return var;
}

} // namespace perch
