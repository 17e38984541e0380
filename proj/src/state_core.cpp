#include "perch/state_core.hpp"

namespace perch {

SurfaceState SurfaceState::make(const Vec3& p, const Vec3& v, const Vec3& normal) {
    SurfaceState s;
    s.p_s = p;
    s.v_s = v;
    s.Z_s = normal.normalized();
    Vec3 y = Vec3::UnitZ() - Vec3::UnitZ().dot(s.Z_s) * s.Z_s;
    if (y.norm() < 1e-9) {
        s.Y_s = Vec3::UnitY(); // horizontal surface, up-slope direction degenerate
    } else {
        s.Y_s = y.normalized();
    }
    return s;
}

State9 flow(const State9& x, double t) {
    State9 out;
    out.p = x.p + x.v * t + x.a * (0.5 * t * t);
    out.v = x.v + x.a * t;
    out.a = x.a;
    return out;
}

State9 terminal_from_surface(const SurfaceState& s, const PerchParams& params) {
    State9 xT;
    xT.p = s.p_s - params.l * s.Z_s;
    xT.v = s.v_s - params.v_n * s.Z_s + params.v_tau * s.Y_s;
    xT.a = params.g * s.Z_s - params.g * Vec3::UnitZ();
    return xT;
}

namespace {
bool in_range(double x, const std::array<double, 2>& r) {
    return x >= r[0] && x <= r[1];
}
} // namespace

bool classify_impact(double p_ry, double v_rtau, double v_rn, double phi_c, double phi_s,
                     const SuccessBounds& b) {
    return in_range(p_ry, b.p_tau_range) && in_range(v_rtau, b.v_tau_range) &&
           in_range(v_rn, b.v_n_range) && in_range(phi_c - phi_s, b.phi_err_range);
}

} // namespace perch
