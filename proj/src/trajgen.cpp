#include "perch/trajgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perch {

State9 QuinticSegment::state_at(double t) const {
    State9 out;
    for (int ax = 0; ax < 3; ++ax) {
        const auto& c = coeffs[ax];
        // Horner for p, v, a
        double p = 0.0, v = 0.0, a = 0.0;
        for (int k = 5; k >= 0; --k) {
            p = p * t + c[k];
        }
        for (int k = 5; k >= 1; --k) {
            v = v * t + k * c[k];
        }
        for (int k = 5; k >= 2; --k) {
            a = a * t + k * (k - 1) * c[k];
        }
        out.p[ax] = p;
        out.v[ax] = v;
        out.a[ax] = a;
    }
    return out;
}

Vec3 QuinticSegment::jerk_at(double t) const {
    Vec3 j;
    for (int ax = 0; ax < 3; ++ax) {
        const auto& c = coeffs[ax];
        j[ax] = 6.0 * c[3] + 24.0 * c[4] * t + 60.0 * c[5] * t * t;
    }
    return j;
}

double Trajectory::total_duration() const {
    double total = 0.0;
    for (const auto& s : segments) {
        total += s.duration;
    }
    return total;
}

namespace {
// Locate the segment containing trajectory-relative time t (clamped).
std::pair<const QuinticSegment*, double> locate(const Trajectory& traj, double t) {
    t = std::clamp(t, 0.0, traj.total_duration());
    double offset = 0.0;
    for (size_t i = 0; i < traj.segments.size(); ++i) {
        const auto& seg = traj.segments[i];
        const bool last = (i + 1 == traj.segments.size());
        if (t <= offset + seg.duration || last) {
            return {&seg, std::clamp(t - offset, 0.0, seg.duration)};
        }
        offset += seg.duration;
    }
    throw std::logic_error("empty trajectory");
}
} // namespace

State9 Trajectory::state_at(double t) const {
    auto [seg, local] = locate(*this, t);
    return seg->state_at(local);
}

Vec3 Trajectory::jerk_at(double t) const {
    auto [seg, local] = locate(*this, t);
    return seg->jerk_at(local);
}

QuinticSegment solve_bvp(const State9& x0, const State9& xT, double T) {
    if (!(T > 0.0)) {
        throw std::invalid_argument("solve_bvp: duration must be positive");
    }
    QuinticSegment seg;
    seg.duration = T;
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    for (int ax = 0; ax < 3; ++ax) {
        const double p0 = x0.p[ax], v0 = x0.v[ax], a0 = x0.a[ax];
        const double dp = xT.p[ax] - (p0 + v0 * T + 0.5 * a0 * T2);
        const double dv = xT.v[ax] - (v0 + a0 * T);
        const double da = xT.a[ax] - a0;
        auto& c = seg.coeffs[ax];
        c[0] = p0;
        c[1] = v0;
        c[2] = 0.5 * a0;
        c[3] = (20.0 * dp - 8.0 * dv * T + da * T2) / (2.0 * T3);
        c[4] = (-30.0 * dp + 14.0 * dv * T - 2.0 * da * T2) / (2.0 * T4);
        c[5] = (12.0 * dp - 6.0 * dv * T + da * T2) / (2.0 * T5);
    }
    return seg;
}

namespace {
FeasReport check_sample(const State9& x, const Vec3& jerk, const ConstraintSet& c,
                        CheckScope scope, double t) {
    const bool states = (scope == CheckScope::full);
    if (states && x.v.norm() > c.v_max + kFeasTol) {
        return {false, ViolationKind::velocity, t};
    }
    if (states && x.a.norm() > c.a_max + kFeasTol) {
        return {false, ViolationKind::acceleration, t};
    }
    const Vec3 thrust_dir_raw = x.a + Vec3(0.0, 0.0, c.g);
    const double thrust = thrust_dir_raw.norm();
    if (thrust < c.thrust_over_mass[0] - kFeasTol || thrust > c.thrust_over_mass[1] + kFeasTol) {
        return {false, ViolationKind::thrust, t};
    }
    // body-rate surrogate: jerk component orthogonal to the thrust direction
    // over the thrust magnitude (differential-flatness approximation)
    const Vec3 dir = thrust_dir_raw / thrust;
    const Vec3 j_perp = jerk - jerk.dot(dir) * dir;
    if (j_perp.norm() / thrust > c.body_rate_max + kFeasTol) {
        return {false, ViolationKind::body_rate, t};
    }
    if (states && x.p.z() < c.z_min - kFeasTol) {
        return {false, ViolationKind::position, t};
    }
    return {};
}
} // namespace

FeasReport check_feasible(const Trajectory& traj, const ConstraintSet& c, CheckScope scope,
                          double dt_check) {
    double offset = 0.0;
    for (const auto& seg : traj.segments) {
        const int n = std::max(1, static_cast<int>(std::ceil(seg.duration / dt_check)));
        for (int i = 0; i <= n; ++i) {
            const double local = std::min(seg.duration, i * dt_check);
            const FeasReport r =
                check_sample(seg.state_at(local), seg.jerk_at(local), c, scope, offset + local);
            if (!r.ok) {
                return r;
            }
            if (local >= seg.duration) {
                break;
            }
        }
        offset += seg.duration;
    }
    return {};
}

Trajectory piecewise_plan(const State9& xq0, const std::vector<State9>& waypoints,
                          const std::vector<double>& segment_times) {
    if (waypoints.empty() || waypoints.size() != segment_times.size()) {
        throw std::invalid_argument("piecewise_plan: waypoint/time count mismatch");
    }
    Trajectory traj;
    traj.segments.reserve(waypoints.size());
    const State9* from = &xq0;
    for (size_t i = 0; i < waypoints.size(); ++i) {
        traj.segments.push_back(solve_bvp(*from, waypoints[i], segment_times[i]));
        from = &waypoints[i];
    }
    return traj;
}

std::optional<double> find_min_time(const SurfaceTrack& track, const State9& xq0,
                                    const PerchParams& params, const ConstraintSet& c,
                                    double T_hint, const FindTimeOptions& opts) {
    const double lo = std::max(opts.floor, T_hint - opts.window);
    const double hi = T_hint + opts.window;
    int evals = 0;
    for (double T = lo; T <= hi + 1e-12 && evals < opts.max_evals; T += opts.grid_step, ++evals) {
        const State9 xT = terminal_from_surface(predict(track, T), params);
        Trajectory cand;
        cand.segments.push_back(solve_bvp(xq0, xT, T));
        if (check_feasible(cand, c)) {
            return T;
        }
    }
    return std::nullopt;
}

} // namespace perch
