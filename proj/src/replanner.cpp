#include "perch/replanner.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace perch {

std::vector<State9> transform_table(const LodwTable& table, const State9& xT_new) {
    std::vector<State9> out;
    out.reserve(table.waypoints.size());
    const State9 shift = xT_new - table.anchor_terminal;
    for (size_t i = 0; i < table.waypoints.size(); ++i) {
        out.push_back(table.waypoints[i] + flow(shift, -static_cast<double>(i) * table.horizon));
    }
    return out;
}

int forward_nearest(const State9& xq0, const std::vector<State9>& transformed) {
    const int N = static_cast<int>(transformed.size()) - 1;
    for (int i = 1; i <= N; ++i) {
        const Vec3 to_waypoint = transformed[i].p - xq0.p;
        const Vec3 along_chain = transformed[i - 1].p - transformed[i].p;
        if (to_waypoint.dot(along_chain) < 0.0) {
            return i - 1;
        }
    }
    return N;
}

double sigmoid_weight(double T_f, const WeightSchedule& w) {
    return 1.0 - 1.0 / (1.0 + std::exp(-w.k_T * (T_f - w.T_o)));
}

namespace {

// 9x9 matrix of the backward flow over T: delta_start = M * delta_terminal.
Eigen::Matrix<double, 9, 9> backward_flow_matrix(double T) {
    Eigen::Matrix<double, 9, 9> M = Eigen::Matrix<double, 9, 9>::Identity();
    for (int ax = 0; ax < 3; ++ax) {
        M(ax, 3 + ax) = -T;
        M(ax, 6 + ax) = 0.5 * T * T;
        M(3 + ax, 6 + ax) = -T;
    }
    return M;
}

// Coefficients of p(u0 + s) as a polynomial in s.
std::array<double, 6> shift_poly(const std::array<double, 6>& c, double u0) {
    static const int binom[6][6] = {{1, 0, 0, 0, 0, 0},  {1, 1, 0, 0, 0, 0},
                                    {1, 2, 1, 0, 0, 0},  {1, 3, 3, 1, 0, 0},
                                    {1, 4, 6, 4, 1, 0},  {1, 5, 10, 10, 5, 1}};
    std::array<double, 6> d{};
    for (int k = 0; k < 6; ++k) {
        double pow_u = 1.0;
        for (int j = k; j < 6; ++j) {
            d[k] += c[j] * binom[j][k] * pow_u;
            pow_u *= u0;
        }
    }
    return d;
}

// Tail of `traj` starting at trajectory-relative time `from`, rebased to 0.
Trajectory tail_of(const Trajectory& traj, double from) {
    Trajectory tail;
    double offset = 0.0;
    for (const auto& seg : traj.segments) {
        const double end = offset + seg.duration;
        if (end > from + 1e-12) {
            const double u0 = std::max(0.0, from - offset);
            QuinticSegment cut;
            cut.duration = seg.duration - u0;
            for (int ax = 0; ax < 3; ++ax) {
                cut.coeffs[ax] = (u0 > 0.0) ? shift_poly(seg.coeffs[ax], u0) : seg.coeffs[ax];
            }
            tail.segments.push_back(cut);
        }
        offset = end;
    }
    return tail;
}

} // namespace

Trajectory complementary_plan(const PlanContext& ctx, const State9& xT_star, const State9& xq0,
                              const WeightSchedule& weights) {
    const double T_f = ctx.last_Tf - ctx.elapsed;
    if (!ctx.has_plan || !(T_f > 0.0)) {
        throw NoPlanError("complementary_plan: no residual trajectory to shift");
    }
    const State9 x_end = ctx.last_traj.state_at(ctx.last_Tf);
    const State9 x_now = ctx.last_traj.state_at(ctx.elapsed);

    const double lambda = sigmoid_weight(T_f, weights);
    const Eigen::Matrix<double, 9, 9> M = backward_flow_matrix(T_f);
    const Vec9 d = -M * x_end.to_vec() + x_now.to_vec() - xq0.to_vec();

    // stationarity of lambda*|x - xT*|^2 + (1-lambda)*|M x + d|^2
    const Eigen::Matrix<double, 9, 9> H =
        lambda * Eigen::Matrix<double, 9, 9>::Identity() + (1.0 - lambda) * M.transpose() * M;
    const Vec9 rhs = lambda * xT_star.to_vec() - (1.0 - lambda) * M.transpose() * d;
    const State9 virtual_terminal = State9::from_vec(H.ldlt().solve(rhs));

    // shifted tail: x(t) = flow(delta, -(T_f - t)) + x_ls(elapsed + t)
    const State9 delta = virtual_terminal - x_end;
    Trajectory out = tail_of(ctx.last_traj, ctx.elapsed);
    double tau0 = 0.0;
    for (auto& seg : out.segments) {
        for (int ax = 0; ax < 3; ++ax) {
            const double dp = delta.p[ax], dv = delta.v[ax], da = delta.a[ax];
            const double r = tau0 - T_f; // time relative to the new terminal
            seg.coeffs[ax][0] += dp + dv * r + 0.5 * da * r * r;
            seg.coeffs[ax][1] += dv + da * r;
            seg.coeffs[ax][2] += 0.5 * da;
        }
        tau0 += seg.duration;
    }
    return out;
}

ReplanResult replan(PlanContext& ctx, const SurfaceTrack& track, const State9& xq0,
                    const PerchParams& params, const ConstraintSet& c,
                    const WeightSchedule& weights, double now, const FindTimeOptions& ft_opts) {
    FindTimeOptions opts = ft_opts;
    double hint;
    if (ctx.has_plan) {
        hint = std::max(opts.floor, ctx.last_Tf - ctx.elapsed);
    } else {
        // first solve: no prior duration, scan a wide window from the floor
        hint = std::max(1.0, (xq0.p - track.s0.p_s).norm() / std::max(1.0, 0.5 * c.v_max));
        opts.window = std::max(opts.window, 3.0);
    }

    // Minimal duration whose waypoint plan is feasible: the gate asks
    // feasibility of the trajectory this planner would actually fly, so the
    // chain keeps solving where a direct two-end plan already cannot.
    const double lo = std::max(opts.floor, hint - opts.window);
    const double hi = hint + opts.window;
    const double T = ctx.table.horizon;
    int evals = 0;
    for (double T_f = lo; T_f <= hi + 1e-12 && evals < opts.max_evals;
         T_f += opts.grid_step, ++evals) {
        const State9 xT_star = terminal_from_surface(predict(track, T_f), params);
        const auto transformed = transform_table(ctx.table, xT_star);
        int k = forward_nearest(xq0, transformed);
        // drop waypoints the remaining time cannot accommodate; the
        // feasibility check below arbitrates everything subtler
        constexpr double kMinLead = 0.2;
        constexpr double kSpeedMargin = 0.95;
        while (k > 0 && (T_f - k * T < kMinLead ||
                         (transformed[k].p - xq0.p).norm() / (T_f - k * T) >
                             kSpeedMargin * c.v_max)) {
            --k;
        }
        std::vector<State9> pts;
        std::vector<double> times;
        pts.reserve(k + 1);
        times.reserve(k + 1);
        for (int i = k; i >= 1; --i) {
            pts.push_back(transformed[i]);
            times.push_back(i == k ? T_f - k * T : T);
        }
        pts.push_back(transformed[0]);
        times.push_back(k == 0 ? T_f : T);

        Trajectory cand = piecewise_plan(xq0, pts, times);
        if (!check_feasible(cand, c)) {
            continue;
        }
        ReplanResult res;
        res.traj = std::move(cand);
        res.traj.t0 = now;
        res.record = {now, PlanBranch::main, T_f, k, transformed[0], true};

        ctx.last_traj = res.traj;
        ctx.last_Tf = T_f;
        ctx.elapsed = 0.0;
        ctx.has_plan = true;
        return res;
    }

    if (!ctx.has_plan) {
        throw NoPlanError("replan: no feasible time and no prior trajectory; hold position");
    }
    const double T_f = ctx.last_Tf - ctx.elapsed;
    if (!(T_f > 1e-6)) {
        throw NoPlanError("replan: residual trajectory exhausted; hold position");
    }
    const State9 xT_star = terminal_from_surface(predict(track, T_f), params);
    ReplanResult res;
    res.traj = complementary_plan(ctx, xT_star, xq0, weights);
    res.traj.t0 = now;
    res.record = {now, PlanBranch::complementary, T_f, -1, res.traj.state_at(T_f), false};
    return res;
}

} // namespace perch
