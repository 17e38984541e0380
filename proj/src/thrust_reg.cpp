#include "perch/thrust_reg.hpp"

#include "perch/rng.hpp"
#include "perch/state_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace perch {

double planned_thrust(const Trajectory& traj, double t, double mass, double g) {
    const State9 x = traj.state_at(std::min(t, traj.total_duration()));
    return mass * std::sqrt(x.a.y() * x.a.y() + (x.a.z() + g) * (x.a.z() + g));
}

namespace {

// Cumulative planned-thrust moments over [0, t]:
//   Ivy = int (f_p/m) sin(phi),  Ipy = int Ivy
//   Ivz = int (f_p/m) cos(phi),  Ipz = int Ivz
// integrated as an ODE with RK4.
struct Moments {
    double Ivy = 0.0, Ipy = 0.0, Ivz = 0.0, Ipz = 0.0;
};

Moments planned_moments(const FpSampler& fp, const AttitudeRamp& ramp, double mass, double T,
                        double h = 1e-3) {
    Moments m;
    const int n = std::max(1, static_cast<int>(std::ceil(T / h)));
    const double dt = T / n;
    auto fy = [&](double t) { return fp(t) / mass * std::sin(ramp.phi(t)); };
    auto fz = [&](double t) { return fp(t) / mass * std::cos(ramp.phi(t)); };
    for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        // RK4 on (Ivy, Ipy) with Ivy' = fy, Ipy' = Ivy, and likewise for z
        const double k1y = fy(t), k2y = fy(t + 0.5 * dt), k4y = fy(t + dt);
        const double k1z = fz(t), k2z = fz(t + 0.5 * dt), k4z = fz(t + dt);
        const double ivy_mid = m.Ivy + 0.5 * dt * k1y;
        const double ivy_mid2 = m.Ivy + 0.5 * dt * k2y;
        const double ivy_end = m.Ivy + dt * k2y;
        m.Ipy += dt / 6.0 * (m.Ivy + 2.0 * ivy_mid + 2.0 * ivy_mid2 + ivy_end);
        m.Ivy += dt / 6.0 * (k1y + 4.0 * k2y + k4y);
        const double ivz_mid = m.Ivz + 0.5 * dt * k1z;
        const double ivz_mid2 = m.Ivz + 0.5 * dt * k2z;
        const double ivz_end = m.Ivz + dt * k2z;
        m.Ipz += dt / 6.0 * (m.Ivz + 2.0 * ivz_mid + 2.0 * ivz_mid2 + ivz_end);
        m.Ivz += dt / 6.0 * (k1z + 4.0 * k2z + k4z);
    }
    return m;
}

} // namespace

RegProblem make_reg_problem(const Eigen::Vector4d& xq, const AttitudeRamp& ramp,
                            const FpSampler& fp, const SurfaceTrack& track,
                            const PerchParams& params, double mass, double g) {
    const double T_F = ramp.T_F();
    if (!(T_F > 0.0)) {
        throw std::invalid_argument("make_reg_problem: ramp gives non-positive horizon");
    }
    RegProblem prob;
    prob.ramp = ramp;
    prob.T_F = T_F;
    prob.mass = mass;
    prob.X0 = xq; // the correction integrals vanish at t = 0

    const State9 xT = terminal_from_surface(predict(track, T_F), params);
    const Moments m = planned_moments(fp, ramp, mass, T_F);
    prob.XT[0] = xT.p.y() + m.Ipy;
    prob.XT[1] = xT.v.y() + m.Ivy;
    prob.XT[2] = xT.p.z() - m.Ipz + 0.5 * g * T_F * T_F;
    prob.XT[3] = xT.v.z() - m.Ivz + g * T_F;
    return prob;
}

namespace {

// Simpson integration of the four input moments over [a, b] with constant fo.
void integrate_interval(double a, double b, double fo, const AttitudeRamp& ramp, double T_F,
                        double mass, double dt_q, RegState& acc) {
    if (b - a <= 1e-12) {
        return;
    }
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / dt_q)));
    const double h = (b - a) / n;
    auto g2 = [&](double t) { return -std::sin(ramp.phi(t)) / mass * fo; };
    auto g4 = [&](double t) { return std::cos(ramp.phi(t)) / mass * fo; };
    for (int i = 0; i < n; ++i) {
        const double t0 = a + i * h;
        const double tm = t0 + 0.5 * h;
        const double t1 = t0 + h;
        const double w0 = T_F - t0, wm = T_F - tm, w1 = T_F - t1;
        acc[0] += h / 6.0 * (w0 * g2(t0) + 4.0 * wm * g2(tm) + w1 * g2(t1));
        acc[1] += h / 6.0 * (g2(t0) + 4.0 * g2(tm) + g2(t1));
        acc[2] += h / 6.0 * (w0 * g4(t0) + 4.0 * wm * g4(tm) + w1 * g4(t1));
        acc[3] += h / 6.0 * (g4(t0) + 4.0 * g4(tm) + g4(t1));
    }
}

} // namespace

RegState propagate(const RegState& X0, const ThrustSchedule& sched, const AttitudeRamp& ramp,
                   double T_F, double mass, double dt_q) {
    RegState X;
    X[0] = X0[0] + X0[1] * T_F;
    X[1] = X0[1];
    X[2] = X0[2] + X0[3] * T_F;
    X[3] = X0[3];

    // cut the integral at the switch times so fo is constant on each piece
    std::vector<double> cuts = {0.0, T_F};
    for (double t : sched.switch_times) {
        if (t > 0.0 && t < T_F) {
            cuts.push_back(t);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    RegState acc = RegState::Zero();
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const double fo = sched.f_o(0.5 * (a + b));
        integrate_interval(a, b, fo, ramp, T_F, mass, dt_q, acc);
    }
    return X + acc;
}

namespace {

uint64_t hash_doubles(std::initializer_list<double> xs) {
    uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (double x : xs) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        std::memcpy(&bits, &x, sizeof(bits));
        h = rng::mix(h ^ bits);
    }
    return h;
}

std::array<double, 4> sorted4(std::array<double, 4> t) {
    std::sort(t.begin(), t.end());
    return t;
}

} // namespace

SolveOutcome solve_switching(const RegState& X0, const RegState& XT, const RegWeights& w,
                             double f_ol, double f_ou, const AttitudeRamp& ramp, double T_F,
                             double mass, const SolveOptions& opts) {
    if (!(T_F > 0.0)) {
        throw std::invalid_argument("solve_switching: T_F must be positive");
    }
    int evals = 0;
    auto objective = [&](const std::array<double, 4>& times) {
        ThrustSchedule s{times, f_ol, f_ou};
        const RegState err = propagate(X0, s, ramp, T_F, mass) - XT;
        ++evals;
        return err.dot(w.gamma.asDiagonal() * err);
    };

    const double T = T_F;
    const std::array<double, 4> all_down{T, T, T, T};
    const std::array<double, 4> all_up{0.0, T, T, T};
    const double J_down = objective(all_down);
    const double J_up = objective(all_up);

    std::array<double, 4> best_t = J_down <= J_up ? all_down : all_up;
    double best_J = std::min(J_down, J_up);

    // coarse seeding over the ordered simplex, then local pattern search from
    // the most promising seeds; the constant profiles are always among them
    const int n_coarse = 13;
    std::vector<std::pair<double, std::array<double, 4>>> seeds;
    seeds.reserve(512);
    for (int a = 0; a < n_coarse; ++a) {
        for (int b = a; b < n_coarse; ++b) {
            for (int cc = b; cc < n_coarse; ++cc) {
                for (int d = cc; d < n_coarse; ++d) {
                    const std::array<double, 4> t = {
                        a * T / (n_coarse - 1), b * T / (n_coarse - 1),
                        cc * T / (n_coarse - 1), d * T / (n_coarse - 1)};
                    seeds.push_back({objective(t), t});
                }
            }
        }
    }
    std::stable_sort(seeds.begin(), seeds.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });

    // moves: each switch time alone, and each up-interval shifted as a whole
    const auto moved = [&](const std::array<double, 4>& t, int move, double h) {
        std::array<double, 4> cand = t;
        if (move < 8) {
            cand[move / 2] = std::clamp(cand[move / 2] + (move % 2 ? -h : h), 0.0, T);
        } else {
            const int pair = (move - 8) / 2;
            const double d = (move % 2 ? -h : h);
            cand[2 * pair] = std::clamp(cand[2 * pair] + d, 0.0, T);
            cand[2 * pair + 1] = std::clamp(cand[2 * pair + 1] + d, 0.0, T);
        }
        return sorted4(cand);
    };

    const int n_starts = std::min<int>(opts.starts, static_cast<int>(seeds.size()));
    const int per_start =
        std::max(1, (opts.max_evals - evals) / std::max(1, n_starts));
    for (int s = 0; s < n_starts; ++s) {
        std::array<double, 4> t = seeds[s].second;
        double J = seeds[s].first;
        double h = T / (n_coarse - 1);
        int local_evals = 0;
        while (h > opts.step_tol * T && local_evals < per_start) {
            bool improved = false;
            for (int move = 0; move < 12 && local_evals < per_start; ++move) {
                const auto cand = moved(t, move, h);
                const double Jc = objective(cand);
                ++local_evals;
                if (Jc < J) {
                    t = cand;
                    J = Jc;
                    improved = true;
                    break;
                }
            }
            if (!improved) {
                h *= 0.5;
            }
        }
        if (J < best_J) {
            best_J = J;
            best_t = t;
        }
    }

    SolveOutcome out;
    out.sched = ThrustSchedule{best_t, f_ol, f_ou};
    out.J = best_J;
    out.J_down = J_down;
    out.J_up = J_up;
    out.evals = evals;
    out.instance_hash = hash_doubles({X0[0], X0[1], X0[2], X0[3], XT[0], XT[1], XT[2], XT[3],
                                      w.gamma[0], w.gamma[1], w.gamma[2], w.gamma[3], f_ol, f_ou,
                                      ramp.phi0, ramp.omega_bar, ramp.phi_s, T_F, mass});
    return out;
}

double thrust_command(const ThrustSchedule& sched, double t, double f_p, double f_min,
                      double f_max, double hold_dt) {
    return std::clamp(f_p + sched.f_o_mean(t, hold_dt), f_min, f_max);
}

} // namespace perch
