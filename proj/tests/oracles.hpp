// Test-only oracles, kept independent of the library implementations they
// check: generic matrix exponential, linear-system BVP solve, exact
// piecewise-constant-jerk propagation, dense constraint sampling.
#pragma once

#include "perch/rng.hpp"
#include "perch/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracles {

using perch::State9;
using perch::Vec3;
using perch::Vec9;

// Generic matrix exponential by power series (terms added until they vanish).
inline Eigen::Matrix<double, 9, 9> expm9(const Eigen::Matrix<double, 9, 9>& A) {
    Eigen::Matrix<double, 9, 9> result = Eigen::Matrix<double, 9, 9>::Identity();
    Eigen::Matrix<double, 9, 9> term = Eigen::Matrix<double, 9, 9>::Identity();
    for (int k = 1; k <= 30; ++k) {
        term = (term * A) / k;
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-300) {
            break;
        }
    }
    return result;
}

// Triple-integrator system matrix: p' = v, v' = a, a' = u.
inline Eigen::Matrix<double, 9, 9> triple_integrator_A() {
    Eigen::Matrix<double, 9, 9> A = Eigen::Matrix<double, 9, 9>::Zero();
    for (int i = 0; i < 3; ++i) {
        A(i, 3 + i) = 1.0;
        A(3 + i, 6 + i) = 1.0;
    }
    return A;
}

// Exact endpoint of the triple integrator from x0 under piecewise-constant
// jerk segments (duration, jerk) applied in order.
inline State9 propagate_piecewise_jerk(const State9& x0,
                                       const std::vector<std::pair<double, Vec3>>& pieces) {
    State9 x = x0;
    for (const auto& [dt, u] : pieces) {
        State9 n;
        n.p = x.p + x.v * dt + x.a * (0.5 * dt * dt) + u * (dt * dt * dt / 6.0);
        n.v = x.v + x.a * dt + u * (0.5 * dt * dt);
        n.a = x.a + u * dt;
        x = n;
    }
    return x;
}

// Quintic coefficients for one axis by solving the full 6x6 boundary system.
inline Eigen::Matrix<double, 6, 1> bvp_axis(double p0, double v0, double a0, double pT, double vT,
                                            double aT, double T) {
    Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
    M(0, 0) = 1.0;
    M(1, 1) = 1.0;
    M(2, 2) = 2.0;
    for (int k = 0; k < 6; ++k) {
        M(3, k) = std::pow(T, k);
        if (k >= 1) {
            M(4, k) = k * std::pow(T, k - 1);
        }
        if (k >= 2) {
            M(5, k) = k * (k - 1) * std::pow(T, k - 2);
        }
    }
    Eigen::Matrix<double, 6, 1> rhs;
    rhs << p0, v0, a0, pT, vT, aT;
    return M.fullPivLu().solve(rhs);
}

// Polynomial derivative evaluation used by the dense feasibility oracle.
inline double polyval(const Eigen::Matrix<double, 6, 1>& c, double t, int deriv) {
    double sum = 0.0;
    for (int k = deriv; k < 6; ++k) {
        double f = 1.0;
        for (int d = 0; d < deriv; ++d) {
            f *= k - d;
        }
        sum += c[k] * f * std::pow(t, k - deriv);
    }
    return sum;
}

inline double u01(uint64_t seed, uint64_t stream, uint64_t counter) {
    return perch::rng::uniform01(seed, stream, counter);
}

inline double uni(uint64_t seed, uint64_t stream, uint64_t counter, double lo, double hi) {
    return lo + (hi - lo) * u01(seed, stream, counter);
}

inline State9 random_state(uint64_t seed, uint64_t stream, double p_scale, double v_scale,
                           double a_scale) {
    State9 x;
    for (int i = 0; i < 3; ++i) {
        x.p[i] = uni(seed, stream, i, -p_scale, p_scale);
        x.v[i] = uni(seed, stream, 3 + i, -v_scale, v_scale);
        x.a[i] = uni(seed, stream, 6 + i, -a_scale, a_scale);
    }
    return x;
}

} // namespace oracles
