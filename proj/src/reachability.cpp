#include "perch/reachability.hpp"

#include "perch/rng.hpp"

#include <cmath>

namespace perch {

State9 sample_gaussian(const GaussianSpec& g, uint64_t seed, uint64_t stream) {
    Vec9 x = g.mean.to_vec();
    for (int i = 0; i < 9; ++i) {
        if (g.var[i] > 0.0) {
            x[i] += std::sqrt(g.var[i]) * rng::normal01(seed, stream, static_cast<uint64_t>(i));
        }
    }
    return State9::from_vec(x);
}

CoverEstimate cover_rate(const State9& x0, double T, const GaussianSpec& target,
                         const ConstraintSet& c, int n, uint64_t seed, CheckScope scope) {
    int feasible = 0;
    for (int i = 0; i < n; ++i) {
        const State9 xT = sample_gaussian(target, seed, static_cast<uint64_t>(i));
        Trajectory cand;
        cand.segments.push_back(solve_bvp(x0, xT, T));
        if (check_feasible(cand, c, scope)) {
            ++feasible;
        }
    }
    CoverEstimate est;
    est.samples = n;
    est.value = static_cast<double>(feasible) / n;
    est.stderr_ = std::sqrt(est.value * (1.0 - est.value) / n);
    return est;
}

double expected_cover(const State9& x0, double T, const GaussianSpec& target,
                      const Vec9& start_var, const ConstraintSet& c, int n_outer, int n_inner,
                      uint64_t seed, CheckScope scope) {
    const GaussianSpec start{x0, start_var};
    double sum = 0.0;
    for (int o = 0; o < n_outer; ++o) {
        const State9 x = sample_gaussian(start, seed, 0x10000u + static_cast<uint64_t>(o));
        const uint64_t inner_seed = rng::derive(seed, 1, static_cast<uint64_t>(o));
        sum += cover_rate(x, T, target, c, n_inner, inner_seed, scope).value;
    }
    return sum / n_outer;
}

State9 start_shift_for_terminal_shift(const State9& xT_shift, double T) {
    return flow(xT_shift, -T);
}

State9 transform_waypoint(const State9& w, const State9& xT_old, const State9& xT_new,
                          double horizon) {
    return w + flow(xT_new - xT_old, -horizon);
}

} // namespace perch
