#pragma once

#include "perch/state_core.hpp"
#include "perch/trajgen.hpp"
#include "perch/types.hpp"

#include <cstdint>

namespace perch {

// Diagonal-covariance Gaussian over the 9-dimensional flat-output state.
struct GaussianSpec {
    State9 mean;
    Vec9 var = Vec9::Zero(); // per-component variance
};

struct CoverEstimate {
    double value = 0.0;  // feasible fraction, in [0, 1]
    int samples = 0;
    double stderr_ = 0.0; // sqrt(p (1-p) / n)
};

// One Gaussian sample, components drawn from independent counter streams.
State9 sample_gaussian(const GaussianSpec& g, uint64_t seed, uint64_t stream);

// Monte-Carlo estimate of the probability that a target state drawn from
// `target` is reachable from x0 in exactly time T: membership is "the planner
// succeeds", i.e. the direct BVP of duration T passes the feasibility check.
// Deterministic given the seed.
CoverEstimate cover_rate(const State9& x0, double T, const GaussianSpec& target,
                         const ConstraintSet& c, int n, uint64_t seed,
                         CheckScope scope = CheckScope::full);

// Nested Monte-Carlo estimate of the cover rate averaged over start-state
// dispersion: outer samples x ~ N(x0, start_var), inner cover_rate per sample.
double expected_cover(const State9& x0, double T, const GaussianSpec& target,
                      const Vec9& start_var, const ConstraintSet& c, int n_outer, int n_inner,
                      uint64_t seed, CheckScope scope = CheckScope::full);

// Start-point translation matching a terminal translation over horizon T:
// the backward flow of the terminal shift. Reachable sets and control inputs
// are preserved under this paired translation.
State9 start_shift_for_terminal_shift(const State9& xT_shift, double T);

// Translate a waypoint optimized for terminal xT_old into the waypoint for
// xT_new: w + flow(xT_new - xT_old, -horizon).
State9 transform_waypoint(const State9& w, const State9& xT_old, const State9& xT_new,
                          double horizon);

} // namespace perch
