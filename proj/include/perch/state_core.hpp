#pragma once

#include "perch/types.hpp"

namespace perch {

// Exact flow of the triple-integrator state under zero input for a signed
// duration t: [p + v t + a t^2/2, v + a t, a]. Closed form (the system matrix
// is nilpotent), valid for negative t as well.
State9 flow(const State9& x, double t);

// Desired terminal state for perching on a surface:
//   p_T = p_s - l Z_s
//   v_T = v_s - v_n Z_s + v_tau Y_s
//   a_T = g Z_s - g e3
State9 terminal_from_surface(const SurfaceState& s, const PerchParams& params);

// Impact acceptance test. p_ry: tangential contact offset, v_rtau / v_rn:
// relative velocity along Y_s / Z_s, phi_c: vehicle roll at impact, phi_s:
// surface inclination.
bool classify_impact(double p_ry, double v_rtau, double v_rn, double phi_c, double phi_s,
                     const SuccessBounds& b);

} // namespace perch
