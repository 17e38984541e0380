#pragma once

#include "perch/reachability.hpp"
#include "perch/target_model.hpp"
#include "perch/trajgen.hpp"
#include "perch/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace perch {

// Scan box for candidate hover starts, expressed relative to the current
// target: `range` spans distances from the target along the horizontal
// projection of Z_s (the approach side), `height` spans altitudes relative to
// the target position. The box lies in the sagittal plane.
struct ScanGrid {
    std::array<double, 2> range = {1.5, 4.5};  // [m]
    std::array<double, 2> height = {-0.5, 1.5}; // [m]
    double resolution = 0.25;                   // [m]
};

// Sequential locally-optimal dexterous waypoints: index 0 is the terminal
// state the table was built for, index i the waypoint placed i*horizon before
// it. Waypoints chain: the BVP from waypoints[i+1] to waypoints[i] with
// duration `horizon` is feasible by construction.
struct LodwTable {
    std::vector<State9> waypoints; // [0] = anchor_terminal
    double horizon = 0.5;          // per-segment duration T [s]
    State9 anchor_terminal;
};

struct ScannedTrajectory {
    Trajectory traj;
    State9 hover_start;
};

struct LodwSampling {
    int n_outer = 50;
    int n_inner = 300;
};

// Options for the per-grid-point minimal-duration scan.
struct ScanOptions {
    double t_floor = 0.2;
    double t_ceil = 5.0;
    double grid_step = 0.05;
};

// Plans hover-start -> xT trajectories from every grid position, keeping each
// position's smallest feasible duration. Empty result if nothing is feasible.
std::vector<ScannedTrajectory> trajectory_scan(const State9& xT, const Vec3& Zs,
                                               const ScanGrid& grid, const ConstraintSet& c,
                                               const ScanOptions& opts = {});

// States at T_fj - T on every scanned trajectory; trajectories shorter than T
// are skipped. All returned states are reachable by construction.
std::vector<State9> feasible_region(const std::vector<ScannedTrajectory>& scanned, double T);

// Per-iteration search internals, for verification and analysis.
struct LodwIterationDiag {
    State9 target;                 // target this iteration optimized toward
    std::vector<State9> candidates;
    std::vector<double> estimates; // expected cover per candidate
    int winner = -1;
};

struct LodwDiagnostics {
    std::vector<LodwIterationDiag> iterations;
};

// Full sequential search: scan, extract candidates, pick the expected-cover
// argmax, retarget, repeat N times. Throws EmptyRegionError if any iteration
// has no candidates. Deterministic given the seed; ties break toward the
// candidate closest to the current target.
LodwTable seek_lodws(const State9& xT, const Vec3& Zs, int N, double T, const Vec9& start_var,
                     const NoiseSpec& noise, const ScanGrid& grid, const ConstraintSet& c,
                     uint64_t seed, const LodwSampling& sampling = {},
                     const ScanOptions& scan_opts = {}, LodwDiagnostics* diag = nullptr);

nlohmann::json lodw_table_to_json(const LodwTable& table);
LodwTable lodw_table_from_json(const nlohmann::json& j);
void save_lodw_table(const LodwTable& table, const std::string& path,
                     const nlohmann::json& provenance);
LodwTable load_lodw_table(const std::string& path);

} // namespace perch
