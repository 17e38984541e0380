#include "perch/lodw.hpp"

#include "perch/rng.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace perch {

namespace {

// Horizontal outward direction of the approach side. The scan stays in the
// sagittal plane through the target.
Vec3 approach_direction(const Vec3& Zs) {
    Vec3 horiz(Zs.x(), Zs.y(), 0.0);
    if (horiz.norm() < 1e-9) {
        horiz = Vec3(0.0, -1.0, 0.0); // normal straight up: side is arbitrary
    }
    return horiz.normalized();
}

std::optional<double> min_feasible_duration(const State9& from, const State9& to,
                                            const ConstraintSet& c, const ScanOptions& opts) {
    for (double T = opts.t_floor; T <= opts.t_ceil + 1e-12; T += opts.grid_step) {
        Trajectory cand;
        cand.segments.push_back(solve_bvp(from, to, T));
        if (check_feasible(cand, c)) {
            return T;
        }
    }
    return std::nullopt;
}

} // namespace

std::vector<ScannedTrajectory> trajectory_scan(const State9& xT, const Vec3& Zs,
                                               const ScanGrid& grid, const ConstraintSet& c,
                                               const ScanOptions& opts) {
    const Vec3 out_dir = approach_direction(Zs);
    std::vector<ScannedTrajectory> result;
    const int n_r = std::max(1, static_cast<int>(std::round((grid.range[1] - grid.range[0]) /
                                                            grid.resolution)) + 1);
    const int n_h = std::max(1, static_cast<int>(std::round((grid.height[1] - grid.height[0]) /
                                                            grid.resolution)) + 1);
    for (int ir = 0; ir < n_r; ++ir) {
        const double r = grid.range[0] + ir * grid.resolution;
        for (int ih = 0; ih < n_h; ++ih) {
            const double h = grid.height[0] + ih * grid.resolution;
            State9 hover;
            hover.p = xT.p + r * out_dir + Vec3(0.0, 0.0, h);
            const auto T = min_feasible_duration(hover, xT, c, opts);
            if (!T) {
                continue;
            }
            ScannedTrajectory st;
            st.hover_start = hover;
            st.traj.segments.push_back(solve_bvp(hover, xT, *T));
            result.push_back(std::move(st));
        }
    }
    return result;
}

std::vector<State9> feasible_region(const std::vector<ScannedTrajectory>& scanned, double T) {
    std::vector<State9> candidates;
    candidates.reserve(scanned.size());
    for (const auto& st : scanned) {
        const double T_f = st.traj.total_duration();
        if (T_f <= T) {
            continue;
        }
        candidates.push_back(st.traj.state_at(T_f - T));
    }
    return candidates;
}

LodwTable seek_lodws(const State9& xT, const Vec3& Zs, int N, double T, const Vec9& start_var,
                     const NoiseSpec& noise, const ScanGrid& grid, const ConstraintSet& c,
                     uint64_t seed, const LodwSampling& sampling, const ScanOptions& scan_opts,
                     LodwDiagnostics* diag) {
    if (N < 1) {
        throw std::invalid_argument("seek_lodws: N must be >= 1");
    }
    LodwTable table;
    table.horizon = T;
    table.anchor_terminal = xT;
    table.waypoints.push_back(xT);

    GaussianSpec target;
    target.mean = xT;
    target.var = terminal_covariance(noise, T);

    for (int iter = 0; iter < N; ++iter) {
        const auto scanned = trajectory_scan(target.mean, Zs, grid, c, scan_opts);
        const auto candidates = feasible_region(scanned, T);
        if (candidates.empty()) {
            throw EmptyRegionError("seek_lodws: no feasible candidates at iteration " +
                                   std::to_string(iter + 1));
        }
        int best = -1;
        double best_cover = -1.0;
        double best_dist = std::numeric_limits<double>::infinity();
        std::vector<double> estimates(candidates.size());
        for (size_t j = 0; j < candidates.size(); ++j) {
            const uint64_t cand_seed =
                rng::derive(seed, static_cast<uint64_t>(iter), static_cast<uint64_t>(j));
            const double cover = expected_cover(candidates[j], T, target, start_var, c,
                                                sampling.n_outer, sampling.n_inner, cand_seed);
            estimates[j] = cover;
            const double dist = (candidates[j].p - target.mean.p).norm();
            if (cover > best_cover || (cover == best_cover && dist < best_dist)) {
                best = static_cast<int>(j);
                best_cover = cover;
                best_dist = dist;
            }
        }
        if (diag != nullptr) {
            LodwIterationDiag it;
            it.target = target.mean;
            it.candidates = candidates;
            it.estimates = estimates;
            it.winner = best;
            diag->iterations.push_back(std::move(it));
        }
        table.waypoints.push_back(candidates[best]);
        target.mean = candidates[best];
    }
    return table;
}

namespace {
nlohmann::json state_to_json(const State9& x) {
    return nlohmann::json{{"p", {x.p.x(), x.p.y(), x.p.z()}},
                          {"v", {x.v.x(), x.v.y(), x.v.z()}},
                          {"a", {x.a.x(), x.a.y(), x.a.z()}}};
}

State9 state_from_json(const nlohmann::json& j) {
    State9 x;
    for (int i = 0; i < 3; ++i) {
        x.p[i] = j.at("p").at(i).get<double>();
        x.v[i] = j.at("v").at(i).get<double>();
        x.a[i] = j.at("a").at(i).get<double>();
    }
    return x;
}
} // namespace

nlohmann::json lodw_table_to_json(const LodwTable& table) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["horizon"] = table.horizon;
    j["anchor_terminal"] = state_to_json(table.anchor_terminal);
    j["waypoints"] = nlohmann::json::array();
    for (const auto& w : table.waypoints) {
        j["waypoints"].push_back(state_to_json(w));
    }
    return j;
}

LodwTable lodw_table_from_json(const nlohmann::json& j) {
    LodwTable table;
    table.horizon = j.at("horizon").get<double>();
    table.anchor_terminal = state_from_json(j.at("anchor_terminal"));
    for (const auto& w : j.at("waypoints")) {
        table.waypoints.push_back(state_from_json(w));
    }
    if (table.waypoints.size() < 2) {
        throw ConfigError("lodw table must hold the terminal plus at least one waypoint");
    }
    return table;
}

void save_lodw_table(const LodwTable& table, const std::string& path,
                     const nlohmann::json& provenance) {
    nlohmann::json j = lodw_table_to_json(table);
    if (!provenance.is_null()) {
        j["provenance"] = provenance;
    }
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write lodw table: " + path);
    }
    out << j.dump(2) << "\n";
}

LodwTable load_lodw_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read lodw table: " + path);
    }
    nlohmann::json j;
    in >> j;
    return lodw_table_from_json(j);
}

} // namespace perch
