#include "perch/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace perch {

namespace {

using nlohmann::json;

void expect_keys(const json& j, const std::string& section, const std::set<std::string>& known) {
    if (!j.is_object()) {
        throw ConfigError("config section '" + section + "' must be an object");
    }
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown key '" + key + "' in config section '" + section + "'");
        }
    }
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        j.at(key).get_to(out);
    }
}

void get_vec3(const json& j, const char* key, Vec3& out) {
    if (j.contains(key)) {
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != 3) {
            throw ConfigError(std::string("'") + key + "' must be a 3-element array");
        }
        for (int i = 0; i < 3; ++i) {
            out[i] = a.at(i).get<double>();
        }
    }
}

void get_vec2(const json& j, const char* key, Eigen::Vector2d& out) {
    if (j.contains(key)) {
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != 2) {
            throw ConfigError(std::string("'") + key + "' must be a 2-element array");
        }
        out[0] = a.at(0).get<double>();
        out[1] = a.at(1).get<double>();
    }
}

void get_range(const json& j, const char* key, std::array<double, 2>& out) {
    if (j.contains(key)) {
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != 2) {
            throw ConfigError(std::string("'") + key + "' must be a 2-element array");
        }
        out[0] = a.at(0).get<double>();
        out[1] = a.at(1).get<double>();
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ConfigError("config validation failed: " + what);
    }
}

} // namespace

SurfaceState ScenarioConfig::initial_surface() const {
    const double phi = target.incline_deg * M_PI / 180.0;
    return SurfaceState::make(target.position, target.velocity,
                              Vec3(0.0, -std::sin(phi), std::cos(phi)));
}

NoiseSpec ScenarioConfig::noise_spec() const {
    NoiseSpec n;
    n.sigma_p = Vec3(0.0, noise.detection_halfwidth[0] * noise.detection_halfwidth[0] / 3.0,
                     noise.detection_halfwidth[1] * noise.detection_halfwidth[1] / 3.0);
    n.sigma_v = Vec3(0.0, noise.fluct_halfwidth[0] * noise.fluct_halfwidth[0] / 3.0,
                     noise.fluct_halfwidth[1] * noise.fluct_halfwidth[1] / 3.0);
    return n;
}

Vec9 ScenarioConfig::start_var() const {
    Vec9 v = Vec9::Zero();
    for (int i = 0; i < 3; ++i) {
        v[i] = planner.sigma0_p[i] * planner.sigma0_p[i];
        v[3 + i] = planner.sigma0_v[i] * planner.sigma0_v[i];
    }
    return v;
}

ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig cfg;
    expect_keys(j, "<root>",
                {"schema_version", "target", "noise", "perch", "success", "constraints",
                 "vehicle", "planner", "reg_weights", "f_o_frac", "sim"});

    if (j.contains("target")) {
        const auto& t = j.at("target");
        expect_keys(t, "target",
                    {"position", "velocity", "initial_velocity", "accel", "incline_deg",
                     "capture_band"});
        get_vec3(t, "position", cfg.target.position);
        get_vec3(t, "velocity", cfg.target.velocity);
        cfg.target.initial_velocity = cfg.target.velocity;
        get_vec3(t, "initial_velocity", cfg.target.initial_velocity);
        get_to(t, "accel", cfg.target.accel);
        get_to(t, "incline_deg", cfg.target.incline_deg);
        get_to(t, "capture_band", cfg.target.capture_band);
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        expect_keys(n, "noise",
                    {"detection_halfwidth", "fluct_halfwidth", "wind_mean", "wind_std"});
        get_vec2(n, "detection_halfwidth", cfg.noise.detection_halfwidth);
        get_vec2(n, "fluct_halfwidth", cfg.noise.fluct_halfwidth);
        get_vec2(n, "wind_mean", cfg.noise.wind_mean);
        get_vec2(n, "wind_std", cfg.noise.wind_std);
    }
    if (j.contains("perch")) {
        const auto& p = j.at("perch");
        expect_keys(p, "perch", {"l", "v_n", "v_tau", "g"});
        get_to(p, "l", cfg.perch.l);
        get_to(p, "v_n", cfg.perch.v_n);
        get_to(p, "v_tau", cfg.perch.v_tau);
        get_to(p, "g", cfg.perch.g);
    }
    if (j.contains("success")) {
        const auto& s = j.at("success");
        expect_keys(s, "success", {"p_tau", "v_tau", "v_n", "phi_err"});
        get_range(s, "p_tau", cfg.success.p_tau_range);
        get_range(s, "v_tau", cfg.success.v_tau_range);
        get_range(s, "v_n", cfg.success.v_n_range);
        get_range(s, "phi_err", cfg.success.phi_err_range);
    }
    if (j.contains("constraints")) {
        const auto& c = j.at("constraints");
        expect_keys(c, "constraints",
                    {"v_max", "a_max", "thrust_over_mass", "body_rate_max", "z_min"});
        get_to(c, "v_max", cfg.constraints.v_max);
        get_to(c, "a_max", cfg.constraints.a_max);
        get_range(c, "thrust_over_mass", cfg.constraints.thrust_over_mass);
        get_to(c, "body_rate_max", cfg.constraints.body_rate_max);
        get_to(c, "z_min", cfg.constraints.z_min);
    }
    if (j.contains("vehicle")) {
        const auto& v = j.at("vehicle");
        expect_keys(v, "vehicle",
                    {"mass", "inertia", "l", "att_kp", "att_kd", "pos_kp", "pos_kd", "T_eps",
                     "f_limits", "M_limit"});
        get_to(v, "mass", cfg.vehicle.mass);
        get_to(v, "inertia", cfg.vehicle.inertia);
        get_to(v, "l", cfg.vehicle.l);
        get_to(v, "att_kp", cfg.vehicle.att_kp);
        get_to(v, "att_kd", cfg.vehicle.att_kd);
        get_to(v, "pos_kp", cfg.vehicle.pos_kp);
        get_to(v, "pos_kd", cfg.vehicle.pos_kd);
        get_to(v, "T_eps", cfg.vehicle.T_eps);
        get_range(v, "f_limits", cfg.vehicle.f_limits);
        get_to(v, "M_limit", cfg.vehicle.M_limit);
    }
    if (j.contains("planner")) {
        const auto& p = j.at("planner");
        expect_keys(p, "planner",
                    {"lodw_N", "lodw_T", "k_T", "T_o", "sigma0_p", "sigma0_v", "n_outer",
                     "n_inner", "grid_range", "grid_height", "grid_resolution", "table_path",
                     "ft_window"});
        get_to(p, "lodw_N", cfg.planner.lodw_N);
        get_to(p, "lodw_T", cfg.planner.lodw_T);
        get_to(p, "k_T", cfg.planner.weights.k_T);
        get_to(p, "T_o", cfg.planner.weights.T_o);
        get_vec3(p, "sigma0_p", cfg.planner.sigma0_p);
        get_vec3(p, "sigma0_v", cfg.planner.sigma0_v);
        get_to(p, "n_outer", cfg.planner.sampling.n_outer);
        get_to(p, "n_inner", cfg.planner.sampling.n_inner);
        get_range(p, "grid_range", cfg.planner.grid.range);
        get_range(p, "grid_height", cfg.planner.grid.height);
        get_to(p, "grid_resolution", cfg.planner.grid.resolution);
        get_to(p, "table_path", cfg.planner.table_path);
        get_to(p, "ft_window", cfg.planner.ft_window);
    }
    if (j.contains("reg_weights")) {
        const auto& a = j.at("reg_weights");
        if (!a.is_array() || a.size() != 4) {
            throw ConfigError("'reg_weights' must be a 4-element array");
        }
        for (int i = 0; i < 4; ++i) {
            cfg.reg_weights.gamma[i] = a.at(i).get<double>();
        }
    }
    get_to(j, "f_o_frac", cfg.f_o_frac);
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        expect_keys(s, "sim",
                    {"dt_physics", "control_hz", "t_max", "quad_start_offset",
                     "start_following"});
        get_to(s, "dt_physics", cfg.sim.dt_physics);
        get_to(s, "control_hz", cfg.sim.control_hz);
        get_to(s, "t_max", cfg.sim.t_max);
        get_vec3(s, "quad_start_offset", cfg.sim.quad_start_offset);
        get_to(s, "start_following", cfg.sim.start_following);
    }

    require(cfg.perch.l >= 0.0, "perch.l must be >= 0");
    require(cfg.perch.g > 0.0, "perch.g must be > 0");
    require(cfg.success.p_tau_range[0] < cfg.success.p_tau_range[1], "success.p_tau range order");
    require(cfg.success.v_tau_range[0] < cfg.success.v_tau_range[1], "success.v_tau range order");
    require(cfg.success.v_n_range[0] < cfg.success.v_n_range[1], "success.v_n range order");
    require(cfg.success.phi_err_range[0] < cfg.success.phi_err_range[1],
            "success.phi_err range order");
    require(cfg.constraints.v_max > 0.0 && cfg.constraints.a_max > 0.0,
            "constraint bounds must be positive");
    require(cfg.constraints.thrust_over_mass[0] < cfg.constraints.thrust_over_mass[1],
            "thrust_over_mass range order");
    require(cfg.constraints.body_rate_max > 0.0, "body_rate_max must be positive");
    require(cfg.vehicle.mass > 0.0 && cfg.vehicle.inertia > 0.0, "vehicle physical constants");
    require(cfg.vehicle.f_limits[0] < cfg.vehicle.f_limits[1], "f_limits range order");
    require(cfg.vehicle.M_limit > 0.0, "M_limit must be positive");
    require(cfg.planner.lodw_N >= 1, "planner.lodw_N must be >= 1");
    require(cfg.planner.lodw_T > 0.0, "planner.lodw_T must be positive");
    require(cfg.planner.weights.k_T > 0.0, "planner.k_T must be positive");
    require(cfg.planner.grid.resolution > 0.0, "grid resolution must be positive");
    require(cfg.planner.ft_window > 0.0, "planner.ft_window must be positive");
    require(cfg.planner.grid.range[0] < cfg.planner.grid.range[1], "grid range order");
    require(cfg.planner.grid.height[0] < cfg.planner.grid.height[1], "grid height order");
    require(cfg.planner.sampling.n_outer >= 1 && cfg.planner.sampling.n_inner >= 1,
            "sampling counts must be >= 1");
    require((cfg.noise.detection_halfwidth.array() >= 0.0).all(), "detection half-widths >= 0");
    require((cfg.noise.fluct_halfwidth.array() >= 0.0).all(), "fluctuation half-widths >= 0");
    require(cfg.sim.dt_physics > 0.0 && cfg.sim.control_hz > 0.0 && cfg.sim.t_max > 0.0,
            "sim timing");
    require((cfg.reg_weights.gamma.array() >= 0.0).all() && cfg.reg_weights.gamma.sum() > 0.0,
            "reg_weights must be non-negative, not all zero");

    cfg.constraints.g = cfg.perch.g;
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
    json j;
    j["schema_version"] = 1;
    j["target"] = {{"position", {cfg.target.position.x(), cfg.target.position.y(),
                                 cfg.target.position.z()}},
                   {"velocity", {cfg.target.velocity.x(), cfg.target.velocity.y(),
                                 cfg.target.velocity.z()}},
                   {"initial_velocity",
                    {cfg.target.initial_velocity.x(), cfg.target.initial_velocity.y(),
                     cfg.target.initial_velocity.z()}},
                   {"accel", cfg.target.accel},
                   {"incline_deg", cfg.target.incline_deg},
                   {"capture_band", cfg.target.capture_band}};
    j["noise"] = {{"detection_halfwidth",
                   {cfg.noise.detection_halfwidth[0], cfg.noise.detection_halfwidth[1]}},
                  {"fluct_halfwidth", {cfg.noise.fluct_halfwidth[0], cfg.noise.fluct_halfwidth[1]}},
                  {"wind_mean", {cfg.noise.wind_mean[0], cfg.noise.wind_mean[1]}},
                  {"wind_std", {cfg.noise.wind_std[0], cfg.noise.wind_std[1]}}};
    j["perch"] = {{"l", cfg.perch.l}, {"v_n", cfg.perch.v_n}, {"v_tau", cfg.perch.v_tau},
                  {"g", cfg.perch.g}};
    j["success"] = {{"p_tau", cfg.success.p_tau_range},
                    {"v_tau", cfg.success.v_tau_range},
                    {"v_n", cfg.success.v_n_range},
                    {"phi_err", cfg.success.phi_err_range}};
    j["constraints"] = {{"v_max", cfg.constraints.v_max},
                        {"a_max", cfg.constraints.a_max},
                        {"thrust_over_mass", cfg.constraints.thrust_over_mass},
                        {"body_rate_max", cfg.constraints.body_rate_max},
                        {"z_min", cfg.constraints.z_min}};
    j["vehicle"] = {{"mass", cfg.vehicle.mass},     {"inertia", cfg.vehicle.inertia},
                    {"l", cfg.vehicle.l},           {"att_kp", cfg.vehicle.att_kp},
                    {"att_kd", cfg.vehicle.att_kd}, {"pos_kp", cfg.vehicle.pos_kp},
                    {"pos_kd", cfg.vehicle.pos_kd}, {"T_eps", cfg.vehicle.T_eps},
                    {"f_limits", cfg.vehicle.f_limits}, {"M_limit", cfg.vehicle.M_limit}};
    j["planner"] = {{"lodw_N", cfg.planner.lodw_N},
                    {"lodw_T", cfg.planner.lodw_T},
                    {"k_T", cfg.planner.weights.k_T},
                    {"T_o", cfg.planner.weights.T_o},
                    {"sigma0_p", {cfg.planner.sigma0_p.x(), cfg.planner.sigma0_p.y(),
                                  cfg.planner.sigma0_p.z()}},
                    {"sigma0_v", {cfg.planner.sigma0_v.x(), cfg.planner.sigma0_v.y(),
                                  cfg.planner.sigma0_v.z()}},
                    {"n_outer", cfg.planner.sampling.n_outer},
                    {"n_inner", cfg.planner.sampling.n_inner},
                    {"grid_range", cfg.planner.grid.range},
                    {"grid_height", cfg.planner.grid.height},
                    {"grid_resolution", cfg.planner.grid.resolution},
                    {"table_path", cfg.planner.table_path},
                    {"ft_window", cfg.planner.ft_window}};
    j["reg_weights"] = {cfg.reg_weights.gamma[0], cfg.reg_weights.gamma[1],
                        cfg.reg_weights.gamma[2], cfg.reg_weights.gamma[3]};
    j["f_o_frac"] = cfg.f_o_frac;
    j["sim"] = {{"dt_physics", cfg.sim.dt_physics},
                {"control_hz", cfg.sim.control_hz},
                {"t_max", cfg.sim.t_max},
                {"quad_start_offset",
                 {cfg.sim.quad_start_offset.x(), cfg.sim.quad_start_offset.y(),
                  cfg.sim.quad_start_offset.z()}},
                {"start_following", cfg.sim.start_following}};
    return j;
}

} // namespace perch
