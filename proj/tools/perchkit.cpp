#include "perch/campaign.hpp"
#include "perch/config.hpp"
#include "perch/lodw.hpp"
#include "perch/rng.hpp"
#include "perch/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissingTable = 3;

uint64_t constraint_hash(const perch::ConstraintSet& c) {
    uint64_t h = 0;
    for (double x : {c.v_max, c.a_max, c.thrust_over_mass[0], c.thrust_over_mass[1],
                     c.body_rate_max, c.z_min, c.g}) {
        uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        h = perch::rng::mix(h ^ bits);
    }
    return h;
}

perch::LodwTable generate_table(const perch::ScenarioConfig& cfg, uint64_t seed) {
    const perch::SurfaceState surf = cfg.initial_surface();
    const perch::State9 anchor = perch::terminal_from_surface(surf, cfg.perch);
    return perch::seek_lodws(anchor, surf.Z_s, cfg.planner.lodw_N, cfg.planner.lodw_T,
                             cfg.start_var(), cfg.noise_spec(), cfg.planner.grid,
                             cfg.constraints, seed, cfg.planner.sampling);
}

int cmd_gen_lodw(const std::string& config_path, uint64_t seed, std::string out_path) {
    const perch::ScenarioConfig cfg = perch::load_scenario(config_path);
    if (out_path.empty()) {
        out_path = cfg.planner.table_path.empty() ? "lodw_table.json" : cfg.planner.table_path;
    }
    const perch::LodwTable table = generate_table(cfg, seed);

    const perch::NoiseSpec ns = cfg.noise_spec();
    nlohmann::json prov;
    prov["seed"] = seed;
    prov["grid"] = {{"range", cfg.planner.grid.range},
                    {"height", cfg.planner.grid.height},
                    {"resolution", cfg.planner.grid.resolution}};
    prov["noise"] = {{"sigma_p", {ns.sigma_p.x(), ns.sigma_p.y(), ns.sigma_p.z()}},
                     {"sigma_v", {ns.sigma_v.x(), ns.sigma_v.y(), ns.sigma_v.z()}}};
    prov["constraint_hash"] = constraint_hash(cfg.constraints);
    perch::save_lodw_table(table, out_path, prov);
    std::cout << "wrote " << out_path << " (" << table.waypoints.size() << " entries)\n";
    return 0;
}

perch::LodwTable load_table_or_exit(const perch::ScenarioConfig& cfg,
                                    const std::string& table_flag) {
    const std::string path = table_flag.empty() ? cfg.planner.table_path : table_flag;
    if (path.empty() || !std::filesystem::exists(path)) {
        std::cerr << "error: OW arm needs an LODW table (run gen-lodw first, got '" << path
                  << "')\n";
        std::exit(kExitMissingTable);
    }
    return perch::load_lodw_table(path);
}

int cmd_run_trial(const std::string& config_path, const std::string& arm_name, uint64_t seed,
                  const std::string& out_dir, const std::string& table_flag, bool csv) {
    const perch::ScenarioConfig cfg = perch::load_scenario(config_path);
    const perch::Arm arm = perch::Arm::parse(arm_name);
    perch::LodwTable table;
    const perch::LodwTable* table_ptr = nullptr;
    if (arm.needs_table()) {
        table = load_table_or_exit(cfg, table_flag);
        table_ptr = &table;
    }
    perch::TrialRecord rec = perch::run_trial(cfg, arm, seed, table_ptr);
    rec.arm = arm_name;

    std::filesystem::create_directories(out_dir);
    std::string tag = arm_name;
    std::replace(tag.begin(), tag.end(), '+', '_');
    const std::string stem = out_dir + "/trial_" + tag + "_seed" + std::to_string(seed);
    {
        std::ofstream out(stem + ".json");
        out << perch::trial_to_json(rec).dump(2) << "\n";
    }
    if (csv) {
        perch::write_trial_csv(rec, stem + ".csv");
    }
    perch::write_plan_records_jsonl(rec, stem + ".plans.jsonl");
    if (rec.reg.solved) {
        perch::write_reg_records_jsonl(rec, stem + ".reg.jsonl");
    }
    const char* oc = rec.outcome == perch::TrialOutcome::success   ? "success"
                     : rec.outcome == perch::TrialOutcome::fail    ? "fail"
                                                                   : "no-impact";
    std::cout << arm_name << " seed " << seed << ": " << oc << "  minT_f=" << rec.minT_f
              << " minDis=" << rec.minDis << "\n";
    return 0;
}

void print_summaries(const std::vector<perch::ArmSummary>& summaries) {
    std::printf("%-8s %8s %9s %9s %9s %9s %9s %9s\n", "arm", "success", "rate", "minT_f",
                "minDis", "RMSpry", "RMSEvry", "RMSEvrz");
    for (const auto& s : summaries) {
        std::printf("%-8s %4d/%-3d %9.3f %9.3f %9.3f %9.3f %9.3f %9.3f\n", s.arm.c_str(),
                    s.successes, s.trials, s.success_rate, s.avg_minTf, s.avg_minDis, s.rms_pry,
                    s.rmse_vry, s.rmse_vrz);
        std::printf("%-8s wilson95 [%.3f, %.3f]\n", "", s.wilson_lo, s.wilson_hi);
    }
}

int cmd_campaign(const std::string& config_path, const std::vector<std::string>& arms,
                 int trials, uint64_t seed, const std::string& out_dir,
                 const std::string& table_flag, bool csv, int threads) {
    perch::CampaignSpec spec;
    spec.scenario = perch::load_scenario(config_path);
    spec.arms = arms;
    spec.trials = trials;
    spec.base_seed = seed;
    spec.threads = threads;
    spec.write_csv = csv;

    perch::LodwTable table;
    const perch::LodwTable* table_ptr = nullptr;
    for (const auto& a : arms) {
        if (perch::Arm::parse(a).needs_table()) {
            table = load_table_or_exit(spec.scenario, table_flag);
            table_ptr = &table;
            break;
        }
    }
    const perch::CampaignResult result = perch::run_campaign(spec, table_ptr);
    if (!out_dir.empty()) {
        perch::write_campaign_outputs(result, spec, out_dir);
        std::cout << "outputs in " << out_dir << "\n";
    }
    print_summaries(result.summaries);
    return 0;
}

int cmd_report(const std::string& dir, const perch::SuccessBounds& sb) {
    std::map<std::string, std::vector<perch::TrialRecord>> by_arm;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trial_", 0) != 0 || entry.path().extension() != ".json") {
            continue;
        }
        std::ifstream in(entry.path());
        nlohmann::json j;
        in >> j;
        perch::TrialRecord rec = perch::trial_from_json(j);
        by_arm[rec.arm].push_back(std::move(rec));
    }
    if (by_arm.empty()) {
        std::cerr << "no trial records in " << dir << "\n";
        return 1;
    }
    std::vector<perch::ArmSummary> summaries;
    for (const auto& [arm, recs] : by_arm) {
        summaries.push_back(perch::summarize_arm(arm, recs, sb));
    }
    print_summaries(summaries);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"planning, thrust regulation and deterministic trials for perching on moving "
                 "inclined surfaces"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", table_flag, arm_name = "OW", report_dir;
    std::vector<std::string> arms = {"OW", "TE"};
    uint64_t seed = 0;
    int trials = 50;
    int threads = 0;
    bool csv = false;

    auto* gen = app.add_subcommand("gen-lodw", "generate a waypoint table");
    gen->add_option("--config", config_path, "scenario config file")->required();
    gen->add_option("--seed", seed, "search seed");
    std::string gen_out;
    gen->add_option("--out", gen_out, "output table path (default: planner.table_path)");

    auto* run = app.add_subcommand("run-trial", "run one deterministic trial");
    run->add_option("--config", config_path, "scenario config file")->required();
    run->add_option("--arm", arm_name, "planner arm (OW+TR, OW, OW+AT, TE, TE+AT)");
    run->add_option("--seed", seed, "trial seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--table", table_flag, "LODW table path override");
    run->add_flag("--csv", csv, "also write the time-series CSV");

    auto* camp = app.add_subcommand("campaign", "paired-seed comparison campaign");
    camp->add_option("--config", config_path, "scenario config file")->required();
    camp->add_option("--arm", arms, "arms to run (repeatable)");
    camp->add_option("--trials", trials, "trials per arm");
    camp->add_option("--seed", seed, "base seed (trial i uses seed+i)");
    camp->add_option("--out", out_dir, "output directory");
    camp->add_option("--table", table_flag, "LODW table path override");
    camp->add_option("--threads", threads, "parallel trials (0: PERCHKIT_THREADS or auto)");
    camp->add_flag("--csv", csv, "also write per-trial time-series CSVs");

    auto* rep = app.add_subcommand("report", "recompute a summary from trial records");
    rep->add_option("--dir", report_dir, "directory holding trial_*.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_gen_lodw(config_path, seed, gen_out);
        }
        if (run->parsed()) {
            return cmd_run_trial(config_path, arm_name, seed, out_dir, table_flag, csv);
        }
        if (camp->parsed()) {
            return cmd_campaign(config_path, arms, trials, seed, out_dir, table_flag, csv,
                                threads);
        }
        if (rep->parsed()) {
            return cmd_report(report_dir, perch::SuccessBounds{});
        }
    } catch (const perch::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const perch::EmptyRegionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
