#include "perch/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

namespace perch {

std::pair<double, double> wilson_interval(int successes, int n) {
    if (n <= 0) {
        return {0.0, 1.0};
    }
    const double z = 1.959963984540054;
    const double p = static_cast<double>(successes) / n;
    const double z2n = z * z / n;
    const double center = (p + z2n / 2.0) / (1.0 + z2n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / (1.0 + z2n);
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

ArmSummary summarize_arm(const std::string& arm, const std::vector<TrialRecord>& recs,
                         const SuccessBounds& sb) {
    ArmSummary s;
    s.arm = arm;
    s.trials = static_cast<int>(recs.size());
    const double vry_center = 0.5 * (sb.v_tau_range[0] + sb.v_tau_range[1]);
    const double vrz_center = 0.5 * (sb.v_n_range[0] + sb.v_n_range[1]);
    double sum_tf = 0.0, sum_dis = 0.0, sq_pry = 0.0, sq_vry = 0.0, sq_vrz = 0.0;
    for (const auto& r : recs) {
        if (r.outcome == TrialOutcome::success) {
            ++s.successes;
        }
        if (r.any_feasible_solve) {
            ++s.with_solves;
            sum_tf += r.minT_f;
            sum_dis += r.minDis;
        }
        if (r.impact.impacted) {
            ++s.impacted;
            sq_pry += r.impact.p_ry * r.impact.p_ry;
            sq_vry += (r.impact.v_rtau - vry_center) * (r.impact.v_rtau - vry_center);
            sq_vrz += (r.impact.v_rn - vrz_center) * (r.impact.v_rn - vrz_center);
        }
    }
    s.success_rate = s.trials > 0 ? static_cast<double>(s.successes) / s.trials : 0.0;
    std::tie(s.wilson_lo, s.wilson_hi) = wilson_interval(s.successes, s.trials);
    if (s.with_solves > 0) {
        s.avg_minTf = sum_tf / s.with_solves;
        s.avg_minDis = sum_dis / s.with_solves;
    }
    if (s.impacted > 0) {
        s.rms_pry = std::sqrt(sq_pry / s.impacted);
        s.rmse_vry = std::sqrt(sq_vry / s.impacted);
        s.rmse_vrz = std::sqrt(sq_vrz / s.impacted);
    }
    return s;
}

int resolve_thread_count(int requested) {
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("PERCHKIT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) {
            return n;
        }
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

CampaignResult run_campaign(const CampaignSpec& spec, const LodwTable* table) {
    if (spec.trials < 1 || spec.arms.empty()) {
        throw ConfigError("campaign needs trials >= 1 and at least one arm");
    }
    std::vector<Arm> arms;
    arms.reserve(spec.arms.size());
    for (const auto& name : spec.arms) {
        arms.push_back(Arm::parse(name));
    }

    CampaignResult result;
    result.records.assign(arms.size(), std::vector<TrialRecord>(spec.trials));

    const int n_threads = std::min(resolve_thread_count(spec.threads), spec.trials);
    for (size_t ai = 0; ai < arms.size(); ++ai) {
        const Arm& arm = arms[ai];
        auto& slot = result.records[ai];
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int i = next.fetch_add(1); i < spec.trials; i = next.fetch_add(1)) {
                const uint64_t seed = spec.base_seed + static_cast<uint64_t>(i);
                try {
                    slot[i] = run_trial(spec.scenario, arm, seed, table);
                } catch (const std::exception& e) {
                    TrialRecord rec;
                    rec.arm = spec.arms[ai];
                    rec.seed = seed;
                    rec.outcome = TrialOutcome::no_impact;
                    rec.abort_reason = std::string("trial crashed: ") + e.what();
                    slot[i] = std::move(rec);
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int w = 0; w < n_threads; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
        // preserve the user-facing label (e.g. "OW+AT") in the records
        for (auto& rec : slot) {
            rec.arm = spec.arms[ai];
        }
        result.summaries.push_back(
            summarize_arm(spec.arms[ai], slot, spec.scenario.success));
    }
    return result;
}

nlohmann::json summary_to_json(const CampaignResult& result, const CampaignSpec& spec) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["trials"] = spec.trials;
    j["base_seed"] = spec.base_seed;
    j["arms"] = nlohmann::json::array();
    for (const auto& s : result.summaries) {
        j["arms"].push_back({{"arm", s.arm},
                             {"trials", s.trials},
                             {"successes", s.successes},
                             {"impacted", s.impacted},
                             {"with_solves", s.with_solves},
                             {"success_rate", s.success_rate},
                             {"wilson_95", {s.wilson_lo, s.wilson_hi}},
                             {"avg_minTf", s.avg_minTf},
                             {"avg_minDis", s.avg_minDis},
                             {"rms_pry", s.rms_pry},
                             {"rmse_vry", s.rmse_vry},
                             {"rmse_vrz", s.rmse_vrz}});
    }
    return j;
}

void write_campaign_outputs(const CampaignResult& result, const CampaignSpec& spec,
                            const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    {
        std::ofstream out(out_dir + "/summary.json");
        out << summary_to_json(result, spec).dump(2) << "\n";
    }
    {
        std::ofstream tf(out_dir + "/tf_solves.csv");
        tf << "arm,trial,t,T_f\n";
        tf.precision(17);
        std::ofstream sc(out_dir + "/min_scatter.csv");
        sc << "arm,trial,minT_f,minDis,outcome\n";
        sc.precision(17);
        for (size_t ai = 0; ai < result.records.size(); ++ai) {
            for (int i = 0; i < static_cast<int>(result.records[ai].size()); ++i) {
                const auto& rec = result.records[ai][i];
                for (const auto& ev : rec.solves) {
                    tf << rec.arm << ',' << i << ',' << ev.t << ',' << ev.T_f << '\n';
                }
                if (rec.any_feasible_solve) {
                    const char* oc = rec.outcome == TrialOutcome::success   ? "success"
                                     : rec.outcome == TrialOutcome::fail    ? "fail"
                                                                            : "no-impact";
                    sc << rec.arm << ',' << i << ',' << rec.minT_f << ',' << rec.minDis << ','
                       << oc << '\n';
                }
            }
        }
    }
    for (size_t ai = 0; ai < result.records.size(); ++ai) {
        std::string arm_tag = result.summaries[ai].arm;
        std::replace(arm_tag.begin(), arm_tag.end(), '+', '_');
        for (int i = 0; i < static_cast<int>(result.records[ai].size()); ++i) {
            const auto& rec = result.records[ai][i];
            const std::string stem =
                out_dir + "/trial_" + arm_tag + "_" + std::to_string(i);
            std::ofstream out(stem + ".json");
            out << trial_to_json(rec).dump(2) << "\n";
            if (spec.write_csv) {
                write_trial_csv(rec, stem + ".csv");
            }
        }
    }
}

TrialRecord trial_from_json(const nlohmann::json& j) {
    TrialRecord rec;
    rec.arm = j.at("arm").get<std::string>();
    rec.seed = j.at("seed").get<uint64_t>();
    const std::string oc = j.at("outcome").get<std::string>();
    rec.outcome = oc == "success" ? TrialOutcome::success
                  : oc == "fail"  ? TrialOutcome::fail
                                  : TrialOutcome::no_impact;
    const auto& imp = j.at("impact");
    rec.impact.impacted = imp.at("impacted").get<bool>();
    rec.impact.t = imp.at("t").get<double>();
    rec.impact.p_ry = imp.at("p_ry").get<double>();
    rec.impact.v_rtau = imp.at("v_rtau").get<double>();
    rec.impact.v_rn = imp.at("v_rn").get<double>();
    rec.impact.phi_c = imp.at("phi_c").get<double>();
    rec.impact.phi_err = imp.at("phi_err").get<double>();
    rec.any_feasible_solve = j.at("any_feasible_solve").get<bool>();
    rec.minT_f = j.at("minT_f").get<double>();
    rec.minDis = j.at("minDis").get<double>();
    rec.stage2_entry = j.at("stage2_entry").get<double>();
    rec.t_end = j.at("t_end").get<double>();
    rec.abort_reason = j.at("abort_reason").get<std::string>();
    if (j.contains("solves")) {
        for (const auto& s : j.at("solves")) {
            rec.solves.push_back({s.at("t").get<double>(), s.at("T_f").get<double>(),
                                  s.at("dist").get<double>()});
        }
    }
    return rec;
}

} // namespace perch
