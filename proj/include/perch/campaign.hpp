#pragma once

#include "perch/simulator.hpp"

#include <string>
#include <vector>

namespace perch {

struct CampaignSpec {
    int trials = 50;
    std::vector<std::string> arms; // e.g. {"OW+TR", "OW", "TE"}
    ScenarioConfig scenario;
    uint64_t base_seed = 0;
    int threads = 0;        // 0: PERCHKIT_THREADS env or hardware concurrency
    bool write_csv = false; // per-trial time-series CSVs
};

struct ArmSummary {
    std::string arm;
    int trials = 0;
    int successes = 0;
    int impacted = 0;
    int with_solves = 0;
    double success_rate = 0.0;
    double wilson_lo = 0.0, wilson_hi = 0.0;
    double avg_minTf = 0.0;  // over trials with at least one feasible solve
    double avg_minDis = 0.0;
    double rms_pry = 0.0;    // over impacted trials
    double rmse_vry = 0.0;   // vs the center of the tangential window
    double rmse_vrz = 0.0;   // vs the center of the normal window
};

struct CampaignResult {
    std::vector<ArmSummary> summaries;             // per arm
    std::vector<std::vector<TrialRecord>> records; // [arm][trial]
};

// 95% Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_interval(int successes, int n);

ArmSummary summarize_arm(const std::string& arm, const std::vector<TrialRecord>& recs,
                         const SuccessBounds& sb);

// Paired seeding: trial i uses base_seed + i in every arm, so the environment
// noise stream is identical across arms. Trials run in parallel; a trial that
// throws is recorded as a no-impact failure and the campaign continues.
CampaignResult run_campaign(const CampaignSpec& spec, const LodwTable* table);

nlohmann::json summary_to_json(const CampaignResult& result, const CampaignSpec& spec);

// summary.json, per-trial records, and the plot-data CSVs (solved-duration
// distribution, minT_f/minDis scatter).
void write_campaign_outputs(const CampaignResult& result, const CampaignSpec& spec,
                            const std::string& out_dir);

// Rebuilds the scalar fields summarize_arm needs from a record file.
TrialRecord trial_from_json(const nlohmann::json& j);

int resolve_thread_count(int requested);

} // namespace perch
