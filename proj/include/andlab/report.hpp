#pragma once

#include <string>

#include "experiments.hpp"
#include "io.hpp"

namespace andlab {

inline Json as_json(const Thresholds& t) {
    return {{"alpha", t.alpha}, {"epsilon", t.epsilon}, {"delta", t.delta}, {"gamma", t.gamma}, {"nu", t.nu}};
}

// threads is deliberately absent: reports must not depend on it
inline Json as_json(const ExperimentConfig& c) {
    Json j = {{"schema", 1},
              {"L", c.L},
              {"lambda_bar", c.lambda_bar},
              {"trials", c.trials},
              {"seed", c.seed},
              {"event", to_string(c.event)},
              {"thresholds", as_json(c.thresholds)},
              {"potential", to_string(c.potential)},
              {"b", c.b},
              {"directions", c.directions}};
    j["threshold_log"] = c.threshold_log ? Json(*c.threshold_log) : Json(nullptr);
    Json sched = Json::array();
    for (const auto& [L, m] : c.scale_schedule) sched.push_back({L, m});
    j["scale_schedule"] = sched;
    return j;
}

inline Json as_json(const BaseCaseConfig& c) {
    return {{"schema", 1},         {"L", c.L},         {"epsilon", c.epsilon}, {"delta", c.delta},
            {"trials", c.trials},  {"seed", c.seed},   {"C_net", c.C_net},     {"freeze_grid_one", c.freeze_grid_one}};
}

inline Json meta_json(const std::string& command, const Json& config) {
    return {{"command", command}, {"version", kLibraryVersion}, {"config", config}};
}

inline Json as_json(const Proportion& p) {
    return {{"estimate", p.estimate}, {"wilson_lo", p.lo}, {"wilson_hi", p.hi}, {"successes", p.successes}, {"trials", p.trials}};
}

inline Json as_json(const EstimateReport& r, const Json& meta) {
    Json j = {{"meta", meta},
              {"event", r.event},
              {"estimate", r.estimate.estimate},
              {"wilson_lo", r.estimate.lo},
              {"wilson_hi", r.estimate.hi},
              {"successes", r.estimate.successes},
              {"trials", r.estimate.trials},
              {"near_singular", r.near_singular},
              {"note", r.note}};
    if (r.secondary) j["secondary"] = {{"name", r.secondary_name}, {"proportion", as_json(*r.secondary)}};
    return j;
}

inline CsvTable trials_csv(const EstimateReport& r) {
    CsvTable t;
    t.header = {"trial", "seed", "outcome", "near_singular", r.metric_name.empty() ? "metric" : r.metric_name,
                r.aux_name.empty() ? "aux" : r.aux_name, r.count_name.empty() ? "count" : r.count_name,
                r.secondary_name.empty() ? "secondary" : r.secondary_name};
    for (const auto& x : r.log)
        t.add({std::to_string(x.trial), std::to_string(x.seed), x.outcome ? "1" : "0", x.near_singular ? "1" : "0",
               fmt(x.metric), fmt(x.aux), std::to_string(x.count), x.secondary ? "1" : "0"});
    return t;
}

inline CsvTable sweep_rows_csv(const SweepReport& s) {
    CsvTable t;
    t.header = {"L", "trial", "seed", "near_singular", "A", "m"};
    for (const auto& r : s.rows)
        t.add({std::to_string(r.L), std::to_string(r.trial), std::to_string(r.seed), r.near_singular ? "1" : "0", fmt(r.A),
               fmt(r.m)});
    return t;
}

inline CsvTable sweep_summary_csv(const SweepReport& s) {
    CsvTable t;
    t.header = {"L", "fitted", "m_q10", "m_q50", "m_q90", "A_q10", "A_q50", "A_q90"};
    for (const auto& r : s.summary)
        t.add({std::to_string(r.L), std::to_string(r.fitted), fmt(r.m_q10), fmt(r.m_q50), fmt(r.m_q90), fmt(r.A_q10),
               fmt(r.A_q50), fmt(r.A_q90)});
    return t;
}

}  // namespace andlab
