#pragma once

#include <string>

#include <json.hpp>

#include "sleepsim/analytic.hpp"
#include "sleepsim/policy_manager.hpp"
#include "sleepsim/predictor.hpp"
#include "sleepsim/runtime_engine.hpp"
#include "sleepsim/sim_core.hpp"
#include "sleepsim/text.hpp"

namespace sleepsim {

// CSV column orders below are part of the file-format contract; do not
// reorder.

inline std::string sim_result_csv_header() {
    return "f,sleep_label,E_R,norm_E_R,E_P,p95,wakeups";
}

inline std::string sim_result_csv_row(const Policy& policy, const SimResult& r) {
    return format_double(policy.f) + ',' + policy.sleep_label() + ',' +
           format_double(r.mean_response_s) + ',' + format_double(r.normalized_mean_response) +
           ',' + format_double(r.mean_power_w) + ',' + format_double(r.response_p95_s) + ',' +
           format_int(static_cast<std::int64_t>(r.wakeups));
}

inline nlohmann::json sim_result_json(const Policy& policy, const SimResult& r) {
    return nlohmann::json{{"f", policy.f},
                          {"sleep_label", policy.sleep_label()},
                          {"E_R", r.mean_response_s},
                          {"norm_E_R", r.normalized_mean_response},
                          {"E_P", r.mean_power_w},
                          {"p95", r.response_p95_s},
                          {"wakeups", r.wakeups}};
}

inline std::string frontier_csv_header() {
    return "curve," + sim_result_csv_header();
}

inline std::string frontier_csv_row(const FrontierPoint& p) {
    return p.policy.sleep_label() + ',' + sim_result_csv_row(p.policy, p.result);
}

inline nlohmann::json policy_choice_json(const PolicyChoice& c) {
    nlohmann::json j = sim_result_json(c.policy, c.predicted);
    j["feasible"] = c.feasible;
    j["margin"] = c.margin;
    return j;
}

inline nlohmann::json analytic_report_json(const analytic::Report& r) {
    nlohmann::json j{{"L", r.cycle_length},
                     {"E_D", r.setup_mean},
                     {"E_D2", r.setup_second_moment},
                     {"E_R", r.mean_response_s},
                     {"E_P", r.mean_power_w}};
    if (r.tail) j["tail"] = *r.tail;
    return j;
}

inline std::string prediction_csv_header() {
    return "minute,predicted,actual,error,reset";
}

inline std::string prediction_csv_row(const PredictionRecord& rec) {
    return format_int(rec.minute) + ',' + format_double(rec.predicted) + ',' +
           format_double(rec.actual) + ',' + format_double(rec.error) + ',' +
           (rec.reset ? "1" : "0");
}

inline std::string epoch_csv_header() {
    return "epoch,predicted_rho,realized_rho,f_selected,f_applied,sleep_label,completed_jobs,"
           "mean_response_s,norm_mean_response,mean_power_w,carried_queue";
}

inline std::string epoch_csv_row(const EpochReport& r) {
    return format_int(r.epoch) + ',' + format_double(r.predicted_rho) + ',' +
           format_double(r.realized_rho) + ',' + format_double(r.f_selected) + ',' +
           format_double(r.f_applied) + ',' + r.sleep_label + ',' +
           format_int(static_cast<std::int64_t>(r.completed_jobs)) + ',' +
           format_double(r.mean_response_s) + ',' + format_double(r.norm_mean_response) + ',' +
           format_double(r.mean_power_w) + ',' + format_int(static_cast<std::int64_t>(r.carried_queue));
}

inline nlohmann::json run_summary_json(const RunSummary& s) {
    nlohmann::json j{{"strategy", s.strategy.name()},
                     {"total_jobs", s.total_jobs},
                     {"mean_response_s", s.mean_response_s},
                     {"norm_mean_response", s.norm_mean_response},
                     {"mean_power_w", s.mean_power_w},
                     {"budget_norm", s.budget_norm},
                     {"meets_budget", s.meets_budget}};
    j["selected_states"] = nlohmann::json::object();
    for (const auto& [label, count] : s.selection_histogram) j["selected_states"][label] = count;
    j["residency"] = nlohmann::json::object();
    for (const auto& [label, frac] : s.residency) j["residency"][label] = frac;
    return j;
}

inline nlohmann::json comparison_json(const ComparisonReport& report) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& entry : report.entries) j.push_back(run_summary_json(entry));
    return j;
}

} // namespace sleepsim
