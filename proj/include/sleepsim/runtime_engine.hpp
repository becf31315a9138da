#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sleepsim/errors.hpp"
#include "sleepsim/policy_manager.hpp"
#include "sleepsim/predictor.hpp"
#include "sleepsim/sim_core.hpp"
#include "sleepsim/workload.hpp"

namespace sleepsim {

// ---------------------------------------------------------------------------
// The online loop: per epoch, predict the next utilization, rescale the
// logged jobs to it, re-select the minimum-power policy under the QoS
// budget, optionally boost the frequency as a guard band, then serve the
// epoch's real arrivals under the chosen policy with queue state carried
// across epoch boundaries.
// ---------------------------------------------------------------------------

struct StrategyId {
    enum class Kind { SS, SSFixed, DvfsOnly, RaceToHalt };

    Kind kind = Kind::SS;
    std::string state_label; // SSFixed / RaceToHalt

    std::string name() const {
        switch (kind) {
            case Kind::SS: return "SS";
            case Kind::SSFixed: return "SS(" + state_label + ")";
            case Kind::DvfsOnly: return "DVFS";
            case Kind::RaceToHalt: return "R2H(" + state_label + ")";
        }
        return "?";
    }

    /// Accepts "SS", "SS:<state>", "DVFS", "R2H:<state>"; states may be
    /// abbreviated C-names (C3 -> C3S0i).
    static StrategyId parse(std::string_view token) {
        const auto canon_state = [](std::string_view s) -> std::string {
            if (s == "C0i" || s == "C0iS0i") return "C0iS0i";
            if (s == "C1" || s == "C1S0i") return "C1S0i";
            if (s == "C3" || s == "C3S0i") return "C3S0i";
            if (s == "C6" || s == "C6S0i") return "C6S0i";
            if (s == "C6S3") return "C6S3";
            throw ConfigError("unknown sleep state '" + std::string(s) + "'");
        };
        if (token == "SS") return {Kind::SS, ""};
        if (token == "DVFS") return {Kind::DvfsOnly, ""};
        if (token.rfind("SS:", 0) == 0) return {Kind::SSFixed, canon_state(token.substr(3))};
        if (token.rfind("R2H:", 0) == 0) return {Kind::RaceToHalt, canon_state(token.substr(4))};
        throw ConfigError("unknown strategy '" + std::string(token) + "'");
    }
};

enum class PredictorChoice { Naive, Lms, LmsCusum, Offline };

inline std::string_view to_string(PredictorChoice c) {
    switch (c) {
        case PredictorChoice::Naive: return "naive";
        case PredictorChoice::Lms: return "lms";
        case PredictorChoice::LmsCusum: return "lms_cusum";
        case PredictorChoice::Offline: return "offline";
    }
    return "?";
}

inline PredictorChoice predictor_choice_from(std::string_view name) {
    if (name == "naive") return PredictorChoice::Naive;
    if (name == "lms") return PredictorChoice::Lms;
    if (name == "lms_cusum") return PredictorChoice::LmsCusum;
    if (name == "offline") return PredictorChoice::Offline;
    throw ConfigError("unknown predictor '" + std::string(name) + "'");
}

/// What the policy manager evaluates candidates on each epoch: the logged
/// jobs of recent epochs rescaled to the prediction (default), or a fixed
/// synthetic stream regenerated from the workload specs at the predicted
/// utilization.
enum class EvalSource { ReplayLog, Synthetic };

struct EpochConfig {
    int epoch_minutes = 5;  // T
    double alpha = 0.0;     // over-provisioning boost factor
    PredictorChoice predictor = PredictorChoice::LmsCusum;
    PredictorParams predictor_params;
    QoSConstraint qos = QoSConstraint::mean_budget(0.8);
    double f_step = 0.01;
    double beta = 1.0;
    std::size_t eval_jobs = 10000; // rolling job-log cap / bootstrap size
    EvalSource eval_source = EvalSource::ReplayLog;
    unsigned parallelism = 1;

    void validate() const {
        if (epoch_minutes < 1) throw ConfigError("epoch length must be >= 1 minute");
        if (alpha < 0.0) throw ConfigError("over-provisioning factor must be >= 0");
        if (eval_jobs < 1) throw ConfigError("evaluation job budget must be >= 1");
    }
};

/// Guard-band frequency boost: when the previous epoch's delay was within
/// budget, run the next one faster to absorb unpredicted surges.
inline double over_provision(double f_selected, double last_epoch_mean_delay_s,
                             double budget_delay_s, double alpha) {
    if (!(f_selected > 0.0) || f_selected > 1.0) throw ConfigError("frequency must be in (0,1]");
    if (last_epoch_mean_delay_s < budget_delay_s) {
        return std::min(1.0, f_selected * (1.0 + alpha));
    }
    return f_selected;
}

/// Jobs for the whole trace, one minute at a time: inter-arrival gaps are
/// scaled so each minute realizes its utilization sample. Depends only on
/// (trace, workload, seed), so every strategy in a comparison sees the same
/// realization.
inline JobStream materialize_trace_jobs(const UtilizationTrace& trace, const ArrivalSpec& arrivals,
                                        const ServiceSpec& service, std::uint64_t seed) {
    Sampler gap(arrivals.gap, derive_seed(seed, 11));
    Sampler demand(service.demand, derive_seed(seed, 12));
    const double rho_spec = service.demand.mean_value() / arrivals.gap.mean_value();
    JobStream out;
    out.seed = seed;
    for (std::size_t m = 0; m < trace.rho.size(); ++m) {
        const double rho_m = trace.rho[m];
        if (rho_m <= 0.0) continue;
        const double scale = rho_spec / rho_m;
        const double minute_end = 60.0 * static_cast<double>(m + 1);
        double t = 60.0 * static_cast<double>(m);
        while (true) {
            t += gap.draw() * scale;
            if (t >= minute_end) break;
            out.jobs.push_back({t, demand.draw()});
        }
    }
    return out;
}

struct EpochReport {
    std::int64_t epoch = 0;
    double predicted_rho = std::numeric_limits<double>::quiet_NaN(); // NaN: no prediction (R2H)
    double realized_rho = 0.0;
    double f_selected = 1.0;
    double f_applied = 1.0;
    std::string sleep_label;
    std::uint64_t completed_jobs = 0;   // jobs departing within this epoch
    double mean_response_s = 0.0;       // over jobs completed in this epoch
    double norm_mean_response = 0.0;    // normalized by the design service rate
    double mean_power_w = 0.0;
    std::uint64_t carried_queue = 0;    // jobs still in flight at the boundary
};

struct RunSummary {
    StrategyId strategy;
    std::vector<EpochReport> epochs;
    std::uint64_t total_jobs = 0;
    double mean_response_s = 0.0;
    double norm_mean_response = 0.0;
    double mean_power_w = 0.0;
    double budget_norm = 0.0;
    bool meets_budget = false;
    std::map<std::string, std::uint64_t> selection_histogram; // sleep label -> epochs
    std::map<std::string, double> residency;                  // label -> fraction of run time
};

namespace detail {

struct EpochBins {
    std::vector<double> energy_j;
    std::vector<double> duration_s;
    std::vector<double> response_sum_s;
    std::vector<std::uint64_t> completed;

    explicit EpochBins(std::size_t n)
        : energy_j(n, 0.0), duration_s(n, 0.0), response_sum_s(n, 0.0), completed(n, 0) {}
};

/// Split [t0, t1) at epoch boundaries; time past the last boundary stays in
/// the last bin.
inline void deposit(EpochBins& bins, double epoch_len_s, double t0, double t1, double power_w) {
    const std::size_t n = bins.energy_j.size();
    while (t0 < t1) {
        std::size_t e = static_cast<std::size_t>(t0 / epoch_len_s);
        if (e >= n) e = n - 1;
        const double boundary = (e + 1 < n) ? (static_cast<double>(e + 1) * epoch_len_s) : t1;
        const double seg_end = std::min(t1, boundary);
        bins.energy_j[e] += (seg_end - t0) * power_w;
        bins.duration_s[e] += seg_end - t0;
        if (seg_end <= t0) break; // numeric guard
        t0 = seg_end;
    }
}

} // namespace detail

/// Execute one strategy over the trace. `jobs` must come from
/// materialize_trace_jobs on the same trace so comparisons stay paired.
inline RunSummary run_strategy(const UtilizationTrace& trace, const JobStream& jobs,
                               const ArrivalSpec& arrivals, const ServiceSpec& service,
                               const EpochConfig& cfg, const StrategyId& strategy,
                               std::uint64_t seed, const PowerTable& table) {
    cfg.validate();
    const std::size_t T = static_cast<std::size_t>(cfg.epoch_minutes);
    const std::size_t n_epochs = trace.rho.size() / T;
    if (n_epochs < 2) throw TraceTooShort("trace must cover at least two epochs");
    const double epoch_len = 60.0 * static_cast<double>(T);
    const double run_end = epoch_len * static_cast<double>(n_epochs);

    const double mu_design = service.rate();
    const double budget_delay = 1.0 / ((1.0 - cfg.qos.rho_b) * mu_design);
    const bool uses_prediction = strategy.kind != StrategyId::Kind::RaceToHalt;
    const bool uses_selection = strategy.kind != StrategyId::Kind::RaceToHalt;

    const auto online_kind = [&] {
        switch (cfg.predictor) {
            case PredictorChoice::Naive: return PredictorKind::Naive;
            case PredictorChoice::Lms: return PredictorKind::Lms;
            default: return PredictorKind::LmsCusum; // Offline never consults it
        }
    }();
    Predictor online(online_kind, cfg.predictor_params);

    // Bootstrap evaluation stream for the first epoch (and whenever the log
    // is empty): synthetic jobs at the trace's opening utilization.
    const JobStream bootstrap =
        generate(arrivals, service, cfg.eval_jobs, derive_seed(seed, 0xb00757));

    detail::EpochBins bins(n_epochs);
    std::map<std::string, double> residency_s;
    RunSummary summary;
    summary.strategy = strategy;
    summary.budget_norm = cfg.qos.budget;

    std::vector<Job> log; // rolling job log, capped at cfg.eval_jobs
    double free_at = 0.0;
    std::optional<double> prev_epoch_delay; // mean response of last epoch's completions
    Policy last_policy{1.0, SleepSequence{}};

    std::size_t job_cursor = 0;
    for (std::size_t e = 0; e < n_epochs; ++e) {
        const std::size_t m0 = e * T;
        const double w0 = epoch_len * static_cast<double>(e);
        const double w1 = w0 + epoch_len;

        // (a) predict the epoch's opening utilization
        double predicted = std::numeric_limits<double>::quiet_NaN();
        bool predicted_pending = false;
        if (uses_prediction) {
            if (cfg.predictor == PredictorChoice::Offline) {
                predicted = trace.rho[m0];
            } else if (online.has_history()) {
                predicted = online.predict(static_cast<std::int64_t>(m0));
                predicted_pending = true;
            } else {
                predicted = trace.rho.front();
            }
        }
        const double target_rho = std::clamp(uses_prediction ? predicted : 0.5, 0.01, 0.99);

        // (b) evaluation stream: last epochs' logged jobs rescaled to the
        // prediction; synthetic bootstrap until a log exists
        Policy selected;
        std::size_t selected_option = 0;
        const PolicyGrid* grid_ptr = nullptr;
        PolicyGrid grid;
        if (uses_selection) {
            JobStream eval;
            if (cfg.eval_source == EvalSource::Synthetic || log.empty()) {
                eval = bootstrap;
            } else {
                eval.jobs.reserve(log.size());
                const double t_base = log.front().arrival_s;
                for (const Job& j : log) eval.jobs.push_back({j.arrival_s - t_base, j.demand_s});
            }
            eval = rescale_to_utilization(eval, target_rho);

            switch (strategy.kind) {
                case StrategyId::Kind::SS:
                    grid = PolicyGrid::standard(target_rho, eval.mean_gap(), cfg.beta, cfg.f_step);
                    break;
                case StrategyId::Kind::SSFixed:
                    grid = PolicyGrid::single_state(target_rho, strategy.state_label, cfg.beta, cfg.f_step);
                    break;
                case StrategyId::Kind::DvfsOnly:
                    grid = PolicyGrid::dvfs_only(target_rho, cfg.beta, cfg.f_step);
                    break;
                case StrategyId::Kind::RaceToHalt:
                    break;
            }
            grid_ptr = &grid;
            const PolicyChoice choice = select(grid, eval, table, cfg.qos, cfg.parallelism);
            selected = choice.policy;
            selected_option = choice.option_index;
        } else {
            selected = Policy{1.0, SleepSequence::immediate(
                                       table.sleep_catalog(1.0).at(strategy.state_label))};
        }

        // (d) guard-band boost; the first epoch has no history and an idle
        // previous epoch counts as within budget
        double f_applied = selected.f;
        if (uses_selection && e > 0) {
            const double last_delay = prev_epoch_delay.value_or(0.0);
            f_applied = over_provision(selected.f, last_delay, budget_delay, cfg.alpha);
        }
        Policy applied = selected;
        if (f_applied != selected.f && grid_ptr) {
            applied = grid_ptr->instantiate(table, f_applied, grid_ptr->options[selected_option]);
        }

        // (e) serve the epoch's true arrivals, queue carried across epochs
        std::size_t first = job_cursor;
        while (job_cursor < jobs.jobs.size() && jobs.jobs[job_cursor].arrival_s < w1) ++job_cursor;
        const std::span<const Job> epoch_jobs(jobs.jobs.data() + first, job_cursor - first);

        const auto sink = [&](double t0, double t1, double power, int code) {
            detail::deposit(bins, epoch_len, t0, t1, power);
            const std::string* label;
            static const std::string pre_idle_label = "C0iS0i";
            if (code >= 0) label = &applied.sleep[static_cast<std::size_t>(code)].label;
            else if (code == kWokePreIdle) label = &pre_idle_label;
            else if (code == detail::kIntervalBusy) label = &kActiveLabel;
            else label = &kWakeLabel;
            residency_s[*label] += t1 - t0;
        };
        std::vector<JobOutcome> outcomes;
        outcomes.reserve(epoch_jobs.size());
        free_at = detail::scan_jobs(applied, table, cfg.beta, epoch_jobs, free_at, &outcomes,
                                    nullptr, sink);

        double demand_in_epoch = 0.0;
        std::uint64_t carried = 0;
        for (const auto& oc : outcomes) {
            std::size_t de = static_cast<std::size_t>(oc.departure_s / epoch_len);
            if (de >= n_epochs) de = n_epochs - 1;
            bins.response_sum_s[de] += oc.response_s;
            bins.completed[de] += 1;
            if (oc.departure_s > w1) ++carried;
        }
        for (const Job& j : epoch_jobs) demand_in_epoch += j.demand_s;

        EpochReport rep;
        rep.epoch = static_cast<std::int64_t>(e);
        rep.predicted_rho = uses_prediction ? predicted : std::numeric_limits<double>::quiet_NaN();
        rep.realized_rho = demand_in_epoch / epoch_len;
        rep.f_selected = selected.f;
        rep.f_applied = f_applied;
        rep.sleep_label = applied.sleep_label();
        rep.carried_queue = carried;
        summary.epochs.push_back(std::move(rep));
        summary.selection_histogram[applied.sleep_label()] += 1;

        prev_epoch_delay = bins.completed[e] > 0
                               ? bins.response_sum_s[e] / static_cast<double>(bins.completed[e])
                               : 0.0;

        // (f) feed the online predictor the epoch's realized minutes
        if (uses_prediction && cfg.predictor != PredictorChoice::Offline) {
            for (std::size_t m = m0; m < m0 + T; ++m) {
                if (online.has_history()) {
                    if (!(predicted_pending && m == m0)) online.predict(static_cast<std::int64_t>(m));
                    online.update(static_cast<std::int64_t>(m), trace.rho[m]);
                } else {
                    online.observe(trace.rho[m]);
                }
            }
        }

        // (g) roll the job log forward
        log.insert(log.end(), epoch_jobs.begin(), epoch_jobs.end());
        if (log.size() > cfg.eval_jobs) log.erase(log.begin(), log.end() - cfg.eval_jobs);

        last_policy = applied;
    }

    // Idle tail after the last departure, under the last policy.
    if (free_at < run_end) {
        detail::walk_idle(last_policy.sleep, table.idle_power(last_policy.f), free_at,
                          run_end - free_at, [&](double t0, double t1, double power, int code) {
                              detail::deposit(bins, epoch_len, t0, t1, power);
                              const std::string label =
                                  code >= 0 ? last_policy.sleep[static_cast<std::size_t>(code)].label
                                            : "C0iS0i";
                              residency_s[label] += t1 - t0;
                          });
    }

    double total_energy = 0.0, total_time = 0.0, total_resp = 0.0;
    std::uint64_t total_jobs = 0;
    for (std::size_t e = 0; e < n_epochs; ++e) {
        total_energy += bins.energy_j[e];
        total_time += bins.duration_s[e];
        total_resp += bins.response_sum_s[e];
        total_jobs += bins.completed[e];
        auto& rep = summary.epochs[e];
        rep.completed_jobs = bins.completed[e];
        rep.mean_response_s =
            bins.completed[e] ? bins.response_sum_s[e] / static_cast<double>(bins.completed[e]) : 0.0;
        rep.norm_mean_response = rep.mean_response_s * mu_design;
        rep.mean_power_w = bins.duration_s[e] > 0.0 ? bins.energy_j[e] / bins.duration_s[e] : 0.0;
    }
    summary.total_jobs = total_jobs;
    summary.mean_response_s = total_jobs ? total_resp / static_cast<double>(total_jobs) : 0.0;
    summary.norm_mean_response = summary.mean_response_s * mu_design;
    summary.mean_power_w = total_time > 0.0 ? total_energy / total_time : 0.0;
    summary.meets_budget = summary.norm_mean_response <= cfg.qos.budget;
    for (const auto& [label, secs] : residency_s) summary.residency[label] = secs / total_time;
    return summary;
}

inline RunSummary run(const UtilizationTrace& trace, const ArrivalSpec& arrivals,
                      const ServiceSpec& service, const EpochConfig& cfg, const StrategyId& strategy,
                      std::uint64_t seed, const PowerTable& table) {
    const JobStream jobs = materialize_trace_jobs(trace, arrivals, service, seed);
    return run_strategy(trace, jobs, arrivals, service, cfg, strategy, seed, table);
}

struct ComparisonReport {
    std::vector<RunSummary> entries; // one per strategy, input order
};

/// Run several strategies against one shared job realization.
inline ComparisonReport compare(const UtilizationTrace& trace, const ArrivalSpec& arrivals,
                                const ServiceSpec& service, const EpochConfig& cfg,
                                const std::vector<StrategyId>& strategies, std::uint64_t seed,
                                const PowerTable& table) {
    const JobStream jobs = materialize_trace_jobs(trace, arrivals, service, seed);
    ComparisonReport report;
    report.entries.reserve(strategies.size());
    for (const auto& s : strategies) {
        report.entries.push_back(run_strategy(trace, jobs, arrivals, service, cfg, s, seed, table));
    }
    return report;
}

} // namespace sleepsim
