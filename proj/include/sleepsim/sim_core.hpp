#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sleepsim/errors.hpp"
#include "sleepsim/power_model.hpp"
#include "sleepsim/workload.hpp"

namespace sleepsim {

// ---------------------------------------------------------------------------
// FCFS single-server event simulation with DVFS and a cascade of delayed
// sleep states. One forward pass over the arrival-ordered job list; no event
// queue is needed because the server is work-conserving and non-preemptive.
// ---------------------------------------------------------------------------

/// A frequency setting plus the idle-time sleep cascade. An empty cascade is
/// the DVFS-only policy: the server idles in C0_idle/S0_idle at f.
struct Policy {
    double f = 1.0;
    SleepSequence sleep;

    void validate() const {
        if (!(f > 0.0) || f > 1.0) throw ConfigError("policy frequency must be in (0,1]");
    }

    std::string sleep_label() const { return sleep.label(); }
};

/// Where a wake-up started from. Non-negative values index the policy's
/// sleep sequence.
enum : int {
    kWokeQueued = -2,  // no wake-up: the job queued behind earlier work
    kWokePreIdle = -1, // server idle but not yet in any sleep state
};

struct JobOutcome {
    double arrival_s = 0.0;
    double start_s = 0.0;
    double departure_s = 0.0;
    double response_s = 0.0;
    int woke_from = kWokeQueued;
};

struct SimResult {
    double mean_response_s = 0.0;
    double normalized_mean_response = 0.0; // mean response / mean demand
    double response_p95_s = 0.0;
    double mean_power_w = 0.0;
    std::map<std::string, double> residency; // label -> fraction of makespan
    std::uint64_t wakeups = 0;
    std::uint64_t jobs = 0;
    double makespan_s = 0.0;
    double busy_time_s = 0.0;
    double wakeup_time_s = 0.0;
    double tail_exceedance = 0.0; // fraction of responses >= the requested deadline
    bool stability_warning = false;
};

/// State the cascade occupies after `idle_elapsed` seconds of idleness:
/// the deepest state whose entry delay has been reached (boundary
/// inclusive), or pre-sleep idle with zero wake-up latency before the first
/// entry delay.
struct SleepLookup {
    int state_index = kWokePreIdle;
    double wakeup_latency_s = 0.0;
};

inline SleepLookup sleep_state_at(const SleepSequence& seq, double idle_elapsed) {
    if (idle_elapsed < 0) throw RangeError("idle_elapsed must be >= 0");
    SleepLookup out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i].entry_delay_s <= idle_elapsed) {
            out.state_index = static_cast<int>(i);
            out.wakeup_latency_s = seq[i].wakeup_latency_s;
        } else {
            break;
        }
    }
    return out;
}

/// Nearest-rank percentile, q in (0,1).
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw EmptyOutcomes("percentile of an empty sample");
    if (!(q > 0.0) || !(q < 1.0)) throw RangeError("percentile rank must be in (0,1)");
    std::sort(values.begin(), values.end());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

namespace detail {

/// One forward pass. Jobs must be arrival-ordered. The server is idle from
/// `free_at` when the pass begins; returns the time its backlog drains.
/// Every interval of the timeline is reported to `sink(t0, t1, power, code)`
/// where code is a sleep-state index, kWokePreIdle, or the two markers
/// below; zero-width intervals are suppressed so that equivalent cascades
/// produce bitwise-identical accumulation sequences.
enum : int { kIntervalBusy = -3, kIntervalWake = -4 };

/// Walk an idle window of `len` seconds starting at `from` through the
/// cascade, emitting one interval per occupied state.
template <typename Sink>
void walk_idle(const SleepSequence& seq, double pre_idle_w, double from, double len, Sink&& sink) {
    double piece_start = 0.0;
    double piece_power = pre_idle_w;
    int piece_code = kWokePreIdle;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const double entry = std::min(seq[i].entry_delay_s, len);
        if (entry > piece_start) sink(from + piece_start, from + entry, piece_power, piece_code);
        piece_start = entry;
        piece_power = seq[i].power_w;
        piece_code = static_cast<int>(i);
    }
    if (len > piece_start) sink(from + piece_start, from + len, piece_power, piece_code);
}

template <typename Sink>
double scan_jobs(const Policy& policy, const PowerTable& table, double beta,
                 std::span<const Job> jobs, double free_at,
                 std::vector<JobOutcome>* outcomes, std::uint64_t* wakeups, Sink&& sink) {
    policy.validate();
    const double active_w = table.active_power(policy.f);
    const double pre_idle_w = table.idle_power(policy.f);
    const SleepSequence& seq = policy.sleep;

    for (const Job& job : jobs) {
        const double service = effective_service_time(job.demand_s, policy.f, beta);
        JobOutcome oc;
        oc.arrival_s = job.arrival_s;
        if (job.arrival_s < free_at) {
            oc.start_s = free_at;
            oc.woke_from = kWokeQueued;
        } else {
            const double gap = job.arrival_s - free_at;
            walk_idle(seq, pre_idle_w, free_at, gap, sink);
            const SleepLookup at_arrival = sleep_state_at(seq, gap);
            if (wakeups) ++*wakeups;
            if (at_arrival.wakeup_latency_s > 0.0) {
                sink(job.arrival_s, job.arrival_s + at_arrival.wakeup_latency_s, active_w,
                     kIntervalWake);
            }
            oc.start_s = job.arrival_s + at_arrival.wakeup_latency_s;
            oc.woke_from = at_arrival.state_index;
        }
        oc.departure_s = oc.start_s + service;
        oc.response_s = oc.departure_s - job.arrival_s;
        sink(oc.start_s, oc.departure_s, active_w, kIntervalBusy);
        free_at = oc.departure_s;
        if (outcomes) outcomes->push_back(oc);
    }
    return free_at;
}

} // namespace detail

struct SimOptions {
    double beta = 1.0;            // CPU-bound fraction of service demand
    std::size_t warmup_discard = 0; // leading jobs excluded from response stats
    bool collect_outcomes = false;
    std::optional<double> tail_deadline_s; // also measure Pr(R >= d)
};

struct SimOutput {
    SimResult result;
    std::vector<JobOutcome> outcomes; // filled when collect_outcomes is set
};

inline SimOutput simulate_detailed(const Policy& policy, const JobStream& stream,
                                   const PowerTable& table, const SimOptions& opt = {}) {
    if (stream.empty()) throw EmptyStream("simulate needs at least one job");
    policy.validate();

    double energy_j = 0.0;
    double busy_s = 0.0;
    double wake_s = 0.0;
    double pre_idle_s = 0.0;
    std::vector<double> sleep_s(policy.sleep.size(), 0.0);
    std::uint64_t wakeups = 0;

    std::vector<JobOutcome> outcomes;
    outcomes.reserve(stream.size());
    const double makespan =
        detail::scan_jobs(policy, table, opt.beta, std::span<const Job>(stream.jobs), 0.0,
                          &outcomes, &wakeups,
                          [&](double t0, double t1, double power, int code) {
                              const double dur = t1 - t0;
                              energy_j += dur * power;
                              switch (code) {
                                  case detail::kIntervalBusy: busy_s += dur; break;
                                  case detail::kIntervalWake: wake_s += dur; break;
                                  case kWokePreIdle: pre_idle_s += dur; break;
                                  default: sleep_s[static_cast<std::size_t>(code)] += dur;
                              }
                          });

    SimResult r;
    r.jobs = stream.size();
    r.wakeups = wakeups;
    r.makespan_s = makespan;
    r.busy_time_s = busy_s;
    r.wakeup_time_s = wake_s;
    r.mean_power_w = energy_j / makespan;

    const std::size_t skip = std::min(opt.warmup_discard, outcomes.size() - 1);
    std::vector<double> responses;
    responses.reserve(outcomes.size() - skip);
    double sum_resp = 0.0;
    std::uint64_t over_deadline = 0;
    for (std::size_t i = skip; i < outcomes.size(); ++i) {
        responses.push_back(outcomes[i].response_s);
        sum_resp += outcomes[i].response_s;
        if (opt.tail_deadline_s && outcomes[i].response_s >= *opt.tail_deadline_s) ++over_deadline;
    }
    r.mean_response_s = sum_resp / static_cast<double>(responses.size());
    r.normalized_mean_response = r.mean_response_s / stream.mean_demand();
    r.response_p95_s = percentile(responses, 0.95);
    if (opt.tail_deadline_s) {
        r.tail_exceedance = static_cast<double>(over_deadline) / static_cast<double>(responses.size());
    }

    if (policy.sleep.empty()) {
        if (pre_idle_s > 0.0) r.residency["C0iS0i"] += pre_idle_s / makespan;
    } else if (pre_idle_s > 0.0) {
        r.residency["C0iS0i"] += pre_idle_s / makespan;
    }
    for (std::size_t i = 0; i < sleep_s.size(); ++i) {
        if (sleep_s[i] > 0.0) r.residency[policy.sleep[i].label] += sleep_s[i] / makespan;
    }
    if (busy_s > 0.0) r.residency[kActiveLabel] += busy_s / makespan;
    if (wake_s > 0.0) r.residency[kWakeLabel] += wake_s / makespan;

    // Effective load check: demand is served at rate f for the CPU-bound
    // share, so the policy may be unstable even when rho < 1.
    double eff_service = 0.0;
    for (const Job& j : stream.jobs) eff_service += effective_service_time(j.demand_s, policy.f, opt.beta);
    const double horizon = stream.jobs.back().arrival_s;
    r.stability_warning = horizon > 0.0 && eff_service / horizon >= 1.0;

    SimOutput out;
    out.result = std::move(r);
    if (opt.collect_outcomes) out.outcomes = std::move(outcomes);
    return out;
}

inline SimResult simulate(const Policy& policy, const JobStream& stream, const PowerTable& table,
                          double beta = 1.0) {
    SimOptions opt;
    opt.beta = beta;
    return simulate_detailed(policy, stream, table, opt).result;
}

// --- policy sweeps -----------------------------------------------------------

struct SweepEntry {
    Policy policy;
    std::optional<SimResult> result;
    std::string error; // set when this policy could not be evaluated
};

/// Evaluate every policy against the same stream (common random numbers, so
/// cross-policy comparisons are paired). Entries keep input order; failures
/// are recorded per entry without aborting the sweep. `parallelism` > 1
/// spreads policies across threads; results are identical either way.
inline std::vector<SweepEntry> sweep(const std::vector<Policy>& policies, const JobStream& stream,
                                     const PowerTable& table, const SimOptions& opt,
                                     unsigned parallelism = 1) {
    std::vector<SweepEntry> entries(policies.size());
    for (std::size_t i = 0; i < policies.size(); ++i) entries[i].policy = policies[i];

    const auto eval_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                entries[i].result = simulate_detailed(policies[i], stream, table, opt).result;
            } catch (const std::exception& e) {
                entries[i].error = e.what();
            }
        }
    };

    const unsigned workers =
        std::min<unsigned>(std::max(1u, parallelism), static_cast<unsigned>(policies.size()));
    if (workers <= 1) {
        eval_range(0, policies.size());
        return entries;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (policies.size() + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(policies.size(), begin + chunk);
        if (begin >= end) break;
        threads.emplace_back(eval_range, begin, end);
    }
    for (auto& t : threads) t.join();
    return entries;
}

inline std::vector<SweepEntry> sweep(const std::vector<Policy>& policies, const JobStream& stream,
                                     const PowerTable& table, double beta = 1.0,
                                     unsigned parallelism = 1) {
    SimOptions opt;
    opt.beta = beta;
    return sweep(policies, stream, table, opt, parallelism);
}

} // namespace sleepsim
