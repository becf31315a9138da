#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sleepsim/errors.hpp"
#include "sleepsim/power_model.hpp"
#include "sleepsim/sim_core.hpp"
#include "sleepsim/workload.hpp"

namespace sleepsim {

// ---------------------------------------------------------------------------
// Candidate-policy enumeration and minimum-power selection under a QoS
// constraint. Every candidate is evaluated by simulation on one shared job
// stream, so comparisons between candidates are paired.
// ---------------------------------------------------------------------------

/// QoS target relative to a baseline system provisioned for peak utilization
/// rho_b at full frequency with no sleep states.
struct QoSConstraint {
    enum class Mode { MeanResponse, Tail };

    Mode mode = Mode::MeanResponse;
    double rho_b = 0.8;
    double budget = 5.0;         // cap on normalized mean response (mean mode)
    double deadline_s = 0.0;     // tail mode
    double max_violation = 0.05; // tail mode: cap on Pr(R >= deadline)

    static QoSConstraint mean_budget(double rho_b) {
        check_rho_b(rho_b);
        return {Mode::MeanResponse, rho_b, 1.0 / (1.0 - rho_b), 0.0, 0.05};
    }

    static QoSConstraint unconstrained() {
        return {Mode::MeanResponse, 0.8, std::numeric_limits<double>::infinity(), 0.0, 0.05};
    }

    static QoSConstraint tail(double rho_b, double deadline_s, double max_violation = 0.05) {
        check_rho_b(rho_b);
        if (!(max_violation > 0.0) || !(max_violation < 1.0)) {
            throw ConfigError("max_violation must be in (0,1)");
        }
        return {Mode::Tail, rho_b, 1.0 / (1.0 - rho_b), deadline_s, max_violation};
    }

private:
    static void check_rho_b(double rho_b) {
        if (!(rho_b > 0.0) || !(rho_b < 1.0)) throw ConfigError("rho_b must be in (0,1)");
    }
};

/// Derive the constraint from a baseline run: full frequency, no sleep
/// state, utilization rho_b. Mean mode is closed-form (mu E[R] = 1/(1-rho_b));
/// tail mode pins the deadline to the baseline's empirical 95th percentile.
inline QoSConstraint baseline_budget(double rho_b, double mu, QoSConstraint::Mode mode,
                                     const PowerTable& table, std::size_t n = 100000,
                                     std::uint64_t seed = 1) {
    if (mode == QoSConstraint::Mode::MeanResponse) return QoSConstraint::mean_budget(rho_b);
    const auto stream = generate(ArrivalSpec::exponential_rate(rho_b * mu),
                                 ServiceSpec::exponential_rate(mu), n, seed);
    const SimResult base = simulate(Policy{1.0, SleepSequence{}}, stream, table);
    return QoSConstraint::tail(rho_b, base.response_p95_s, 0.05);
}

/// The candidate grid: a frequency axis crossed with a set of sleep-cascade
/// shapes. Shapes are instantiated per frequency because the C0_idle and C1
/// powers scale with it.
struct PolicyGrid {
    struct Option {
        enum class Kind { NoSleep, Single, DelayedPair, Cascade };
        Kind kind = Kind::Single;
        std::string deep_label;               // Single target / DelayedPair deep state
        double tau2_s = 0.0;                  // DelayedPair: deep-state entry delay
        std::vector<double> cascade_delays_s; // Cascade: per catalog state, shallow to deep
    };

    std::vector<double> frequencies;
    std::vector<Option> options;
    double beta = 1.0;

    /// rho+step .. 1.0 in steps of `step`, the lowest barely-stable setting.
    static std::vector<double> frequency_axis(double rho, double step = 0.01) {
        if (!(step > 0.0)) throw ConfigError("frequency step must be positive");
        std::vector<double> out;
        const int max_i = static_cast<int>(std::llround(1.0 / step));
        int i = static_cast<int>(std::ceil((rho + step) / step - 1e-9));
        i = std::clamp(i, 1, max_i);
        for (; i <= max_i; ++i) out.push_back(static_cast<double>(i) * step);
        return out;
    }

    /// Five immediate singletons, C0iS0i->C6S3 pairs over a tau2 grid scaled
    /// by the mean idle gap, and the full five-state cascade.
    static PolicyGrid standard(double rho, double mean_idle_gap_s, double beta = 1.0,
                               double f_step = 0.01) {
        PolicyGrid g;
        g.frequencies = frequency_axis(rho, f_step);
        g.beta = beta;
        for (const char* label : {"C0iS0i", "C1S0i", "C3S0i", "C6S0i", "C6S3"}) {
            g.options.push_back({Option::Kind::Single, label, 0.0, {}});
        }
        for (double m : {0.0, 0.1, 0.3, 1.0, 3.0, 10.0}) {
            g.options.push_back({Option::Kind::DelayedPair, "C6S3", m * mean_idle_gap_s, {}});
        }
        Option cascade{Option::Kind::Cascade, "", 0.0, {}};
        for (double m : {0.0, 0.1, 0.3, 1.0, 3.0}) cascade.cascade_delays_s.push_back(m * mean_idle_gap_s);
        g.options.push_back(std::move(cascade));
        return g;
    }

    static PolicyGrid singletons(double rho, double beta = 1.0, double f_step = 0.01) {
        PolicyGrid g;
        g.frequencies = frequency_axis(rho, f_step);
        g.beta = beta;
        for (const char* label : {"C0iS0i", "C1S0i", "C3S0i", "C6S0i", "C6S3"}) {
            g.options.push_back({Option::Kind::Single, label, 0.0, {}});
        }
        return g;
    }

    static PolicyGrid single_state(double rho, const std::string& label, double beta = 1.0,
                                   double f_step = 0.01) {
        PolicyGrid g;
        g.frequencies = frequency_axis(rho, f_step);
        g.beta = beta;
        g.options.push_back({Option::Kind::Single, label, 0.0, {}});
        return g;
    }

    static PolicyGrid dvfs_only(double rho, double beta = 1.0, double f_step = 0.01) {
        PolicyGrid g;
        g.frequencies = frequency_axis(rho, f_step);
        g.beta = beta;
        g.options.push_back({Option::Kind::NoSleep, "", 0.0, {}});
        return g;
    }

    Policy instantiate(const PowerTable& table, double f, const Option& opt) const {
        const SleepCatalog cat = table.sleep_catalog(f);
        switch (opt.kind) {
            case Option::Kind::NoSleep:
                return Policy{f, SleepSequence{}};
            case Option::Kind::Single:
                return Policy{f, SleepSequence::immediate(cat.at(opt.deep_label))};
            case Option::Kind::DelayedPair:
                // tau2 = 0 leaves the shallow state a zero-width window; the
                // policy is the immediate deep state, so label it that way.
                if (opt.tau2_s == 0.0) {
                    return Policy{f, SleepSequence::immediate(cat.at(opt.deep_label))};
                }
                return Policy{f, SleepSequence::delayed_pair(cat.at("C0iS0i"), cat.at(opt.deep_label),
                                                             opt.tau2_s)};
            case Option::Kind::Cascade:
                return Policy{f, filtered_cascade(cat.states, opt.cascade_delays_s)};
        }
        throw ConfigError("unknown grid option kind");
    }

    bool empty() const noexcept { return frequencies.empty() || options.empty(); }
};

struct PolicyChoice {
    Policy policy;
    SimResult predicted;
    bool feasible = false;
    double margin = 0.0; // slack against the constraint; negative when infeasible
    std::size_t option_index = 0;
};

namespace detail {

inline double qos_metric(const QoSConstraint& qos, const SimResult& r) {
    return qos.mode == QoSConstraint::Mode::MeanResponse ? r.normalized_mean_response
                                                         : r.tail_exceedance;
}

inline double qos_limit(const QoSConstraint& qos) {
    return qos.mode == QoSConstraint::Mode::MeanResponse ? qos.budget : qos.max_violation;
}

/// Total order over candidates: feasible before infeasible, then smaller
/// violation, then lower power, lower frequency, shallower first wake-up,
/// and the canonical label string as the final arbiter. Total ordering makes
/// the selection invariant under grid permutation.
struct CandidateKey {
    bool feasible = false;
    double violation = 0.0;
    double power = 0.0;
    double f = 0.0;
    double w1 = 0.0;
    std::string label;

    bool operator<(const CandidateKey& o) const {
        if (feasible != o.feasible) return feasible;
        if (violation != o.violation) return violation < o.violation;
        if (power != o.power) return power < o.power;
        if (f != o.f) return f < o.f;
        if (w1 != o.w1) return w1 < o.w1;
        return label < o.label;
    }
};

} // namespace detail

/// Minimum-power feasible policy; when nothing is feasible, the candidate
/// that misses the constraint by the least (flagged infeasible) so the
/// runtime loop always has a policy in hand.
inline PolicyChoice select(const PolicyGrid& grid, const JobStream& stream, const PowerTable& table,
                           const QoSConstraint& qos, unsigned parallelism = 1) {
    if (grid.empty()) throw EmptyGrid("policy grid has no candidates");
    if (stream.empty()) throw EmptyStream("policy selection needs a job stream");

    std::vector<Policy> candidates;
    std::vector<std::size_t> option_of;
    candidates.reserve(grid.frequencies.size() * grid.options.size());
    for (std::size_t oi = 0; oi < grid.options.size(); ++oi) {
        for (double f : grid.frequencies) {
            candidates.push_back(grid.instantiate(table, f, grid.options[oi]));
            option_of.push_back(oi);
        }
    }

    SimOptions opt;
    opt.beta = grid.beta;
    if (qos.mode == QoSConstraint::Mode::Tail) opt.tail_deadline_s = qos.deadline_s;
    const auto entries = sweep(candidates, stream, table, opt, parallelism);

    std::optional<std::size_t> best;
    detail::CandidateKey best_key;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!entries[i].result) continue;
        const SimResult& r = *entries[i].result;
        const double metric = detail::qos_metric(qos, r);
        const double limit = detail::qos_limit(qos);
        detail::CandidateKey key;
        key.feasible = metric <= limit;
        key.violation = key.feasible ? 0.0 : metric - limit;
        key.power = r.mean_power_w;
        key.f = entries[i].policy.f;
        key.w1 = entries[i].policy.sleep.first_wakeup();
        key.label = entries[i].policy.sleep_label();
        if (!best || key < best_key) {
            best = i;
            best_key = key;
        }
    }
    if (!best) {
        throw Error("no candidate could be evaluated: " +
                    (entries.empty() ? std::string("empty grid") : entries.front().error));
    }

    const auto& e = entries[*best];
    PolicyChoice choice;
    choice.policy = e.policy;
    choice.predicted = *e.result;
    choice.feasible = best_key.feasible;
    choice.margin = detail::qos_limit(qos) - detail::qos_metric(qos, *e.result);
    choice.option_index = option_of[*best];
    return choice;
}

/// Full sweep for trade-off plots, sorted by (sleep label, f): one curve per
/// cascade shape, frequency increasing along each curve.
struct FrontierPoint {
    Policy policy;
    SimResult result;
};

inline std::vector<FrontierPoint> frontier(const PolicyGrid& grid, const JobStream& stream,
                                           const PowerTable& table, unsigned parallelism = 1) {
    if (grid.empty()) throw EmptyGrid("policy grid has no candidates");
    std::vector<Policy> candidates;
    for (const auto& option : grid.options) {
        for (double f : grid.frequencies) candidates.push_back(grid.instantiate(table, f, option));
    }
    const auto entries = sweep(candidates, stream, table, grid.beta, parallelism);
    std::vector<FrontierPoint> points;
    points.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.result) points.push_back({e.policy, *e.result});
    }
    std::stable_sort(points.begin(), points.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
        const std::string la = a.policy.sleep_label(), lb = b.policy.sleep_label();
        if (la != lb) return la < lb;
        return a.policy.f < b.policy.f;
    });
    return points;
}

} // namespace sleepsim
