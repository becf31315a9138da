#pragma once

#include <cmath>
#include <optional>

#include "sleepsim/errors.hpp"
#include "sleepsim/power_model.hpp"
#include "sleepsim/workload.hpp"

namespace sleepsim::analytic {

// ---------------------------------------------------------------------------
// Closed forms for the Poisson-arrival / exponential-service single server
// with n delayed sleep states. These are the verification oracle for the
// event simulator: no simulation happens here.
//
// Conventions: the idle period is Exp(lambda); state i is occupied during
// [tau_i, tau_{i+1}) of it; an arrival in state i pays wake-up w_i, and an
// arrival before tau_1 pays none. Idle time before tau_1 is charged at
// active power p_active, so exact agreement with the simulator's idle-power
// accounting requires tau_1 = 0 (the first state entered at queue-empty).
// ---------------------------------------------------------------------------

struct MM1SleepParams {
    double lambda = 0.0;   // jobs/s
    double mu = 0.0;       // jobs/s at f = 1
    double f = 1.0;        // frequency factor
    SleepSequence states;  // non-empty
    double p_active = 0.0; // watts while serving or waking, at f

    double service_rate() const noexcept { return mu * f; }
};

namespace detail {

inline void require_stable(const MM1SleepParams& p) {
    if (!(p.lambda > 0) || !(p.mu > 0) || !(p.f > 0)) {
        throw ConfigError("lambda, mu and f must be positive");
    }
    if (p.lambda >= p.service_rate()) {
        throw Unstable("lambda >= mu*f: no stationary regime");
    }
}

inline void require_states(const MM1SleepParams& p) {
    if (p.states.empty()) throw ConfigError("sleep formulas need a non-empty state sequence");
}

/// Sum of fn(i) weighted by the probability that the idle period ends while
/// state i is occupied: e^{-lambda tau_i} - e^{-lambda tau_{i+1}}, with the
/// deepest state absorbing the tail e^{-lambda tau_n}.
template <typename Fn>
double state_mixture(const MM1SleepParams& p, Fn&& fn) {
    const std::size_t n = p.states.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = std::exp(-p.lambda * p.states[i].entry_delay_s);
        const double hi = (i + 1 < n) ? std::exp(-p.lambda * p.states[i + 1].entry_delay_s) : 0.0;
        sum += fn(p.states[i]) * (lo - hi);
    }
    return sum;
}

} // namespace detail

/// Expected renewal-cycle length (one idle period plus the busy period it
/// triggers).
inline double busy_cycle_length(const MM1SleepParams& p) {
    detail::require_stable(p);
    detail::require_states(p);
    const double muf = p.service_rate();
    const double wake = detail::state_mixture(p, [](const SleepState& s) { return s.wakeup_latency_s; });
    return (muf + muf * p.lambda * wake) / (p.lambda * (muf - p.lambda));
}

/// alpha-th moment of the wake-up delay seen at the start of a busy period.
inline double setup_moment(const MM1SleepParams& p, int alpha) {
    detail::require_states(p);
    if (alpha != 1 && alpha != 2) throw ConfigError("setup moment supports alpha in {1,2}");
    return detail::state_mixture(p, [alpha](const SleepState& s) {
        return alpha == 1 ? s.wakeup_latency_s : s.wakeup_latency_s * s.wakeup_latency_s;
    });
}

/// Long-run average power.
inline double mean_power(const MM1SleepParams& p) {
    const double lam_L = p.lambda * busy_cycle_length(p);
    const double sleep_energy_rate =
        detail::state_mixture(p, [](const SleepState& s) { return s.power_w; });
    const double exp_tau1 = std::exp(-p.lambda * p.states[0].entry_delay_s);
    return sleep_energy_rate / lam_L + p.p_active * (1.0 - exp_tau1 / lam_L);
}

/// Mean response time: M/M/1 term plus the setup penalty.
inline double mean_response(const MM1SleepParams& p) {
    detail::require_stable(p);
    detail::require_states(p);
    const double d1 = setup_moment(p, 1);
    const double d2 = setup_moment(p, 2);
    return 1.0 / (p.service_rate() - p.lambda) +
           (2.0 * d1 + p.lambda * d2) / (2.0 * (1.0 + p.lambda * d1));
}

/// Pr(R >= d) for the single-state, tau_1 = 0, exponential-wake-up regime.
/// The removable singularity at w1*(mu f - lambda) = 1 takes its analytic
/// limit (1 + (mu f - lambda) d) e^{-(mu f - lambda) d}.
inline double tail_exceedance(double lambda, double mu, double f, double w1, double d) {
    MM1SleepParams chk{lambda, mu, f, {}, 0.0};
    detail::require_stable(chk);
    if (w1 < 0) throw RangeError("wake-up latency must be >= 0");
    if (d < 0) throw RangeError("deadline must be >= 0");
    const double nu = mu * f - lambda;
    double value;
    if (w1 == 0.0) {
        value = std::exp(-nu * d);
    } else if (std::abs(w1 * nu - 1.0) < 1e-9) {
        value = (1.0 + nu * d) * std::exp(-nu * d);
    } else {
        value = (std::exp(-nu * d) - w1 * nu * std::exp(-d / w1)) / (1.0 - w1 * nu);
    }
    if (value < 0.0) {
        if (value < -1e-12) throw Error("tail probability fell outside [0,1]");
        value = 0.0;
    }
    if (value > 1.0) {
        if (value > 1.0 + 1e-12) throw Error("tail probability fell outside [0,1]");
        value = 1.0;
    }
    return value;
}

/// Bundle for CLI output.
struct Report {
    double cycle_length = 0.0;
    double setup_mean = 0.0;
    double setup_second_moment = 0.0;
    double mean_response_s = 0.0;
    double mean_power_w = 0.0;
    std::optional<double> tail = std::nullopt;
};

inline Report evaluate(const MM1SleepParams& p, std::optional<double> deadline = std::nullopt) {
    Report r;
    r.cycle_length = busy_cycle_length(p);
    r.setup_mean = setup_moment(p, 1);
    r.setup_second_moment = setup_moment(p, 2);
    r.mean_response_s = mean_response(p);
    r.mean_power_w = mean_power(p);
    if (deadline) {
        r.tail = tail_exceedance(p.lambda, p.mu, p.f, p.states.empty() ? 0.0 : p.states[0].wakeup_latency_s,
                                 *deadline);
    }
    return r;
}

/// Build oracle parameters from workload specs. The closed forms cover only
/// Poisson arrivals and exponential service; anything else is refused.
inline MM1SleepParams params_from_specs(const ArrivalSpec& arrivals, const ServiceSpec& service,
                                        double f, SleepSequence states, const PowerTable& table) {
    if (arrivals.gap.kind != Distribution::Kind::Exponential) {
        throw UnsupportedDistribution("closed forms require exponential inter-arrival times");
    }
    if (service.demand.kind != Distribution::Kind::Exponential) {
        throw UnsupportedDistribution("closed forms require exponential service times");
    }
    MM1SleepParams p;
    p.lambda = arrivals.rate();
    p.mu = service.rate();
    p.f = f;
    p.states = std::move(states);
    p.p_active = table.active_power(f);
    return p;
}

} // namespace sleepsim::analytic
