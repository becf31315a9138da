#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sleepsim/errors.hpp"
#include "sleepsim/rng.hpp"
#include "sleepsim/text.hpp"

namespace sleepsim {

// ---------------------------------------------------------------------------
// Job streams: parametric or replayed arrival/service processes, utilization
// traces, and the rescaling used to retarget a logged stream at a predicted
// utilization.
// ---------------------------------------------------------------------------

/// A positive-duration distribution. Empirical distributions replay their
/// logged values in order (wrapping around) unless bootstrap resampling is
/// requested.
struct Distribution {
    enum class Kind { Exponential, Lognormal, Empirical };

    Kind kind = Kind::Exponential;
    double mean = 1.0;
    double cv = 1.0;
    std::vector<double> values;
    bool bootstrap = false;

    static Distribution exponential_mean(double mean) {
        if (!(mean > 0)) throw ConfigError("exponential mean must be positive");
        return {Kind::Exponential, mean, 1.0, {}, false};
    }

    static Distribution exponential_rate(double rate) {
        if (!(rate > 0)) throw ConfigError("exponential rate must be positive");
        return exponential_mean(1.0 / rate);
    }

    static Distribution lognormal(double mean, double cv) {
        if (!(mean > 0) || !(cv > 0)) throw ConfigError("lognormal needs mean > 0 and cv > 0");
        return {Kind::Lognormal, mean, cv, {}, false};
    }

    static Distribution empirical(std::vector<double> log, bool bootstrap = false) {
        if (log.empty()) throw ConfigError("empirical log must be non-empty");
        for (double v : log) {
            if (v < 0) throw ConfigError("empirical log values must be >= 0");
        }
        return {Kind::Empirical, 0.0, 0.0, std::move(log), bootstrap};
    }

    double mean_value() const {
        if (kind != Kind::Empirical) return mean;
        double sum = 0;
        for (double v : values) sum += v;
        return sum / static_cast<double>(values.size());
    }
};

/// Stateful sampler; the replay cursor makes empirical replay deterministic.
class Sampler {
public:
    Sampler(const Distribution& dist, std::uint64_t seed) : dist_(dist), rng_(seed) {
        if (dist.kind == Distribution::Kind::Lognormal) {
            sigma_ = std::sqrt(std::log1p(dist.cv * dist.cv));
            mu_ = std::log(dist.mean) - 0.5 * sigma_ * sigma_;
        }
    }

    double draw() {
        switch (dist_.kind) {
            case Distribution::Kind::Exponential:
                return rng_.exponential(dist_.mean);
            case Distribution::Kind::Lognormal:
                return rng_.lognormal(mu_, sigma_);
            case Distribution::Kind::Empirical:
                if (dist_.bootstrap) return dist_.values[rng_.index(dist_.values.size())];
                return dist_.values[pos_++ % dist_.values.size()];
        }
        return 0.0;
    }

private:
    Distribution dist_;
    Rng rng_;
    double mu_ = 0.0, sigma_ = 0.0;
    std::size_t pos_ = 0;
};

struct ArrivalSpec {
    Distribution gap; // inter-arrival times, seconds

    static ArrivalSpec exponential_rate(double lambda) { return {Distribution::exponential_rate(lambda)}; }
    static ArrivalSpec exponential_mean(double mean) { return {Distribution::exponential_mean(mean)}; }
    static ArrivalSpec lognormal(double mean, double cv) { return {Distribution::lognormal(mean, cv)}; }
    static ArrivalSpec empirical(std::vector<double> gaps) { return {Distribution::empirical(std::move(gaps))}; }

    double rate() const { return 1.0 / gap.mean_value(); }
};

struct ServiceSpec {
    Distribution demand;            // service demand at f = 1, seconds
    double cpu_bound_fraction = 1.0; // beta: 1 = CPU-bound, 0 = memory-bound

    static ServiceSpec exponential_rate(double mu, double beta = 1.0) {
        return make({Distribution::exponential_rate(mu)}, beta);
    }
    static ServiceSpec exponential_mean(double mean, double beta = 1.0) {
        return make({Distribution::exponential_mean(mean)}, beta);
    }
    static ServiceSpec lognormal(double mean, double cv, double beta = 1.0) {
        return make({Distribution::lognormal(mean, cv)}, beta);
    }
    static ServiceSpec empirical(std::vector<double> demands, double beta = 1.0) {
        return make({Distribution::empirical(std::move(demands))}, beta);
    }

    double rate() const { return 1.0 / demand.mean_value(); }

private:
    static ServiceSpec make(Distribution d, double beta) {
        if (beta < 0.0 || beta > 1.0) throw ConfigError("cpu_bound_fraction must be in [0,1]");
        return {std::move(d), beta};
    }
};

struct Job {
    double arrival_s = 0.0;
    double demand_s = 0.0; // at f = 1
};

struct JobStream {
    std::vector<Job> jobs;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return jobs.size(); }
    bool empty() const noexcept { return jobs.empty(); }

    double mean_demand() const {
        double sum = 0;
        for (const auto& j : jobs) sum += j.demand_s;
        return sum / static_cast<double>(jobs.size());
    }

    /// Mean inter-arrival gap, counting the gap from t = 0 to the first job.
    double mean_gap() const { return jobs.back().arrival_s / static_cast<double>(jobs.size()); }

    double arrival_rate() const { return 1.0 / mean_gap(); }

    /// Empirical utilization at f = 1: mean demand over mean gap.
    double utilization() const { return mean_demand() / mean_gap(); }
};

/// Sample n jobs. Arrival and service draws come from independently seeded
/// sub-streams, so the same seed yields the same arrivals regardless of the
/// service distribution and vice versa.
inline JobStream generate(const ArrivalSpec& arrivals, const ServiceSpec& service, std::size_t n,
                          std::uint64_t seed) {
    if (n < 1) throw ConfigError("job count must be >= 1");
    Sampler gap(arrivals.gap, derive_seed(seed, 1));
    Sampler demand(service.demand, derive_seed(seed, 2));
    JobStream out;
    out.seed = seed;
    out.jobs.reserve(n);
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t += gap.draw();
        out.jobs.push_back({t, demand.draw()});
    }
    return out;
}

/// Wall-clock service time of one job: the CPU-bound share stretches by 1/f,
/// the memory-bound share is frequency-insensitive.
inline double effective_service_time(double demand_s, double f, double beta) {
    if (!(f > 0.0) || f > 1.0) throw ConfigError("frequency factor must be in (0,1]");
    return demand_s * (beta / f + (1.0 - beta));
}

/// Multiply every inter-arrival gap by utilization(stream) / target_rho so
/// the rescaled stream realizes target_rho. Demands are untouched.
inline JobStream rescale_to_utilization(const JobStream& stream, double target_rho) {
    if (stream.empty()) throw EmptyStream("cannot rescale an empty stream");
    if (target_rho >= 1.0) throw UnstableTarget("target utilization must be < 1");
    if (!(target_rho > 0.0)) throw RangeError("target utilization must be > 0");
    const double ratio = stream.utilization() / target_rho;
    if (ratio == 1.0) return stream;
    JobStream out;
    out.seed = stream.seed;
    out.jobs.reserve(stream.size());
    double prev_old = 0.0, prev_new = 0.0;
    for (const auto& j : stream.jobs) {
        prev_new += (j.arrival_s - prev_old) * ratio;
        prev_old = j.arrival_s;
        out.jobs.push_back({prev_new, j.demand_s});
    }
    return out;
}

// --- utilization traces ----------------------------------------------------

/// Minute-granularity utilization samples, minutes contiguous from
/// start_minute.
struct UtilizationTrace {
    std::int64_t start_minute = 0;
    std::vector<double> rho;

    std::size_t size() const noexcept { return rho.size(); }
    double at_minute(std::int64_t minute) const { return rho.at(static_cast<std::size_t>(minute - start_minute)); }
};

/// CSV `minute,rho`, header line optional.
inline UtilizationTrace parse_trace(std::istream& in) {
    UtilizationTrace trace;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        const auto sv = trim(line);
        if (sv.empty()) continue;
        const auto fields = split(sv, ',');
        if (fields.size() != 2) throw ParseError("expected 'minute,rho'", lineno);
        if (first && (trim(fields[0]) == "minute" || trim(fields[1]) == "rho")) {
            first = false;
            continue;
        }
        first = false;
        std::int64_t minute = 0;
        {
            const auto f0 = trim(fields[0]);
            const auto res = std::from_chars(f0.data(), f0.data() + f0.size(), minute);
            if (res.ec != std::errc{}) throw ParseError("bad minute index", lineno);
        }
        const double value = parse_double(trim(fields[1]));
        if (value < 0.0 || value > 1.0) throw RangeError("rho " + format_double(value) + " outside [0,1]");
        if (trace.rho.empty()) {
            trace.start_minute = minute;
        } else if (minute != trace.start_minute + static_cast<std::int64_t>(trace.rho.size())) {
            throw ParseError("minute indices must be contiguous", lineno);
        }
        trace.rho.push_back(value);
    }
    return trace;
}

inline UtilizationTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trace '" + path + "'");
    return parse_trace(in);
}

inline void save_trace(const UtilizationTrace& trace, std::ostream& out) {
    out << "minute,rho\n";
    for (std::size_t i = 0; i < trace.rho.size(); ++i) {
        out << format_int(trace.start_minute + static_cast<std::int64_t>(i)) << ','
            << format_double(trace.rho[i]) << '\n';
    }
}

/// Synthetic trace patterns: a constant level, a sinusoid (value `low` at
/// minute 0, `high` at period/2), or a step, each optionally overlaid with
/// Gaussian noise and periodic additive spikes, clamped to [0,1].
struct SynthTraceSpec {
    enum class Pattern { Constant, Sinusoid, Step };

    Pattern pattern = Pattern::Sinusoid;
    std::size_t minutes = 1440;
    double low = 0.1;
    double high = 0.9;
    double period = 1440.0;        // sinusoid only
    std::size_t step_at = 0;       // step only: first minute at `high`
    double noise_sigma = 0.0;
    std::size_t spike_every = 0;   // 0 = no spikes
    std::size_t spike_len = 0;
    double spike_mag = 0.0;
    std::uint64_t seed = 0;
};

/// Parse "sin:low=0.1,high=0.9,period=1440,minutes=1440,noise=0.02,
/// spike_every=180,spike_len=10,spike_mag=0.4,seed=7", or the "step:"
/// (low, high, at) and "const:" (rho) forms.
inline SynthTraceSpec parse_synth_spec(std::string_view text) {
    SynthTraceSpec spec;
    const auto colon = text.find(':');
    const auto head = text.substr(0, colon);
    if (head == "sin") {
        spec.pattern = SynthTraceSpec::Pattern::Sinusoid;
    } else if (head == "step") {
        spec.pattern = SynthTraceSpec::Pattern::Step;
    } else if (head == "const") {
        spec.pattern = SynthTraceSpec::Pattern::Constant;
    } else {
        throw ConfigError("unknown trace pattern '" + std::string(head) + "'");
    }
    if (colon == std::string_view::npos) return spec;
    for (const auto field : split(text.substr(colon + 1), ',')) {
        if (trim(field).empty()) continue;
        const auto kv = split(field, '=');
        if (kv.size() != 2) throw ConfigError("bad trace field '" + std::string(field) + "'");
        const auto key = trim(kv[0]);
        const double value = parse_double(trim(kv[1]));
        if (key == "low" || key == "rho") spec.low = value;
        else if (key == "high") spec.high = value;
        else if (key == "period") spec.period = value;
        else if (key == "minutes") spec.minutes = static_cast<std::size_t>(value);
        else if (key == "at") spec.step_at = static_cast<std::size_t>(value);
        else if (key == "noise") spec.noise_sigma = value;
        else if (key == "spike_every") spec.spike_every = static_cast<std::size_t>(value);
        else if (key == "spike_len") spec.spike_len = static_cast<std::size_t>(value);
        else if (key == "spike_mag") spec.spike_mag = value;
        else if (key == "seed") spec.seed = static_cast<std::uint64_t>(value);
        else throw ConfigError("unknown trace field '" + std::string(key) + "'");
    }
    return spec;
}

inline UtilizationTrace synth_trace(const SynthTraceSpec& spec) {
    if (spec.minutes == 0) throw ConfigError("synthetic trace needs at least one minute");
    Rng rng(derive_seed(spec.seed, 0x7261ce));
    UtilizationTrace trace;
    trace.rho.reserve(spec.minutes);
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (std::size_t m = 0; m < spec.minutes; ++m) {
        double v = 0.0;
        switch (spec.pattern) {
            case SynthTraceSpec::Pattern::Constant:
                v = spec.low;
                break;
            case SynthTraceSpec::Pattern::Sinusoid:
                v = spec.low + (spec.high - spec.low) *
                                   0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(m) / spec.period));
                break;
            case SynthTraceSpec::Pattern::Step:
                v = m < spec.step_at ? spec.low : spec.high;
                break;
        }
        if (spec.spike_every > 0 && (m % spec.spike_every) < spec.spike_len) {
            v += spec.spike_mag;
        }
        if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.standard_normal();
        trace.rho.push_back(std::clamp(v, 0.0, 1.0));
    }
    return trace;
}

// --- job-log files -----------------------------------------------------------

/// CSV `arrival_s,demand_s`, header optional.
inline JobStream parse_job_log(std::istream& in) {
    JobStream stream;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        const auto sv = trim(line);
        if (sv.empty()) continue;
        const auto fields = split(sv, ',');
        if (fields.size() != 2) throw ParseError("expected 'arrival_s,demand_s'", lineno);
        if (first && trim(fields[0]) == "arrival_s") {
            first = false;
            continue;
        }
        first = false;
        const double arrival = parse_double(trim(fields[0]));
        const double demand = parse_double(trim(fields[1]));
        if (!stream.jobs.empty() && arrival < stream.jobs.back().arrival_s) {
            throw ParseError("arrival times must be non-decreasing", lineno);
        }
        if (!(demand > 0)) throw ParseError("demands must be positive", lineno);
        stream.jobs.push_back({arrival, demand});
    }
    return stream;
}

inline JobStream load_job_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open job log '" + path + "'");
    return parse_job_log(in);
}

inline void save_job_log(const JobStream& stream, std::ostream& out) {
    out << "arrival_s,demand_s\n";
    for (const auto& j : stream.jobs) {
        out << format_double(j.arrival_s) << ',' << format_double(j.demand_s) << '\n';
    }
}

} // namespace sleepsim
