#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sleepsim/errors.hpp"
#include "sleepsim/text.hpp"

namespace sleepsim {

// ---------------------------------------------------------------------------
// CPU / platform state catalog.
//
// A server's power state is the pair (CPU state, platform state). The CPU
// side consumes coefficient * f^k watts where k depends on the state's power
// law and f in [0,1] is the DVFS scaling factor with voltage tracking
// frequency linearly (V = f, V = 1 at f = 1). The platform side is constant
// per state. Only a fixed set of pairs is reachable on real hardware; the
// compatibility table below gates them.
// ---------------------------------------------------------------------------

enum class CpuStateId { C0Active = 0, C0Idle, C1, C3, C6 };
enum class PlatformStateId { S0Active = 0, S0Idle, S3 };
enum class PowerLaw { CubicInF, QuadraticInF, Constant };

constexpr std::size_t kNumCpuStates = 5;
constexpr std::size_t kNumPlatformStates = 3;

/// Label used everywhere for the active state.
inline const std::string kActiveLabel = "C0aS0a";
/// Label used for time spent waking up (charged at active power).
inline const std::string kWakeLabel = "wake";

inline std::string_view to_string(CpuStateId id) {
    switch (id) {
        case CpuStateId::C0Active: return "C0_active";
        case CpuStateId::C0Idle: return "C0_idle";
        case CpuStateId::C1: return "C1";
        case CpuStateId::C3: return "C3";
        case CpuStateId::C6: return "C6";
    }
    return "?";
}

inline std::string_view to_string(PlatformStateId id) {
    switch (id) {
        case PlatformStateId::S0Active: return "S0_active";
        case PlatformStateId::S0Idle: return "S0_idle";
        case PlatformStateId::S3: return "S3";
    }
    return "?";
}

inline std::optional<CpuStateId> cpu_state_from(std::string_view name) {
    if (name == "C0_active") return CpuStateId::C0Active;
    if (name == "C0_idle") return CpuStateId::C0Idle;
    if (name == "C1") return CpuStateId::C1;
    if (name == "C3") return CpuStateId::C3;
    if (name == "C6") return CpuStateId::C6;
    return std::nullopt;
}

inline std::optional<PlatformStateId> platform_state_from(std::string_view name) {
    if (name == "S0_active") return PlatformStateId::S0Active;
    if (name == "S0_idle") return PlatformStateId::S0Idle;
    if (name == "S3") return PlatformStateId::S3;
    return std::nullopt;
}

struct CpuState {
    CpuStateId id;
    PowerLaw law;
    double coefficient_w; // watts at f = 1
};

struct PlatformState {
    PlatformStateId id;
    double power_w;
};

/// One low-power state as seen by the queueing model: power while resident,
/// the delay after queue-empty before entering it, and the wake-up latency
/// back to active operation.
struct SleepState {
    std::string label;
    double power_w = 0.0;
    double entry_delay_s = 0.0;
    double wakeup_latency_s = 0.0;
};

/// An ordered cascade of sleep states the server walks through while idle.
/// Deeper states must save strictly more power and cost strictly more
/// wake-up latency. Entry delays are non-decreasing; a tied delay makes the
/// earlier state a zero-width window, which keeps the tau2 = 0 endpoint of
/// delayed sequences expressible.
class SleepSequence {
public:
    SleepSequence() = default;

    explicit SleepSequence(std::vector<SleepState> states) : states_(std::move(states)) {
        validate();
    }

    static SleepSequence immediate(SleepState state) {
        state.entry_delay_s = 0.0;
        return SleepSequence({std::move(state)});
    }

    /// Two-state cascade: `first` entered immediately, `second` after delay.
    static SleepSequence delayed_pair(SleepState first, SleepState second, double second_delay_s) {
        first.entry_delay_s = 0.0;
        second.entry_delay_s = second_delay_s;
        return SleepSequence({std::move(first), std::move(second)});
    }

    bool empty() const noexcept { return states_.empty(); }
    std::size_t size() const noexcept { return states_.size(); }
    const SleepState& operator[](std::size_t i) const { return states_[i]; }
    const std::vector<SleepState>& states() const noexcept { return states_; }

    /// "none" for the empty sequence; otherwise state labels joined with '+',
    /// annotated with the entry delay where it is nonzero.
    std::string label() const {
        if (states_.empty()) return "none";
        std::string out;
        for (std::size_t i = 0; i < states_.size(); ++i) {
            if (i) out += '+';
            out += states_[i].label;
            if (states_[i].entry_delay_s != 0.0) {
                out += '@';
                out += format_double(states_[i].entry_delay_s);
            }
        }
        return out;
    }

    /// Wake-up latency of the shallowest state; 0 for the empty sequence.
    double first_wakeup() const noexcept {
        return states_.empty() ? 0.0 : states_.front().wakeup_latency_s;
    }

private:
    void validate() const {
        for (const auto& s : states_) {
            if (s.power_w < 0 || s.entry_delay_s < 0 || s.wakeup_latency_s < 0) {
                throw ConfigError("sleep state '" + s.label + "' has a negative field");
            }
        }
        for (std::size_t i = 1; i < states_.size(); ++i) {
            const auto& a = states_[i - 1];
            const auto& b = states_[i];
            if (b.entry_delay_s < a.entry_delay_s) {
                throw ConfigError("sleep sequence entry delays must be non-decreasing");
            }
            if (!(b.power_w < a.power_w)) {
                throw ConfigError("sleep sequence powers must be strictly decreasing (" +
                                  a.label + " -> " + b.label + ")");
            }
            if (!(b.wakeup_latency_s > a.wakeup_latency_s)) {
                throw ConfigError("sleep sequence wake-up latencies must be strictly increasing (" +
                                  a.label + " -> " + b.label + ")");
            }
        }
    }

    std::vector<SleepState> states_;
};

/// The five combined low-power states, in canonical shallow-to-deep order.
struct SleepCatalog {
    std::vector<SleepState> states;

    const SleepState& at(std::string_view label) const {
        for (const auto& s : states) {
            if (s.label == label) return s;
        }
        throw ConfigError("unknown sleep state label: '" + std::string(label) + "'");
    }

    bool contains(std::string_view label) const {
        for (const auto& s : states) {
            if (s.label == label) return true;
        }
        return false;
    }
};

enum class LatencyCheck { Warn, Strict };

/// Combined CPU+platform power data: per-state laws and coefficients, the
/// legal pairings, and average wake-up latencies per combined state.
class PowerTable {
public:
    /// Stock Xeon-class table; identical to data/xeon.power.
    static PowerTable builtin_default() {
        PowerTable t;
        t.cpu_[0] = {CpuStateId::C0Active, PowerLaw::CubicInF, 130.0};
        t.cpu_[1] = {CpuStateId::C0Idle, PowerLaw::CubicInF, 75.0};
        t.cpu_[2] = {CpuStateId::C1, PowerLaw::QuadraticInF, 47.0};
        t.cpu_[3] = {CpuStateId::C3, PowerLaw::Constant, 22.0};
        t.cpu_[4] = {CpuStateId::C6, PowerLaw::Constant, 15.0};
        t.platform_[0] = {PlatformStateId::S0Active, 120.0};
        t.platform_[1] = {PlatformStateId::S0Idle, 60.5};
        t.platform_[2] = {PlatformStateId::S3, 13.1};
        t.set_default_compatibility();
        t.latencies_ = {{"C0iS0i", 0.0}, {"C1S0i", 10e-6}, {"C3S0i", 100e-6},
                        {"C6S0i", 1e-3}, {"C6S3", 1.0}};
        t.check_invariants();
        return t;
    }

    static PowerTable parse(std::istream& in) {
        PowerTable t;
        std::array<bool, kNumCpuStates> cpu_seen{};
        std::array<bool, kNumPlatformStates> plat_seen{};
        bool any_compat = false;

        std::string line;
        std::string section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string_view sv = trim(line);
            if (const auto hash = sv.find('#'); hash != std::string_view::npos) {
                sv = trim(sv.substr(0, hash));
            }
            if (sv.empty()) continue;
            if (sv.front() == '[' && sv.back() == ']') {
                section = std::string(trim(sv.substr(1, sv.size() - 2)));
                continue;
            }
            std::istringstream fields{std::string(sv)};
            std::string a, b, c;
            fields >> a >> b >> c;
            if (section == "cpu_states") {
                const auto id = cpu_state_from(a);
                if (!id) throw ParseError("unknown CPU state '" + a + "'", lineno);
                t.cpu_[static_cast<std::size_t>(*id)] = {*id, parse_law(b, lineno), parse_double(c)};
                cpu_seen[static_cast<std::size_t>(*id)] = true;
            } else if (section == "platform_states") {
                const auto id = platform_state_from(a);
                if (!id) throw ParseError("unknown platform state '" + a + "'", lineno);
                t.platform_[static_cast<std::size_t>(*id)] = {*id, parse_double(b)};
                plat_seen[static_cast<std::size_t>(*id)] = true;
            } else if (section == "latencies") {
                t.latencies_[a] = parse_double(b);
            } else if (section == "compatibility") {
                const auto cid = cpu_state_from(a);
                const auto pid = platform_state_from(b);
                if (!cid || !pid) throw ParseError("bad compatibility pair '" + a + " " + b + "'", lineno);
                t.compat_[static_cast<std::size_t>(*cid)][static_cast<std::size_t>(*pid)] = true;
                any_compat = true;
            } else {
                throw ParseError("line outside a recognized section", lineno);
            }
        }
        for (std::size_t i = 0; i < kNumCpuStates; ++i) {
            if (!cpu_seen[i]) throw ConfigError("power table missing CPU state " +
                                                std::string(to_string(static_cast<CpuStateId>(i))));
        }
        for (std::size_t i = 0; i < kNumPlatformStates; ++i) {
            if (!plat_seen[i]) throw ConfigError("power table missing platform state " +
                                                 std::string(to_string(static_cast<PlatformStateId>(i))));
        }
        if (!any_compat) t.set_default_compatibility();
        for (const char* lbl : {"C0iS0i", "C1S0i", "C3S0i", "C6S0i", "C6S3"}) {
            if (!t.latencies_.count(lbl)) throw ConfigError(std::string("power table missing latency for ") + lbl);
        }
        t.check_invariants();
        return t;
    }

    static PowerTable load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open power table '" + path + "'");
        return parse(in);
    }

    const CpuState& cpu_state(CpuStateId id) const { return cpu_[static_cast<std::size_t>(id)]; }
    const PlatformState& platform_state(PlatformStateId id) const {
        return platform_[static_cast<std::size_t>(id)];
    }

    bool compatible(CpuStateId c, PlatformStateId p) const {
        return compat_[static_cast<std::size_t>(c)][static_cast<std::size_t>(p)];
    }

    const std::map<std::string, double>& latencies() const noexcept { return latencies_; }

    /// CPU term + platform term for a legal pair at frequency factor f.
    double combined_power(CpuStateId cpu, PlatformStateId plat, double f) const {
        if (!compatible(cpu, plat)) {
            throw IncompatiblePair(std::string(to_string(cpu)) + " cannot pair with " +
                                   std::string(to_string(plat)));
        }
        if (f < 0.0 || f > 1.0) throw ConfigError("frequency factor out of [0,1]: " + format_double(f));
        return cpu_power(cpu, f) + platform_[static_cast<std::size_t>(plat)].power_w;
    }

    /// Power while serving jobs: C0_active / S0_active at f.
    double active_power(double f) const {
        return combined_power(CpuStateId::C0Active, PlatformStateId::S0Active, f);
    }

    /// Power while idle but not yet in any sleep state: C0_idle / S0_idle,
    /// frequency held at the policy's operating point.
    double idle_power(double f) const {
        return combined_power(CpuStateId::C0Idle, PlatformStateId::S0Idle, f);
    }

    /// Build the five-state catalog with powers evaluated at f_idle (only
    /// C0iS0i and C1S0i actually depend on it) and wake-up latencies taken
    /// from `latencies`. Entry delays are left at zero; they belong to the
    /// policy, not the hardware. Out-of-range latencies are collected into
    /// `warnings` (or thrown when check == Strict).
    SleepCatalog sleep_catalog(const std::map<std::string, double>& latencies, double f_idle,
                               LatencyCheck check = LatencyCheck::Warn,
                               std::vector<std::string>* warnings = nullptr) const {
        SleepCatalog cat;
        const auto lat = [&](const std::string& label) {
            const auto it = latencies.find(label);
            if (it == latencies.end()) throw ConfigError("missing latency for " + label);
            validate_latency(label, it->second, check, warnings);
            return it->second;
        };
        cat.states.push_back({"C0iS0i", combined_power(CpuStateId::C0Idle, PlatformStateId::S0Idle, f_idle),
                              0.0, lat("C0iS0i")});
        cat.states.push_back({"C1S0i", combined_power(CpuStateId::C1, PlatformStateId::S0Idle, f_idle),
                              0.0, lat("C1S0i")});
        cat.states.push_back({"C3S0i", combined_power(CpuStateId::C3, PlatformStateId::S0Idle, f_idle),
                              0.0, lat("C3S0i")});
        cat.states.push_back({"C6S0i", combined_power(CpuStateId::C6, PlatformStateId::S0Idle, f_idle),
                              0.0, lat("C6S0i")});
        cat.states.push_back({"C6S3", combined_power(CpuStateId::C6, PlatformStateId::S3, f_idle),
                              0.0, lat("C6S3")});
        return cat;
    }

    SleepCatalog sleep_catalog(double f_idle, LatencyCheck check = LatencyCheck::Warn,
                               std::vector<std::string>* warnings = nullptr) const {
        return sleep_catalog(latencies_, f_idle, check, warnings);
    }

private:
    static PowerLaw parse_law(std::string_view s, std::size_t lineno) {
        if (s == "cubic") return PowerLaw::CubicInF;
        if (s == "quadratic") return PowerLaw::QuadraticInF;
        if (s == "constant") return PowerLaw::Constant;
        throw ParseError("unknown power law '" + std::string(s) + "'", lineno);
    }

    double cpu_power(CpuStateId id, double f) const {
        const CpuState& s = cpu_[static_cast<std::size_t>(id)];
        switch (s.law) {
            case PowerLaw::CubicInF: return s.coefficient_w * f * f * f;
            case PowerLaw::QuadraticInF: return s.coefficient_w * f * f;
            case PowerLaw::Constant: return s.coefficient_w;
        }
        return 0.0;
    }

    void set_default_compatibility() {
        compat_ = {};
        const auto set = [&](CpuStateId c, PlatformStateId p) {
            compat_[static_cast<std::size_t>(c)][static_cast<std::size_t>(p)] = true;
        };
        set(CpuStateId::C0Active, PlatformStateId::S0Active);
        set(CpuStateId::C0Idle, PlatformStateId::S0Idle);
        set(CpuStateId::C1, PlatformStateId::S0Idle);
        set(CpuStateId::C3, PlatformStateId::S0Idle);
        set(CpuStateId::C6, PlatformStateId::S0Idle);
        set(CpuStateId::C6, PlatformStateId::S3);
    }

    void check_invariants() const {
        for (const auto& c : cpu_) {
            if (c.coefficient_w < 0) throw ConfigError("negative CPU power coefficient");
        }
        if (cpu_[0].law != PowerLaw::CubicInF || cpu_[1].law != PowerLaw::CubicInF) {
            throw ConfigError("C0_active and C0_idle must use the cubic law");
        }
        if (cpu_[2].law != PowerLaw::QuadraticInF) throw ConfigError("C1 must use the quadratic law");
        if (cpu_[3].law != PowerLaw::Constant || cpu_[4].law != PowerLaw::Constant) {
            throw ConfigError("C3 and C6 must use the constant law");
        }
        const double s0a = platform_[0].power_w;
        const double s0i = platform_[1].power_w;
        const double s3 = platform_[2].power_w;
        if (!(s0a >= s0i && s0i >= s3 && s3 >= 0)) {
            throw ConfigError("platform powers must satisfy S0_active >= S0_idle >= S3 >= 0");
        }
    }

    static void validate_latency(const std::string& label, double value, LatencyCheck check,
                                 std::vector<std::string>* warnings) {
        struct Range { const char* label; double lo, hi; };
        // Supported hardware wake-up latency ranges per combined state.
        static constexpr Range kRanges[] = {
            {"C0iS0i", 0.0, 0.0}, {"C1S0i", 1e-6, 10e-6}, {"C3S0i", 10e-6, 100e-6},
            {"C6S0i", 100e-6, 1e-3}, {"C6S3", 1.0, 10.0}};
        for (const auto& r : kRanges) {
            if (label != r.label) continue;
            if (value < r.lo || value > r.hi) {
                const std::string msg = "latency " + format_double(value) + " s for " + label +
                                        " outside supported range [" + format_double(r.lo) + ", " +
                                        format_double(r.hi) + "]";
                if (check == LatencyCheck::Strict) throw LatencyOutOfRange(msg);
                if (warnings) warnings->push_back(msg);
            }
            return;
        }
    }

    std::array<CpuState, kNumCpuStates> cpu_{};
    std::array<PlatformState, kNumPlatformStates> platform_{};
    std::array<std::array<bool, kNumPlatformStates>, kNumCpuStates> compat_{};
    std::map<std::string, double> latencies_;
};

/// Build a multi-state cascade over `states` (shallow-to-deep catalog order)
/// with the given entry delays, dropping any state that does not strictly
/// undercut the power of the previously kept one. At low operating
/// frequencies the frequency-scaled C0_idle power can fall below the
/// constant-power states, which would otherwise make the sequence illegal.
inline SleepSequence filtered_cascade(const std::vector<SleepState>& states,
                                      const std::vector<double>& delays) {
    if (states.size() != delays.size()) throw ConfigError("cascade states/delays size mismatch");
    std::vector<SleepState> kept;
    for (std::size_t i = 0; i < states.size(); ++i) {
        SleepState s = states[i];
        s.entry_delay_s = delays[i];
        if (!kept.empty() && !(s.power_w < kept.back().power_w)) continue;
        kept.push_back(std::move(s));
    }
    return SleepSequence(std::move(kept));
}

} // namespace sleepsim
