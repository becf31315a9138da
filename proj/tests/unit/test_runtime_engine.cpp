#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sleepsim/runtime_engine.hpp"

using namespace sleepsim;

namespace {

const PowerTable& table() {
    static const PowerTable t = PowerTable::builtin_default();
    return t;
}

ArrivalSpec dns_arrivals() { return ArrivalSpec::exponential_mean(1.1); }
ServiceSpec dns_service() { return ServiceSpec::exponential_mean(0.194); }

EpochConfig small_config() {
    EpochConfig cfg;
    cfg.epoch_minutes = 5;
    cfg.qos = QoSConstraint::mean_budget(0.8);
    cfg.f_step = 0.02;
    cfg.eval_jobs = 2000;
    cfg.parallelism = 2;
    return cfg;
}

UtilizationTrace bumpy_trace(std::size_t minutes, std::uint64_t seed) {
    SynthTraceSpec spec;
    spec.pattern = SynthTraceSpec::Pattern::Sinusoid;
    spec.minutes = minutes;
    spec.low = 0.1;
    spec.high = 0.6;
    spec.period = static_cast<double>(minutes);
    spec.noise_sigma = 0.03;
    spec.seed = seed;
    return synth_trace(spec);
}

} // namespace

TEST_CASE("over-provisioning boosts only when under budget and caps at 1", "[runtime]") {
    CHECK_THAT(over_provision(0.6, 0.5, 0.97, 0.35), Catch::Matchers::WithinRel(0.81, 1e-12));
    CHECK(over_provision(0.9, 0.5, 0.97, 0.35) == 1.0);
    CHECK(over_provision(0.6, 1.2, 0.97, 0.35) == 0.6);
    CHECK(over_provision(0.6, 0.5, 0.97, 0.0) == 0.6);
}

TEST_CASE("strategy tokens parse and print", "[runtime]") {
    CHECK(StrategyId::parse("SS").kind == StrategyId::Kind::SS);
    CHECK(StrategyId::parse("DVFS").kind == StrategyId::Kind::DvfsOnly);
    const auto fixed = StrategyId::parse("SS:C3");
    CHECK(fixed.kind == StrategyId::Kind::SSFixed);
    CHECK(fixed.state_label == "C3S0i");
    const auto r2h = StrategyId::parse("R2H:C6");
    CHECK(r2h.kind == StrategyId::Kind::RaceToHalt);
    CHECK(r2h.name() == "R2H(C6S0i)");
    CHECK_THROWS_AS(StrategyId::parse("TURBO"), ConfigError);
    CHECK_THROWS_AS(StrategyId::parse("R2H:C9"), ConfigError);
}

TEST_CASE("materialized jobs are deterministic and track the trace", "[runtime]") {
    UtilizationTrace trace;
    trace.rho.assign(30, 0.3);
    const auto a = materialize_trace_jobs(trace, dns_arrivals(), dns_service(), 5);
    const auto b = materialize_trace_jobs(trace, dns_arrivals(), dns_service(), 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); i += 131) {
        CHECK(a.jobs[i].arrival_s == b.jobs[i].arrival_s);
        CHECK(a.jobs[i].demand_s == b.jobs[i].demand_s);
    }
    double demand = 0.0;
    for (const auto& j : a.jobs) demand += j.demand_s;
    CHECK_THAT(demand / (30.0 * 60.0), Catch::Matchers::WithinRel(0.3, 0.05));
}

TEST_CASE("short traces are rejected", "[runtime]") {
    UtilizationTrace trace;
    trace.rho.assign(5, 0.3);
    CHECK_THROWS_AS(run(trace, dns_arrivals(), dns_service(), small_config(),
                        StrategyId::parse("SS"), 1, table()),
                    TraceTooShort);
}

TEST_CASE("every materialized job is reported exactly once", "[runtime]") {
    const auto trace = bumpy_trace(40, 3);
    const auto jobs = materialize_trace_jobs(trace, dns_arrivals(), dns_service(), 9);
    const auto summary = run_strategy(trace, jobs, dns_arrivals(), dns_service(), small_config(),
                                      StrategyId::parse("SS"), 9, table());
    std::uint64_t completed = 0;
    for (const auto& rep : summary.epochs) completed += rep.completed_jobs;
    CHECK(completed == jobs.size());
    CHECK(summary.total_jobs == jobs.size());
}

TEST_CASE("race-to-halt ignores the predictor", "[runtime]") {
    const auto trace = bumpy_trace(40, 5);
    auto cfg = small_config();
    std::vector<RunSummary> runs;
    for (auto choice : {PredictorChoice::Naive, PredictorChoice::Lms, PredictorChoice::LmsCusum,
                        PredictorChoice::Offline}) {
        cfg.predictor = choice;
        runs.push_back(run(trace, dns_arrivals(), dns_service(), cfg, StrategyId::parse("R2H:C3"), 7,
                           table()));
    }
    for (std::size_t i = 1; i < runs.size(); ++i) {
        CHECK(runs[i].mean_power_w == runs[0].mean_power_w);
        CHECK(runs[i].mean_response_s == runs[0].mean_response_s);
        CHECK(std::isnan(runs[i].epochs[0].predicted_rho));
    }
    // f stays pinned at 1 with the single immediate state
    for (const auto& rep : runs[0].epochs) {
        CHECK(rep.f_applied == 1.0);
        CHECK(rep.sleep_label == "C3S0i");
    }
}

TEST_CASE("comparison entries equal standalone runs on the same seed", "[runtime]") {
    const auto trace = bumpy_trace(40, 8);
    auto cfg = small_config();
    const auto report = compare(trace, dns_arrivals(), dns_service(), cfg,
                                {StrategyId::parse("SS"), StrategyId::parse("R2H:C6")}, 21, table());
    REQUIRE(report.entries.size() == 2);
    const auto standalone = run(trace, dns_arrivals(), dns_service(), cfg,
                                StrategyId::parse("R2H:C6"), 21, table());
    CHECK(report.entries[1].mean_power_w == standalone.mean_power_w);
    CHECK(report.entries[1].mean_response_s == standalone.mean_response_s);
    CHECK(report.entries[0].strategy.name() == "SS");
}

TEST_CASE("constant trace with the offline predictor settles on one policy", "[runtime]") {
    UtilizationTrace trace;
    trace.rho.assign(40, 0.3);
    auto cfg = small_config();
    cfg.predictor = PredictorChoice::Offline;
    cfg.eval_source = EvalSource::Synthetic; // selection depends only on the prediction
    cfg.f_step = 0.05;
    cfg.eval_jobs = 4000;
    const auto summary = run(trace, dns_arrivals(), dns_service(), cfg, StrategyId::parse("SS"), 31,
                             table());
    REQUIRE(summary.epochs.size() >= 3);
    for (std::size_t e = 1; e < summary.epochs.size(); ++e) {
        CHECK(summary.epochs[e].f_selected == summary.epochs[1].f_selected);
        CHECK(summary.epochs[e].sleep_label == summary.epochs[1].sleep_label);
    }
}

TEST_CASE("shorter epochs track the trace at least as well", "[runtime]") {
    SynthTraceSpec spec;
    spec.pattern = SynthTraceSpec::Pattern::Sinusoid;
    spec.minutes = 90;
    spec.low = 0.15;
    spec.high = 0.75;
    spec.period = 45;
    spec.noise_sigma = 0.02;
    spec.seed = 17;
    const auto trace = synth_trace(spec);

    auto cfg = small_config();
    cfg.predictor = PredictorChoice::Naive;
    cfg.epoch_minutes = 1;
    const auto fast = run(trace, dns_arrivals(), dns_service(), cfg, StrategyId::parse("SS"), 13,
                          table());
    cfg.epoch_minutes = 15;
    const auto slow = run(trace, dns_arrivals(), dns_service(), cfg, StrategyId::parse("SS"), 13,
                          table());
    CHECK(fast.norm_mean_response <= slow.norm_mean_response);
}

TEST_CASE("runs are deterministic per seed", "[runtime]") {
    const auto trace = bumpy_trace(30, 22);
    auto cfg = small_config();
    const auto a = run(trace, dns_arrivals(), dns_service(), cfg, StrategyId::parse("SS"), 4, table());
    const auto b = run(trace, dns_arrivals(), dns_service(), cfg, StrategyId::parse("SS"), 4, table());
    CHECK(a.mean_power_w == b.mean_power_w);
    CHECK(a.mean_response_s == b.mean_response_s);
    REQUIRE(a.epochs.size() == b.epochs.size());
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
        CHECK(a.epochs[e].f_applied == b.epochs[e].f_applied);
        CHECK(a.epochs[e].sleep_label == b.epochs[e].sleep_label);
    }
    // parallelism does not change results
    cfg.parallelism = 8;
    const auto c = run(trace, dns_arrivals(), dns_service(), cfg, StrategyId::parse("SS"), 4, table());
    CHECK(c.mean_power_w == a.mean_power_w);
    CHECK(c.mean_response_s == a.mean_response_s);
}

TEST_CASE("run summaries account residency over the whole run", "[runtime]") {
    const auto trace = bumpy_trace(30, 27);
    const auto summary = run(trace, dns_arrivals(), dns_service(), small_config(),
                             StrategyId::parse("SS"), 2, table());
    double total = 0.0;
    for (const auto& [label, frac] : summary.residency) total += frac;
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-9));
    std::uint64_t selections = 0;
    for (const auto& [label, count] : summary.selection_histogram) selections += count;
    CHECK(selections == summary.epochs.size());
}
