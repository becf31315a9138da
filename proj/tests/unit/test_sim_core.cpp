#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "sleepsim/analytic.hpp"
#include "sleepsim/sim_core.hpp"

using namespace sleepsim;

namespace {

const PowerTable& table() {
    static const PowerTable t = PowerTable::builtin_default();
    return t;
}

Policy immediate_policy(double f, const char* label) {
    return Policy{f, SleepSequence::immediate(table().sleep_catalog(f).at(label))};
}

bool same_result(const SimResult& a, const SimResult& b) {
    return a.mean_response_s == b.mean_response_s &&
           a.normalized_mean_response == b.normalized_mean_response &&
           a.response_p95_s == b.response_p95_s && a.mean_power_w == b.mean_power_w &&
           a.wakeups == b.wakeups && a.jobs == b.jobs && a.makespan_s == b.makespan_s &&
           a.busy_time_s == b.busy_time_s && a.wakeup_time_s == b.wakeup_time_s &&
           a.residency == b.residency;
}

} // namespace

TEST_CASE("sleep_state_at picks the deepest reached state, boundary inclusive", "[sim_core]") {
    const auto cat = table().sleep_catalog(1.0);
    const auto single = SleepSequence::immediate(cat.at("C6S3"));
    CHECK(sleep_state_at(single, 5.0).state_index == 0);
    CHECK(sleep_state_at(single, 5.0).wakeup_latency_s == 1.0);

    const auto pair = SleepSequence::delayed_pair(cat.at("C0iS0i"), cat.at("C6S3"), 10.0);
    CHECK(sleep_state_at(pair, 3.0).state_index == 0);
    CHECK(sleep_state_at(pair, 3.0).wakeup_latency_s == 0.0);
    CHECK(sleep_state_at(pair, 10.0).state_index == 1);
    CHECK(sleep_state_at(pair, 10.0).wakeup_latency_s == 1.0);

    CHECK(sleep_state_at(SleepSequence{}, 2.0).state_index == kWokePreIdle);
    const auto delayed = SleepSequence({[&] {
        SleepState s = cat.at("C6S3");
        s.entry_delay_s = 1.0;
        return s;
    }()});
    CHECK(sleep_state_at(delayed, 0.5).state_index == kWokePreIdle);
    CHECK(sleep_state_at(delayed, 0.5).wakeup_latency_s == 0.0);
}

TEST_CASE("hand-checked two-job timeline", "[sim_core]") {
    // Policy f=1, immediate C6S3 (28.1 W asleep, 1 s wake). Jobs at t=2 and
    // t=2.5 with demands 1 and 0.5. Job 1 sleeps the gap [0,2), wakes during
    // [2,3), serves [3,4). Job 2 queues, serves [4,4.5].
    JobStream stream;
    stream.jobs = {{2.0, 1.0}, {2.5, 0.5}};
    SimOptions opt;
    opt.collect_outcomes = true;
    const auto out = simulate_detailed(immediate_policy(1.0, "C6S3"), stream, table(), opt);
    const auto& oc = out.outcomes;
    REQUIRE(oc.size() == 2);
    CHECK(oc[0].start_s == 3.0);
    CHECK(oc[0].departure_s == 4.0);
    CHECK(oc[0].response_s == 2.0);
    CHECK(oc[0].woke_from == 0);
    CHECK(oc[1].start_s == 4.0);
    CHECK(oc[1].departure_s == 4.5);
    CHECK(oc[1].woke_from == kWokeQueued);

    const auto& r = out.result;
    CHECK(r.makespan_s == 4.5);
    CHECK(r.busy_time_s == 1.5);
    CHECK(r.wakeup_time_s == 1.0);
    CHECK(r.wakeups == 1);
    // Energy: 2 s at 28.1 plus 2.5 s at 250.
    CHECK_THAT(r.mean_power_w, Catch::Matchers::WithinRel((2.0 * 28.1 + 2.5 * 250.0) / 4.5, 1e-12));
    CHECK_THAT(r.residency.at("C6S3"), Catch::Matchers::WithinRel(2.0 / 4.5, 1e-12));
    CHECK_THAT(r.residency.at(kActiveLabel), Catch::Matchers::WithinRel(1.5 / 4.5, 1e-12));
    CHECK_THAT(r.residency.at(kWakeLabel), Catch::Matchers::WithinRel(1.0 / 4.5, 1e-12));
    CHECK(r.mean_response_s == 2.0); // (2.0 + 2.0) / 2
}

TEST_CASE("no-setup single state reduces to M/M/1", "[sim_core]") {
    const double mu = 1.0 / 0.194, lam = 0.4 * mu, f = 0.8;
    const auto stream = generate(ArrivalSpec::exponential_rate(lam),
                                 ServiceSpec::exponential_rate(mu), 100000, 1234);
    SleepState idle{"idle", table().idle_power(f), 0.0, 0.0};
    const auto res = simulate(Policy{f, SleepSequence::immediate(idle)}, stream, table());
    CHECK_THAT(res.mean_response_s, Catch::Matchers::WithinRel(1.0 / (mu * f - lam), 0.03));
}

TEST_CASE("simulation matches the closed forms on spot checks", "[sim_core]") {
    struct Point {
        double rho, f;
        const char* label;
    };
    for (const Point pt : {Point{0.1, 0.42, "C6S3"}, Point{0.3, 0.7, "C3S0i"},
                           Point{0.5, 0.9, "C6S0i"}, Point{0.2, 0.5, "C0iS0i"}}) {
        const double mu = 1.0 / 0.194, lam = pt.rho * mu;
        const auto arr = ArrivalSpec::exponential_rate(lam);
        const auto svc = ServiceSpec::exponential_rate(mu);
        const auto stream = generate(arr, svc, 100000, 99);
        const Policy pol = immediate_policy(pt.f, pt.label);
        const auto res = simulate(pol, stream, table());
        const auto oracle = analytic::params_from_specs(arr, svc, pt.f, pol.sleep, table());
        CHECK_THAT(res.mean_response_s,
                   Catch::Matchers::WithinRel(analytic::mean_response(oracle), 0.03));
        CHECK_THAT(res.mean_power_w, Catch::Matchers::WithinRel(analytic::mean_power(oracle), 0.03));
    }
}

TEST_CASE("delayed-entry endpoints reproduce the immediate policies exactly", "[sim_core]") {
    const double mu = 1.0 / 0.194, lam = 0.1 * mu, f = 0.42;
    const auto stream = generate(ArrivalSpec::exponential_rate(lam),
                                 ServiceSpec::exponential_rate(mu), 20000, 7);
    const auto cat = table().sleep_catalog(f);

    const auto imm_deep = simulate(Policy{f, SleepSequence::immediate(cat.at("C6S3"))}, stream, table());
    const auto pair_zero = simulate(
        Policy{f, SleepSequence::delayed_pair(cat.at("C0iS0i"), cat.at("C6S3"), 0.0)}, stream, table());
    CHECK(same_result(imm_deep, pair_zero));

    const auto imm_shallow =
        simulate(Policy{f, SleepSequence::immediate(cat.at("C0iS0i"))}, stream, table());
    const auto pair_inf = simulate(
        Policy{f, SleepSequence::delayed_pair(cat.at("C0iS0i"), cat.at("C6S3"), 1e9)}, stream, table());
    CHECK(same_result(imm_shallow, pair_inf));
}

TEST_CASE("time accounting conserves the makespan", "[sim_core]") {
    const auto stream = generate(ArrivalSpec::exponential_mean(1.0),
                                 ServiceSpec::exponential_mean(0.3), 50000, 3);
    const auto cat = table().sleep_catalog(0.6);
    const Policy pol{0.6, filtered_cascade(cat.states, {0.0, 0.5, 1.0, 2.0, 5.0})};
    const auto res = simulate(pol, stream, table());
    double total = 0.0;
    for (const auto& [label, frac] : res.residency) total += frac;
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-9));
    CHECK(res.mean_power_w >= 28.1);
    CHECK(res.mean_power_w <= table().active_power(0.6));
}

TEST_CASE("simulation is deterministic", "[sim_core]") {
    const auto stream = generate(ArrivalSpec::exponential_mean(1.1),
                                 ServiceSpec::exponential_mean(0.194), 30000, 5);
    const Policy pol = immediate_policy(0.5, "C6S0i");
    CHECK(same_result(simulate(pol, stream, table()), simulate(pol, stream, table())));
}

TEST_CASE("raising wake-up latencies never lowers the mean response", "[sim_core]") {
    const auto stream = generate(ArrivalSpec::exponential_mean(1.1),
                                 ServiceSpec::exponential_mean(0.194), 30000, 15);
    double prev = -1.0;
    for (double w : {0.0, 1e-3, 0.05, 0.4, 1.0}) {
        SleepState s{"s", 28.1, 0.0, w};
        const auto res = simulate(Policy{0.6, SleepSequence::immediate(s)}, stream, table());
        CHECK(res.mean_response_s >= prev);
        prev = res.mean_response_s;
    }
}

TEST_CASE("idle power equal to active power gives exactly active mean power", "[sim_core]") {
    // Custom table where every state burns the same wattage.
    std::istringstream flat(
        "[cpu_states]\n"
        "C0_active cubic 0\nC0_idle cubic 0\nC1 quadratic 0\nC3 constant 0\nC6 constant 0\n"
        "[platform_states]\nS0_active 100\nS0_idle 100\nS3 100\n"
        "[latencies]\nC0iS0i 0\nC1S0i 1e-5\nC3S0i 1e-4\nC6S0i 1e-3\nC6S3 1\n");
    const auto flat_table = PowerTable::parse(flat);
    const auto stream = generate(ArrivalSpec::exponential_mean(1.0),
                                 ServiceSpec::exponential_mean(0.2), 10000, 8);
    const auto res = simulate(Policy{0.7, SleepSequence{}}, stream, flat_table);
    CHECK(res.mean_power_w == flat_table.active_power(0.7));
}

TEST_CASE("nearest-rank percentile", "[sim_core]") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    CHECK(percentile(v, 0.95) == 95.0);
    CHECK(percentile(v, 0.5) == 50.0);
    CHECK(percentile({42.0}, 0.95) == 42.0);
    CHECK(percentile({42.0}, 0.05) == 42.0);
    CHECK_THROWS_AS(percentile({}, 0.95), EmptyOutcomes);
    CHECK_THROWS_AS(percentile({1.0}, 1.0), RangeError);
}

TEST_CASE("M/M/1 p95 approximates the exponential tail", "[sim_core]") {
    const double mu = 5.0, lam = 2.0, f = 1.0;
    const auto stream = generate(ArrivalSpec::exponential_rate(lam),
                                 ServiceSpec::exponential_rate(mu), 100000, 44);
    SleepState idle{"idle", table().idle_power(f), 0.0, 0.0};
    const auto res = simulate(Policy{f, SleepSequence::immediate(idle)}, stream, table());
    CHECK_THAT(res.response_p95_s,
               Catch::Matchers::WithinRel(std::log(20.0) / (mu * f - lam), 0.05));
}

TEST_CASE("sweep preserves order, pairing and determinism", "[sim_core]") {
    const auto stream = generate(ArrivalSpec::exponential_mean(1.1),
                                 ServiceSpec::exponential_mean(0.194), 10000, 2);
    std::vector<Policy> policies;
    for (double f : {0.3, 0.5, 0.7, 1.0}) {
        policies.push_back(immediate_policy(f, "C6S3"));
        policies.push_back(immediate_policy(f, "C3S0i"));
    }
    policies.push_back(policies.front()); // duplicate candidate

    const auto seq = sweep(policies, stream, table(), 1.0, 1);
    const auto par = sweep(policies, stream, table(), 1.0, 4);
    REQUIRE(seq.size() == policies.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        REQUIRE(seq[i].result.has_value());
        REQUIRE(par[i].result.has_value());
        CHECK(same_result(*seq[i].result, *par[i].result));
    }
    CHECK(same_result(*seq.front().result, *seq.back().result));
    CHECK(same_result(*seq.front().result, simulate(policies.front(), stream, table())));
}

TEST_CASE("sweep records per-policy failures without aborting", "[sim_core]") {
    const auto stream = generate(ArrivalSpec::exponential_mean(1.0),
                                 ServiceSpec::exponential_mean(0.2), 100, 2);
    std::vector<Policy> policies{immediate_policy(0.5, "C6S3"), Policy{1.5, SleepSequence{}},
                                 immediate_policy(1.0, "C6S3")};
    const auto entries = sweep(policies, stream, table());
    CHECK(entries[0].result.has_value());
    CHECK_FALSE(entries[1].result.has_value());
    CHECK_FALSE(entries[1].error.empty());
    CHECK(entries[2].result.has_value());
}

TEST_CASE("empty stream and stability warnings", "[sim_core]") {
    CHECK_THROWS_AS(simulate(immediate_policy(1.0, "C6S3"), JobStream{}, table()), EmptyStream);

    const auto overloaded = generate(ArrivalSpec::exponential_mean(0.1),
                                     ServiceSpec::exponential_mean(0.194), 5000, 6);
    const auto res = simulate(immediate_policy(0.5, "C6S3"), overloaded, table());
    CHECK(res.stability_warning);
    CHECK_FALSE(simulate(immediate_policy(1.0, "C6S3"),
                         generate(ArrivalSpec::exponential_mean(1.1),
                                  ServiceSpec::exponential_mean(0.194), 5000, 6),
                         table())
                    .stability_warning);
}

TEST_CASE("warm-up discard only affects response statistics", "[sim_core]") {
    const auto stream = generate(ArrivalSpec::exponential_mean(1.1),
                                 ServiceSpec::exponential_mean(0.194), 20000, 51);
    const Policy pol = immediate_policy(0.6, "C6S3");
    SimOptions with_warmup;
    with_warmup.warmup_discard = 1000;
    const auto a = simulate_detailed(pol, stream, table(), {}).result;
    const auto b = simulate_detailed(pol, stream, table(), with_warmup).result;
    CHECK(a.mean_power_w == b.mean_power_w);
    CHECK(a.makespan_s == b.makespan_s);
    CHECK(a.mean_response_s != b.mean_response_s);
}

TEST_CASE("tail deadline measurement", "[sim_core]") {
    const auto stream = generate(ArrivalSpec::exponential_rate(2.0),
                                 ServiceSpec::exponential_rate(5.0), 100000, 23);
    SleepState idle{"idle", table().idle_power(1.0), 0.0, 0.0};
    SimOptions opt;
    opt.tail_deadline_s = std::log(20.0) / 3.0; // p95 of Exp(mu f - lam)
    const auto res = simulate_detailed(Policy{1.0, SleepSequence::immediate(idle)}, stream, table(), opt);
    CHECK_THAT(res.result.tail_exceedance, Catch::Matchers::WithinAbs(0.05, 0.01));
}
