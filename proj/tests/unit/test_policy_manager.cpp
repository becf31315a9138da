#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "sleepsim/policy_manager.hpp"

using namespace sleepsim;

namespace {

const PowerTable& table() {
    static const PowerTable t = PowerTable::builtin_default();
    return t;
}

JobStream dns_stream(double rho, std::size_t n, std::uint64_t seed) {
    const double mu = 1.0 / 0.194;
    return generate(ArrivalSpec::exponential_rate(rho * mu), ServiceSpec::exponential_rate(mu), n,
                    seed);
}

} // namespace

TEST_CASE("baseline budget identities", "[policy_manager]") {
    CHECK_THAT(QoSConstraint::mean_budget(0.8).budget, Catch::Matchers::WithinRel(5.0, 1e-12));
    CHECK_THAT(QoSConstraint::mean_budget(0.6).budget, Catch::Matchers::WithinRel(2.5, 1e-12));
    CHECK_THAT(QoSConstraint::mean_budget(0.01).budget, Catch::Matchers::WithinRel(1.0101, 1e-3));
    CHECK_THROWS_AS(QoSConstraint::mean_budget(0.0), ConfigError);
    CHECK_THROWS_AS(QoSConstraint::mean_budget(1.0), ConfigError);
}

TEST_CASE("tail-mode baseline pins the deadline to the empirical p95", "[policy_manager]") {
    const double mu = 1.0 / 0.194, rho_b = 0.8;
    const auto qos = baseline_budget(rho_b, mu, QoSConstraint::Mode::Tail, table(), 100000, 3);
    CHECK(qos.mode == QoSConstraint::Mode::Tail);
    // M/M/1 response tail: p95 = ln(20) / (mu (1 - rho_b))
    CHECK_THAT(qos.deadline_s,
               Catch::Matchers::WithinRel(std::log(20.0) / (mu * (1.0 - rho_b)), 0.1));
    CHECK(qos.max_violation == 0.05);
}

TEST_CASE("frequency axis spans barely-stable to full speed", "[policy_manager]") {
    const auto axis = PolicyGrid::frequency_axis(0.1, 0.01);
    REQUIRE(axis.size() == 90);
    CHECK_THAT(axis.front(), Catch::Matchers::WithinRel(0.11, 1e-9));
    CHECK(axis.back() == 1.0);

    const auto tiny = PolicyGrid::frequency_axis(0.995, 0.01);
    REQUIRE(tiny.size() == 1);
    CHECK(tiny.front() == 1.0);

    const auto coarse = PolicyGrid::frequency_axis(0.4, 0.05);
    CHECK(coarse.front() == Catch::Approx(0.45));
    CHECK(coarse.back() == 1.0);
}

TEST_CASE("unconstrained selection at low DNS load picks deep sleep at a low frequency",
          "[policy_manager]") {
    const auto stream = dns_stream(0.1, 10000, 42);
    const auto grid = PolicyGrid::standard(0.1, stream.mean_gap());
    const auto choice = select(grid, stream, table(), QoSConstraint::unconstrained(), 4);
    CHECK(choice.feasible);
    CHECK(choice.policy.sleep_label() == "C6S3");
    CHECK(choice.policy.f > 0.3);
    CHECK(choice.policy.f < 0.55);
}

TEST_CASE("selection is invariant under grid permutation", "[policy_manager]") {
    const auto stream = dns_stream(0.2, 4000, 17);
    auto grid = PolicyGrid::standard(0.2, stream.mean_gap(), 1.0, 0.05);
    auto shuffled = grid;
    std::reverse(shuffled.frequencies.begin(), shuffled.frequencies.end());
    std::reverse(shuffled.options.begin(), shuffled.options.end());
    const auto qos = QoSConstraint::mean_budget(0.8);
    const auto a = select(grid, stream, table(), qos);
    const auto b = select(shuffled, stream, table(), qos);
    CHECK(a.policy.f == b.policy.f);
    CHECK(a.policy.sleep_label() == b.policy.sleep_label());
    CHECK(a.predicted.mean_power_w == b.predicted.mean_power_w);
}

TEST_CASE("loosening the budget never raises the selected power", "[policy_manager]") {
    const auto stream = dns_stream(0.3, 6000, 23);
    const auto grid = PolicyGrid::standard(0.3, stream.mean_gap(), 1.0, 0.02);
    double prev_power = std::numeric_limits<double>::infinity();
    for (double budget : {1.05, 1.5, 2.0, 3.0, 5.0, 10.0, 1e9}) {
        QoSConstraint qos = QoSConstraint::mean_budget(0.8);
        qos.budget = budget;
        const auto choice = select(grid, stream, table(), qos);
        CHECK(choice.predicted.mean_power_w <= prev_power + 1e-12);
        prev_power = choice.predicted.mean_power_w;
    }
}

TEST_CASE("memory-bound workloads select the lowest frequency", "[policy_manager]") {
    const double mu = 1.0 / 0.194;
    auto stream = generate(ArrivalSpec::exponential_rate(0.3 * mu),
                           ServiceSpec::exponential_rate(mu, 0.0), 6000, 29);
    auto grid = PolicyGrid::standard(0.3, stream.mean_gap(), /*beta=*/0.0, 0.02);
    const auto choice = select(grid, stream, table(), QoSConstraint::mean_budget(0.8));
    CHECK(choice.feasible);
    CHECK(choice.policy.f == grid.frequencies.front());
}

TEST_CASE("strategy reductions: DVFS-only and race-to-halt", "[policy_manager]") {
    const auto stream = dns_stream(0.25, 5000, 31);

    const auto dvfs = select(PolicyGrid::dvfs_only(0.25, 1.0, 0.02), stream, table(),
                             QoSConstraint::mean_budget(0.8));
    CHECK(dvfs.policy.sleep.empty());

    PolicyGrid r2h = PolicyGrid::singletons(0.25, 1.0, 0.02);
    r2h.frequencies = {1.0};
    const auto racer = select(r2h, stream, table(), QoSConstraint::mean_budget(0.8));
    CHECK(racer.policy.f == 1.0);
    CHECK_FALSE(racer.policy.sleep.empty());
}

TEST_CASE("infeasible-everywhere returns the least-violating candidate", "[policy_manager]") {
    const auto stream = dns_stream(0.5, 5000, 37);
    auto grid = PolicyGrid::single_state(0.5, "C6S3", 1.0, 0.05);
    QoSConstraint qos = QoSConstraint::mean_budget(0.8);
    qos.budget = 1.01; // nothing can achieve nearly-zero queueing with a 1 s wake-up
    const auto choice = select(grid, stream, table(), qos);
    CHECK_FALSE(choice.feasible);
    CHECK(choice.margin < 0.0);
    CHECK(choice.policy.f == 1.0); // fastest candidate violates least
}

TEST_CASE("frontier is sorted per curve and exposes the race-to-halt penalty",
          "[policy_manager]") {
    const auto stream = dns_stream(0.1, 10000, 41);
    const auto grid = PolicyGrid::singletons(0.1, 1.0, 0.01);
    const auto points = frontier(grid, stream, table(), 4);
    REQUIRE(points.size() == 5 * 90);

    // per-curve ordering and an f = 1 row per curve
    std::map<std::string, std::vector<const FrontierPoint*>> curves;
    for (const auto& p : points) curves[p.policy.sleep_label()].push_back(&p);
    REQUIRE(curves.size() == 5);
    for (const auto& [label, pts] : curves) {
        for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i]->policy.f > pts[i - 1]->policy.f);
        CHECK(pts.back()->policy.f == 1.0);
        // the f = 1 tip is the fastest (lowest response) point of the curve
        for (const auto* p : pts) CHECK(pts.back()->result.mean_response_s <= p->result.mean_response_s);
    }

    // race-to-halt point of the winning curve vs its bowl minimum
    const auto& c6s3 = curves.at("C6S3");
    double bowl = std::numeric_limits<double>::infinity();
    for (const auto* p : c6s3) bowl = std::min(bowl, p->result.mean_power_w);
    CHECK(c6s3.back()->result.mean_power_w >= 1.4 * bowl);
}

TEST_CASE("empty grids are rejected", "[policy_manager]") {
    const auto stream = dns_stream(0.2, 100, 1);
    PolicyGrid empty;
    CHECK_THROWS_AS(select(empty, stream, table(), QoSConstraint::mean_budget(0.8)), EmptyGrid);
    CHECK_THROWS_AS(frontier(empty, stream, table()), EmptyGrid);
}
