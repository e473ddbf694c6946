#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>

#include "chronic/behavior.hpp"
#include "chronic/capability.hpp"
#include "helpers.hpp"

using namespace chronic;

namespace {

using Scores = std::array<std::optional<double>, kNumArchetypes>;

CapabilityEstimate with_kappa(double low, double high, double ops) {
    CapabilityEstimate e;
    e.present = {true, true, true};
    e.kappa = {low, high, ops};
    return e;
}

}  // namespace

TEST_SUITE("capability") {

TEST_CASE("outcome_score examples") {
    CHECK(outcome_score(0.0, false, 1.0) == 0.0);
    CHECK(outcome_score(14.0, true, 1.0) == doctest::Approx(19.0));
    CHECK(outcome_score(0.5, true, 10.0) == doctest::Approx(10.0));
    CHECK(outcome_score(-2.0, false, 1.0) == doctest::Approx(-2.0));
    const CapabilityConfig c;
    CHECK(c.unit_scale(Condition::HTN) == 1.0);
    CHECK(c.unit_scale(Condition::T2D) == 10.0);
    CHECK(c.ttc_bonus == 5.0);
}

TEST_CASE("z_normalize: population standard deviation") {
    const CapabilityEstimate e = z_normalize(Scores{1.0, 2.0, 6.0});
    const double mean = 3.0;
    const double sd = std::sqrt(((1 - mean) * (1 - mean) + (2 - mean) * (2 - mean) + (6 - mean) * (6 - mean)) / 3.0);
    CHECK(e.kappa[0] == doctest::Approx((1 - mean) / sd));
    CHECK(e.kappa[1] == doctest::Approx((2 - mean) / sd));
    CHECK(e.kappa[2] == doctest::Approx((6 - mean) / sd));
}

TEST_CASE("z_normalize: degenerate inputs") {
    CHECK_THROWS_AS(z_normalize(Scores{4.0, 4.0, 4.0}), DegenerateCapabilityError);
    CHECK_THROWS_AS(z_normalize(Scores{4.0, std::nullopt, std::nullopt}), DegenerateCapabilityError);
    CHECK_THROWS_AS(z_normalize(Scores{}), DegenerateCapabilityError);
    const CapabilityEstimate two = z_normalize(Scores{std::nullopt, 3.0, 7.0});
    CHECK_FALSE(two.present[0]);
    CHECK(two.kappa[0] == 0.0);
    CHECK(two.kappa[1] == doctest::Approx(-1.0));
    CHECK(two.kappa[2] == doctest::Approx(1.0));
}

TEST_CASE("z_normalize: invariant to positive affine rescaling") {
    const CapabilityEstimate a = z_normalize(Scores{8.75, 10.38, 11.46});
    const CapabilityEstimate b = z_normalize(Scores{8.75 * 10 - 3, 10.38 * 10 - 3, 11.46 * 10 - 3});
    for (int i = 0; i < kNumArchetypes; ++i) CHECK(a.kappa[i] == doctest::Approx(b.kappa[i]).epsilon(1e-12));
}

TEST_CASE("transition_weights examples") {
    const CapabilityEstimate e = with_kappa(-1.41, 0.63, 0.78);
    const auto w = transition_weights(e, 2.5);
    CHECK(w[0] == doctest::Approx(std::exp(2.5 * -1.41)));
    CHECK(w[1] == doctest::Approx(std::exp(2.5 * 0.63)));
    CHECK(w[2] == doctest::Approx(std::exp(2.5 * 0.78)));
    CHECK(w[2] == doctest::Approx(7.03).epsilon(0.001));
    CHECK(w[1] == doctest::Approx(4.83).epsilon(0.001));
    CHECK(w[0] == doctest::Approx(0.0295).epsilon(0.01));

    for (double x : transition_weights(e, 0.0)) CHECK(x == 1.0);
    CHECK_THROWS_AS(transition_weights(e, -0.5), ConfigError);

    // Large beta puts essentially all sampling mass on the top archetype.
    const auto big = transition_weights(e, 50.0);
    CHECK(big[2] / (big[0] + big[1] + big[2]) > 0.99);
}

TEST_CASE("infer_kappa on behavior data: sums to zero, unit population std") {
    for (auto c : {Condition::HTN, Condition::T2D}) {
        const Dataset d = generate_dataset(1000, default_spec(c), default_behavior(c), default_discretization(c), 1.0, 3);
        const CapabilityEstimate e = infer_kappa(d);
        double sum = 0.0, ss = 0.0;
        for (double k : e.kappa) {
            sum += k;
            ss += k * k;
        }
        CHECK(std::abs(sum) < 1e-9);
        CHECK(std::abs(std::sqrt(ss / 3.0) - 1.0) < 1e-9);
        CHECK(e.patients[0] + e.patients[1] + e.patients[2] == 1000);
        CHECK(e[Archetype::OpsAugmented] > e[Archetype::High]);
        CHECK(e[Archetype::High] > e[Archetype::Low]);
    }
}

TEST_CASE("trajectory_outcomes: mean reduction over weeks 1..T and TTC flag") {
    const ConditionSpec s = htn_spec();
    const Dataset d = generate_dataset(50, s, default_behavior(Condition::HTN), default_discretization(Condition::HTN), 1.0, 4);
    const auto outcomes = trajectory_outcomes(d);
    REQUIRE(outcomes.size() == 50u);
    std::map<std::uint32_t, std::pair<double, bool>> oracle;
    for (const auto& r : d.records) {
        oracle[r.patient_id].first += (r.baseline - r.raw_next_obs) / s.horizon_weeks;
        oracle[r.patient_id].second = oracle[r.patient_id].second || (r.milestone_events & kTTC);
    }
    for (const auto& o : outcomes) {
        CHECK(o.mean_reduction == doctest::Approx(oracle[o.patient_id].first).epsilon(1e-12));
        CHECK(o.ttc == oracle[o.patient_id].second);
    }
}

TEST_CASE("infer_kappa with one archetype is degenerate") {
    BehaviorConfig b = default_behavior(Condition::HTN);
    b.archetypes[0].population_share = 1.0;
    b.archetypes[1].population_share = 0.0;
    b.archetypes[2].population_share = 0.0;
    const Dataset d = generate_dataset(50, htn_spec(), b, default_discretization(Condition::HTN), 1.0, 5);
    CHECK_THROWS_AS(infer_kappa(d), DegenerateCapabilityError);
}

TEST_CASE("capability CSV lists present archetypes with their weights") {
    const CapabilityEstimate e = z_normalize(Scores{1.0, 2.0, 4.0});
    testing::TempPath tmp("kappa.csv");
    write_capability_csv(e, 2.5, Condition::HTN, tmp.path);
    std::ifstream in(tmp.path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 4);
}

}  // TEST_SUITE
