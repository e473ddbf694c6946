#include <doctest.h>

#include <fstream>

#include "chronic/config.hpp"
#include "helpers.hpp"

using namespace chronic;
using nlohmann::json;

TEST_SUITE("config") {

TEST_CASE("defaults reproduce the reference study settings") {
    const ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.train_patients == 2000);
    CHECK(c.eval_patients == 1000);
    CHECK(c.seeds.size() == 5u);
    CHECK(c.study_a.beta == 2.5);
    CHECK(c.study_a.deploy_eps == 1.0);
    CHECK(c.study_b.train_eps == std::vector<double>{0.25, 0.5, 0.75});
    CHECK(c.study_b.naive_eps == 0.5);
    CHECK(c.study_b.deploy_eps == std::vector<double>{0.25, 0.5, 0.75, 0.9});
    CHECK(c.study_b.seeds.size() == 3u);
    CHECK(c.train.iterations * c.train.batch_size == 307200);
    CHECK(c.bundle(Condition::T2D).spec.condition == Condition::T2D);
    CHECK(c.bundle(Condition::HTN).grid(true).eps_aware());
    CHECK_FALSE(c.bundle(Condition::HTN).grid(false).eps_aware());
}

TEST_CASE("dump then parse is lossless") {
    ExperimentConfig c;
    c.train_patients = 321;
    c.seeds = {9, 8};
    c.bundle(Condition::T2D).spec.noise_sd = 0.123456789;
    c.bundle(Condition::HTN).behavior.archetypes[2].op_prob_uncontrolled = 0.4;
    c.train.eps_min_med_change = 0.3;
    c.reward.stall_penalty_per_week = 0.02;
    const std::string text = dump_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(dump_config(back) == text);
    CHECK(back.train_patients == 321);
    CHECK(back.bundle(Condition::T2D).spec.noise_sd == 0.123456789);
    CHECK(spec_hash(back.bundle(Condition::HTN).behavior) == spec_hash(c.bundle(Condition::HTN).behavior));
}

TEST_CASE("missing and mistyped fields name their full path") {
    json j = json::parse(dump_config(ExperimentConfig{}));
    SUBCASE("missing") {
        j["bundles"]["HTN"]["spec"].erase("r1_mean");
        try {
            parse_config(j.dump());
            FAIL("expected ConfigFieldError");
        } catch (const ConfigFieldError& e) {
            CHECK(std::string(e.what()).find("bundles.HTN.spec.r1_mean") != std::string::npos);
        }
    }
    SUBCASE("mistyped") {
        j["train"]["iterations"] = "many";
        try {
            parse_config(j.dump());
            FAIL("expected ConfigFieldError");
        } catch (const ConfigFieldError& e) {
            CHECK(std::string(e.what()).find("train.iterations") != std::string::npos);
        }
    }
}

TEST_CASE("invalid documents are rejected") {
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    json j = json::parse(dump_config(ExperimentConfig{}));
    j["study_a"]["deploy_eps"] = 1.5;
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
    j = json::parse(dump_config(ExperimentConfig{}));
    j["seeds"] = json::array();
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/chronic.json"), ConfigError);
}

TEST_CASE("load_config reads a file") {
    testing::TempPath tmp("config.json");
    ExperimentConfig c;
    c.eval_patients = 77;
    std::ofstream(tmp.path) << dump_config(c);
    CHECK(load_config(tmp.path).eval_patients == 77);
}

TEST_CASE("spec hashes track content") {
    ConditionSpec a = htn_spec();
    ConditionSpec b = htn_spec();
    CHECK(spec_hash(a) == spec_hash(b));
    b.noise_sd = 4.0000001;
    CHECK(spec_hash(a) != spec_hash(b));
    CHECK(spec_hash(htn_spec()) != spec_hash(t2d_spec()));
    CHECK(spec_hash(default_discretization(Condition::HTN)) !=
          spec_hash(default_discretization(Condition::HTN, true)));
    RewardConfig r1, r2;
    r2.kind = RewardKind::Terminal;
    CHECK(spec_hash(r1) != spec_hash(r2));
    TrainConfig t1, t2;
    t2.seed = 1;
    CHECK(spec_hash(t1) != spec_hash(t2));
}

TEST_CASE("condition and archetype names round trip") {
    for (auto c : {Condition::HTN, Condition::T2D}) CHECK(condition_from_string(to_string(c)) == c);
    for (auto a : {Archetype::Low, Archetype::High, Archetype::OpsAugmented}) {
        CHECK(archetype_from_string(to_string(a)) == a);
    }
    CHECK_THROWS(condition_from_string("asthma"));
    CHECK_THROWS(archetype_from_string("median"));
}

}  // TEST_SUITE
