#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "chronic/behavior.hpp"
#include "chronic/config.hpp"
#include "chronic/dataset.hpp"
#include "helpers.hpp"

using namespace chronic;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

Dataset tiny(Condition c = Condition::HTN, int patients = 20, double eps = 1.0) {
    return generate_dataset(patients, default_spec(c), default_behavior(c), default_discretization(c), eps, 5);
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("bucket_of: inclusive lower edge, clamped ends") {
    const std::vector<double> edges{4.0, 8.0};
    CHECK(bucket_of(-3.0, edges) == 0);
    CHECK(bucket_of(3.999, edges) == 0);
    CHECK(bucket_of(4.0, edges) == 1);
    CHECK(bucket_of(7.999, edges) == 1);
    CHECK(bucket_of(8.0, edges) == 2);
    CHECK(bucket_of(500.0, edges) == 2);
    CHECK(bucket_of(1.0, {}) == 0);
}

TEST_CASE("encode_state examples") {
    const DiscretizationSpec d = default_discretization(Condition::HTN);
    CHECK(d.biomarker_buckets() == 10);
    CHECK(encode_state(160.0, 170.0, 1, 5, d) == StateIndex{5, 1, 1, 1, -1});
    CHECK(encode_state(158.0, 160.0, 1, 5, d) == StateIndex{4, 1, 1, 0, -1});
    CHECK(encode_state(105.0, 160.0, 0, 0, d).biomarker == 0);
    CHECK(encode_state(250.0, 260.0, 0, 0, d).biomarker == d.biomarker_buckets() - 1);
    CHECK(encode_state(145.0, 160.0, 0, 0, d).reduction == 2);
    CHECK(encode_state(146.0, 160.0, 0, 0, d).reduction == 1);
    CHECK(encode_state(160.0, 160.0, 2, 40, d).weeks_on == 2);

    const DiscretizationSpec t = default_discretization(Condition::T2D);
    CHECK(encode_state(7.0, 8.0, 0, 0, t).reduction == 2);
    CHECK(t.biomarker_buckets() == 12);
    CHECK(encode_state(6.0, 8.0, 0, 0, t).biomarker == 0);
    CHECK(encode_state(6.5, 8.0, 0, 0, t).biomarker == 1);
    CHECK(encode_state(12.4, 12.5, 0, 0, t).biomarker == 11);

    const DiscretizationSpec aware = default_discretization(Condition::HTN, true);
    CHECK(encode_state(150.0, 160.0, 0, 0, aware, 0.25).eps == 0);
    CHECK(encode_state(150.0, 160.0, 0, 0, aware, 0.5).eps == 1);
    CHECK(encode_state(150.0, 160.0, 0, 0, aware, 0.75).eps == 2);
    CHECK(encode_state(150.0, 160.0, 0, 0, aware, 0.9).eps == 3);
    CHECK(encode_state(150.0, 160.0, 0, 0, aware).eps == 3);
}

TEST_CASE("default eps edges") {
    CHECK(default_eps_edges() == std::vector<double>{0.375, 0.625, 0.825});
}

TEST_CASE("flat_index is a bijection onto [0, num_states)") {
    for (bool aware : {false, true}) {
        const DiscretizationSpec d = default_discretization(Condition::HTN, aware);
        std::set<int> seen;
        for (int b = 0; b < d.biomarker_buckets(); ++b)
            for (int m = 0; m < kNumMedLevels; ++m)
                for (int w = 0; w < d.weeks_on_buckets(); ++w)
                    for (int r = 0; r < d.reduction_buckets(); ++r)
                        for (int e = 0; e < d.eps_buckets(); ++e) {
                            const int idx = flat_index(StateIndex{b, m, w, r, aware ? e : -1}, d);
                            CHECK(idx >= 0);
                            CHECK(idx < d.num_states());
                            seen.insert(idx);
                        }
        CHECK(static_cast<int>(seen.size()) == d.num_states());
    }
}

TEST_CASE("action_index round trips") {
    std::set<int> seen;
    for (int m = 0; m < kNumMedLevels; ++m) {
        for (int op = 0; op < 2; ++op) {
            const int i = action_index(Action{m, op});
            CHECK(action_from_index(i) == Action{m, op});
            seen.insert(i);
        }
    }
    CHECK(seen == std::set<int>{0, 1, 2, 3, 4, 5});
    CHECK_THROWS_AS(action_from_index(6), std::out_of_range);
    CHECK_THROWS_AS(action_from_index(-1), std::out_of_range);
}

TEST_CASE("discretization validation") {
    DiscretizationSpec d = default_discretization(Condition::HTN);
    d.biomarker_edges = {150.0, 140.0};
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = default_discretization(Condition::HTN);
    d.eps_edges = std::vector<double>{0.5, 0.5};
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("stored indices agree with re-encoding the raw values") {
    for (auto c : {Condition::HTN, Condition::T2D}) {
        const Dataset d = tiny(c, 100);
        const DiscretizationSpec disc = default_discretization(c);
        for (const auto& r : d.records) {
            CHECK(r.state == encode_state(r.raw_obs, r.baseline, r.med_level, r.weeks_on, disc));
            CHECK(r.next_state == encode_state(r.raw_next_obs, r.baseline, r.next_med_level, r.next_weeks_on, disc));
        }
    }
}

TEST_CASE("a TTG-only event lands in a reduction bucket at or above the TTG edge") {
    const Dataset d = tiny(Condition::HTN, 500);
    int seen = 0;
    for (const auto& r : d.records) {
        if (r.milestone_events == kTTG) {
            ++seen;
            CHECK(r.next_state.reduction >= 2);
        }
    }
    CHECK(seen > 0);
}

TEST_CASE("pool_datasets concatenates gates and rejects mixed conditions") {
    const Dataset a = tiny(Condition::HTN, 10, 0.25);
    const Dataset b = tiny(Condition::HTN, 10, 0.75);
    const Dataset p = pool_datasets({a, b});
    CHECK(p.records.size() == a.records.size() + b.records.size());
    CHECK(p.header.eps_gates == std::vector<double>{0.25, 0.75});
    CHECK_THROWS(pool_datasets({a, tiny(Condition::T2D, 10)}));
}

TEST_CASE("write then read reproduces every field") {
    const Dataset d = tiny(Condition::T2D, 30, 0.5);
    testing::TempPath tmp("roundtrip.dataset");
    write_dataset(d, tmp.path);
    const Dataset back = read_dataset(tmp.path);
    CHECK(back.header.condition == d.header.condition);
    CHECK(back.header.eps_gates == d.header.eps_gates);
    CHECK(back.header.seed == d.header.seed);
    CHECK(back.header.patients == d.header.patients);
    CHECK(back.header.condition_hash == d.header.condition_hash);
    CHECK(back.header.behavior_hash == d.header.behavior_hash);
    CHECK(back.header.discretization_hash == d.header.discretization_hash);
    REQUIRE(back.records.size() == d.records.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const auto& x = d.records[i];
        const auto& y = back.records[i];
        CHECK(x.patient_id == y.patient_id);
        CHECK(x.archetype == y.archetype);
        CHECK(x.week == y.week);
        CHECK(x.state == y.state);
        CHECK(x.next_state == y.next_state);
        CHECK(x.action == y.action);
        CHECK(x.milestone_events == y.milestone_events);
        CHECK(x.terminal == y.terminal);
        CHECK(testing::same_bits(x.raw_obs, y.raw_obs));
        CHECK(testing::same_bits(x.raw_next_obs, y.raw_next_obs));
        CHECK(testing::same_bits(x.baseline, y.baseline));
        CHECK(x.med_changed == y.med_changed);
        CHECK(x.op_taken == y.op_taken);
        CHECK(x.next_stall_bits == y.next_stall_bits);
        CHECK(x.eps == y.eps);
    }
}

TEST_CASE("corrupted files raise typed errors") {
    const Dataset d = tiny(Condition::HTN, 5);
    testing::TempPath tmp("corrupt.dataset");
    write_dataset(d, tmp.path);
    const std::string good = slurp(tmp.path);
    const std::size_t first_nl = good.find('\n');

    SUBCASE("edited record") {
        std::string bad = good;
        const std::size_t comma = bad.find(',', first_nl + 1);
        bad[comma - 1] = bad[comma - 1] == '9' ? '8' : '9';
        spit(tmp.path, bad);
        CHECK_THROWS_AS(read_dataset(tmp.path), HashMismatchError);
    }
    SUBCASE("missing trailing records") {
        std::string bad = good.substr(0, good.rfind('\n', good.size() - 2) + 1);
        spit(tmp.path, bad);
        CHECK_THROWS_AS(read_dataset(tmp.path), TruncationError);
    }
    SUBCASE("future version") {
        std::string bad = good;
        bad.replace(bad.find("version=1"), 9, "version=9");
        spit(tmp.path, bad);
        CHECK_THROWS_AS(read_dataset(tmp.path), VersionMismatchError);
    }
    SUBCASE("not a dataset") {
        spit(tmp.path, "hello\tworld\n");
        CHECK_THROWS_AS(read_dataset(tmp.path), FormatError);
    }
    SUBCASE("empty file") {
        spit(tmp.path, "");
        CHECK_THROWS_AS(read_dataset(tmp.path), TruncationError);
    }
    SUBCASE("all errors share a base") {
        spit(tmp.path, "");
        CHECK_THROWS_AS(read_dataset(tmp.path), DataError);
    }
    CHECK_THROWS_AS(read_dataset(tmp.path.string() + ".missing"), DataError);
}

}  // TEST_SUITE
