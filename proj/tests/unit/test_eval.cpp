#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "nids/common.hpp"
#include "nids/eval.hpp"

using namespace nids;

TEST_CASE("confusion matches the worked example", "[eval]") {
    auto cm = confusion({1, 1, 0, 0}, {1, 0, 0, 1});
    CHECK(cm.tp == 1);
    CHECK(cm.fn == 1);
    CHECK(cm.tn == 1);
    CHECK(cm.fp == 1);
    CHECK(cm.total() == 4);
}

TEST_CASE("confusion on perfect predictions has no errors", "[eval]") {
    auto cm = confusion({1, 0, 1, 0, 1}, {1, 0, 1, 0, 1});
    CHECK(cm.fp == 0);
    CHECK(cm.fn == 0);
    CHECK(cm.tp == 3);
    CHECK(cm.tn == 2);
}

TEST_CASE("all-benign predictions on all-attack labels are all false negatives", "[eval]") {
    auto cm = confusion({1, 1, 1, 1}, {0, 0, 0, 0});
    CHECK(cm.tp == 0);
    CHECK(cm.fn == 4);
}

TEST_CASE("confusion rejects length mismatch", "[eval]") {
    CHECK_THROWS_AS(confusion({1, 0}, {1}), Error);
}

TEST_CASE("metrics match the worked example exactly", "[eval]") {
    ConfusionMatrix cm{50, 40, 5, 5};
    auto m = metrics(cm);
    CHECK(*m.accuracy == 90.0 / 100.0);
    CHECK(*m.precision == 50.0 / 55.0);
    CHECK(*m.recall == 50.0 / 55.0);
    CHECK(*m.fpr == 5.0 / 45.0);
}

TEST_CASE("zero denominators produce the undefined marker, never NaN", "[eval]") {
    ConfusionMatrix all_attack{3, 0, 0, 1};  // fp+tn = 0
    auto m = metrics(all_attack);
    CHECK_FALSE(m.fpr.has_value());
    CHECK(m.precision.has_value());

    ConfusionMatrix no_predicted_attack{0, 4, 0, 2};  // tp+fp = 0
    auto m2 = metrics(no_predicted_attack);
    CHECK_FALSE(m2.precision.has_value());

    ConfusionMatrix no_attacks{0, 4, 1, 0};  // tp+fn = 0
    auto m3 = metrics(no_attacks);
    CHECK_FALSE(m3.recall.has_value());
}

TEST_CASE("recall is 1 when no attacks are missed", "[eval]") {
    auto m = metrics(ConfusionMatrix{7, 2, 1, 0});
    CHECK(*m.recall == 1.0);
}

TEST_CASE("metrics reject the empty matrix", "[eval]") {
    CHECK_THROWS_AS(metrics(ConfusionMatrix{}), Error);
}

TEST_CASE("metric formulas are exact on 100 randomized confusion matrices", "[eval]") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + rng.uniform_index(200);
        std::vector<int> labels(n), preds(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
            preds[i] = rng.uniform() < 0.5 ? 1 : 0;
        }
        // independent brute-force count over labeled pairs
        std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] == 1 && preds[i] == 1) ++tp;
            if (labels[i] == 0 && preds[i] == 0) ++tn;
            if (labels[i] == 0 && preds[i] == 1) ++fp;
            if (labels[i] == 1 && preds[i] == 0) ++fn;
        }
        auto cm = confusion(labels, preds);
        REQUIRE(cm.tp == tp);
        REQUIRE(cm.tn == tn);
        REQUIRE(cm.fp == fp);
        REQUIRE(cm.fn == fn);

        auto m = metrics(cm);
        REQUIRE(*m.accuracy == static_cast<double>(tp + tn) / static_cast<double>(n));
        if (tp + fp > 0)
            REQUIRE(*m.precision == static_cast<double>(tp) / static_cast<double>(tp + fp));
        if (tp + fn > 0)
            REQUIRE(*m.recall == static_cast<double>(tp) / static_cast<double>(tp + fn));
        if (fp + tn > 0)
            REQUIRE(*m.fpr == static_cast<double>(fp) / static_cast<double>(fp + tn));
    }
}

TEST_CASE("self-prediction scores perfectly for any mixed-class labels", "[eval]") {
    std::vector<int> y = {1, 0, 1, 1, 0};
    auto m = metrics(confusion(y, y));
    CHECK(*m.accuracy == 1.0);
    CHECK(*m.precision == 1.0);
    CHECK(*m.recall == 1.0);
    CHECK(*m.fpr == 0.0);
}

TEST_CASE("report CSV round-trips bit-exactly", "[eval]") {
    std::vector<StageReport> reports;
    StageReport a;
    a.ensemble = "tc";
    a.stage = "baseline";
    a.condition = "normal";
    a.cm = {50, 40, 5, 5};
    a.m = metrics(a.cm);
    StageReport b;
    b.ensemble = "dl";
    b.stage = "fine_tuned";
    b.condition = "adversarial";
    b.cm = {3, 0, 0, 1};  // fpr undefined
    b.m = metrics(b.cm);
    reports = {a, b};

    std::string csv = render_report_csv(reports);
    std::istringstream in(csv);
    auto parsed = parse_report_csv(in);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].ensemble == "tc");
    CHECK(parsed[1].condition == "adversarial");
    CHECK_FALSE(parsed[1].m.fpr.has_value());
    // re-render equals the original byte-for-byte
    CHECK(render_report_csv(parsed) == csv);
}

TEST_CASE("empty report renders header-only output", "[eval]") {
    std::string csv = render_report_csv({});
    CHECK(csv == "ensemble,stage,condition,accuracy,precision,recall,fpr\n");
    std::string table = render_report_table({});
    CHECK(table.find("ensemble") != std::string::npos);
    CHECK(table.find('\n') == table.size() - 1);  // single line
}

TEST_CASE("report csv parser rejects malformed rows", "[eval]") {
    std::istringstream in("ensemble,stage,condition,accuracy,precision,recall,fpr\ntc,baseline\n");
    CHECK_THROWS_AS(parse_report_csv(in), Error);
}
