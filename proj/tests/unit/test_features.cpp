#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "nids/features.hpp"

using namespace nids;
using test_helpers::numeric_dataset;
using test_helpers::simple_schema;

namespace {

/// Dataset with one numeric column "x" and one categorical column "proto".
LabeledDataset mixed_dataset(const std::vector<double>& xs,
                             const std::vector<std::string>& protos,
                             const std::vector<int>& labels) {
    LabeledDataset ds;
    ds.schema_id = "toy";
    ds.column_names = {"x", "proto"};
    ds.column_kinds = {ColumnKind::Numeric, ColumnKind::Categorical};
    ds.features = Matrix(0, 2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double id = static_cast<double>(ds.categories.intern(1, protos[i]));
        ds.features.append_row({xs[i], id});
        ds.labels.push_back(labels[i]);
        ds.provenance.push_back(Provenance::Raw);
    }
    return ds;
}

FeatureSchema mixed_schema() {
    FeatureSchema s;
    s.features.push_back({"x", FeatureKind::Continuous, true, 0.0, 1e9, false});
    s.features.push_back({"proto", FeatureKind::Categorical, false, 0.0, 0.0, false});
    return s;
}

}  // namespace

TEST_CASE("min-max scaling maps the fitted range to [0,1]", "[features]") {
    auto ds = mixed_dataset({0, 5, 10}, {"tcp", "udp", "icmp"}, {0, 1, 0});
    auto st = fit_preprocessor(ds, mixed_schema());
    auto out = transform(ds, st, mixed_schema());
    CHECK(out.features.at(0, 0) == 0.0);
    CHECK(out.features.at(1, 0) == 0.5);
    CHECK(out.features.at(2, 0) == 1.0);
}

TEST_CASE("one-hot encoding adds a trailing unseen bucket", "[features]") {
    auto train = mixed_dataset({0, 5, 10}, {"tcp", "udp", "icmp"}, {0, 1, 0});
    auto schema = mixed_schema();
    auto st = fit_preprocessor(train, schema);
    auto out = transform(train, st, schema);
    // 1 numeric + 3 one-hot + 1 unseen bucket
    REQUIRE(out.dim() == 5);
    CHECK(out.column_names.back() == "proto=<unseen>");
    CHECK(out.features.at(0, 1) == 1.0);  // tcp slot for first row
    CHECK(out.features.at(0, 4) == 0.0);

    // unseen test category maps to the unseen bucket
    auto test = mixed_dataset({3}, {"sctp"}, {0});
    test.categories = train.categories;  // shared dictionary semantics
    test.features.at(0, 1) = static_cast<double>(test.categories.intern(1, "sctp"));
    auto tout = transform(test, st, schema);
    CHECK(tout.features.at(0, 4) == 1.0);
    CHECK(tout.features.at(0, 1) == 0.0);
}

TEST_CASE("values outside the fitted range clip to [0,1]", "[features]") {
    auto tr = mixed_dataset({0, 10}, {"tcp", "tcp"}, {0, 1});
    auto st = fit_preprocessor(tr, mixed_schema());
    auto te = mixed_dataset({-5, 25}, {"tcp", "tcp"}, {0, 1});
    te.categories = tr.categories;
    auto out = transform(te, st, mixed_schema());
    CHECK(out.features.at(0, 0) == 0.0);
    CHECK(out.features.at(1, 0) == 1.0);
}

TEST_CASE("constant feature scales to zero with a recorded warning", "[features]") {
    auto ds = mixed_dataset({4, 4, 4}, {"tcp", "tcp", "tcp"}, {0, 1, 0});
    auto st = fit_preprocessor(ds, mixed_schema());
    REQUIRE_FALSE(st.warnings.empty());
    auto out = transform(ds, st, mixed_schema());
    CHECK(out.features.at(0, 0) == 0.0);
}

TEST_CASE("re-indexed categoricals map unseen names to the reserved slot", "[features]") {
    auto tr = mixed_dataset({0, 10}, {"tcp", "udp"}, {0, 1});
    PreprocessOptions opt;
    opt.scale = false;
    opt.one_hot = false;
    auto st = fit_preprocessor(tr, mixed_schema(), opt);
    auto te = mixed_dataset({3}, {"sctp"}, {0});
    te.categories = tr.categories;
    te.features.at(0, 1) = static_cast<double>(te.categories.intern(1, "sctp"));
    auto out = transform(te, st, mixed_schema());
    REQUIRE(out.dim() == 2);
    CHECK(out.features.at(0, 0) == 3.0);          // unscaled passthrough
    CHECK(out.features.at(0, 1) == 2.0);          // index past {tcp,udp}
    CHECK(out.column_kinds[1] == ColumnKind::Categorical);
}

TEST_CASE("engineered features follow the documented formulas", "[features]") {
    LabeledDataset ds;
    ds.schema_id = "toy";
    ds.column_names = {"src_bytes", "dst_bytes", "proto"};
    ds.column_kinds = {ColumnKind::Numeric, ColumnKind::Numeric, ColumnKind::Categorical};
    ds.features = Matrix(0, 3);
    auto add = [&](double s, double d, const std::string& p, int y) {
        double id = static_cast<double>(ds.categories.intern(2, p));
        ds.features.append_row({s, d, id});
        ds.labels.push_back(y);
        ds.provenance.push_back(Provenance::Raw);
    };
    add(100, 0, "tcp", 1);
    add(0, 50, "tcp", 0);
    add(200, 100, "udp", 0);

    FeatureSchema schema;
    schema.features.push_back({"src_bytes", FeatureKind::Count, true, 0.0, 1e9, true});
    schema.features.push_back({"dst_bytes", FeatureKind::Count, true, 0.0, 1e9, true});
    schema.features.push_back({"proto", FeatureKind::Categorical, false, 0.0, 0.0, false});
    schema.log1p_features = {"src_bytes"};
    schema.ratio_pairs = {{"src_bytes", "dst_bytes"}};
    schema.zscore_group_by = "proto";
    schema.zscore_features = {"src_bytes"};

    auto out = engineer_features(ds, schema);
    REQUIRE(out.dim() == 6);

    // originals untouched bitwise
    for (std::size_t r = 0; r < ds.size(); ++r)
        for (std::size_t c = 0; c < 3; ++c)
            REQUIRE(out.features.at(r, c) == ds.features.at(r, c));

    CHECK(out.features.at(1, 3) == 0.0);                 // log1p(0) = 0
    CHECK(out.features.at(0, 3) == std::log1p(100.0));
    CHECK(out.features.at(0, 4) == 100.0);               // 100 / (0 + 1)
    // tcp group of src_bytes = {100, 0}: mean 50 -> z of neither is 0, but
    // a value equal to its group mean scores exactly 0
    auto st = compute_engineered_stats(ds, schema);
    auto [mean, sigma] = st.group_stats.at("src_bytes").at("tcp");
    CHECK(mean == 50.0);
    LabeledDataset probe = ds;
    probe.features.at(0, 0) = 50.0;
    auto pout = engineer_features(probe, schema, &st);
    CHECK(pout.features.at(0, 5) == 0.0);
    (void)sigma;
}

TEST_CASE("correlation fit recovers b = 2a exactly", "[features]") {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 50; ++i)
        rows.push_back({static_cast<double>(i), 2.0 * i});
    auto ds = numeric_dataset(rows, std::vector<int>(50, 0));
    auto fits = fit_correlation_groups(ds.features, {true, true}, 0.7);
    REQUIRE(fits.size() == 1);
    CHECK(fits[0].a == 0);
    CHECK(fits[0].b == 1);
    CHECK(fits[0].slope == Catch::Approx(2.0).margin(1e-12));
    CHECK(fits[0].intercept == Catch::Approx(0.0).margin(1e-9));
    CHECK(fits[0].residual_sigma == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("independent noise produces no correlation group", "[features]") {
    Rng rng(99);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 1000; ++i) rows.push_back({rng.uniform(), rng.uniform()});
    auto ds = numeric_dataset(rows, std::vector<int>(1000, 0));
    auto fits = fit_correlation_groups(ds.features, {true, true}, 0.7);
    CHECK(fits.empty());
}

TEST_CASE("constant columns are excluded from correlation pairing", "[features]") {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 20; ++i) rows.push_back({static_cast<double>(i), 5.0});
    auto ds = numeric_dataset(rows, std::vector<int>(20, 0));
    auto fits = fit_correlation_groups(ds.features, {true, true}, 0.7);
    CHECK(fits.empty());
    CHECK_THROWS_AS(fit_correlation_groups(ds.features, {true, true}, 0.0), Error);
    CHECK_THROWS_AS(fit_correlation_groups(ds.features, {true, true}, 1.0), Error);
}

TEST_CASE("projection restores immutables and respects the budget box", "[features]") {
    auto schema = simple_schema(3, 0.1, {true, false, true});
    std::vector<double> x = {0.5, 0.3, 0.9};
    std::vector<double> xhat = {0.95, 0.8, 0.2};
    auto v = project_to_valid(xhat, x, schema);
    CHECK(v[0] == 0.6);   // clipped to x + eps
    CHECK(v[1] == 0.3);   // immutable restored
    CHECK(v[2] == 0.8);   // clipped to x - eps
}

TEST_CASE("projection is idempotent and total on random inputs", "[features]") {
    auto schema = simple_schema(6, 0.15, {true, true, false, true, false, true});
    schema.features[1].integral = true;
    schema.features[1].lower = 0.0;
    schema.features[1].upper = 20.0;
    Rng rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(6), xhat(6);
        for (int i = 0; i < 6; ++i) {
            x[i] = rng.uniform();
            xhat[i] = rng.uniform(-1.0, 2.0);
        }
        x[1] = std::floor(x[1] * 20.0);
        auto once = project_to_valid(xhat, x, schema);
        auto twice = project_to_valid(once, x, schema);
        for (int i = 0; i < 6; ++i) REQUIRE(twice[i] == once[i]);
        // budget + immutability invariants
        for (int i = 0; i < 6; ++i) {
            if (schema.features[i].is_mutable)
                REQUIRE(std::abs(once[i] - x[i]) <= schema.features[i].epsilon + 1e-12);
            else
                REQUIRE(once[i] == x[i]);
        }
    }
}

TEST_CASE("integral features snap to representable integers", "[features]") {
    auto schema = simple_schema(1, 3.0, {true}, 0.0, 100.0);
    schema.features[0].integral = true;
    auto v = project_to_valid({41.7}, {40.0}, schema);
    CHECK(v[0] == 42.0);
}

TEST_CASE("a zero-residual correlated pair forces b = 2a after projection", "[features]") {
    auto schema = simple_schema(2, 100.0, {true, true}, 0.0, 1000.0);
    schema.correlation_groups.push_back({0, 1, 2.0, 0.0, 0.0});
    std::vector<double> x = {50.0, 100.0};
    auto v = project_to_valid({60.0, 100.0}, x, schema);
    CHECK(v[0] == 60.0);
    CHECK(v[1] == 120.0);
}

TEST_CASE("scaled distance uses per-feature training ranges", "[features]") {
    auto schema = simple_schema(2, 1.0);
    schema.features[0].distance_scale = 10.0;
    schema.features[1].distance_scale = 1.0;
    schema.norm_order = 2.0;
    // deltas: 5/10 = 0.5 and 0.5/1 = 0.5 -> sqrt(0.5)
    double d = scaled_lp_distance({5.0, 0.5}, {0.0, 0.0}, schema);
    CHECK(d == Catch::Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("transformed schema carries budgets, scales, and correlation fits", "[features]") {
    auto ds = mixed_dataset({0, 5, 10, 2, 7}, {"tcp", "udp", "tcp", "tcp", "udp"},
                            {0, 1, 0, 1, 0});
    auto schema = mixed_schema();
    schema.epsilon_fraction = 0.2;
    auto st = fit_preprocessor(ds, schema);
    auto tr = transform(ds, st, schema);
    auto ts = build_transformed_schema(schema, st, tr);
    REQUIRE(ts.dim() == tr.dim());
    // scaled numeric column: range [0,1], budget 0.2 of observed range
    CHECK(ts.features[0].is_mutable);
    CHECK(ts.features[0].epsilon == Catch::Approx(0.2).margin(1e-12));
    CHECK(ts.features[0].raw_offset == 0.0);
    CHECK(ts.features[0].raw_scale == 10.0);
    CHECK(ts.features[0].distance_scale == Catch::Approx(1.0).margin(1e-12));
    // one-hot columns immutable with zero budget
    for (std::size_t i = 1; i < ts.dim(); ++i) {
        CHECK_FALSE(ts.features[i].is_mutable);
        CHECK(ts.features[i].epsilon == 0.0);
    }

    // JSON round trip
    auto back = TransformedSchema::from_json(ts.to_json());
    REQUIRE(back.dim() == ts.dim());
    for (std::size_t i = 0; i < ts.dim(); ++i) {
        CHECK(back.features[i].name == ts.features[i].name);
        CHECK(back.features[i].epsilon == ts.features[i].epsilon);
        CHECK(back.features[i].distance_scale == ts.features[i].distance_scale);
    }
}

TEST_CASE("feature schema validation enforces the documented contracts", "[features]") {
    FeatureSchema s;
    s.features.push_back({"proto", FeatureKind::Categorical, true, 0.0, 1.0, false});
    CHECK_THROWS_AS(s.validate(), Error);  // mutable categorical

    FeatureSchema s2;
    s2.features.push_back(
        {"x", FeatureKind::Count, true, 0.0, std::numeric_limits<double>::infinity(), true});
    CHECK_THROWS_AS(s2.validate(), Error);  // mutable without finite bounds

    FeatureSchema s3;
    s3.epsilon_fraction = 0.0;
    CHECK_THROWS_AS(s3.validate(), Error);
}

TEST_CASE("feature schema JSON round-trips", "[features]") {
    FeatureSchema s;
    s.features.push_back({"x", FeatureKind::Count, true, 0.0, 100.0, true});
    s.features.push_back({"proto", FeatureKind::Categorical, false, 0.0, 0.0, false});
    // immutable features may carry an unbounded upper limit; JSON round-trips it
    s.features.push_back({"free", FeatureKind::Continuous, false, 0.0,
                          std::numeric_limits<double>::infinity(), false});
    s.log1p_features = {"x"};
    s.ratio_pairs = {{"x", "x"}};
    s.zscore_group_by = "proto";
    s.zscore_features = {"x"};
    auto back = FeatureSchema::from_json(s.to_json());
    CHECK(back.features.size() == 3);
    CHECK(back.features[0].integral);
    CHECK(std::isinf(back.features[2].upper));
    CHECK(back.ratio_pairs == s.ratio_pairs);
    CHECK(back.zscore_group_by == "proto");
}

TEST_CASE("preprocessor state JSON round-trips and transforms identically", "[features]") {
    auto ds = mixed_dataset({0, 5, 10}, {"tcp", "udp", "icmp"}, {0, 1, 0});
    auto schema = mixed_schema();
    auto st = fit_preprocessor(ds, schema);
    auto back = PreprocessorState::from_json(st.to_json());
    auto a = transform(ds, st, schema);
    auto b = transform(ds, back, schema);
    REQUIRE(a.dim() == b.dim());
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < a.dim(); ++c)
            REQUIRE(a.features.at(r, c) == b.features.at(r, c));
}
