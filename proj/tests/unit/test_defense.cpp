#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "helpers.hpp"
#include "nids/defense.hpp"

using namespace nids;
using test_helpers::numeric_dataset;
using test_helpers::simple_schema;

namespace {

/// Two-feature toy traffic: benign near x0=0.2, attacks near x0=0.8, with
/// x1 tracking 2*x0 so the correlation fitter has something to find.
LabeledDataset toy_traffic(std::size_t n_benign, std::size_t n_attack, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n_benign; ++i) {
        double x0 = 0.1 + 0.2 * rng.uniform();
        rows.push_back({x0, 2.0 * x0 + 0.01 * rng.uniform()});
        labels.push_back(0);
    }
    for (std::size_t i = 0; i < n_attack; ++i) {
        double x0 = 0.7 + 0.2 * rng.uniform();
        rows.push_back({x0, 2.0 * x0 + 0.01 * rng.uniform()});
        labels.push_back(1);
    }
    return numeric_dataset(rows, labels);
}

FeatureSchema toy_schema() {
    FeatureSchema s;
    s.features.push_back({"f0", FeatureKind::Continuous, true, 0.0, 2.0, false});
    s.features.push_back({"f1", FeatureKind::Continuous, true, 0.0, 4.0, false});
    return s;
}

StageConfig cheap_stage(Stage stage, std::uint64_t seed) {
    StageConfig cfg;
    cfg.stage = stage;
    cfg.seed = seed;
    cfg.attack.population_size = 10;
    cfg.attack.max_generations = 5;
    cfg.attack.elitism_fraction = 0.1;
    cfg.attack.convergence_window = 2;
    cfg.smote.k_neighbors = 3;
    cfg.fine_tune.budget = 2;
    return cfg;
}

}  // namespace

TEST_CASE("stage names round-trip and rank in pipeline order", "[defense]") {
    for (auto s : {Stage::Baseline, Stage::AdvBalance, Stage::FeatEng, Stage::FineTuned})
        CHECK(stage_from_string(stage_to_string(s)) == s);
    CHECK(stage_rank(Stage::Baseline) < stage_rank(Stage::AdvBalance));
    CHECK(stage_rank(Stage::AdvBalance) < stage_rank(Stage::FeatEng));
    CHECK(stage_rank(Stage::FeatEng) < stage_rank(Stage::FineTuned));
    CHECK_THROWS_AS(stage_from_string("warmup"), Error);
}

TEST_CASE("monte carlo augmentation makes M projected attack copies per row", "[defense]") {
    auto schema = simple_schema(2, 0.2);
    auto attacks = numeric_dataset({{0.5, 0.5}, {0.7, 0.3}}, {1, 1});
    MonteCarloConfig cfg;
    cfg.samples = 5;
    cfg.sigma_fraction = 0.05;
    auto out = monte_carlo_augment(attacks, schema, cfg, 3);
    REQUIRE(out.size() == 10);
    for (std::size_t r = 0; r < out.size(); ++r) {
        CHECK(out.labels[r] == 1);
        CHECK(out.provenance[r] == Provenance::Adversarial);
        // every copy stays within the source row's budget box
        std::size_t src = r / cfg.samples;
        for (std::size_t c = 0; c < 2; ++c)
            REQUIRE(std::abs(out.features.at(r, c) - attacks.features.at(src, c)) <=
                    0.2 + 1e-12);
    }

    // zero noise reproduces the originals exactly
    cfg.sigma_fraction = 0.0;
    auto still = monte_carlo_augment(attacks, schema, cfg, 3);
    for (std::size_t r = 0; r < still.size(); ++r)
        for (std::size_t c = 0; c < 2; ++c)
            REQUIRE(still.features.at(r, c) == attacks.features.at(r / cfg.samples, c));

    // immutable coordinates are never perturbed
    auto frozen_schema = simple_schema(2, 0.2, {true, false});
    cfg.sigma_fraction = 0.5;
    auto frozen = monte_carlo_augment(attacks, frozen_schema, cfg, 3);
    for (std::size_t r = 0; r < frozen.size(); ++r)
        REQUIRE(frozen.features.at(r, 1) == attacks.features.at(r / cfg.samples, 1));

    auto benign = numeric_dataset({{0.5, 0.5}}, {0});
    CHECK_THROWS_AS(monte_carlo_augment(benign, schema, cfg, 3), Error);
}

TEST_CASE("monte carlo augmentation is deterministic under its seed", "[defense]") {
    auto schema = simple_schema(3, 0.3);
    auto attacks = numeric_dataset({{0.5, 0.4, 0.6}, {0.2, 0.9, 0.1}}, {1, 1});
    MonteCarloConfig cfg;
    auto a = monte_carlo_augment(attacks, schema, cfg, 42);
    auto b = monte_carlo_augment(attacks, schema, cfg, 42);
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < 3; ++c)
            REQUIRE(a.features.at(r, c) == b.features.at(r, c));
}

TEST_CASE("stage configuration validation rejects bad settings", "[defense]") {
    StageConfig cfg;
    cfg.monte_carlo.sigma_fraction = -0.1;
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg = StageConfig{};
    cfg.fine_tune.budget = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg = StageConfig{};
    cfg.fine_tune.validation_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg = StageConfig{};
    cfg.adv_train_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.adv_train_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg = StageConfig{};
    cfg.attack.population_size = 1;  // attack settings are validated too
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("default ensembles cover the documented member families", "[defense]") {
    auto tc = default_tc_specs(1);
    REQUIRE(tc.size() == 4);
    CHECK(tc[0].family == ModelFamily::LogisticRegression);
    CHECK(tc[1].family == ModelFamily::LinearSvm);
    CHECK(tc[2].family == ModelFamily::DecisionTree);
    CHECK(tc[3].family == ModelFamily::RandomForest);

    auto dl = default_dl_specs(1);
    REQUIRE(dl.size() == 2);
    CHECK(dl[0].hp.hidden == std::vector<int>{64, 32});
    CHECK(dl[1].hp.hidden == std::vector<int>{128, 64, 32});
}

TEST_CASE("soft voting averages member probabilities with ties as attack", "[defense]") {
    // two zero-weight linear members: one scores sigmoid(0)=0.5, one sigmoid(2)
    auto a = std::make_shared<LinearModel>();
    a->w = {0.0};
    a->b = 0.0;
    auto b = std::make_shared<LinearModel>();
    b->w = {0.0};
    b->b = 2.0;
    Ensemble e;
    e.members = {a, b};
    Matrix X(1, 1);
    X.at(0, 0) = 99.0;
    double expect = 0.5 * (0.5 + 1.0 / (1.0 + std::exp(-2.0)));
    CHECK(e.proba(X)[0] == Catch::Approx(expect).margin(1e-12));

    // an exact tie at tau classifies as attack
    Ensemble tie;
    tie.members = {a};
    CHECK(tie.proba(X)[0] == 0.5);
    CHECK(tie.classify(X)[0] == 1);

    Ensemble empty;
    CHECK_THROWS_AS(empty.validate(), Error);
    Ensemble bad_tau;
    bad_tau.members = {a};
    bad_tau.tau = 1.0;
    CHECK_THROWS_AS(bad_tau.validate(), Error);
}

TEST_CASE("fine-tune samples stay inside the documented ranges", "[defense]") {
    Rng rng(202);
    for (int trial = 0; trial < 200; ++trial) {
        auto lr = sample_finetune_spec(
            ClassifierSpec::defaults(ModelFamily::LogisticRegression, 0), rng);
        CHECK(lr.hp.learning_rate >= 0.01);
        CHECK(lr.hp.learning_rate <= 0.5);
        CHECK(lr.hp.l2 >= 1e-5);
        CHECK(lr.hp.l2 <= 1e-2);

        auto dt = sample_finetune_spec(ClassifierSpec::defaults(ModelFamily::DecisionTree, 0),
                                       rng);
        CHECK(dt.hp.max_depth >= 4);
        CHECK(dt.hp.max_depth <= 20);

        auto rf = sample_finetune_spec(ClassifierSpec::defaults(ModelFamily::RandomForest, 0),
                                       rng);
        CHECK(rf.hp.n_trees >= 20);
        CHECK(rf.hp.n_trees <= 200);

        auto mlp = sample_finetune_spec(ClassifierSpec::defaults(ModelFamily::Mlp, 0), rng);
        CHECK((mlp.hp.hidden[0] == 32 || mlp.hp.hidden[0] == 64 || mlp.hp.hidden[0] == 128));
        REQUIRE(mlp.hp.hidden.size() == 2);
        CHECK(mlp.hp.hidden[1] == std::max(16, mlp.hp.hidden[0] / 2));
        CHECK(mlp.hp.learning_rate >= 0.001);
        CHECK(mlp.hp.learning_rate <= 0.05);
    }
}

TEST_CASE("fine-tune search is deterministic and validates its budget", "[defense]") {
    auto fit_set = toy_traffic(40, 40, 1);
    auto val_set = toy_traffic(10, 10, 2);
    auto base = ClassifierSpec::defaults(ModelFamily::LogisticRegression, 0);
    auto a = fine_tune(base, fit_set, val_set, 4, 55);
    auto b = fine_tune(base, fit_set, val_set, 4, 55);
    CHECK(a.family == b.family);
    CHECK(a.hp.to_json() == b.hp.to_json());
    CHECK_THROWS_AS(fine_tune(base, fit_set, val_set, 0, 55), Error);
}

TEST_CASE("the baseline stage trains, scores, and round-trips through disk", "[defense]") {
    auto train = toy_traffic(60, 40, 10);
    auto test = toy_traffic(20, 15, 11);
    auto cfg = cheap_stage(Stage::Baseline, 5);
    auto res = run_stage(train, test, nullptr, toy_schema(), cfg, 1,
                         /*evaluate_adversarial=*/false);

    REQUIRE(res.reports.size() == 2);  // tc normal, dl normal
    CHECK(res.reports[0].ensemble == "tc");
    CHECK(res.reports[0].condition == "normal");
    CHECK(res.reports[1].ensemble == "dl");
    CHECK(*res.reports[0].m.accuracy > 0.9);  // trivially separable traffic

    // baseline keeps raw features and no correlation constraints
    CHECK(res.pipeline.transformed.correlation_groups.empty());

    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "nids_pipeline_test";
    save_pipeline(res.pipeline, dir.string());
    auto back = load_pipeline(dir.string());
    fs::remove_all(dir);

    CHECK(back.stage == Stage::Baseline);
    auto enc = res.pipeline.encode(test);
    auto pa = res.pipeline.tc.proba(enc.features);
    auto pb = back.tc.proba(back.encode(test).features);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t r = 0; r < pa.size(); ++r) REQUIRE(pa[r] == pb[r]);
    auto da = res.pipeline.dl.proba(enc.features);
    auto db = back.dl.proba(back.encode(test).features);
    for (std::size_t r = 0; r < da.size(); ++r) REQUIRE(da[r] == db[r]);
}

TEST_CASE("the feature engineering stage fits correlation constraints", "[defense]") {
    auto train = toy_traffic(60, 40, 20);
    auto test = toy_traffic(20, 15, 21);
    auto cfg = cheap_stage(Stage::FeatEng, 6);
    auto res = run_stage(train, test, nullptr, toy_schema(), cfg, 1,
                         /*evaluate_adversarial=*/false);
    // f1 tracks 2*f0, so at least one fitted pair must appear
    CHECK_FALSE(res.pipeline.transformed.correlation_groups.empty());
    // augmented rows were appended during adv_balance
    CHECK(*res.reports[0].m.accuracy > 0.8);
}
