#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "helpers.hpp"
#include "nids/models.hpp"

using namespace nids;
using test_helpers::one_row;

namespace {

/// Random binary-labeled batch.
void random_batch(Rng& rng, std::size_t n, std::size_t d, Matrix& X, std::vector<int>& y) {
    X = Matrix(0, d);
    y.clear();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(d);
        for (double& v : row) v = rng.uniform(-1.0, 1.0);
        X.append_row(row);
        y.push_back(rng.uniform() < 0.5 ? 1 : 0);
    }
    // guarantee both classes
    y[0] = 0;
    y[1] = 1;
}

}  // namespace

TEST_CASE("analytic gradients match finite differences", "[models]") {
    Rng rng(31337);
    for (auto family : {ModelFamily::LogisticRegression, ModelFamily::LinearSvm,
                        ModelFamily::Mlp}) {
        for (int trial = 0; trial < 10; ++trial) {
            Matrix X;
            std::vector<int> y;
            random_batch(rng, 20, 4, X, y);
            auto spec = ClassifierSpec::defaults(family, 1000 + trial);
            if (family == ModelFamily::Mlp) spec.hp.hidden = {5, 3};
            double err = gradient_check(spec, X, y);
            INFO(family_to_string(family) << " trial " << trial);
            REQUIRE(err < 1e-4);
        }
    }
}

TEST_CASE("zero-weight logistic model scores exactly one half", "[models]") {
    LinearModel m;
    m.fam = ModelFamily::LogisticRegression;
    m.w = {0.0, 0.0};
    m.b = 0.0;
    auto p = m.predict_proba(one_row({3.0, -7.0}));
    CHECK(p[0] == 0.5);
}

TEST_CASE("linear trainers separate a trivially separable set", "[models]") {
    Matrix X(0, 2);
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        X.append_row({0.0, 0.0});
        y.push_back(0);
        X.append_row({1.0, 1.0});
        y.push_back(1);
    }
    for (auto family : {ModelFamily::LogisticRegression, ModelFamily::LinearSvm}) {
        auto model = fit(ClassifierSpec::defaults(family, 1), X, y);
        auto p = model->predict_proba(X);
        for (std::size_t r = 0; r < X.rows; ++r) {
            REQUIRE((p[r] >= 0.5) == (y[r] == 1));
        }
    }
}

TEST_CASE("a depth-2 tree solves the OR pattern exactly", "[models]") {
    Matrix X(0, 2);
    X.append_row({0.0, 0.0});
    X.append_row({0.0, 1.0});
    X.append_row({1.0, 0.0});
    X.append_row({1.0, 1.0});
    std::vector<int> y = {0, 1, 1, 1};
    auto spec = ClassifierSpec::defaults(ModelFamily::DecisionTree, 0);
    spec.hp.min_leaf = 1;
    auto model = fit(spec, X, y);
    auto p = model->predict_proba(X);
    for (std::size_t r = 0; r < 4; ++r)
        REQUIRE(p[r] == static_cast<double>(y[r]));
}

TEST_CASE("the CART root split matches an exhaustive search", "[models]") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        Rng rng(seed);
        Matrix X(0, 2);
        std::vector<int> y;
        for (int i = 0; i < 8; ++i) {
            X.append_row({rng.uniform(), rng.uniform()});
            y.push_back(rng.uniform() < 0.5 ? 1 : 0);
        }
        y[0] = 0;
        y[1] = 1;

        // brute force: every feature, every midpoint between adjacent sorted
        // distinct values, Gini gain with ties broken toward lower feature then
        // lower threshold
        auto gini = [](double pos, double tot) {
            if (tot == 0.0) return 0.0;
            double p = pos / tot;
            return 2.0 * p * (1.0 - p);
        };
        double tot_pos = 0;
        for (int v : y) tot_pos += v;
        double parent = gini(tot_pos, 8.0);
        int best_f = -1;
        double best_thr = 0.0, best_gain = 0.0;
        for (int f = 0; f < 2; ++f) {
            std::vector<double> vals;
            for (std::size_t r = 0; r < 8; ++r) vals.push_back(X.at(r, f));
            std::sort(vals.begin(), vals.end());
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                if (vals[i] == vals[i + 1]) continue;
                double thr = 0.5 * (vals[i] + vals[i + 1]);
                double lp = 0, lt = 0;
                for (std::size_t r = 0; r < 8; ++r)
                    if (X.at(r, f) <= thr) {
                        lt += 1;
                        lp += y[r];
                    }
                double g = parent - (lt / 8.0) * gini(lp, lt) -
                           ((8.0 - lt) / 8.0) * gini(tot_pos - lp, 8.0 - lt);
                bool better = g > best_gain + 1e-12;
                bool tie = best_f >= 0 && std::abs(g - best_gain) <= 1e-12 &&
                           (f < best_f || (f == best_f && thr < best_thr));
                if (better || tie) {
                    best_f = f;
                    best_thr = thr;
                    best_gain = g;
                }
            }
        }

        auto spec = ClassifierSpec::defaults(ModelFamily::DecisionTree, seed);
        spec.hp.max_depth = 1;
        spec.hp.min_leaf = 1;
        auto model = fit_tree(spec, X, y);
        INFO("seed " << seed);
        if (best_gain <= 1e-12) {
            REQUIRE(model->nodes[0].feature == -1);  // no useful split
        } else {
            REQUIRE(model->nodes[0].feature == best_f);
            REQUIRE(model->nodes[0].threshold == Catch::Approx(best_thr).margin(1e-12));
        }
    }
}

TEST_CASE("a forest without randomness equals its single tree", "[models]") {
    Rng rng(77);
    Matrix X;
    std::vector<int> y;
    random_batch(rng, 60, 3, X, y);

    auto tspec = ClassifierSpec::defaults(ModelFamily::DecisionTree, 9);
    auto fspec = ClassifierSpec::defaults(ModelFamily::RandomForest, 9);
    fspec.hp.bootstrap = false;
    fspec.hp.feature_subsample = false;

    auto tree = fit(tspec, X, y);
    for (int n_trees : {1, 7}) {
        fspec.hp.n_trees = n_trees;
        auto forest = fit(fspec, X, y);
        auto pt = tree->predict_proba(X);
        auto pf = forest->predict_proba(X);
        for (std::size_t r = 0; r < X.rows; ++r) REQUIRE(pf[r] == Catch::Approx(pt[r]).margin(1e-12));
    }
}

TEST_CASE("training is deterministic for a fixed spec", "[models]") {
    Rng rng(5150);
    Matrix X;
    std::vector<int> y;
    random_batch(rng, 80, 4, X, y);
    for (auto family : {ModelFamily::LogisticRegression, ModelFamily::LinearSvm,
                        ModelFamily::DecisionTree, ModelFamily::RandomForest,
                        ModelFamily::Mlp}) {
        auto spec = ClassifierSpec::defaults(family, 42);
        if (family == ModelFamily::Mlp) {
            spec.hp.hidden = {8};
            spec.hp.epochs = 20;
        }
        spec.hp.n_trees = 5;
        auto a = fit(spec, X, y);
        auto b = fit(spec, X, y);
        INFO(family_to_string(family));
        REQUIRE(a->to_json() == b->to_json());
    }
}

TEST_CASE("every family emits probabilities in [0,1]", "[models]") {
    Rng rng(8080);
    Matrix X;
    std::vector<int> y;
    random_batch(rng, 50, 5, X, y);
    for (auto family : {ModelFamily::LogisticRegression, ModelFamily::LinearSvm,
                        ModelFamily::DecisionTree, ModelFamily::RandomForest,
                        ModelFamily::Mlp}) {
        auto spec = ClassifierSpec::defaults(family, 3);
        if (family == ModelFamily::Mlp) spec.hp.epochs = 20;
        spec.hp.n_trees = 5;
        auto model = fit(spec, X, y);
        for (double p : model->predict_proba(X)) {
            REQUIRE(p >= 0.0);
            REQUIRE(p <= 1.0);
        }
    }
}

TEST_CASE("models round-trip through disk and predict identically", "[models]") {
    namespace fs = std::filesystem;
    Rng rng(9999);
    Matrix X;
    std::vector<int> y;
    random_batch(rng, 40, 3, X, y);
    for (auto family : {ModelFamily::LogisticRegression, ModelFamily::LinearSvm,
                        ModelFamily::DecisionTree, ModelFamily::RandomForest,
                        ModelFamily::Mlp}) {
        auto spec = ClassifierSpec::defaults(family, 17);
        if (family == ModelFamily::Mlp) spec.hp.epochs = 20;
        spec.hp.n_trees = 3;
        auto model = fit(spec, X, y);
        fs::path p = fs::temp_directory_path() / "nids_model.json";
        save_model(*model, p.string());
        auto back = load_model(p.string());
        fs::remove(p);
        REQUIRE(back->family() == model->family());
        auto pa = model->predict_proba(X);
        auto pb = back->predict_proba(X);
        for (std::size_t r = 0; r < X.rows; ++r) REQUIRE(pa[r] == pb[r]);
    }
}

TEST_CASE("trainers reject degenerate inputs", "[models]") {
    Matrix X(0, 2);
    X.append_row({0.0, 1.0});
    X.append_row({1.0, 0.0});
    auto spec = ClassifierSpec::defaults(ModelFamily::LogisticRegression, 0);
    CHECK_THROWS_AS(fit(spec, X, {1, 1}), Error);  // single class
    CHECK_THROWS_AS(fit(spec, X, {1}), Error);     // label count mismatch
    CHECK_THROWS_AS(fit(spec, Matrix(0, 2), {}), Error);  // empty

    auto model = fit(spec, X, {0, 1});
    CHECK_THROWS_AS(model->predict_proba(one_row({1.0, 2.0, 3.0})), Error);  // dim mismatch

    spec.hp.learning_rate = 0.0;
    CHECK_THROWS_AS(fit(spec, X, {0, 1}), Error);  // invalid hyperparams
}

TEST_CASE("flipping all labels roughly flips logistic probabilities", "[models]") {
    Matrix X(0, 1);
    std::vector<int> y, yf;
    for (int i = 0; i < 30; ++i) {
        double v = static_cast<double>(i) / 29.0;
        X.append_row({v});
        y.push_back(v > 0.5 ? 1 : 0);
        yf.push_back(v > 0.5 ? 0 : 1);
    }
    auto spec = ClassifierSpec::defaults(ModelFamily::LogisticRegression, 5);
    spec.hp.epochs = 500;
    auto pa = fit(spec, X, y)->predict_proba(X);
    auto pb = fit(spec, X, yf)->predict_proba(X);
    for (std::size_t r = 0; r < X.rows; ++r)
        REQUIRE(std::abs(pa[r] - (1.0 - pb[r])) < 0.05);
}
