#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "nids/balance.hpp"

using namespace nids;
using test_helpers::numeric_dataset;

namespace {

LabeledDataset imbalanced(std::size_t n_maj, std::size_t n_min, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n_maj; ++i) {
        rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        labels.push_back(0);
    }
    for (std::size_t i = 0; i < n_min; ++i) {
        rows.push_back({2.0 + rng.uniform(), 2.0 + rng.uniform(), rng.uniform()});
        labels.push_back(1);
    }
    return numeric_dataset(rows, labels);
}

}  // namespace

TEST_CASE("smote appends exactly the rows needed to reach the target ratio", "[balance]") {
    auto ds = imbalanced(100, 40, 1);
    SmoteConfig cfg;
    cfg.k_neighbors = 5;
    cfg.target_ratio = 1.0;
    cfg.seed = 7;
    auto res = smote(ds, cfg);
    CHECK(res.dataset.size() == 200);
    CHECK(res.dataset.count_label(1) == 100);
    CHECK(res.parents.size() == 60);
    for (std::size_t i = 140; i < 200; ++i) {
        CHECK(res.dataset.labels[i] == 1);
        CHECK(res.dataset.provenance[i] == Provenance::Synthetic);
    }
}

TEST_CASE("synthetic rows are exact segment interpolations of their parents", "[balance]") {
    auto ds = imbalanced(100, 40, 2);
    SmoteConfig cfg;
    cfg.seed = 11;
    auto res = smote(ds, cfg);
    REQUIRE_FALSE(res.parents.empty());
    for (std::size_t s = 0; s < res.parents.size(); ++s) {
        const auto& p = res.parents[s];
        CHECK(ds.labels[p.base] == 1);
        CHECK(ds.labels[p.neighbor] == 1);
        CHECK(p.u >= 0.0);
        CHECK(p.u <= 1.0);
        std::size_t row = ds.size() + s;
        // collinearity: residual against base + u*(nbr-base) under 1e-9
        for (std::size_t c = 0; c < ds.dim(); ++c) {
            double expect = ds.features.at(p.base, c) +
                            p.u * (ds.features.at(p.neighbor, c) - ds.features.at(p.base, c));
            REQUIRE(std::abs(res.dataset.features.at(row, c) - expect) < 1e-9);
        }
    }
}

TEST_CASE("smote snaps non-numeric coordinates to the base parent", "[balance]") {
    auto ds = imbalanced(30, 10, 3);
    ds.column_kinds[2] = ColumnKind::Binary;
    for (std::size_t r = 0; r < ds.size(); ++r)
        ds.features.at(r, 2) = r % 2 ? 1.0 : 0.0;
    SmoteConfig cfg;
    cfg.k_neighbors = 3;
    cfg.seed = 5;
    auto res = smote(ds, cfg);
    for (std::size_t s = 0; s < res.parents.size(); ++s)
        REQUIRE(res.dataset.features.at(ds.size() + s, 2) ==
                ds.features.at(res.parents[s].base, 2));
}

TEST_CASE("smote leaves the original rows bitwise untouched", "[balance]") {
    auto ds = imbalanced(50, 20, 4);
    auto res = smote(ds, SmoteConfig{});
    for (std::size_t r = 0; r < ds.size(); ++r) {
        REQUIRE(res.dataset.labels[r] == ds.labels[r]);
        REQUIRE(res.dataset.provenance[r] == ds.provenance[r]);
        for (std::size_t c = 0; c < ds.dim(); ++c)
            REQUIRE(res.dataset.features.at(r, c) == ds.features.at(r, c));
    }
}

TEST_CASE("an already balanced set passes through unchanged", "[balance]") {
    auto ds = imbalanced(40, 40, 5);
    auto res = smote(ds, SmoteConfig{});
    CHECK(res.dataset.size() == 80);
    CHECK(res.parents.empty());
}

TEST_CASE("smote is deterministic under its seed", "[balance]") {
    auto ds = imbalanced(60, 25, 6);
    SmoteConfig cfg;
    cfg.seed = 99;
    auto a = smote(ds, cfg);
    auto b = smote(ds, cfg);
    REQUIRE(a.dataset.size() == b.dataset.size());
    for (std::size_t r = 0; r < a.dataset.size(); ++r)
        for (std::size_t c = 0; c < a.dataset.dim(); ++c)
            REQUIRE(a.dataset.features.at(r, c) == b.dataset.features.at(r, c));
}

TEST_CASE("smote validates its configuration and inputs", "[balance]") {
    auto ds = imbalanced(100, 4, 7);
    SmoteConfig cfg;
    cfg.k_neighbors = 5;  // minority 4 < k+1
    CHECK_THROWS_AS(smote(ds, cfg), Error);

    cfg.k_neighbors = 0;
    CHECK_THROWS_AS(smote(ds, cfg), Error);

    cfg.k_neighbors = 2;
    cfg.target_ratio = 0.0;
    CHECK_THROWS_AS(smote(ds, cfg), Error);
    cfg.target_ratio = 1.5;
    CHECK_THROWS_AS(smote(ds, cfg), Error);

    cfg.target_ratio = 1.0;
    auto single = numeric_dataset({{1.0}, {2.0}}, {0, 0});
    CHECK_THROWS_AS(smote(single, cfg), Error);
}

TEST_CASE("a partial target ratio lands between the class counts", "[balance]") {
    auto ds = imbalanced(100, 40, 8);
    SmoteConfig cfg;
    cfg.target_ratio = 0.7;
    auto res = smote(ds, cfg);
    CHECK(res.dataset.count_label(1) == 70);
}
