#ifndef NIDS_BALANCE_HPP
#define NIDS_BALANCE_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "nids/common.hpp"
#include "nids/dataset.hpp"

namespace nids {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // minority/majority after oversampling
    std::uint64_t seed = 0;
};

struct SmoteResult {
    LabeledDataset dataset;
    struct Parents {
        std::size_t base;      // row index in the input dataset
        std::size_t neighbor;  // row index in the input dataset
        double u;              // interpolation coefficient
    };
    std::vector<Parents> parents;  // one entry per appended synthetic row
};

/// SMOTE oversampling of the minority class in preprocessed space. Synthetic
/// rows interpolate numeric coordinates between a minority point and one of
/// its k nearest minority neighbors; categorical/binary coordinates are
/// snapped to the base parent. Appends only; deterministic under seed.
inline SmoteResult smote(const LabeledDataset& train, const SmoteConfig& cfg) {
    if (cfg.k_neighbors < 1) throw Error("smote: k_neighbors must be >= 1");
    if (cfg.target_ratio <= 0.0 || cfg.target_ratio > 1.0)
        throw Error("smote: target_ratio must be in (0,1]");

    std::size_t n_pos = train.count_label(1);
    std::size_t n_neg = train.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw Error("smote: both classes must be present");
    int minority_label = n_pos <= n_neg ? 1 : 0;
    std::size_t n_min = std::min(n_pos, n_neg);
    std::size_t n_maj = std::max(n_pos, n_neg);

    SmoteResult res;
    res.dataset = train;
    double target = cfg.target_ratio * static_cast<double>(n_maj);
    std::size_t want = static_cast<std::size_t>(std::llround(target));
    if (want <= n_min) return res;  // already balanced
    std::size_t n_new = want - n_min;

    if (n_min < cfg.k_neighbors + 1)
        throw Error("smote: minority class size " + std::to_string(n_min) +
                    " is smaller than k+1 = " + std::to_string(cfg.k_neighbors + 1));

    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < train.size(); ++i)
        if (train.labels[i] == minority_label) minority.push_back(i);

    // memoized k-NN (Euclidean over all coordinates) among minority rows
    std::map<std::size_t, std::vector<std::size_t>> knn;
    auto neighbors_of = [&](std::size_t mi) -> const std::vector<std::size_t>& {
        auto it = knn.find(mi);
        if (it != knn.end()) return it->second;
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(minority.size() - 1);
        const double* a = train.features.row(minority[mi]);
        for (std::size_t mj = 0; mj < minority.size(); ++mj) {
            if (mj == mi) continue;
            const double* b = train.features.row(minority[mj]);
            double s = 0.0;
            for (std::size_t c = 0; c < train.dim(); ++c) {
                double dd = a[c] - b[c];
                s += dd * dd;
            }
            d.emplace_back(s, mj);
        }
        std::sort(d.begin(), d.end());
        std::vector<std::size_t> nn;
        for (std::size_t k = 0; k < cfg.k_neighbors && k < d.size(); ++k)
            nn.push_back(d[k].second);
        return knn.emplace(mi, std::move(nn)).first->second;
    };

    for (std::size_t s = 0; s < n_new; ++s) {
        Rng rng(Rng::substream(cfg.seed, 0xb0a7ULL + s));
        std::size_t mi = rng.uniform_index(minority.size());
        const auto& nn = neighbors_of(mi);
        std::size_t mj = nn[rng.uniform_index(nn.size())];
        double u = rng.uniform();

        std::size_t base = minority[mi], nbr = minority[mj];
        std::vector<double> row(train.dim());
        for (std::size_t c = 0; c < train.dim(); ++c) {
            if (train.column_kinds[c] == ColumnKind::Numeric)
                row[c] = train.features.at(base, c) +
                         u * (train.features.at(nbr, c) - train.features.at(base, c));
            else
                row[c] = train.features.at(base, c);  // snap categories/flags to the base parent
        }
        res.dataset.features.append_row(row);
        res.dataset.labels.push_back(minority_label);
        res.dataset.provenance.push_back(Provenance::Synthetic);
        res.parents.push_back({base, nbr, u});
    }
    return res;
}

}  // namespace nids

#endif  // NIDS_BALANCE_HPP
