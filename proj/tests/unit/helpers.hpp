#ifndef NIDS_TEST_HELPERS_HPP
#define NIDS_TEST_HELPERS_HPP

#include <string>
#include <vector>

#include "nids/dataset.hpp"
#include "nids/features.hpp"

namespace test_helpers {

/// Numeric-only in-memory dataset.
inline nids::LabeledDataset numeric_dataset(const std::vector<std::vector<double>>& rows,
                                            const std::vector<int>& labels) {
    nids::LabeledDataset ds;
    ds.schema_id = "test";
    std::size_t d = rows.empty() ? 0 : rows[0].size();
    for (std::size_t c = 0; c < d; ++c) {
        ds.column_names.push_back("f" + std::to_string(c));
        ds.column_kinds.push_back(nids::ColumnKind::Numeric);
    }
    ds.features = nids::Matrix(0, d);
    for (const auto& r : rows) ds.features.append_row(r);
    ds.labels = labels;
    ds.provenance.assign(rows.size(), nids::Provenance::Raw);
    return ds;
}

/// Flat transformed schema: shared bounds/epsilon, per-feature mutability.
inline nids::TransformedSchema simple_schema(std::size_t d, double eps,
                                             std::vector<bool> mut = {}, double lower = 0.0,
                                             double upper = 1.0) {
    nids::TransformedSchema s;
    for (std::size_t i = 0; i < d; ++i) {
        nids::TransformedFeature f;
        f.name = "f" + std::to_string(i);
        f.is_mutable = mut.empty() ? true : mut[i];
        f.lower = lower;
        f.upper = upper;
        f.epsilon = eps;
        f.distance_scale = 1.0;
        s.features.push_back(f);
    }
    return s;
}

inline nids::Matrix one_row(const std::vector<double>& v) {
    nids::Matrix m(0, v.size());
    m.append_row(v);
    return m;
}

}  // namespace test_helpers

#endif
