#ifndef NIDS_FEATURES_HPP
#define NIDS_FEATURES_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nids/common.hpp"
#include "nids/dataset.hpp"

namespace nids {

enum class FeatureKind { Continuous, Count, Categorical, Flag };

inline FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "continuous") return FeatureKind::Continuous;
    if (s == "count") return FeatureKind::Count;
    if (s == "categorical") return FeatureKind::Categorical;
    if (s == "flag") return FeatureKind::Flag;
    throw Error("unknown feature kind: " + s);
}

inline std::string feature_kind_to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::Continuous: return "continuous";
        case FeatureKind::Count: return "count";
        case FeatureKind::Categorical: return "categorical";
        case FeatureKind::Flag: return "flag";
    }
    return "?";
}

/// Linear fit of feature b on feature a plus the residual spread, used to
/// keep correlated features mutually plausible under perturbation.
struct CorrelationFit {
    std::size_t a = 0;
    std::size_t b = 0;
    double slope = 0.0;
    double intercept = 0.0;
    double residual_sigma = 0.0;
};

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Continuous;
    bool is_mutable = false;
    double lower = 0.0;
    double upper = 0.0;
    bool integral = false;
};

/// Raw-space feature metadata: kinds, mutability, bounds, the perturbation
/// budget, and feature-engineering hints.
struct FeatureSchema {
    std::vector<FeatureSpec> features;
    double epsilon_fraction = 0.2;   // per-feature budget as fraction of observed range
    double norm_order = 2.0;
    double corr_threshold = 0.7;
    double clamp_sigma = 2.0;
    std::vector<CorrelationFit> correlation_groups;

    // engineering hints
    std::vector<std::string> log1p_features;
    std::vector<std::pair<std::string, std::string>> ratio_pairs;
    std::string zscore_group_by;
    std::vector<std::string> zscore_features;

    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == name) return i;
        throw Error("schema has no feature named " + name);
    }

    void validate() const {
        if (epsilon_fraction <= 0.0) throw Error("schema epsilon must be > 0");
        if (norm_order <= 0.0) throw Error("schema norm order must be > 0");
        for (const auto& f : features) {
            if (f.is_mutable &&
                (f.kind == FeatureKind::Categorical || f.kind == FeatureKind::Flag))
                throw Error("categorical/flag feature '" + f.name + "' must be immutable");
            if (f.is_mutable && (!std::isfinite(f.lower) || !std::isfinite(f.upper)))
                throw Error("mutable feature '" + f.name + "' needs finite bounds");
        }
        for (const auto& g : correlation_groups)
            if (g.a >= features.size() || g.b >= features.size())
                throw Error("correlation group references invalid feature index");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["epsilon_fraction"] = epsilon_fraction;
        j["norm_order"] = norm_order;
        j["corr_threshold"] = corr_threshold;
        j["clamp_sigma"] = clamp_sigma;
        j["features"] = nlohmann::json::array();
        for (const auto& f : features) {
            nlohmann::json fj = {{"name", f.name},
                                 {"kind", feature_kind_to_string(f.kind)},
                                 {"mutable", f.is_mutable},
                                 {"integral", f.integral}};
            // infinite bounds are represented by omission (JSON has no inf)
            if (std::isfinite(f.lower)) fj["lower"] = f.lower;
            if (std::isfinite(f.upper)) fj["upper"] = f.upper;
            j["features"].push_back(fj);
        }
        j["correlation_groups"] = nlohmann::json::array();
        for (const auto& g : correlation_groups)
            j["correlation_groups"].push_back({{"a", g.a},
                                               {"b", g.b},
                                               {"slope", g.slope},
                                               {"intercept", g.intercept},
                                               {"residual_sigma", g.residual_sigma}});
        j["engineering"] = {{"log1p", log1p_features},
                            {"ratios", nlohmann::json::array()},
                            {"zscore_group_by", zscore_group_by},
                            {"zscore_features", zscore_features}};
        for (const auto& rp : ratio_pairs)
            j["engineering"]["ratios"].push_back({rp.first, rp.second});
        return j;
    }

    static FeatureSchema from_json(const nlohmann::json& j) {
        FeatureSchema s;
        s.epsilon_fraction = j.value("epsilon_fraction", 0.2);
        s.norm_order = j.value("norm_order", 2.0);
        s.corr_threshold = j.value("corr_threshold", 0.7);
        s.clamp_sigma = j.value("clamp_sigma", 2.0);
        for (const auto& f : j.at("features")) {
            FeatureSpec fs;
            fs.name = f.at("name").get<std::string>();
            fs.kind = feature_kind_from_string(f.at("kind").get<std::string>());
            fs.is_mutable = f.value("mutable", false);
            fs.lower = f.contains("lower") && f["lower"].is_number()
                           ? f["lower"].get<double>()
                           : 0.0;
            fs.upper = f.contains("upper") && f["upper"].is_number()
                           ? f["upper"].get<double>()
                           : std::numeric_limits<double>::infinity();
            fs.integral = f.value("integral", false);
            s.features.push_back(fs);
        }
        if (j.contains("correlation_groups"))
            for (const auto& g : j["correlation_groups"])
                s.correlation_groups.push_back({g.at("a").get<std::size_t>(),
                                                g.at("b").get<std::size_t>(),
                                                g.at("slope").get<double>(),
                                                g.at("intercept").get<double>(),
                                                g.at("residual_sigma").get<double>()});
        if (j.contains("engineering")) {
            const auto& e = j["engineering"];
            if (e.contains("log1p"))
                s.log1p_features = e["log1p"].get<std::vector<std::string>>();
            if (e.contains("ratios"))
                for (const auto& rp : e["ratios"])
                    s.ratio_pairs.emplace_back(rp.at(0).get<std::string>(),
                                               rp.at(1).get<std::string>());
            s.zscore_group_by = e.value("zscore_group_by", std::string());
            if (e.contains("zscore_features"))
                s.zscore_features = e["zscore_features"].get<std::vector<std::string>>();
        }
        s.validate();
        return s;
    }

    static FeatureSchema from_json_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open schema file: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

// ---------------------------------------------------------------------------
// Feature engineering
// ---------------------------------------------------------------------------

/// Per-group mean/sigma statistics for the group z-score features, learned on
/// training data and reused at transform time.
struct EngineeredStats {
    // feature name -> group name -> (mean, sigma)
    std::map<std::string, std::map<std::string, std::pair<double, double>>> group_stats;
    std::map<std::string, std::pair<double, double>> global_stats;  // fallback for unseen groups
};

inline EngineeredStats compute_engineered_stats(const LabeledDataset& train,
                                                const FeatureSchema& schema) {
    EngineeredStats st;
    if (schema.zscore_group_by.empty() || schema.zscore_features.empty()) return st;
    std::size_t gcol = schema.index_of(schema.zscore_group_by);
    for (const auto& fname : schema.zscore_features) {
        std::size_t col = schema.index_of(fname);
        std::map<std::string, std::vector<double>> by_group;
        std::vector<double> all;
        for (std::size_t r = 0; r < train.size(); ++r) {
            const std::string& g =
                train.categories.name_of(gcol, static_cast<std::size_t>(train.features.at(r, gcol)));
            double v = train.features.at(r, col);
            by_group[g].push_back(v);
            all.push_back(v);
        }
        auto mean_sigma = [](const std::vector<double>& v) {
            double m = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            double s2 = 0.0;
            for (double x : v) s2 += (x - m) * (x - m);
            return std::make_pair(m, std::sqrt(s2 / static_cast<double>(v.size())));
        };
        for (const auto& [g, vals] : by_group) st.group_stats[fname][g] = mean_sigma(vals);
        st.global_stats[fname] = mean_sigma(all);
    }
    return st;
}

/// Append engineered columns in raw space: log1p transforms, guarded ratios,
/// and per-group z-scores. Original columns are untouched.
inline LabeledDataset engineer_features(const LabeledDataset& ds, const FeatureSchema& schema,
                                        const EngineeredStats* stats = nullptr) {
    EngineeredStats local;
    if (!stats) {
        local = compute_engineered_stats(ds, schema);
        stats = &local;
    }
    LabeledDataset out = ds;
    std::size_t n = ds.size();

    auto add_column = [&](const std::string& name, const std::vector<double>& col) {
        Matrix m(n, out.features.cols + 1);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < out.features.cols; ++c) m.at(r, c) = out.features.at(r, c);
            m.at(r, out.features.cols) = col[r];
        }
        out.features = std::move(m);
        out.column_names.push_back(name);
        out.column_kinds.push_back(ColumnKind::Numeric);
    };

    for (const auto& fname : schema.log1p_features) {
        std::size_t col = schema.index_of(fname);
        std::vector<double> v(n);
        for (std::size_t r = 0; r < n; ++r) v[r] = std::log1p(std::max(0.0, ds.features.at(r, col)));
        add_column("log1p_" + fname, v);
    }
    for (const auto& [a, b] : schema.ratio_pairs) {
        std::size_t ca = schema.index_of(a), cb = schema.index_of(b);
        std::vector<double> v(n);
        for (std::size_t r = 0; r < n; ++r)
            v[r] = ds.features.at(r, ca) / (ds.features.at(r, cb) + 1.0);
        add_column("ratio_" + a + "_" + b, v);
    }
    if (!schema.zscore_group_by.empty()) {
        std::size_t gcol = schema.index_of(schema.zscore_group_by);
        for (const auto& fname : schema.zscore_features) {
            std::size_t col = schema.index_of(fname);
            std::vector<double> v(n);
            for (std::size_t r = 0; r < n; ++r) {
                const std::string& g = ds.categories.name_of(
                    gcol, static_cast<std::size_t>(ds.features.at(r, gcol)));
                const auto& per = stats->group_stats.at(fname);
                auto it = per.find(g);
                auto [m, s] = it != per.end() ? it->second : stats->global_stats.at(fname);
                v[r] = (ds.features.at(r, col) - m) / (s > 0.0 ? s : 1.0);
            }
            add_column("z_" + fname + "_by_" + schema.zscore_group_by, v);
        }
    }
    if (!out.features.all_finite()) throw Error("feature engineering produced non-finite values");
    return out;
}

// ---------------------------------------------------------------------------
// Preprocessor
// ---------------------------------------------------------------------------

struct PreprocessOptions {
    bool scale = true;
    bool one_hot = true;
    bool engineered = false;
};

/// Learned on training data only; transform is a pure function of this state.
struct PreprocessorState {
    PreprocessOptions options;
    std::vector<std::string> input_names;           // raw + engineered column order
    std::vector<ColumnKind> input_kinds;
    std::vector<double> col_min, col_max;            // per input column (numeric only used)
    std::map<std::size_t, std::vector<std::string>> categories;  // input col -> train categories
    EngineeredStats engineered_stats;
    std::vector<std::string> warnings;
    bool fitted = false;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["scale"] = options.scale;
        j["one_hot"] = options.one_hot;
        j["engineered"] = options.engineered;
        j["input_names"] = input_names;
        j["col_min"] = col_min;
        j["col_max"] = col_max;
        nlohmann::json kinds = nlohmann::json::array();
        for (auto k : input_kinds) kinds.push_back(column_kind_to_string(k));
        j["input_kinds"] = kinds;
        nlohmann::json cats = nlohmann::json::object();
        for (const auto& [col, names] : categories) cats[std::to_string(col)] = names;
        j["categories"] = cats;
        j["warnings"] = warnings;
        nlohmann::json gs = nlohmann::json::object();
        for (const auto& [f, per] : engineered_stats.group_stats) {
            nlohmann::json pj = nlohmann::json::object();
            for (const auto& [g, ms] : per) pj[g] = {ms.first, ms.second};
            gs[f] = pj;
        }
        j["group_stats"] = gs;
        nlohmann::json gl = nlohmann::json::object();
        for (const auto& [f, ms] : engineered_stats.global_stats) gl[f] = {ms.first, ms.second};
        j["global_stats"] = gl;
        return j;
    }

    static PreprocessorState from_json(const nlohmann::json& j) {
        PreprocessorState s;
        s.options.scale = j.at("scale").get<bool>();
        s.options.one_hot = j.at("one_hot").get<bool>();
        s.options.engineered = j.at("engineered").get<bool>();
        s.input_names = j.at("input_names").get<std::vector<std::string>>();
        s.col_min = j.at("col_min").get<std::vector<double>>();
        s.col_max = j.at("col_max").get<std::vector<double>>();
        for (const auto& k : j.at("input_kinds"))
            s.input_kinds.push_back(column_kind_from_string(k.get<std::string>()));
        for (auto it = j.at("categories").begin(); it != j.at("categories").end(); ++it)
            s.categories[std::stoul(it.key())] = it.value().get<std::vector<std::string>>();
        s.warnings = j.value("warnings", std::vector<std::string>());
        if (j.contains("group_stats"))
            for (auto it = j["group_stats"].begin(); it != j["group_stats"].end(); ++it)
                for (auto g = it.value().begin(); g != it.value().end(); ++g)
                    s.engineered_stats.group_stats[it.key()][g.key()] = {g.value()[0].get<double>(),
                                                                         g.value()[1].get<double>()};
        if (j.contains("global_stats"))
            for (auto it = j["global_stats"].begin(); it != j["global_stats"].end(); ++it)
                s.engineered_stats.global_stats[it.key()] = {it.value()[0].get<double>(),
                                                             it.value()[1].get<double>()};
        s.fitted = true;
        return s;
    }
};

inline PreprocessorState fit_preprocessor(const LabeledDataset& train, const FeatureSchema& schema,
                                          const PreprocessOptions& options = {}) {
    if (train.size() == 0) throw Error("fit_preprocessor: empty training set");
    PreprocessorState st;
    st.options = options;
    if (options.engineered) st.engineered_stats = compute_engineered_stats(train, schema);
    LabeledDataset base =
        options.engineered ? engineer_features(train, schema, &st.engineered_stats) : train;

    st.input_names = base.column_names;
    st.input_kinds = base.column_kinds;
    st.col_min.assign(base.dim(), 0.0);
    st.col_max.assign(base.dim(), 0.0);
    for (std::size_t c = 0; c < base.dim(); ++c) {
        if (base.column_kinds[c] == ColumnKind::Categorical) {
            // categories observed in train, in dictionary order
            std::vector<bool> seen(base.categories.names.at(c).size(), false);
            for (std::size_t r = 0; r < base.size(); ++r)
                seen[static_cast<std::size_t>(base.features.at(r, c))] = true;
            std::vector<std::string> cats;
            for (std::size_t i = 0; i < seen.size(); ++i)
                if (seen[i]) cats.push_back(base.categories.name_of(c, i));
            st.categories[c] = cats;
            continue;
        }
        double lo = base.features.at(0, c), hi = lo;
        for (std::size_t r = 1; r < base.size(); ++r) {
            lo = std::min(lo, base.features.at(r, c));
            hi = std::max(hi, base.features.at(r, c));
        }
        st.col_min[c] = lo;
        st.col_max[c] = hi;
        if (lo == hi)
            st.warnings.push_back("constant feature '" + base.column_names[c] +
                                  "' scales to 0");
    }
    st.fitted = true;
    return st;
}

/// Apply the fitted preprocessor: engineered columns appended, continuous
/// columns min-max scaled and clipped to [0,1], categoricals one-hot encoded
/// (with a trailing unseen bucket) or re-indexed against the training
/// dictionary when one-hot is off.
inline LabeledDataset transform(const LabeledDataset& ds, const PreprocessorState& st,
                                const FeatureSchema& schema) {
    if (!st.fitted) throw Error("transform: preprocessor not fitted");
    LabeledDataset base =
        st.options.engineered ? engineer_features(ds, schema, &st.engineered_stats) : ds;
    if (base.dim() != st.input_names.size())
        throw Error("transform: dimension mismatch (got " + std::to_string(base.dim()) +
                    ", fitted on " + std::to_string(st.input_names.size()) + ")");

    LabeledDataset out;
    out.schema_id = ds.schema_id;
    out.labels = ds.labels;
    out.provenance = ds.provenance;

    // output layout
    for (std::size_t c = 0; c < base.dim(); ++c) {
        if (base.column_kinds[c] == ColumnKind::Categorical) {
            const auto& cats = st.categories.at(c);
            if (st.options.one_hot) {
                for (const auto& name : cats) {
                    out.column_names.push_back(st.input_names[c] + "=" + name);
                    out.column_kinds.push_back(ColumnKind::Binary);
                }
                out.column_names.push_back(st.input_names[c] + "=<unseen>");
                out.column_kinds.push_back(ColumnKind::Binary);
            } else {
                // re-indexed against the training dictionary; keep the
                // categorical kind so later stages can snap these columns
                std::size_t oc = out.column_names.size();
                out.column_names.push_back(st.input_names[c]);
                out.column_kinds.push_back(ColumnKind::Categorical);
                auto names = cats;
                names.push_back("<unseen>");
                out.categories.names[oc] = names;
                for (std::size_t i = 0; i < names.size(); ++i)
                    out.categories.index[oc][names[i]] = i;
            }
        } else {
            out.column_names.push_back(st.input_names[c]);
            out.column_kinds.push_back(base.column_kinds[c]);
        }
    }
    out.features = Matrix(base.size(), out.column_names.size());

    for (std::size_t r = 0; r < base.size(); ++r) {
        std::size_t oc = 0;
        for (std::size_t c = 0; c < base.dim(); ++c) {
            double v = base.features.at(r, c);
            if (base.column_kinds[c] == ColumnKind::Categorical) {
                const auto& cats = st.categories.at(c);
                const std::string& name =
                    base.categories.name_of(c, static_cast<std::size_t>(v));
                std::size_t slot = cats.size();  // unseen bucket
                for (std::size_t i = 0; i < cats.size(); ++i)
                    if (cats[i] == name) {
                        slot = i;
                        break;
                    }
                if (st.options.one_hot) {
                    for (std::size_t i = 0; i < cats.size() + 1; ++i)
                        out.features.at(r, oc + i) = (i == slot) ? 1.0 : 0.0;
                    oc += cats.size() + 1;
                } else {
                    out.features.at(r, oc++) = static_cast<double>(slot);
                }
            } else {
                if (st.options.scale) {
                    double range = st.col_max[c] - st.col_min[c];
                    double s = range > 0.0 ? (v - st.col_min[c]) / range : 0.0;
                    out.features.at(r, oc++) = std::clamp(s, 0.0, 1.0);
                } else {
                    out.features.at(r, oc++) = v;
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Correlation groups
// ---------------------------------------------------------------------------

/// Least-squares fits for every mutable feature pair whose |Pearson r|
/// reaches the threshold. Zero-variance features are excluded.
inline std::vector<CorrelationFit> fit_correlation_groups(const Matrix& X,
                                                          const std::vector<bool>& mutable_mask,
                                                          double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw Error("correlation threshold must be in (0,1)");
    std::size_t n = X.rows, d = X.cols;
    if (n == 0) throw Error("fit_correlation_groups: empty data");
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t r = 0; r < n; ++r) mean[c] += X.at(r, c);
        mean[c] /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            double dlt = X.at(r, c) - mean[c];
            var[c] += dlt * dlt;
        }
        var[c] /= static_cast<double>(n);
    }
    std::vector<CorrelationFit> fits;
    for (std::size_t a = 0; a < d; ++a) {
        if (!mutable_mask[a] || var[a] <= 0.0) continue;
        for (std::size_t b = a + 1; b < d; ++b) {
            if (!mutable_mask[b] || var[b] <= 0.0) continue;
            double cov = 0.0;
            for (std::size_t r = 0; r < n; ++r)
                cov += (X.at(r, a) - mean[a]) * (X.at(r, b) - mean[b]);
            cov /= static_cast<double>(n);
            double r_ab = cov / std::sqrt(var[a] * var[b]);
            if (std::abs(r_ab) < threshold) continue;
            CorrelationFit f;
            f.a = a;
            f.b = b;
            f.slope = cov / var[a];
            f.intercept = mean[b] - f.slope * mean[a];
            double ss = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                double e = X.at(r, b) - (f.slope * X.at(r, a) + f.intercept);
                ss += e * e;
            }
            f.residual_sigma = std::sqrt(ss / static_cast<double>(n));
            fits.push_back(f);
        }
    }
    return fits;
}

/// Raw-space wrapper storing the fits back into the schema.
inline FeatureSchema compute_correlation_groups(const LabeledDataset& train,
                                                const FeatureSchema& schema, double threshold) {
    std::vector<bool> mask(train.dim(), false);
    for (std::size_t c = 0; c < train.dim() && c < schema.features.size(); ++c)
        mask[c] = schema.features[c].is_mutable;
    FeatureSchema out = schema;
    out.correlation_groups = fit_correlation_groups(train.features, mask, threshold);
    return out;
}

// ---------------------------------------------------------------------------
// Model-input-space schema and projection
// ---------------------------------------------------------------------------

struct TransformedFeature {
    std::string name;
    bool is_mutable = false;
    double lower = 0.0;
    double upper = 1.0;
    double epsilon = 0.0;   // absolute budget in this space
    bool integral = false;
    // raw = raw_offset + v * raw_scale, used for integral rounding
    double raw_offset = 0.0;
    double raw_scale = 1.0;
    // observed training range; distances are measured in units of this scale
    // so the norm behaves identically whether or not features are min-max
    // scaled before the models see them
    double distance_scale = 1.0;
};

/// Feature constraints expressed in the space the models actually consume.
struct TransformedSchema {
    std::vector<TransformedFeature> features;
    std::vector<CorrelationFit> correlation_groups;
    double clamp_sigma = 2.0;
    double norm_order = 2.0;

    std::size_t dim() const { return features.size(); }

    std::size_t mutable_count() const {
        std::size_t n = 0;
        for (const auto& f : features)
            if (f.is_mutable) ++n;
        return n;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["clamp_sigma"] = clamp_sigma;
        j["norm_order"] = norm_order;
        j["features"] = nlohmann::json::array();
        for (const auto& f : features)
            j["features"].push_back({{"name", f.name},
                                     {"mutable", f.is_mutable},
                                     {"lower", f.lower},
                                     {"upper", f.upper},
                                     {"epsilon", f.epsilon},
                                     {"integral", f.integral},
                                     {"raw_offset", f.raw_offset},
                                     {"raw_scale", f.raw_scale},
                                     {"distance_scale", f.distance_scale}});
        j["correlation_groups"] = nlohmann::json::array();
        for (const auto& g : correlation_groups)
            j["correlation_groups"].push_back({{"a", g.a},
                                               {"b", g.b},
                                               {"slope", g.slope},
                                               {"intercept", g.intercept},
                                               {"residual_sigma", g.residual_sigma}});
        return j;
    }

    static TransformedSchema from_json(const nlohmann::json& j) {
        TransformedSchema s;
        s.clamp_sigma = j.at("clamp_sigma").get<double>();
        s.norm_order = j.value("norm_order", 2.0);
        for (const auto& f : j.at("features")) {
            TransformedFeature tf;
            tf.name = f.at("name").get<std::string>();
            tf.is_mutable = f.at("mutable").get<bool>();
            tf.lower = f.at("lower").get<double>();
            tf.upper = f.at("upper").get<double>();
            tf.epsilon = f.at("epsilon").get<double>();
            tf.integral = f.at("integral").get<bool>();
            tf.raw_offset = f.at("raw_offset").get<double>();
            tf.raw_scale = f.at("raw_scale").get<double>();
            tf.distance_scale = f.value("distance_scale", 1.0);
            s.features.push_back(tf);
        }
        for (const auto& g : j.at("correlation_groups"))
            s.correlation_groups.push_back({g.at("a").get<std::size_t>(),
                                            g.at("b").get<std::size_t>(),
                                            g.at("slope").get<double>(),
                                            g.at("intercept").get<double>(),
                                            g.at("residual_sigma").get<double>()});
        return s;
    }
};

namespace detail {

/// Nearest integer (in raw units) within interval [lo, hi] of the
/// transformed space. Returns the clamped input when the interval contains
/// no representable integer.
inline double snap_integral(double v, double lo, double hi, const TransformedFeature& f) {
    if (f.raw_scale == 0.0) return std::clamp(v, lo, hi);
    auto to_raw = [&](double t) { return f.raw_offset + t * f.raw_scale; };
    auto from_raw = [&](double r) { return (r - f.raw_offset) / f.raw_scale; };
    double rlo = to_raw(lo), rhi = to_raw(hi);
    if (rlo > rhi) std::swap(rlo, rhi);
    double r = std::round(to_raw(std::clamp(v, lo, hi)));
    const double tol = 1e-9;
    if (r < rlo - tol) r = std::ceil(rlo - tol);
    if (r > rhi + tol) r = std::floor(rhi + tol);
    if (r < rlo - tol || r > rhi + tol) return std::clamp(v, lo, hi);  // no integer in range
    return std::clamp(from_raw(r), lo, hi);
}

}  // namespace detail

/// Project a perturbed vector back into the valid-input set: immutable
/// coordinates are restored, mutable ones clamped to the budget box and
/// bounds, integral features rounded, and correlated pairs clamped to the
/// fitted band. Total and idempotent.
inline std::vector<double> project_to_valid(const std::vector<double>& xhat,
                                            const std::vector<double>& x,
                                            const TransformedSchema& schema) {
    if (xhat.size() != schema.dim() || x.size() != schema.dim())
        throw Error("project_to_valid: dimension mismatch");
    std::vector<double> v(schema.dim());
    for (std::size_t i = 0; i < schema.dim(); ++i) {
        const auto& f = schema.features[i];
        if (!f.is_mutable) {
            v[i] = x[i];
            continue;
        }
        double lo = std::max(f.lower, x[i] - f.epsilon);
        double hi = std::min(f.upper, x[i] + f.epsilon);
        if (lo > hi) {  // x itself off-bounds; fall back to the budget box
            lo = x[i] - f.epsilon;
            hi = x[i] + f.epsilon;
        }
        double t = std::clamp(xhat[i], lo, hi);
        v[i] = f.integral ? detail::snap_integral(t, lo, hi, f) : t;
    }
    // correlation bands, applied in stored order; the budget box wins on conflict
    for (const auto& g : schema.correlation_groups) {
        const auto& fa = schema.features[g.a];
        const auto& fb = schema.features[g.b];
        if (!fa.is_mutable || !fb.is_mutable) continue;
        double lo = std::max(fb.lower, x[g.b] - fb.epsilon);
        double hi = std::min(fb.upper, x[g.b] + fb.epsilon);
        if (lo > hi) {
            lo = x[g.b] - fb.epsilon;
            hi = x[g.b] + fb.epsilon;
        }
        double center = g.slope * v[g.a] + g.intercept;
        double band = schema.clamp_sigma * g.residual_sigma;
        double t = std::clamp(v[g.b], center - band, center + band);
        t = std::clamp(t, lo, hi);
        if (fb.integral) {
            double ilo = std::max(lo, center - band), ihi = std::min(hi, center + band);
            double snapped = ilo <= ihi ? detail::snap_integral(t, ilo, ihi, fb)
                                        : detail::snap_integral(t, lo, hi, fb);
            // accept the in-band snap only if it produced an integer; otherwise
            // fall back to the budget box
            t = snapped;
        }
        v[g.b] = t;
    }
    return v;
}

/// L_p distance between two vectors (schema's norm order).
inline double lp_distance(const std::vector<double>& a, const std::vector<double>& b, double p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[i]), p);
    return std::pow(acc, 1.0 / p);
}

/// L_p distance in preprocessed units: each coordinate delta is divided by
/// the feature's observed training range first, so a full-range move always
/// costs 1 regardless of the stage's encoding.
inline double scaled_lp_distance(const std::vector<double>& a, const std::vector<double>& b,
                                 const TransformedSchema& schema) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = std::abs(a[i] - b[i]) / schema.features[i].distance_scale;
        acc += std::pow(d, schema.norm_order);
    }
    return std::pow(acc, 1.0 / schema.norm_order);
}

/// Build the model-input-space constraint schema from the raw schema, the
/// fitted preprocessor, and the transformed training matrix (for observed
/// ranges and correlation fits).
inline TransformedSchema build_transformed_schema(const FeatureSchema& schema,
                                                  const PreprocessorState& st,
                                                  const LabeledDataset& train_transformed) {
    TransformedSchema ts;
    ts.clamp_sigma = schema.clamp_sigma;
    ts.norm_order = schema.norm_order;

    // map output columns back to raw schema entries
    std::vector<int> source(train_transformed.dim(), -1);
    {
        std::size_t oc = 0;
        for (std::size_t c = 0; c < st.input_names.size(); ++c) {
            if (st.input_kinds[c] == ColumnKind::Categorical && st.options.one_hot) {
                oc += st.categories.at(c).size() + 1;
                continue;
            }
            // engineered columns have no raw schema entry
            int raw_idx = -1;
            for (std::size_t i = 0; i < schema.features.size(); ++i)
                if (schema.features[i].name == st.input_names[c]) {
                    raw_idx = static_cast<int>(i);
                    break;
                }
            source[oc] = raw_idx;
            ++oc;
        }
    }

    // observed ranges in transformed space
    const Matrix& X = train_transformed.features;
    for (std::size_t c = 0; c < train_transformed.dim(); ++c) {
        TransformedFeature tf;
        tf.name = train_transformed.column_names[c];
        double lo = X.at(0, c), hi = lo;
        for (std::size_t r = 1; r < X.rows; ++r) {
            lo = std::min(lo, X.at(r, c));
            hi = std::max(hi, X.at(r, c));
        }
        int raw_idx = c < source.size() ? source[c] : -1;
        if (raw_idx >= 0) {
            const auto& rf = schema.features[static_cast<std::size_t>(raw_idx)];
            tf.is_mutable = rf.is_mutable;
            tf.integral = rf.integral;
            // find the preprocessor input column for the raw scale mapping
            std::size_t in_col = 0;
            for (std::size_t i = 0; i < st.input_names.size(); ++i)
                if (st.input_names[i] == rf.name) {
                    in_col = i;
                    break;
                }
            if (st.options.scale && st.input_kinds[in_col] != ColumnKind::Categorical) {
                double range = st.col_max[in_col] - st.col_min[in_col];
                tf.raw_offset = st.col_min[in_col];
                tf.raw_scale = range > 0.0 ? range : 1.0;
                tf.lower = 0.0;
                tf.upper = 1.0;
            } else {
                tf.raw_offset = 0.0;
                tf.raw_scale = 1.0;
                tf.lower = std::max(rf.lower, lo);
                tf.upper = std::min(rf.upper, hi);
                if (tf.lower > tf.upper) {
                    tf.lower = lo;
                    tf.upper = hi;
                }
            }
        } else {
            // one-hot, re-indexed categorical, or engineered column: not
            // directly attacker-controlled
            tf.is_mutable = false;
            tf.lower = lo;
            tf.upper = hi;
        }
        tf.epsilon = tf.is_mutable ? schema.epsilon_fraction * (hi - lo) : 0.0;
        tf.distance_scale = hi > lo ? hi - lo : 1.0;
        ts.features.push_back(tf);
    }

    std::vector<bool> mask(ts.dim());
    for (std::size_t i = 0; i < ts.dim(); ++i) mask[i] = ts.features[i].is_mutable;
    ts.correlation_groups = fit_correlation_groups(X, mask, schema.corr_threshold);
    return ts;
}

}  // namespace nids

#endif  // NIDS_FEATURES_HPP
