#ifndef NIDS_DATASET_HPP
#define NIDS_DATASET_HPP

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nids/common.hpp"

namespace nids {

enum class ColumnKind { Numeric, Categorical, Binary, Label, Drop };

inline ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "numeric") return ColumnKind::Numeric;
    if (s == "categorical") return ColumnKind::Categorical;
    if (s == "binary") return ColumnKind::Binary;
    if (s == "label") return ColumnKind::Label;
    if (s == "drop") return ColumnKind::Drop;
    throw Error("unknown column kind: " + s);
}

inline std::string column_kind_to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::Numeric: return "numeric";
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Binary: return "binary";
        case ColumnKind::Label: return "label";
        case ColumnKind::Drop: return "drop";
    }
    return "?";
}

enum class Provenance { Raw, Engineered, Synthetic, Adversarial };

inline std::string provenance_to_string(Provenance p) {
    switch (p) {
        case Provenance::Raw: return "raw";
        case Provenance::Engineered: return "engineered";
        case Provenance::Synthetic: return "synthetic";
        case Provenance::Adversarial: return "adversarial";
    }
    return "?";
}

inline Provenance provenance_from_string(const std::string& s) {
    if (s == "raw") return Provenance::Raw;
    if (s == "engineered") return Provenance::Engineered;
    if (s == "synthetic") return Provenance::Synthetic;
    if (s == "adversarial") return Provenance::Adversarial;
    throw Error("unknown provenance tag: " + s);
}

struct ManifestColumn {
    std::string name;
    ColumnKind kind;
};

/// Declares a raw CSV layout: column names/kinds and the label-string map.
struct DatasetManifest {
    std::string name;
    std::vector<ManifestColumn> columns;
    std::map<std::string, int> label_map;  // label string -> 0 (benign) | 1 (attack)

    std::size_t column_count() const { return columns.size(); }

    std::size_t label_column() const {
        std::size_t idx = columns.size();
        std::size_t found = 0;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i].kind == ColumnKind::Label) {
                idx = i;
                ++found;
            }
        }
        if (found != 1)
            throw Error("manifest '" + name + "' must declare exactly one label column");
        return idx;
    }

    std::size_t feature_count() const {
        std::size_t n = 0;
        for (const auto& c : columns)
            if (c.kind != ColumnKind::Label && c.kind != ColumnKind::Drop) ++n;
        return n;
    }

    static DatasetManifest from_json(const nlohmann::json& j) {
        DatasetManifest m;
        m.name = j.at("name").get<std::string>();
        for (const auto& c : j.at("columns"))
            m.columns.push_back({c.at("name").get<std::string>(),
                                 column_kind_from_string(c.at("kind").get<std::string>())});
        for (auto it = j.at("label_map").begin(); it != j.at("label_map").end(); ++it) {
            int v = it.value().get<int>();
            if (v != 0 && v != 1) throw Error("label_map values must be 0 or 1");
            m.label_map[it.key()] = v;
        }
        m.label_column();  // validates
        return m;
    }

    static DatasetManifest from_json_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open manifest file: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

/// Shared category-name dictionaries so train/test loads agree on indices.
struct CategoryDictionary {
    // keyed by feature-column index
    std::map<std::size_t, std::vector<std::string>> names;
    std::map<std::size_t, std::map<std::string, std::size_t>> index;

    std::size_t intern(std::size_t col, const std::string& value) {
        auto& idx = index[col];
        auto it = idx.find(value);
        if (it != idx.end()) return it->second;
        std::size_t id = names[col].size();
        names[col].push_back(value);
        idx[value] = id;
        return id;
    }

    const std::string& name_of(std::size_t col, std::size_t id) const {
        return names.at(col).at(id);
    }
};

/// One raw CSV record prior to typing.
struct RawRecord {
    std::vector<std::string> values;
    std::size_t line_no = 1;
};

struct LabeledDataset {
    Matrix features;                       // N x D; categoricals stored as indices
    std::vector<int> labels;               // 0 benign, 1 attack
    std::vector<Provenance> provenance;    // per row
    std::string schema_id;
    std::vector<std::string> column_names;  // D entries
    std::vector<ColumnKind> column_kinds;   // D entries (Numeric/Categorical/Binary)
    CategoryDictionary categories;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }

    std::size_t count_label(int lbl) const {
        std::size_t n = 0;
        for (int l : labels)
            if (l == lbl) ++n;
        return n;
    }

    void validate() const {
        if (features.rows == 0) throw Error("dataset '" + schema_id + "' has no rows");
        if (!features.all_finite())
            throw Error("dataset '" + schema_id + "' contains non-finite values");
        if (labels.size() != features.rows) throw Error("label count mismatch");
        for (int l : labels)
            if (l != 0 && l != 1) throw Error("label outside {0,1}");
    }

    LabeledDataset select_rows(const std::vector<std::size_t>& idx) const {
        LabeledDataset out = *this;
        out.features = Matrix(idx.size(), features.cols);
        out.labels.clear();
        out.provenance.clear();
        for (std::size_t k = 0; k < idx.size(); ++k) {
            out.features.set_row(k, features.row_vec(idx[k]));
            out.labels.push_back(labels[idx[k]]);
            out.provenance.push_back(provenance[idx[k]]);
        }
        return out;
    }

    void append(const LabeledDataset& other) {
        if (other.dim() != dim()) throw Error("append: feature dimension mismatch");
        for (std::size_t r = 0; r < other.size(); ++r) {
            features.append_row(other.features.row_vec(r));
            labels.push_back(other.labels[r]);
            provenance.push_back(other.provenance[r]);
        }
    }
};

/// Map raw label strings to binary labels per the manifest. Unmapped -> error.
inline std::vector<int> binarize_labels(const std::vector<std::string>& raw,
                                        const DatasetManifest& manifest) {
    std::vector<int> out;
    out.reserve(raw.size());
    for (const auto& s : raw) {
        auto it = manifest.label_map.find(s);
        if (it == manifest.label_map.end())
            throw Error("unmapped label string '" + s + "' in dataset " + manifest.name);
        out.push_back(it->second);
    }
    return out;
}

inline bool parse_numeric_cell(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && std::isfinite(out);
}

/// Parse a raw benchmark CSV into a typed, binarized dataset. Categorical
/// cells are interned into `dict` (pass the same dictionary for train and
/// test so indices agree).
inline LabeledDataset load_dataset(const std::string& path, const DatasetManifest& manifest,
                                   CategoryDictionary* dict = nullptr) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset file: " + path);

    LabeledDataset ds;
    ds.schema_id = manifest.name;
    CategoryDictionary local;
    CategoryDictionary& cats = dict ? *dict : local;

    std::size_t label_col = manifest.label_column();
    for (std::size_t i = 0; i < manifest.columns.size(); ++i) {
        const auto& c = manifest.columns[i];
        if (c.kind == ColumnKind::Label || c.kind == ColumnKind::Drop) continue;
        ds.column_names.push_back(c.name);
        ds.column_kinds.push_back(c.kind);
    }
    ds.features = Matrix(0, ds.column_names.size());

    std::vector<std::string> raw_labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        RawRecord rec{split_csv_line(line), line_no};
        if (rec.values.size() != manifest.column_count())
            throw Error(manifest.name + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(manifest.column_count()) + " cells, got " +
                        std::to_string(rec.values.size()));
        std::vector<double> row;
        row.reserve(ds.features.cols);
        std::size_t feat_idx = 0;
        for (std::size_t i = 0; i < manifest.columns.size(); ++i) {
            const auto& c = manifest.columns[i];
            if (c.kind == ColumnKind::Drop) continue;
            if (i == label_col) {
                raw_labels.push_back(trim(rec.values[i]));
                continue;
            }
            if (c.kind == ColumnKind::Categorical) {
                row.push_back(static_cast<double>(cats.intern(feat_idx, trim(rec.values[i]))));
            } else {
                double v;
                if (!parse_numeric_cell(rec.values[i], v))
                    throw Error(manifest.name + ":" + std::to_string(line_no) +
                                ": unparseable numeric cell '" + rec.values[i] + "' in column " +
                                c.name);
                row.push_back(v);
            }
            ++feat_idx;
        }
        ds.features.append_row(row);
    }
    if (ds.features.rows == 0) throw Error(manifest.name + ": no rows in " + path);

    ds.labels = binarize_labels(raw_labels, manifest);
    ds.provenance.assign(ds.size(), Provenance::Raw);
    ds.categories = cats;
    ds.validate();
    return ds;
}

/// Deterministic stratified subsample of n rows, preserving class
/// proportions within one row. Selected rows keep their original order.
inline LabeledDataset stratified_subsample(const LabeledDataset& ds, std::size_t n,
                                           std::uint64_t seed) {
    if (n == 0 || n > ds.size())
        throw Error("stratified_subsample: n=" + std::to_string(n) + " out of range (N=" +
                    std::to_string(ds.size()) + ")");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < ds.size(); ++i)
        (ds.labels[i] == 1 ? pos : neg).push_back(i);

    double pos_frac = static_cast<double>(pos.size()) / static_cast<double>(ds.size());
    std::size_t n_pos = static_cast<std::size_t>(std::llround(pos_frac * static_cast<double>(n)));
    n_pos = std::min(n_pos, pos.size());
    std::size_t n_neg = n - n_pos;
    if (n_neg > neg.size()) {
        n_neg = neg.size();
        n_pos = n - n_neg;
    }

    Rng rng(Rng::substream(seed, 0x5ab5ULL));
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<std::size_t> chosen(pos.begin(), pos.begin() + n_pos);
    chosen.insert(chosen.end(), neg.begin(), neg.begin() + n_neg);
    std::sort(chosen.begin(), chosen.end());
    return ds.select_rows(chosen);
}

/// Write the dataset cache: one header line, categorical cells as names,
/// numerics in shortest-round-trip form, plus label and provenance columns.
inline void write_dataset_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write dataset file: " + path);
    for (std::size_t c = 0; c < ds.column_names.size(); ++c) out << ds.column_names[c] << ",";
    out << "label,provenance\n";
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < ds.dim(); ++c) {
            if (ds.column_kinds[c] == ColumnKind::Categorical)
                out << ds.categories.name_of(c, static_cast<std::size_t>(ds.features.at(r, c)));
            else
                out << format_double(ds.features.at(r, c));
            out << ",";
        }
        out << ds.labels[r] << "," << provenance_to_string(ds.provenance[r]) << "\n";
    }
}

/// Re-load a cache written by write_dataset_csv.
inline LabeledDataset read_dataset_csv(const std::string& path,
                                       const std::vector<ColumnKind>& kinds,
                                       const std::string& schema_id,
                                       CategoryDictionary* dict = nullptr) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset cache: " + path);
    std::string header;
    if (!std::getline(in, header)) throw Error("empty dataset cache: " + path);
    auto names = split_csv_line(header);
    if (names.size() != kinds.size() + 2)
        throw Error("dataset cache header width mismatch in " + path);

    LabeledDataset ds;
    ds.schema_id = schema_id;
    ds.column_names.assign(names.begin(), names.end() - 2);
    ds.column_kinds = kinds;
    ds.features = Matrix(0, kinds.size());
    CategoryDictionary local;
    CategoryDictionary& cats = dict ? *dict : local;

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != kinds.size() + 2)
            throw Error(path + ":" + std::to_string(line_no) + ": cell count mismatch");
        std::vector<double> row(kinds.size());
        for (std::size_t c = 0; c < kinds.size(); ++c) {
            if (kinds[c] == ColumnKind::Categorical) {
                row[c] = static_cast<double>(cats.intern(c, trim(cells[c])));
            } else if (!parse_numeric_cell(cells[c], row[c])) {
                throw Error(path + ":" + std::to_string(line_no) + ": bad numeric cell '" +
                            cells[c] + "'");
            }
        }
        ds.features.append_row(row);
        int lbl = std::stoi(cells[kinds.size()]);
        ds.labels.push_back(lbl);
        ds.provenance.push_back(provenance_from_string(trim(cells[kinds.size() + 1])));
    }
    ds.categories = cats;
    ds.validate();
    return ds;
}

}  // namespace nids

#endif  // NIDS_DATASET_HPP
