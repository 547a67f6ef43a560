#ifndef NIDS_EVAL_HPP
#define NIDS_EVAL_HPP

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nids/common.hpp"

namespace nids {

/// Attack is the positive class.
struct ConfusionMatrix {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

inline ConfusionMatrix confusion(const std::vector<int>& labels,
                                 const std::vector<int>& predictions) {
    if (labels.size() != predictions.size())
        throw Error("confusion: length mismatch (" + std::to_string(labels.size()) + " vs " +
                    std::to_string(predictions.size()) + ")");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1)
            predictions[i] == 1 ? ++cm.tp : ++cm.fn;
        else
            predictions[i] == 1 ? ++cm.fp : ++cm.tn;
    }
    return cm;
}

/// A metric with an undefined marker for zero-denominator cases.
using Metric = std::optional<double>;

struct Metrics {
    Metric accuracy, precision, recall, fpr;
};

inline Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw Error("metrics: empty confusion matrix");
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    m.precision = cm.tp + cm.fp > 0
                      ? Metric(static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp))
                      : std::nullopt;
    m.recall = cm.tp + cm.fn > 0
                   ? Metric(static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn))
                   : std::nullopt;
    m.fpr = cm.fp + cm.tn > 0
                ? Metric(static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tn))
                : std::nullopt;
    return m;
}

/// One row of the stage table: metrics for one ensemble at one stage under
/// one test condition.
struct StageReport {
    std::string ensemble;   // "tc" | "dl"
    std::string stage;      // baseline | adv_balance | feat_eng | fine_tuned
    std::string condition;  // normal | adversarial
    ConfusionMatrix cm;
    Metrics m;
};

inline std::string metric_to_string(const Metric& m) {
    return m ? format_double(*m) : "NA";
}

inline std::string render_report_csv(const std::vector<StageReport>& reports) {
    std::ostringstream out;
    out << "ensemble,stage,condition,accuracy,precision,recall,fpr\n";
    for (const auto& r : reports)
        out << r.ensemble << "," << r.stage << "," << r.condition << ","
            << metric_to_string(r.m.accuracy) << "," << metric_to_string(r.m.precision) << ","
            << metric_to_string(r.m.recall) << "," << metric_to_string(r.m.fpr) << "\n";
    return out.str();
}

/// Aligned-column text table mirroring the per-stage result layout.
inline std::string render_report_table(const std::vector<StageReport>& reports) {
    auto fmt = [](const Metric& m) {
        if (!m) return std::string("   NA");
        std::ostringstream s;
        s << std::fixed << std::setprecision(3) << *m;
        return s.str();
    };
    std::ostringstream out;
    out << std::left << std::setw(10) << "ensemble" << std::setw(14) << "stage" << std::setw(13)
        << "condition" << std::right << std::setw(9) << "accuracy" << std::setw(10) << "precision"
        << std::setw(8) << "recall" << std::setw(7) << "fpr" << "\n";
    for (const auto& r : reports)
        out << std::left << std::setw(10) << r.ensemble << std::setw(14) << r.stage
            << std::setw(13) << r.condition << std::right << std::setw(9) << fmt(r.m.accuracy)
            << std::setw(10) << fmt(r.m.precision) << std::setw(8) << fmt(r.m.recall)
            << std::setw(7) << fmt(r.m.fpr) << "\n";
    return out.str();
}

inline std::vector<StageReport> parse_report_csv(std::istream& in) {
    std::vector<StageReport> out;
    std::string line;
    if (!std::getline(in, line)) return out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 7) throw Error("report csv: expected 7 columns");
        StageReport r;
        r.ensemble = cells[0];
        r.stage = cells[1];
        r.condition = cells[2];
        auto parse = [](const std::string& s) -> Metric {
            if (s == "NA") return std::nullopt;
            return std::strtod(s.c_str(), nullptr);
        };
        r.m.accuracy = parse(cells[3]);
        r.m.precision = parse(cells[4]);
        r.m.recall = parse(cells[5]);
        r.m.fpr = parse(cells[6]);
        out.push_back(r);
    }
    return out;
}

}  // namespace nids

#endif  // NIDS_EVAL_HPP
