#ifndef NIDS_MODELS_HPP
#define NIDS_MODELS_HPP

#include <fstream>
#include <functional>
#include <memory>
#include <numeric>

#include "nids/models/classifier.hpp"
#include "nids/models/linear.hpp"
#include "nids/models/mlp.hpp"
#include "nids/models/tree.hpp"

namespace nids {

inline std::unique_ptr<TrainedModel> fit(const ClassifierSpec& spec, const Matrix& X,
                                         const std::vector<int>& y) {
    spec.validate();
    switch (spec.family) {
        case ModelFamily::LogisticRegression:
        case ModelFamily::LinearSvm:
            return fit_linear(spec, X, y);
        case ModelFamily::DecisionTree:
            return fit_tree(spec, X, y);
        case ModelFamily::RandomForest:
            return fit_forest(spec, X, y);
        case ModelFamily::Mlp:
            return fit_mlp(spec, X, y);
    }
    throw Error("fit: unknown family");
}

inline std::unique_ptr<TrainedModel> fit(const ClassifierSpec& spec, const LabeledDataset& ds) {
    return fit(spec, ds.features, ds.labels);
}

inline std::unique_ptr<TrainedModel> model_from_json(const nlohmann::json& j) {
    switch (family_from_string(j.at("family").get<std::string>())) {
        case ModelFamily::LogisticRegression:
        case ModelFamily::LinearSvm:
            return LinearModel::from_json(j);
        case ModelFamily::DecisionTree:
            return DecisionTreeModel::from_json(j);
        case ModelFamily::RandomForest:
            return RandomForestModel::from_json(j);
        case ModelFamily::Mlp:
            return MlpModel::from_json(j);
    }
    throw Error("model_from_json: unknown family");
}

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    out << m.to_json().dump();
}

inline std::unique_ptr<TrainedModel> load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

// ---------------------------------------------------------------------------
// Gradient verification (finite differences)
// ---------------------------------------------------------------------------

namespace detail {

/// Flat-parameter loss adapters for the differentiable trainers.
struct FlatLoss {
    std::function<double(const std::vector<double>&, std::vector<double>*)> eval;
    std::size_t n_params = 0;
};

inline FlatLoss make_flat_loss(const ClassifierSpec& spec, const Matrix& X,
                               const std::vector<int>& y) {
    std::vector<std::size_t> idx(X.rows);
    std::iota(idx.begin(), idx.end(), 0);
    if (spec.family == ModelFamily::LogisticRegression ||
        spec.family == ModelFamily::LinearSvm) {
        bool hinge = spec.family == ModelFamily::LinearSvm;
        double l2 = spec.hp.l2;
        FlatLoss fl;
        fl.n_params = X.cols + 1;
        fl.eval = [hinge, l2, &X, &y, idx](const std::vector<double>& p,
                                           std::vector<double>* grad) {
            std::vector<double> w(p.begin(), p.end() - 1);
            double b = p.back();
            std::vector<double> gw;
            double gb = 0.0;
            double loss = linear_loss_grad(hinge, w, b, X, y, idx, l2, gw, gb);
            if (grad) {
                *grad = gw;
                grad->push_back(gb);
            }
            return loss;
        };
        return fl;
    }
    if (spec.family == ModelFamily::Mlp) {
        // build a seeded reference model to define the architecture
        auto shell = std::make_shared<MlpModel>();
        shell->dim = X.cols;
        Rng init_rng(Rng::substream(spec.seed, 0x317AULL));
        std::vector<std::size_t> widths;
        widths.push_back(X.cols);
        for (int w : spec.hp.hidden) widths.push_back(static_cast<std::size_t>(w));
        widths.push_back(1);
        std::size_t n_params = 0;
        for (std::size_t li = 0; li + 1 < widths.size(); ++li) {
            MlpModel::Layer L;
            L.w = Matrix(widths[li], widths[li + 1]);
            L.b.assign(widths[li + 1], 0.0);
            double scale = std::sqrt(2.0 / static_cast<double>(widths[li]));
            for (double& v : L.w.data) v = init_rng.gaussian() * scale;
            n_params += L.w.data.size() + L.b.size();
            shell->layers.push_back(std::move(L));
        }
        double l2 = spec.hp.l2;
        FlatLoss fl;
        fl.n_params = n_params;
        fl.eval = [shell, l2, &X, &y, idx](const std::vector<double>& p,
                                           std::vector<double>* grad) {
            std::size_t k = 0;
            for (auto& L : shell->layers) {
                for (double& v : L.w.data) v = p[k++];
                for (double& v : L.b) v = p[k++];
            }
            std::vector<MlpModel::Layer> grads;
            double loss = mlp_loss_grad(*shell, X, y, idx, l2, grads);
            if (grad) {
                grad->clear();
                grad->reserve(p.size());
                for (const auto& G : grads) {
                    grad->insert(grad->end(), G.w.data.begin(), G.w.data.end());
                    grad->insert(grad->end(), G.b.begin(), G.b.end());
                }
            }
            return loss;
        };
        return fl;
    }
    throw Error("gradient_check supports logistic_regression, linear_svm, and mlp only");
}

}  // namespace detail

/// Compare the analytic batch gradient against central finite differences
/// (h = 1e-5) at a seeded random parameter point; returns the max relative
/// error. For the hinge loss, rows within 1e-3 of the margin kink are
/// dropped first.
inline double gradient_check(const ClassifierSpec& spec, const Matrix& X,
                             const std::vector<int>& y) {
    Matrix Xc = X;
    std::vector<int> yc = y;
    Rng rng(Rng::substream(spec.seed, 0x6badULL));

    auto fl = detail::make_flat_loss(spec, Xc, yc);
    std::vector<double> p(fl.n_params);
    for (double& v : p) v = 0.5 * rng.gaussian();

    if (spec.family == ModelFamily::LinearSvm) {
        // exclude rows at the hinge kink for this parameter point
        std::vector<double> w(p.begin(), p.end() - 1);
        double b = p.back();
        Matrix keep(0, X.cols);
        std::vector<int> keep_y;
        for (std::size_t r = 0; r < Xc.rows; ++r) {
            double ypm = yc[r] == 1 ? 1.0 : -1.0;
            double z = b;
            for (std::size_t c = 0; c < Xc.cols; ++c) z += w[c] * Xc.at(r, c);
            if (std::abs(ypm * z - 1.0) > 1e-3) {
                keep.append_row(Xc.row_vec(r));
                keep_y.push_back(yc[r]);
            }
        }
        Xc = std::move(keep);
        yc = std::move(keep_y);
        if (Xc.rows == 0) return 0.0;
        fl = detail::make_flat_loss(spec, Xc, yc);
    }

    std::vector<double> analytic;
    fl.eval(p, &analytic);

    const double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::vector<double> pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        double numeric = (fl.eval(pp, nullptr) - fl.eval(pm, nullptr)) / (2.0 * h);
        double denom = std::max({1e-6, std::abs(numeric), std::abs(analytic[i])});
        max_rel = std::max(max_rel, std::abs(numeric - analytic[i]) / denom);
    }
    return max_rel;
}

}  // namespace nids

#endif  // NIDS_MODELS_HPP
