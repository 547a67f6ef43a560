#ifndef NIDS_MODELS_LINEAR_HPP
#define NIDS_MODELS_LINEAR_HPP

#include <cmath>
#include <numeric>
#include <vector>

#include "nids/models/classifier.hpp"

namespace nids {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(-z)) without overflow.
inline double softplus_neg(double z) {
    return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

namespace detail {

/// Regularized loss and gradient of a linear model over a batch.
/// Logistic: mean log-loss; hinge: mean max(0, 1 - y*z). Bias unregularized.
inline double linear_loss_grad(bool hinge, const std::vector<double>& w, double b,
                               const Matrix& X, const std::vector<int>& y,
                               const std::vector<std::size_t>& idx, double l2,
                               std::vector<double>& gw, double& gb) {
    std::size_t d = w.size();
    gw.assign(d, 0.0);
    gb = 0.0;
    double loss = 0.0;
    for (std::size_t k : idx) {
        const double* xr = X.row(k);
        double z = b + std::inner_product(w.begin(), w.end(), xr, 0.0);
        if (hinge) {
            double ypm = y[k] == 1 ? 1.0 : -1.0;
            double m = ypm * z;
            if (m < 1.0) {
                loss += 1.0 - m;
                for (std::size_t c = 0; c < d; ++c) gw[c] -= ypm * xr[c];
                gb -= ypm;
            }
        } else {
            double yd = static_cast<double>(y[k]);
            loss += yd * softplus_neg(z) + (1.0 - yd) * softplus_neg(-z);
            double e = sigmoid(z) - yd;
            for (std::size_t c = 0; c < d; ++c) gw[c] += e * xr[c];
            gb += e;
        }
    }
    double inv = 1.0 / static_cast<double>(idx.size());
    loss *= inv;
    gb *= inv;
    for (std::size_t c = 0; c < d; ++c) {
        gw[c] = gw[c] * inv + l2 * w[c];
        loss += 0.5 * l2 * w[c] * w[c];
    }
    return loss;
}

inline void clip_gradient(std::vector<double>& gw, double& gb, double cap) {
    if (cap <= 0.0) return;
    double norm2 = gb * gb;
    for (double g : gw) norm2 += g * g;
    double norm = std::sqrt(norm2);
    if (norm > cap) {
        double s = cap / norm;
        for (double& g : gw) g *= s;
        gb *= s;
    }
}

}  // namespace detail

/// Logistic regression and linear SVM share the trainer; the SVM maps its
/// margin through a logistic link fitted on training margins so both emit
/// calibrated P(attack).
class LinearModel : public TrainedModel {
public:
    ModelFamily fam = ModelFamily::LogisticRegression;
    std::vector<double> w;
    double b = 0.0;
    double platt_a = 1.0, platt_b = 0.0;  // SVM only
    int epochs_run = 0;
    double final_loss = 0.0;
    std::uint64_t seed = 0;

    ModelFamily family() const override { return fam; }
    std::size_t input_dim() const override { return w.size(); }

    double margin(const double* xr) const {
        return b + std::inner_product(w.begin(), w.end(), xr, 0.0);
    }

    std::vector<double> predict_proba(const Matrix& X) const override {
        check_dim(X);
        std::vector<double> out(X.rows);
        for (std::size_t r = 0; r < X.rows; ++r) {
            double z = margin(X.row(r));
            out[r] = fam == ModelFamily::LinearSvm ? sigmoid(platt_a * z + platt_b) : sigmoid(z);
        }
        return out;
    }

    nlohmann::json to_json() const override {
        return {{"family", family_to_string(fam)},
                {"w", w},
                {"b", b},
                {"platt_a", platt_a},
                {"platt_b", platt_b},
                {"epochs_run", epochs_run},
                {"final_loss", final_loss},
                {"seed", seed}};
    }

    static std::unique_ptr<LinearModel> from_json(const nlohmann::json& j) {
        auto m = std::make_unique<LinearModel>();
        m->fam = family_from_string(j.at("family").get<std::string>());
        m->w = j.at("w").get<std::vector<double>>();
        m->b = j.at("b").get<double>();
        m->platt_a = j.at("platt_a").get<double>();
        m->platt_b = j.at("platt_b").get<double>();
        m->epochs_run = j.value("epochs_run", 0);
        m->final_loss = j.value("final_loss", 0.0);
        m->seed = j.value("seed", std::uint64_t{0});
        return m;
    }
};

namespace detail {

/// Two-parameter logistic link on margins (Newton with step halving).
inline void fit_platt(const std::vector<double>& margins, const std::vector<int>& y, double& a,
                      double& b) {
    a = 1.0;
    b = 0.0;
    std::size_t n = margins.size();
    auto nll = [&](double aa, double bb) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = aa * margins[i] + bb;
            s += y[i] == 1 ? softplus_neg(z) : softplus_neg(-z);
        }
        return s / static_cast<double>(n);
    };
    double cur = nll(a, b);
    for (int it = 0; it < 100; ++it) {
        double ga = 0.0, gb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = a * margins[i] + b;
            double p = sigmoid(z);
            double e = p - (y[i] == 1 ? 1.0 : 0.0);
            double wgt = std::max(p * (1.0 - p), 1e-12);
            ga += e * margins[i];
            gb += e;
            haa += wgt * margins[i] * margins[i];
            hab += wgt * margins[i];
            hbb += wgt;
        }
        double inv = 1.0 / static_cast<double>(n);
        ga *= inv;
        gb *= inv;
        haa = haa * inv + 1e-9;
        hab *= inv;
        hbb = hbb * inv + 1e-9;
        double det = haa * hbb - hab * hab;
        if (std::abs(det) < 1e-15) break;
        double da = (hbb * ga - hab * gb) / det;
        double db = (haa * gb - hab * ga) / det;
        double step = 1.0;
        bool improved = false;
        for (int h = 0; h < 20; ++h) {
            double na = a - step * da, nb = b - step * db;
            double v = nll(na, nb);
            if (v < cur) {
                a = na;
                b = nb;
                cur = v;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved || std::sqrt(ga * ga + gb * gb) < 1e-10) break;
    }
}

}  // namespace detail

inline std::unique_ptr<LinearModel> fit_linear(const ClassifierSpec& spec, const Matrix& X,
                                               const std::vector<int>& y) {
    check_trainable(X, y);
    bool hinge = spec.family == ModelFamily::LinearSvm;
    auto model = std::make_unique<LinearModel>();
    model->fam = spec.family;
    model->seed = spec.seed;
    model->w.assign(X.cols, 0.0);

    Rng rng(Rng::substream(spec.seed, 0x11AEULL));
    std::vector<std::size_t> order(X.rows);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> gw;
    double gb = 0.0;
    double loss = 0.0;
    std::size_t bs = static_cast<std::size_t>(spec.hp.batch_size);

    for (int epoch = 0; epoch < spec.hp.epochs; ++epoch) {
        rng.shuffle(order);
        loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            std::vector<std::size_t> batch(
                order.begin() + start,
                order.begin() + std::min(order.size(), start + bs));
            double l = detail::linear_loss_grad(hinge, model->w, model->b, X, y, batch,
                                                spec.hp.l2, gw, gb);
            detail::clip_gradient(gw, gb, spec.hp.grad_clip);
            for (std::size_t c = 0; c < X.cols; ++c)
                model->w[c] -= spec.hp.learning_rate * gw[c];
            model->b -= spec.hp.learning_rate * gb;
            loss += l;
            ++batches;
        }
        loss /= static_cast<double>(batches);
        if (!std::isfinite(loss))
            throw Error(family_to_string(spec.family) +
                        ": training diverged (non-finite loss) at learning rate " +
                        format_double(spec.hp.learning_rate));
        model->epochs_run = epoch + 1;
    }
    model->final_loss = loss;

    if (hinge) {
        std::vector<double> margins(X.rows);
        for (std::size_t r = 0; r < X.rows; ++r) margins[r] = model->margin(X.row(r));
        detail::fit_platt(margins, y, model->platt_a, model->platt_b);
    }
    return model;
}

}  // namespace nids

#endif  // NIDS_MODELS_LINEAR_HPP
