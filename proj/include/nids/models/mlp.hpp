#ifndef NIDS_MODELS_MLP_HPP
#define NIDS_MODELS_MLP_HPP

#include <cmath>
#include <numeric>
#include <vector>

#include "nids/models/classifier.hpp"
#include "nids/models/linear.hpp"

namespace nids {

/// Fully connected ReLU network with a sigmoid output head, trained by
/// mini-batch SGD on cross-entropy.
class MlpModel : public TrainedModel {
public:
    struct Layer {
        Matrix w;                // fan_in x fan_out
        std::vector<double> b;   // fan_out
    };
    std::vector<Layer> layers;  // last layer has fan_out == 1
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    int epochs_run = 0;
    double final_loss = 0.0;

    ModelFamily family() const override { return ModelFamily::Mlp; }
    std::size_t input_dim() const override { return dim; }

    /// Forward pass for a batch; activations returned per layer when
    /// requested (training path).
    std::vector<double> forward(const Matrix& X, std::vector<Matrix>* acts = nullptr) const {
        Matrix cur = X;
        if (acts) acts->push_back(cur);
        for (std::size_t li = 0; li < layers.size(); ++li) {
            const Layer& L = layers[li];
            bool last = li + 1 == layers.size();
            Matrix next(cur.rows, L.b.size());
            for (std::size_t r = 0; r < cur.rows; ++r) {
                const double* xr = cur.row(r);
                double* nr = next.row(r);
                for (std::size_t j = 0; j < L.b.size(); ++j) nr[j] = L.b[j];
                for (std::size_t i = 0; i < cur.cols; ++i) {
                    double xv = xr[i];
                    if (xv == 0.0) continue;
                    const double* wr = L.w.row(i);
                    for (std::size_t j = 0; j < L.b.size(); ++j) nr[j] += xv * wr[j];
                }
                if (!last)
                    for (std::size_t j = 0; j < L.b.size(); ++j) nr[j] = std::max(0.0, nr[j]);
            }
            cur = std::move(next);
            if (acts) acts->push_back(cur);
        }
        std::vector<double> out(cur.rows);
        for (std::size_t r = 0; r < cur.rows; ++r) out[r] = sigmoid(cur.at(r, 0));
        return out;
    }

    std::vector<double> predict_proba(const Matrix& X) const override {
        check_dim(X);
        return forward(X);
    }

    nlohmann::json to_json() const override {
        nlohmann::json ls = nlohmann::json::array();
        for (const auto& L : layers)
            ls.push_back({{"rows", L.w.rows}, {"cols", L.w.cols}, {"w", L.w.data}, {"b", L.b}});
        return {{"family", "mlp"},     {"dim", dim},
                {"seed", seed},        {"epochs_run", epochs_run},
                {"final_loss", final_loss}, {"layers", ls}};
    }

    static std::unique_ptr<MlpModel> from_json(const nlohmann::json& j) {
        auto m = std::make_unique<MlpModel>();
        m->dim = j.at("dim").get<std::size_t>();
        m->seed = j.value("seed", std::uint64_t{0});
        m->epochs_run = j.value("epochs_run", 0);
        m->final_loss = j.value("final_loss", 0.0);
        for (const auto& l : j.at("layers")) {
            Layer L;
            L.w.rows = l.at("rows").get<std::size_t>();
            L.w.cols = l.at("cols").get<std::size_t>();
            L.w.data = l.at("w").get<std::vector<double>>();
            L.b = l.at("b").get<std::vector<double>>();
            m->layers.push_back(std::move(L));
        }
        return m;
    }
};

namespace detail {

/// Mean cross-entropy plus L2 over a batch; gradients accumulated into a
/// parallel layer structure.
inline double mlp_loss_grad(const MlpModel& model, const Matrix& X, const std::vector<int>& y,
                            const std::vector<std::size_t>& idx, double l2,
                            std::vector<MlpModel::Layer>& grads) {
    Matrix batch(idx.size(), X.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) batch.set_row(i, X.row_vec(idx[i]));

    std::vector<Matrix> acts;
    std::vector<double> probs = model.forward(batch, &acts);

    grads.clear();
    for (const auto& L : model.layers) {
        MlpModel::Layer g;
        g.w = Matrix(L.w.rows, L.w.cols);
        g.b.assign(L.b.size(), 0.0);
        grads.push_back(std::move(g));
    }

    double inv = 1.0 / static_cast<double>(idx.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        double z = acts.back().at(i, 0);
        loss += y[idx[i]] == 1 ? softplus_neg(z) : softplus_neg(-z);
    }
    loss *= inv;

    // delta for the output layer: (p - y)/n
    Matrix delta(idx.size(), 1);
    for (std::size_t i = 0; i < idx.size(); ++i)
        delta.at(i, 0) = (probs[i] - (y[idx[i]] == 1 ? 1.0 : 0.0)) * inv;

    for (int li = static_cast<int>(model.layers.size()) - 1; li >= 0; --li) {
        const auto& L = model.layers[li];
        const Matrix& input = acts[li];
        auto& G = grads[li];
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* dr = delta.row(r);
            const double* xr = input.row(r);
            for (std::size_t j = 0; j < L.b.size(); ++j) G.b[j] += dr[j];
            for (std::size_t i = 0; i < input.cols; ++i) {
                if (xr[i] == 0.0) continue;
                double* gr = G.w.row(i);
                for (std::size_t j = 0; j < L.b.size(); ++j) gr[j] += xr[i] * dr[j];
            }
        }
        if (li > 0) {
            Matrix prev(delta.rows, input.cols);
            for (std::size_t r = 0; r < delta.rows; ++r) {
                const double* dr = delta.row(r);
                const double* xr = input.row(r);
                double* pr = prev.row(r);
                for (std::size_t i = 0; i < input.cols; ++i) {
                    if (xr[i] <= 0.0) {  // ReLU gate
                        pr[i] = 0.0;
                        continue;
                    }
                    const double* wr = L.w.row(i);
                    double s = 0.0;
                    for (std::size_t j = 0; j < L.b.size(); ++j) s += wr[j] * dr[j];
                    pr[i] = s;
                }
            }
            delta = std::move(prev);
        }
    }

    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const auto& L = model.layers[li];
        auto& G = grads[li];
        for (std::size_t k = 0; k < L.w.data.size(); ++k) {
            G.w.data[k] += l2 * L.w.data[k];
            loss += 0.5 * l2 * L.w.data[k] * L.w.data[k];
        }
    }
    return loss;
}

inline void clip_mlp_gradient(std::vector<MlpModel::Layer>& grads, double cap) {
    if (cap <= 0.0) return;
    double norm2 = 0.0;
    for (const auto& g : grads) {
        for (double v : g.w.data) norm2 += v * v;
        for (double v : g.b) norm2 += v * v;
    }
    double norm = std::sqrt(norm2);
    if (norm > cap) {
        double s = cap / norm;
        for (auto& g : grads) {
            for (double& v : g.w.data) v *= s;
            for (double& v : g.b) v *= s;
        }
    }
}

}  // namespace detail

inline std::unique_ptr<MlpModel> fit_mlp(const ClassifierSpec& spec, const Matrix& X,
                                         const std::vector<int>& y) {
    check_trainable(X, y);
    auto model = std::make_unique<MlpModel>();
    model->dim = X.cols;
    model->seed = spec.seed;

    Rng init_rng(Rng::substream(spec.seed, 0x317AULL));
    std::vector<std::size_t> widths;
    widths.push_back(X.cols);
    for (int w : spec.hp.hidden) widths.push_back(static_cast<std::size_t>(w));
    widths.push_back(1);
    for (std::size_t li = 0; li + 1 < widths.size(); ++li) {
        MlpModel::Layer L;
        L.w = Matrix(widths[li], widths[li + 1]);
        L.b.assign(widths[li + 1], 0.0);
        double scale = std::sqrt(2.0 / static_cast<double>(widths[li]));  // He init
        for (double& v : L.w.data) v = init_rng.gaussian() * scale;
        model->layers.push_back(std::move(L));
    }

    Rng rng(Rng::substream(spec.seed, 0x317BULL));
    std::vector<std::size_t> order(X.rows);
    std::iota(order.begin(), order.end(), 0);
    std::vector<MlpModel::Layer> grads;
    std::size_t bs = static_cast<std::size_t>(spec.hp.batch_size);
    double loss = 0.0;

    for (int epoch = 0; epoch < spec.hp.epochs; ++epoch) {
        rng.shuffle(order);
        loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            std::vector<std::size_t> batch(
                order.begin() + start, order.begin() + std::min(order.size(), start + bs));
            double l = detail::mlp_loss_grad(*model, X, y, batch, spec.hp.l2, grads);
            detail::clip_mlp_gradient(grads, spec.hp.grad_clip);
            for (std::size_t li = 0; li < model->layers.size(); ++li) {
                auto& L = model->layers[li];
                const auto& G = grads[li];
                for (std::size_t k = 0; k < L.w.data.size(); ++k)
                    L.w.data[k] -= spec.hp.learning_rate * G.w.data[k];
                for (std::size_t k = 0; k < L.b.size(); ++k)
                    L.b[k] -= spec.hp.learning_rate * G.b[k];
            }
            loss += l;
            ++batches;
        }
        loss /= static_cast<double>(batches);
        if (!std::isfinite(loss))
            throw Error("mlp: training diverged (non-finite loss) at learning rate " +
                        format_double(spec.hp.learning_rate));
        model->epochs_run = epoch + 1;
    }
    model->final_loss = loss;
    return model;
}

}  // namespace nids

#endif  // NIDS_MODELS_MLP_HPP
