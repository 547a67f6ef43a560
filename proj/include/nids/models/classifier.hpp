#ifndef NIDS_MODELS_CLASSIFIER_HPP
#define NIDS_MODELS_CLASSIFIER_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nids/common.hpp"
#include "nids/dataset.hpp"

namespace nids {

enum class ModelFamily { LogisticRegression, LinearSvm, DecisionTree, RandomForest, Mlp };

inline std::string family_to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::LogisticRegression: return "logistic_regression";
        case ModelFamily::LinearSvm: return "linear_svm";
        case ModelFamily::DecisionTree: return "decision_tree";
        case ModelFamily::RandomForest: return "random_forest";
        case ModelFamily::Mlp: return "mlp";
    }
    return "?";
}

inline ModelFamily family_from_string(const std::string& s) {
    if (s == "logistic_regression") return ModelFamily::LogisticRegression;
    if (s == "linear_svm") return ModelFamily::LinearSvm;
    if (s == "decision_tree") return ModelFamily::DecisionTree;
    if (s == "random_forest") return ModelFamily::RandomForest;
    if (s == "mlp") return ModelFamily::Mlp;
    throw Error("unknown model family: " + s);
}

struct Hyperparams {
    double learning_rate = 0.1;
    double l2 = 1e-4;
    int epochs = 300;
    int batch_size = 128;
    double grad_clip = 10.0;  // cap on the batch gradient L2 norm

    int max_depth = 12;
    int min_leaf = 5;

    int n_trees = 50;
    bool bootstrap = true;
    bool feature_subsample = true;  // sqrt(D) features per split

    std::vector<int> hidden = {64, 32};

    nlohmann::json to_json() const {
        return {{"learning_rate", learning_rate}, {"l2", l2},
                {"epochs", epochs},               {"batch_size", batch_size},
                {"grad_clip", grad_clip},         {"max_depth", max_depth},
                {"min_leaf", min_leaf},           {"n_trees", n_trees},
                {"bootstrap", bootstrap},         {"feature_subsample", feature_subsample},
                {"hidden", hidden}};
    }

    static Hyperparams from_json(const nlohmann::json& j) {
        Hyperparams h;
        h.learning_rate = j.value("learning_rate", h.learning_rate);
        h.l2 = j.value("l2", h.l2);
        h.epochs = j.value("epochs", h.epochs);
        h.batch_size = j.value("batch_size", h.batch_size);
        h.grad_clip = j.value("grad_clip", h.grad_clip);
        h.max_depth = j.value("max_depth", h.max_depth);
        h.min_leaf = j.value("min_leaf", h.min_leaf);
        h.n_trees = j.value("n_trees", h.n_trees);
        h.bootstrap = j.value("bootstrap", h.bootstrap);
        h.feature_subsample = j.value("feature_subsample", h.feature_subsample);
        h.hidden = j.value("hidden", h.hidden);
        return h;
    }
};

struct ClassifierSpec {
    ModelFamily family = ModelFamily::LogisticRegression;
    Hyperparams hp;
    std::uint64_t seed = 0;

    void validate() const {
        if (hp.learning_rate <= 0.0) throw Error("learning_rate must be > 0");
        if (hp.l2 < 0.0) throw Error("l2 must be >= 0");
        if (hp.epochs < 1 || hp.batch_size < 1) throw Error("epochs/batch_size must be >= 1");
        if (hp.max_depth < 1 || hp.min_leaf < 1) throw Error("max_depth/min_leaf must be >= 1");
        if (hp.n_trees < 1) throw Error("n_trees must be >= 1");
        for (int w : hp.hidden)
            if (w < 1) throw Error("hidden layer width must be >= 1");
    }

    /// Conventional defaults per family.
    static ClassifierSpec defaults(ModelFamily family, std::uint64_t seed = 0) {
        ClassifierSpec s;
        s.family = family;
        s.seed = seed;
        switch (family) {
            case ModelFamily::LogisticRegression:
                s.hp.learning_rate = 0.1;
                s.hp.l2 = 1e-4;
                s.hp.epochs = 300;
                break;
            case ModelFamily::LinearSvm:
                s.hp.learning_rate = 0.05;
                s.hp.l2 = 1e-3;
                s.hp.epochs = 300;
                break;
            case ModelFamily::DecisionTree:
            case ModelFamily::RandomForest:
                break;
            case ModelFamily::Mlp:
                s.hp.learning_rate = 0.01;
                s.hp.epochs = 250;
                s.hp.hidden = {64, 32};
                break;
        }
        return s;
    }
};

/// Shared contract: every trained model scores P(attack) in [0,1] per row.
class TrainedModel {
public:
    virtual ~TrainedModel() = default;
    virtual ModelFamily family() const = 0;
    virtual std::size_t input_dim() const = 0;
    virtual std::vector<double> predict_proba(const Matrix& X) const = 0;
    virtual nlohmann::json to_json() const = 0;

protected:
    void check_dim(const Matrix& X) const {
        if (X.cols != input_dim())
            throw Error(family_to_string(family()) + ": input dimension " +
                        std::to_string(X.cols) + " does not match training dimension " +
                        std::to_string(input_dim()));
    }
};

inline void check_trainable(const Matrix& X, const std::vector<int>& y) {
    if (X.rows == 0) throw Error("fit: empty training set");
    if (X.rows != y.size()) throw Error("fit: label count mismatch");
    if (!X.all_finite()) throw Error("fit: non-finite feature values");
    bool pos = false, neg = false;
    for (int l : y) (l == 1 ? pos : neg) = true;
    if (!pos || !neg) throw Error("fit: training set contains a single class");
}

}  // namespace nids

#endif  // NIDS_MODELS_CLASSIFIER_HPP
