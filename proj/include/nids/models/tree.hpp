#ifndef NIDS_MODELS_TREE_HPP
#define NIDS_MODELS_TREE_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nids/models/classifier.hpp"

namespace nids {

/// CART with Gini impurity. Leaves score by class frequency. Ties in split
/// search break toward the lower feature index and lower threshold so
/// training is fully deterministic.
class DecisionTreeModel : public TrainedModel {
public:
    struct Node {
        int feature = -1;  // -1 for leaves
        double threshold = 0.0;
        int left = -1, right = -1;
        std::uint64_t n_pos = 0, n_total = 0;
    };
    std::vector<Node> nodes;
    std::size_t dim = 0;
    std::uint64_t seed = 0;

    ModelFamily family() const override { return ModelFamily::DecisionTree; }
    std::size_t input_dim() const override { return dim; }

    double predict_one(const double* xr) const {
        int n = 0;
        while (nodes[n].feature >= 0)
            n = xr[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
        return static_cast<double>(nodes[n].n_pos) / static_cast<double>(nodes[n].n_total);
    }

    std::vector<double> predict_proba(const Matrix& X) const override {
        check_dim(X);
        std::vector<double> out(X.rows);
        for (std::size_t r = 0; r < X.rows; ++r) out[r] = predict_one(X.row(r));
        return out;
    }

    nlohmann::json to_json() const override {
        nlohmann::json ns = nlohmann::json::array();
        for (const auto& n : nodes)
            ns.push_back({n.feature, n.threshold, n.left, n.right, n.n_pos, n.n_total});
        return {{"family", "decision_tree"}, {"dim", dim}, {"seed", seed}, {"nodes", ns}};
    }

    static std::unique_ptr<DecisionTreeModel> from_json(const nlohmann::json& j) {
        auto m = std::make_unique<DecisionTreeModel>();
        m->dim = j.at("dim").get<std::size_t>();
        m->seed = j.value("seed", std::uint64_t{0});
        for (const auto& n : j.at("nodes")) {
            Node nd;
            nd.feature = n[0].get<int>();
            nd.threshold = n[1].get<double>();
            nd.left = n[2].get<int>();
            nd.right = n[3].get<int>();
            nd.n_pos = n[4].get<std::uint64_t>();
            nd.n_total = n[5].get<std::uint64_t>();
            m->nodes.push_back(nd);
        }
        return m;
    }
};

namespace detail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

inline double gini(std::uint64_t pos, std::uint64_t total) {
    if (total == 0) return 0.0;
    double p = static_cast<double>(pos) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
}

/// Best Gini split over the given rows restricted to candidate features.
inline SplitChoice best_split(const Matrix& X, const std::vector<int>& y,
                              const std::vector<std::size_t>& rows,
                              const std::vector<std::size_t>& feats, int min_leaf) {
    SplitChoice best;
    std::uint64_t n = rows.size();
    std::uint64_t total_pos = 0;
    for (std::size_t r : rows) total_pos += y[r] == 1;
    double parent = gini(total_pos, n);

    std::vector<std::pair<double, int>> vals(rows.size());
    for (std::size_t f : feats) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            vals[i] = {X.at(rows[i], f), y[rows[i]]};
        std::sort(vals.begin(), vals.end());
        std::uint64_t lp = 0, lt = 0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            lp += vals[i].second == 1;
            ++lt;
            if (vals[i].first == vals[i + 1].first) continue;
            if (lt < static_cast<std::uint64_t>(min_leaf) ||
                n - lt < static_cast<std::uint64_t>(min_leaf))
                continue;
            double wl = static_cast<double>(lt) / static_cast<double>(n);
            double g = parent - wl * gini(lp, lt) - (1.0 - wl) * gini(total_pos - lp, n - lt);
            double thr = 0.5 * (vals[i].first + vals[i + 1].first);
            if (g > best.gain + 1e-12 ||
                (best.found && std::abs(g - best.gain) <= 1e-12 &&
                 (static_cast<int>(f) < best.feature ||
                  (static_cast<int>(f) == best.feature && thr < best.threshold)))) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = thr;
                best.gain = g;
            }
        }
    }
    if (best.gain <= 1e-12) best.found = false;
    return best;
}

inline int grow_tree(DecisionTreeModel& tree, const Matrix& X, const std::vector<int>& y,
                     std::vector<std::size_t>& rows, int depth, const Hyperparams& hp,
                     bool subsample_features, Rng* rng) {
    DecisionTreeModel::Node node;
    node.n_total = rows.size();
    for (std::size_t r : rows) node.n_pos += y[r] == 1;

    bool pure = node.n_pos == 0 || node.n_pos == node.n_total;
    if (!pure && depth < hp.max_depth &&
        rows.size() >= 2 * static_cast<std::size_t>(hp.min_leaf)) {
        std::vector<std::size_t> feats(X.cols);
        std::iota(feats.begin(), feats.end(), 0);
        if (subsample_features && rng) {
            std::size_t k = static_cast<std::size_t>(
                std::ceil(std::sqrt(static_cast<double>(X.cols))));
            rng->shuffle(feats);
            feats.resize(std::min(k, feats.size()));
            std::sort(feats.begin(), feats.end());
        }
        auto split = best_split(X, y, rows, feats, hp.min_leaf);
        if (split.found) {
            std::vector<std::size_t> lrows, rrows;
            for (std::size_t r : rows)
                (X.at(r, split.feature) <= split.threshold ? lrows : rrows).push_back(r);
            node.feature = split.feature;
            node.threshold = split.threshold;
            int self = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(node);
            rows.clear();
            rows.shrink_to_fit();
            int left = grow_tree(tree, X, y, lrows, depth + 1, hp, subsample_features, rng);
            int right = grow_tree(tree, X, y, rrows, depth + 1, hp, subsample_features, rng);
            tree.nodes[self].left = left;
            tree.nodes[self].right = right;
            return self;
        }
    }
    int self = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    return self;
}

}  // namespace detail

inline std::unique_ptr<DecisionTreeModel> fit_tree(const ClassifierSpec& spec, const Matrix& X,
                                                   const std::vector<int>& y,
                                                   bool subsample_features = false,
                                                   Rng* rng = nullptr) {
    check_trainable(X, y);
    auto tree = std::make_unique<DecisionTreeModel>();
    tree->dim = X.cols;
    tree->seed = spec.seed;
    std::vector<std::size_t> rows(X.rows);
    std::iota(rows.begin(), rows.end(), 0);
    detail::grow_tree(*tree, X, y, rows, 0, spec.hp, subsample_features, rng);
    return tree;
}

/// Bagged CART forest with sqrt(D) feature subsampling per split.
class RandomForestModel : public TrainedModel {
public:
    std::vector<std::unique_ptr<DecisionTreeModel>> trees;
    std::size_t dim = 0;
    std::uint64_t seed = 0;

    ModelFamily family() const override { return ModelFamily::RandomForest; }
    std::size_t input_dim() const override { return dim; }

    std::vector<double> predict_proba(const Matrix& X) const override {
        check_dim(X);
        std::vector<double> out(X.rows, 0.0);
        for (const auto& t : trees) {
            for (std::size_t r = 0; r < X.rows; ++r) out[r] += t->predict_one(X.row(r));
        }
        double inv = 1.0 / static_cast<double>(trees.size());
        for (double& v : out) v *= inv;
        return out;
    }

    nlohmann::json to_json() const override {
        nlohmann::json ts = nlohmann::json::array();
        for (const auto& t : trees) ts.push_back(t->to_json());
        return {{"family", "random_forest"}, {"dim", dim}, {"seed", seed}, {"trees", ts}};
    }

    static std::unique_ptr<RandomForestModel> from_json(const nlohmann::json& j) {
        auto m = std::make_unique<RandomForestModel>();
        m->dim = j.at("dim").get<std::size_t>();
        m->seed = j.value("seed", std::uint64_t{0});
        for (const auto& t : j.at("trees")) m->trees.push_back(DecisionTreeModel::from_json(t));
        return m;
    }
};

inline std::unique_ptr<RandomForestModel> fit_forest(const ClassifierSpec& spec, const Matrix& X,
                                                     const std::vector<int>& y) {
    check_trainable(X, y);
    auto forest = std::make_unique<RandomForestModel>();
    forest->dim = X.cols;
    forest->seed = spec.seed;
    for (int t = 0; t < spec.hp.n_trees; ++t) {
        Rng rng(Rng::substream(spec.seed, 0xF0DE57ULL + static_cast<std::uint64_t>(t)));
        Matrix bx;
        std::vector<int> by;
        const Matrix* px = &X;
        const std::vector<int>* py = &y;
        if (spec.hp.bootstrap) {
            bx = Matrix(0, X.cols);
            by.clear();
            bool pos = false, neg = false;
            for (std::size_t r = 0; r < X.rows; ++r) {
                std::size_t k = rng.uniform_index(X.rows);
                bx.append_row(X.row_vec(k));
                by.push_back(y[k]);
                (y[k] == 1 ? pos : neg) = true;
            }
            if (!pos || !neg) {  // degenerate bootstrap; fall back to the full sample
                px = &X;
                py = &y;
            } else {
                px = &bx;
                py = &by;
            }
        }
        ClassifierSpec tree_spec = spec;
        tree_spec.family = ModelFamily::DecisionTree;
        forest->trees.push_back(
            fit_tree(tree_spec, *px, *py, spec.hp.feature_subsample, &rng));
        forest->trees.back()->dim = X.cols;
    }
    return forest;
}

}  // namespace nids

#endif  // NIDS_MODELS_TREE_HPP
