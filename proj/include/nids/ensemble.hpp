#ifndef NIDS_ENSEMBLE_HPP
#define NIDS_ENSEMBLE_HPP

#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>

#include "nids/models.hpp"

namespace nids {

/// Black-box scoring interface. The attack sees nothing but probabilities.
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual std::vector<double> proba(const Matrix& X) const = 0;
};

/// Soft-voting ensemble: mean member probability, thresholded at tau
/// (ties classify as attack).
struct Ensemble {
    std::vector<std::shared_ptr<const TrainedModel>> members;
    double tau = 0.5;

    void validate() const {
        if (members.empty()) throw Error("ensemble needs at least one member");
        for (const auto& m : members)
            if (m->input_dim() != members.front()->input_dim())
                throw Error("ensemble members disagree on input dimension");
        if (tau <= 0.0 || tau >= 1.0) throw Error("ensemble tau must be in (0,1)");
    }

    std::vector<double> proba(const Matrix& X) const {
        std::vector<double> out(X.rows, 0.0);
        for (const auto& m : members) {
            auto p = m->predict_proba(X);
            for (std::size_t r = 0; r < X.rows; ++r) out[r] += p[r];
        }
        double inv = 1.0 / static_cast<double>(members.size());
        for (double& v : out) v *= inv;
        return out;
    }

    std::vector<int> classify(const Matrix& X) const {
        auto p = proba(X);
        std::vector<int> out(p.size());
        for (std::size_t r = 0; r < p.size(); ++r) out[r] = p[r] >= tau ? 1 : 0;
        return out;
    }
};

class EnsembleOracle : public Oracle {
public:
    explicit EnsembleOracle(const Ensemble& e) : e_(e) {}
    std::vector<double> proba(const Matrix& X) const override { return e_.proba(X); }

private:
    const Ensemble& e_;
};

/// Ensemble artifact: a manifest naming member model files plus tau.
inline void save_ensemble(const Ensemble& e, const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["tau"] = e.tau;
    manifest["members"] = nlohmann::json::array();
    for (std::size_t i = 0; i < e.members.size(); ++i) {
        std::string fname = name + "_member" + std::to_string(i) + ".json";
        save_model(*e.members[i], (fs::path(dir) / fname).string());
        manifest["members"].push_back(fname);
    }
    std::ofstream out((fs::path(dir) / (name + ".ensemble.json")).string());
    out << manifest.dump(2);
}

inline Ensemble load_ensemble(const std::string& dir, const std::string& name) {
    namespace fs = std::filesystem;
    std::ifstream in((fs::path(dir) / (name + ".ensemble.json")).string());
    if (!in) throw Error("cannot open ensemble manifest for " + name + " in " + dir);
    nlohmann::json manifest;
    in >> manifest;
    Ensemble e;
    e.tau = manifest.at("tau").get<double>();
    for (const auto& f : manifest.at("members"))
        e.members.push_back(load_model((fs::path(dir) / f.get<std::string>()).string()));
    e.validate();
    return e;
}

}  // namespace nids

#endif  // NIDS_ENSEMBLE_HPP
