#ifndef NIDS_EXPERIMENT_HPP
#define NIDS_EXPERIMENT_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nids/defense.hpp"
#include "nids/synth.hpp"

namespace nids {

/// Experiment description loaded from JSON. The seed is mandatory: no
/// wall-clock fallback, ever.
struct ExperimentConfig {
    std::string dataset_name;
    std::string manifest_path;
    std::string schema_path;
    std::string train_path;
    std::string test_path;
    std::size_t subsample_train = 0;  // 0 = use everything
    std::size_t subsample_test = 0;
    AttackConfig attack;
    std::vector<Stage> stages;
    MonteCarloConfig monte_carlo;
    SmoteConfig smote;
    FineTuneConfig fine_tune;
    double adv_train_fraction = 0.2;
    bool surrogate_attack = false;
    std::string out_dir = "out";
    std::uint64_t seed = 0;

    void validate() const {
        namespace fs = std::filesystem;
        if (dataset_name.empty()) throw Error("config: dataset name is required");
        for (const auto& [what, p] :
             {std::pair<const char*, const std::string&>{"manifest", manifest_path},
              {"schema", schema_path},
              {"train csv", train_path},
              {"test csv", test_path}}) {
            if (p.empty()) throw Error(std::string("config: ") + what + " path is required");
            if (!fs::exists(p)) throw Error(std::string("config: ") + what + " not found: " + p);
        }
        if (stages.empty()) throw Error("config: at least one stage is required");
        attack.validate();
        StageConfig sc = stage_config(stages.front());
        sc.validate();
    }

    StageConfig stage_config(Stage s) const {
        StageConfig sc;
        sc.stage = s;
        sc.monte_carlo = monte_carlo;
        sc.smote = smote;
        sc.fine_tune = fine_tune;
        sc.attack = attack;
        sc.adv_train_fraction = adv_train_fraction;
        sc.surrogate_attack = surrogate_attack;
        sc.seed = seed;
        return sc;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["dataset"] = {{"name", dataset_name},
                        {"manifest", manifest_path},
                        {"schema", schema_path},
                        {"train", train_path},
                        {"test", test_path}};
        j["subsample"] = {{"train", subsample_train}, {"test", subsample_test}};
        j["attack"] = {{"population_size", attack.population_size},
                       {"max_generations", attack.max_generations},
                       {"crossover_prob", attack.crossover_prob},
                       {"mutation_rate", attack.mutation_rate},
                       {"elitism_fraction", attack.elitism_fraction},
                       {"tournament_size", attack.tournament_size},
                       {"lambda", attack.lambda},
                       {"convergence_window", attack.convergence_window},
                       {"convergence_min_improvement", attack.convergence_min_improvement},
                       {"tau", attack.tau}};
        j["stages"] = nlohmann::json::array();
        for (Stage s : stages) j["stages"].push_back(stage_to_string(s));
        j["defense"] = {{"monte_carlo_samples", monte_carlo.samples},
                        {"monte_carlo_sigma", monte_carlo.sigma_fraction},
                        {"smote_k", smote.k_neighbors},
                        {"smote_ratio", smote.target_ratio},
                        {"fine_tune_budget", fine_tune.budget},
                        {"validation_fraction", fine_tune.validation_fraction},
                        {"adv_train_fraction", adv_train_fraction},
                        {"surrogate_attack", surrogate_attack}};
        j["out"] = out_dir;
        j["seed"] = seed;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        const auto& d = j.at("dataset");
        c.dataset_name = d.at("name").get<std::string>();
        c.manifest_path = d.at("manifest").get<std::string>();
        c.schema_path = d.at("schema").get<std::string>();
        c.train_path = d.at("train").get<std::string>();
        c.test_path = d.at("test").get<std::string>();
        if (j.contains("subsample")) {
            c.subsample_train = j["subsample"].value("train", std::size_t{0});
            c.subsample_test = j["subsample"].value("test", std::size_t{0});
        }
        if (j.contains("attack")) {
            const auto& a = j["attack"];
            c.attack.population_size = a.value("population_size", c.attack.population_size);
            c.attack.max_generations = a.value("max_generations", c.attack.max_generations);
            c.attack.crossover_prob = a.value("crossover_prob", c.attack.crossover_prob);
            c.attack.mutation_rate = a.value("mutation_rate", c.attack.mutation_rate);
            c.attack.elitism_fraction = a.value("elitism_fraction", c.attack.elitism_fraction);
            c.attack.tournament_size = a.value("tournament_size", c.attack.tournament_size);
            c.attack.lambda = a.value("lambda", c.attack.lambda);
            c.attack.convergence_window =
                a.value("convergence_window", c.attack.convergence_window);
            c.attack.convergence_min_improvement =
                a.value("convergence_min_improvement", c.attack.convergence_min_improvement);
            c.attack.tau = a.value("tau", c.attack.tau);
        }
        if (j.contains("stages"))
            for (const auto& s : j["stages"]) c.stages.push_back(stage_from_string(s));
        else
            c.stages = {Stage::Baseline, Stage::AdvBalance, Stage::FeatEng, Stage::FineTuned};
        if (j.contains("defense")) {
            const auto& f = j["defense"];
            c.monte_carlo.samples = f.value("monte_carlo_samples", c.monte_carlo.samples);
            c.monte_carlo.sigma_fraction = f.value("monte_carlo_sigma", c.monte_carlo.sigma_fraction);
            c.smote.k_neighbors = f.value("smote_k", c.smote.k_neighbors);
            c.smote.target_ratio = f.value("smote_ratio", c.smote.target_ratio);
            c.fine_tune.budget = f.value("fine_tune_budget", c.fine_tune.budget);
            c.fine_tune.validation_fraction =
                f.value("validation_fraction", c.fine_tune.validation_fraction);
            c.adv_train_fraction = f.value("adv_train_fraction", c.adv_train_fraction);
            c.surrogate_attack = f.value("surrogate_attack", c.surrogate_attack);
        }
        c.out_dir = j.value("out", std::string("out"));
        if (!j.contains("seed"))
            throw Error("config: seed is mandatory (reproducibility has no wall-clock default)");
        c.seed = j.at("seed").get<std::uint64_t>();
        c.attack.seed = c.seed;
        c.smote.seed = c.seed;
        return c;
    }

    static ExperimentConfig from_json_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open config file: " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

/// Load, binarize, and optionally subsample the train/test pair described by
/// the config. Category dictionaries are shared so test rows re-use training
/// indices.
struct LoadedExperiment {
    DatasetManifest manifest;
    FeatureSchema schema;
    LabeledDataset train, test;
};

inline LoadedExperiment load_experiment(const ExperimentConfig& cfg) {
    LoadedExperiment ex;
    ex.manifest = DatasetManifest::from_json_file(cfg.manifest_path);
    ex.schema = FeatureSchema::from_json_file(cfg.schema_path);
    CategoryDictionary dict;
    ex.train = load_dataset(cfg.train_path, ex.manifest, &dict);
    ex.test = load_dataset(cfg.test_path, ex.manifest, &dict);
    if (cfg.subsample_train > 0 && cfg.subsample_train < ex.train.size())
        ex.train = stratified_subsample(ex.train, cfg.subsample_train,
                                        Rng::substream(cfg.seed, 0x5AB1ULL));
    if (cfg.subsample_test > 0 && cfg.subsample_test < ex.test.size())
        ex.test = stratified_subsample(ex.test, cfg.subsample_test,
                                       Rng::substream(cfg.seed, 0x5AB2ULL));
    return ex;
}

/// Full multi-stage experiment; report rows come back in table order
/// (all TC rows by stage, then all DL rows).
struct ExperimentResult {
    std::vector<StageReport> reports;
    std::vector<StageResult> stage_results;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const LoadedExperiment& ex,
                                       std::size_t jobs = 1, bool evaluate_adversarial = true) {
    ExperimentResult res;
    std::vector<StageReport> tc_rows, dl_rows;
    for (Stage s : cfg.stages) {
        StageResult sr =
            run_stage(ex.train, ex.test, nullptr, ex.schema, cfg.stage_config(s), jobs,
                      evaluate_adversarial);
        for (const auto& r : sr.reports) (r.ensemble == "tc" ? tc_rows : dl_rows).push_back(r);
        res.stage_results.push_back(std::move(sr));
    }
    res.reports = tc_rows;
    res.reports.insert(res.reports.end(), dl_rows.begin(), dl_rows.end());
    return res;
}

}  // namespace nids

#endif  // NIDS_EXPERIMENT_HPP
