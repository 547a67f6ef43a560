#ifndef NIDS_DEFENSE_HPP
#define NIDS_DEFENSE_HPP

#include <filesystem>
#include <fstream>
#include <vector>

#include "nids/attack.hpp"
#include "nids/balance.hpp"
#include "nids/ensemble.hpp"
#include "nids/eval.hpp"

namespace nids {

enum class Stage { Baseline = 0, AdvBalance = 1, FeatEng = 2, FineTuned = 3 };

inline std::string stage_to_string(Stage s) {
    switch (s) {
        case Stage::Baseline: return "baseline";
        case Stage::AdvBalance: return "adv_balance";
        case Stage::FeatEng: return "feat_eng";
        case Stage::FineTuned: return "fine_tuned";
    }
    return "?";
}

inline Stage stage_from_string(const std::string& s) {
    if (s == "baseline") return Stage::Baseline;
    if (s == "adv_balance") return Stage::AdvBalance;
    if (s == "feat_eng") return Stage::FeatEng;
    if (s == "fine_tuned") return Stage::FineTuned;
    throw Error("unknown stage: " + s);
}

inline int stage_rank(Stage s) { return static_cast<int>(s); }

struct MonteCarloConfig {
    std::size_t samples = 5;        // M perturbed copies per attack record
    double sigma_fraction = 0.05;   // noise sigma as fraction of feature range
};

struct FineTuneConfig {
    int budget = 30;                 // random-search trials per model family
    double validation_fraction = 0.2;
};

/// Cumulative-stage configuration: each stage applies every technique of the
/// stages before it.
struct StageConfig {
    Stage stage = Stage::Baseline;
    MonteCarloConfig monte_carlo;
    SmoteConfig smote;
    FineTuneConfig fine_tune;
    AttackConfig attack;             // GA settings for training rows and test attacks
    double adv_train_fraction = 0.2; // slice of training attacks fed to the GA
    bool surrogate_attack = false;   // attack DL tests through the TC oracle
    std::uint64_t seed = 0;

    void validate() const {
        if (monte_carlo.sigma_fraction < 0.0)
            throw Error("stage: monte carlo sigma fraction must be >= 0");
        if (fine_tune.budget < 1) throw Error("stage: fine-tune budget must be >= 1");
        if (fine_tune.validation_fraction <= 0.0 || fine_tune.validation_fraction >= 1.0)
            throw Error("stage: validation fraction must be in (0,1)");
        if (adv_train_fraction <= 0.0 || adv_train_fraction > 1.0)
            throw Error("stage: adversarial training fraction must be in (0,1]");
        attack.validate();
    }
};

/// Everything needed to score new traffic exactly as the stage did.
struct TrainedPipeline {
    Stage stage = Stage::Baseline;
    FeatureSchema raw_schema;
    PreprocessorState preproc;
    TransformedSchema transformed;
    Ensemble tc, dl;
    std::uint64_t seed = 0;

    LabeledDataset encode(const LabeledDataset& ds) const {
        return transform(ds, preproc, raw_schema);
    }
};

// ---------------------------------------------------------------------------
// Monte Carlo augmentation
// ---------------------------------------------------------------------------

/// M Gaussian-perturbed, projected copies of each attack record (model-input
/// space). Labels stay attack; provenance is adversarial.
inline LabeledDataset monte_carlo_augment(const LabeledDataset& train_attacks,
                                          const TransformedSchema& schema,
                                          const MonteCarloConfig& cfg, std::uint64_t seed) {
    for (int lbl : train_attacks.labels)
        if (lbl != 1) throw Error("monte_carlo_augment: all rows must be attack-labeled");
    LabeledDataset out = train_attacks;
    out.features = Matrix(0, train_attacks.dim());
    out.labels.clear();
    out.provenance.clear();

    for (std::size_t r = 0; r < train_attacks.size(); ++r) {
        Rng rng(Rng::substream(seed, 0x3c47ULL + r));
        auto x = train_attacks.features.row_vec(r);
        for (std::size_t m = 0; m < cfg.samples; ++m) {
            std::vector<double> pert = x;
            for (std::size_t i = 0; i < schema.dim(); ++i) {
                const auto& f = schema.features[i];
                if (!f.is_mutable) continue;
                double sigma = cfg.sigma_fraction * (f.upper - f.lower);
                pert[i] += sigma * rng.gaussian();
            }
            out.features.append_row(project_to_valid(pert, x, schema));
            out.labels.push_back(1);
            out.provenance.push_back(Provenance::Adversarial);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ensemble construction and fine-tuning
// ---------------------------------------------------------------------------

inline std::vector<ClassifierSpec> default_tc_specs(std::uint64_t seed) {
    return {ClassifierSpec::defaults(ModelFamily::LogisticRegression,
                                     Rng::substream(seed, 0xE1ULL)),
            ClassifierSpec::defaults(ModelFamily::LinearSvm, Rng::substream(seed, 0xE2ULL)),
            ClassifierSpec::defaults(ModelFamily::DecisionTree, Rng::substream(seed, 0xE3ULL)),
            ClassifierSpec::defaults(ModelFamily::RandomForest, Rng::substream(seed, 0xE4ULL))};
}

inline std::vector<ClassifierSpec> default_dl_specs(std::uint64_t seed) {
    auto a = ClassifierSpec::defaults(ModelFamily::Mlp, Rng::substream(seed, 0xE5ULL));
    a.hp.hidden = {64, 32};
    auto b = ClassifierSpec::defaults(ModelFamily::Mlp, Rng::substream(seed, 0xE6ULL));
    b.hp.hidden = {128, 64, 32};
    return {a, b};
}

inline Ensemble train_ensemble(const std::vector<ClassifierSpec>& specs,
                               const LabeledDataset& train) {
    Ensemble e;
    for (const auto& spec : specs)
        e.members.push_back(std::shared_ptr<const TrainedModel>(fit(spec, train)));
    e.validate();
    return e;
}

/// One random-search sample within the documented per-family ranges.
/// Learning rates and L2 are drawn log-uniform; integer knobs uniform.
inline ClassifierSpec sample_finetune_spec(const ClassifierSpec& base, Rng& rng) {
    auto log_uniform = [&](double lo, double hi) {
        return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    };
    ClassifierSpec s = base;
    switch (base.family) {
        case ModelFamily::LogisticRegression:
        case ModelFamily::LinearSvm:
            s.hp.learning_rate = log_uniform(0.01, 0.5);
            s.hp.l2 = log_uniform(1e-5, 1e-2);
            break;
        case ModelFamily::DecisionTree:
            s.hp.max_depth = 4 + static_cast<int>(rng.uniform_index(17));  // [4,20]
            break;
        case ModelFamily::RandomForest:
            s.hp.n_trees = 20 + static_cast<int>(rng.uniform_index(181));  // [20,200]
            break;
        case ModelFamily::Mlp: {
            static const int widths[] = {32, 64, 128};
            int w = widths[rng.uniform_index(3)];
            std::vector<int> hidden;
            for (std::size_t li = 0; li < base.hp.hidden.size(); ++li) {
                hidden.push_back(std::max(16, w));
                w /= 2;
            }
            s.hp.hidden = hidden;
            s.hp.learning_rate = log_uniform(0.001, 0.05);
            break;
        }
    }
    return s;
}

/// Random search over the family's hyperparameter range; returns the spec
/// with the best validation accuracy (ties keep the first found). Trials
/// whose training diverges are skipped. Trial models train on at most
/// `kTrialRowCap` rows (seeded subsample) to bound search cost; the caller
/// retrains the winning spec on the full training split.
inline constexpr std::size_t kTrialRowCap = 2500;

inline ClassifierSpec fine_tune(const ClassifierSpec& base, const LabeledDataset& fit_set,
                                const LabeledDataset& val_set, int budget, std::uint64_t seed) {
    if (budget < 1) throw Error("fine_tune: budget must be >= 1");
    Rng rng(Rng::substream(seed, 0xF17EULL));
    const LabeledDataset* trial_set = &fit_set;
    LabeledDataset capped;
    if (fit_set.size() > kTrialRowCap) {
        std::vector<std::size_t> order(fit_set.size());
        std::iota(order.begin(), order.end(), 0);
        Rng srng(Rng::substream(seed, 0xF5ABULL));
        srng.shuffle(order);
        order.resize(kTrialRowCap);
        std::sort(order.begin(), order.end());
        capped = fit_set.select_rows(order);
        trial_set = &capped;
    }
    ClassifierSpec best = base;
    double best_acc = -1.0;
    for (int t = 0; t < budget; ++t) {
        ClassifierSpec cand = sample_finetune_spec(base, rng);
        std::unique_ptr<TrainedModel> model;
        try {
            model = fit(cand, *trial_set);
        } catch (const Error&) {
            continue;  // diverged trial
        }
        auto p = model->predict_proba(val_set.features);
        std::size_t correct = 0;
        for (std::size_t r = 0; r < val_set.size(); ++r)
            if ((p[r] >= 0.5 ? 1 : 0) == val_set.labels[r]) ++correct;
        double acc = static_cast<double>(correct) / static_cast<double>(val_set.size());
        if (acc > best_acc) {
            best_acc = acc;
            best = cand;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Stage orchestration
// ---------------------------------------------------------------------------

struct StageResult {
    TrainedPipeline pipeline;
    std::vector<StageReport> reports;  // tc normal, tc adversarial, dl normal, dl adversarial
    AdversarialStats tc_attack_stats, dl_attack_stats;
};

namespace detail {

inline StageReport score_ensemble(const Ensemble& e, const LabeledDataset& ds,
                                  const std::string& name, Stage stage,
                                  const std::string& condition) {
    StageReport rep;
    rep.ensemble = name;
    rep.stage = stage_to_string(stage);
    rep.condition = condition;
    rep.cm = confusion(ds.labels, e.classify(ds.features));
    rep.m = metrics(rep.cm);
    return rep;
}

}  // namespace detail

/// Run one cumulative defense stage end to end: encode, augment, train the
/// TC and DL ensembles, and evaluate both under normal and adversarial test
/// traffic. When test_adversarial is null the adversarial test set is
/// generated by attacking the ensemble under test (or the TC surrogate).
inline StageResult run_stage(const LabeledDataset& train, const LabeledDataset& test_normal,
                             const LabeledDataset* test_adversarial, const FeatureSchema& schema,
                             const StageConfig& cfg, std::size_t jobs = 1,
                             bool evaluate_adversarial = true) {
    cfg.validate();
    schema.validate();

    StageResult res;
    res.pipeline.stage = cfg.stage;
    res.pipeline.seed = cfg.seed;
    res.pipeline.raw_schema = schema;

    // stage 3+ switches on the full preprocessing path
    bool full = stage_rank(cfg.stage) >= stage_rank(Stage::FeatEng);
    PreprocessOptions opts;
    opts.scale = full;
    opts.one_hot = full;
    opts.engineered = full;
    res.pipeline.preproc = fit_preprocessor(train, schema, opts);

    LabeledDataset tr = transform(train, res.pipeline.preproc, schema);
    res.pipeline.transformed = build_transformed_schema(schema, res.pipeline.preproc, tr);
    if (!full) res.pipeline.transformed.correlation_groups.clear();  // arrives with feat_eng
    const TransformedSchema& ts = res.pipeline.transformed;

    if (stage_rank(cfg.stage) >= stage_rank(Stage::AdvBalance)) {
        // sample a slice of training attacks for adversarial training rows
        std::vector<std::size_t> attack_idx;
        for (std::size_t r = 0; r < tr.size(); ++r)
            if (tr.labels[r] == 1) attack_idx.push_back(r);
        if (attack_idx.empty()) throw Error("run_stage: training set has no attack rows");
        Rng srng(Rng::substream(cfg.seed, 0xADA511ULL));
        srng.shuffle(attack_idx);
        std::size_t take = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::llround(cfg.adv_train_fraction * static_cast<double>(attack_idx.size()))));
        attack_idx.resize(std::min(take, attack_idx.size()));
        std::sort(attack_idx.begin(), attack_idx.end());
        LabeledDataset adv_src = tr.select_rows(attack_idx);

        // GA rows are generated against a provisional TC ensemble trained on
        // the clean encoded data (never against test rows)
        Ensemble provisional =
            train_ensemble(default_tc_specs(Rng::substream(cfg.seed, 0x9016ULL)), tr);
        EnsembleOracle prov_oracle(provisional);
        AttackConfig acfg = cfg.attack;
        acfg.seed = Rng::substream(cfg.seed, 0xA113ULL);
        auto ga = generate_adversarial_dataset(adv_src, prov_oracle, ts, acfg, jobs);
        tr.append(ga.dataset);

        tr.append(monte_carlo_augment(adv_src, ts, cfg.monte_carlo,
                                      Rng::substream(cfg.seed, 0x3c47ULL)));

        SmoteConfig scfg = cfg.smote;
        scfg.seed = Rng::substream(cfg.seed, 0x5107ULL);
        tr = smote(tr, scfg).dataset;
    }

    std::vector<ClassifierSpec> tc_specs = default_tc_specs(cfg.seed);
    std::vector<ClassifierSpec> dl_specs = default_dl_specs(cfg.seed);

    if (cfg.stage == Stage::FineTuned) {
        // seeded validation split of the augmented training set
        std::vector<std::size_t> order(tr.size());
        std::iota(order.begin(), order.end(), 0);
        Rng vrng(Rng::substream(cfg.seed, 0x7A1ULL));
        vrng.shuffle(order);
        std::size_t n_val = std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::llround(cfg.fine_tune.validation_fraction * static_cast<double>(tr.size()))));
        std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val);
        std::vector<std::size_t> fit_idx(order.begin() + n_val, order.end());
        std::sort(val_idx.begin(), val_idx.end());
        std::sort(fit_idx.begin(), fit_idx.end());
        LabeledDataset val_set = tr.select_rows(val_idx);
        LabeledDataset fit_set = tr.select_rows(fit_idx);

        for (std::size_t i = 0; i < tc_specs.size(); ++i)
            tc_specs[i] = fine_tune(tc_specs[i], fit_set, val_set, cfg.fine_tune.budget,
                                    Rng::substream(cfg.seed, 0xF100ULL + i));
        for (std::size_t i = 0; i < dl_specs.size(); ++i)
            dl_specs[i] = fine_tune(dl_specs[i], fit_set, val_set, cfg.fine_tune.budget,
                                    Rng::substream(cfg.seed, 0xF200ULL + i));
    }

    res.pipeline.tc = train_ensemble(tc_specs, tr);
    res.pipeline.dl = train_ensemble(dl_specs, tr);

    LabeledDataset te = transform(test_normal, res.pipeline.preproc, schema);
    res.reports.push_back(detail::score_ensemble(res.pipeline.tc, te, "tc", cfg.stage, "normal"));

    auto adversarial_for = [&](const Ensemble& under_test, const Ensemble& oracle_ens,
                               std::uint64_t tag, AdversarialStats& stats) {
        if (test_adversarial) {
            stats = {};
            return transform(*test_adversarial, res.pipeline.preproc, schema);
        }
        EnsembleOracle oracle(oracle_ens);
        AttackConfig acfg = cfg.attack;
        acfg.seed = Rng::substream(cfg.seed, tag);
        auto out = generate_adversarial_dataset(te, oracle, ts, acfg, jobs);
        stats = out.stats;
        (void)under_test;
        return std::move(out.dataset);
    };

    if (evaluate_adversarial) {
        LabeledDataset tc_adv =
            adversarial_for(res.pipeline.tc, res.pipeline.tc, 0xA77C0ULL, res.tc_attack_stats);
        res.reports.push_back(
            detail::score_ensemble(res.pipeline.tc, tc_adv, "tc", cfg.stage, "adversarial"));
    }

    res.reports.push_back(detail::score_ensemble(res.pipeline.dl, te, "dl", cfg.stage, "normal"));
    if (evaluate_adversarial) {
        LabeledDataset dl_adv = adversarial_for(
            res.pipeline.dl, cfg.surrogate_attack ? res.pipeline.tc : res.pipeline.dl, 0xA77C1ULL,
            res.dl_attack_stats);
        res.reports.push_back(
            detail::score_ensemble(res.pipeline.dl, dl_adv, "dl", cfg.stage, "adversarial"));
    }

    return res;
}

// ---------------------------------------------------------------------------
// Pipeline serialization
// ---------------------------------------------------------------------------

inline void save_pipeline(const TrainedPipeline& p, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto dump = [&](const std::string& name, const nlohmann::json& j) {
        std::ofstream out((fs::path(dir) / name).string());
        if (!out) throw Error("cannot write pipeline file: " + name);
        out << j.dump(2);
    };
    dump("schema.json", p.raw_schema.to_json());
    dump("preprocessor.json", p.preproc.to_json());
    dump("transformed_schema.json", p.transformed.to_json());
    dump("stage.json", {{"stage", stage_to_string(p.stage)}, {"seed", p.seed}});
    save_ensemble(p.tc, dir, "tc");
    save_ensemble(p.dl, dir, "dl");
}

inline TrainedPipeline load_pipeline(const std::string& dir) {
    namespace fs = std::filesystem;
    auto slurp = [&](const std::string& name) {
        std::ifstream in((fs::path(dir) / name).string());
        if (!in) throw Error("cannot open pipeline file: " + name);
        nlohmann::json j;
        in >> j;
        return j;
    };
    TrainedPipeline p;
    p.raw_schema = FeatureSchema::from_json(slurp("schema.json"));
    p.preproc = PreprocessorState::from_json(slurp("preprocessor.json"));
    p.transformed = TransformedSchema::from_json(slurp("transformed_schema.json"));
    auto st = slurp("stage.json");
    p.stage = stage_from_string(st.at("stage").get<std::string>());
    p.seed = st.at("seed").get<std::uint64_t>();
    p.tc = load_ensemble(dir, "tc");
    p.dl = load_ensemble(dir, "dl");
    return p;
}

}  // namespace nids

#endif  // NIDS_DEFENSE_HPP
