// Command-line entry point wiring the workbench modules together.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "nids/experiment.hpp"

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? "."
                               : fs::path(path).parent_path().string());
    std::ofstream out(path);
    if (!out) throw nids::Error("cannot write " + path);
    out << text;
}

void stash_config(const nids::ExperimentConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "config.json").string(), cfg.to_json().dump(2) + "\n");
}

int cmd_synth(const std::string& kind, std::size_t rows, double attack_fraction,
              std::uint64_t seed, const std::string& out) {
    nids::SynthConfig cfg;
    cfg.rows = rows;
    cfg.attack_fraction = attack_fraction;
    cfg.seed = seed;
    fs::path parent = fs::path(out).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    nids::write_synth_csv(kind, cfg, out);
    std::cout << "wrote " << rows << " " << kind << " rows to " << out << "\n";
    return 0;
}

int cmd_ingest(const std::string& manifest_path, const std::string& input,
               const std::string& out_dir) {
    auto manifest = nids::DatasetManifest::from_json_file(manifest_path);
    nids::CategoryDictionary dict;
    auto ds = nids::load_dataset(input, manifest, &dict);
    fs::create_directories(out_dir);
    nids::write_dataset_csv(ds, (fs::path(out_dir) / "cache.csv").string());
    std::size_t attacks = ds.count_label(1);
    nlohmann::json summary = {{"rows", ds.size()},
                              {"attacks", attacks},
                              {"benign", ds.size() - attacks},
                              {"features", ds.dim()},
                              {"source", input}};
    write_text((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
    std::cout << "rows=" << ds.size() << " attacks=" << attacks
              << " benign=" << ds.size() - attacks << " features=" << ds.dim() << "\n";
    return 0;
}

int cmd_train(const nids::ExperimentConfig& cfg, const std::string& stage_name,
              std::size_t jobs) {
    auto ex = nids::load_experiment(cfg);
    nids::StageConfig sc = cfg.stage_config(nids::stage_from_string(stage_name));
    auto sr = nids::run_stage(ex.train, ex.test, nullptr, ex.schema, sc, jobs,
                              /*evaluate_adversarial=*/false);
    std::string dir = (fs::path(cfg.out_dir) / ("stage_" + stage_name)).string();
    nids::save_pipeline(sr.pipeline, dir);
    write_text((fs::path(dir) / "report.csv").string(), nids::render_report_csv(sr.reports));
    std::cout << nids::render_report_table(sr.reports);
    std::cout << "pipeline saved to " << dir << "\n";
    return 0;
}

int cmd_attack(const nids::ExperimentConfig& cfg, const std::string& pipeline_dir,
               const std::string& ensemble_name, std::size_t jobs) {
    auto ex = nids::load_experiment(cfg);
    auto pipe = nids::load_pipeline(pipeline_dir);
    const nids::Ensemble& target = ensemble_name == "dl" ? pipe.dl : pipe.tc;
    nids::EnsembleOracle oracle(target);
    auto te = nids::transform(ex.test, pipe.preproc, pipe.raw_schema);
    nids::AttackConfig acfg = cfg.attack;
    acfg.seed = cfg.seed;
    auto res = nids::generate_adversarial_dataset(te, oracle, pipe.transformed, acfg, jobs);
    fs::create_directories(cfg.out_dir);
    nids::write_dataset_csv(res.dataset, (fs::path(cfg.out_dir) / "adversarial.csv").string());
    write_text((fs::path(cfg.out_dir) / "attack_stats.json").string(),
               res.stats.to_json().dump(2) + "\n");
    write_text((fs::path(cfg.out_dir) / "generations.csv").string(),
               nids::render_generation_log_csv(res.logs));
    std::cout << "attacked=" << res.stats.attacked << " evaded=" << res.stats.evaded
              << " evasion_rate=" << nids::format_double(res.stats.evasion_rate) << "\n";
    return 0;
}

int cmd_run_stages(const nids::ExperimentConfig& cfg, std::size_t jobs, bool save_pipelines) {
    auto ex = nids::load_experiment(cfg);
    auto res = nids::run_experiment(cfg, ex, jobs);
    fs::create_directories(cfg.out_dir);
    write_text((fs::path(cfg.out_dir) / "report.csv").string(),
               nids::render_report_csv(res.reports));
    write_text((fs::path(cfg.out_dir) / "report.txt").string(),
               nids::render_report_table(res.reports));
    if (save_pipelines)
        for (std::size_t i = 0; i < res.stage_results.size(); ++i)
            nids::save_pipeline(
                res.stage_results[i].pipeline,
                (fs::path(cfg.out_dir) /
                 ("stage_" + nids::stage_to_string(res.stage_results[i].pipeline.stage)))
                    .string());
    std::cout << nids::render_report_table(res.reports);
    return 0;
}

int cmd_report(const std::string& input) {
    std::ifstream in(input);
    if (!in) throw nids::Error("cannot open report: " + input);
    auto reports = nids::parse_report_csv(in);
    std::cout << nids::render_report_table(reports);

    // false-positive summary: absolute and relative FPR change between the
    // first and last stage of each ensemble under normal traffic
    for (const std::string& ens : {"tc", "dl"}) {
        const nids::StageReport* first = nullptr;
        const nids::StageReport* last = nullptr;
        for (const auto& r : reports) {
            if (r.ensemble != ens || r.condition != "normal" || !r.m.fpr) continue;
            if (!first) first = &r;
            last = &r;
        }
        if (!first || first == last) continue;
        double abs_delta = *first->m.fpr - *last->m.fpr;
        std::cout << ens << " fpr " << nids::format_double(*first->m.fpr) << " -> "
                  << nids::format_double(*last->m.fpr) << " (absolute reduction "
                  << nids::format_double(abs_delta);
        if (*first->m.fpr > 0.0)
            std::cout << ", relative " << nids::format_double(abs_delta / *first->m.fpr);
        std::cout << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial evasion workbench for ML-based intrusion detection"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark-layout CSV");
    std::string synth_kind = "nsl-kdd", synth_out;
    std::size_t synth_rows = 1000;
    double synth_attack_fraction = 0.35;
    std::uint64_t synth_seed = 0;
    synth->add_option("--kind", synth_kind, "nsl-kdd or unsw-nb15");
    synth->add_option("--rows", synth_rows, "row count");
    synth->add_option("--attack-fraction", synth_attack_fraction, "attack share");
    synth->add_option("--seed", synth_seed, "generator seed")->required();
    synth->add_option("--out", synth_out, "output csv path")->required();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse a raw CSV per manifest and cache it");
    std::string ingest_manifest, ingest_input, ingest_out;
    ingest->add_option("--manifest", ingest_manifest, "dataset manifest json")->required();
    ingest->add_option("--input", ingest_input, "raw csv path")->required();
    ingest->add_option("--out", ingest_out, "output directory")->required();

    // shared options for config-driven commands
    std::string config_path, out_override;
    std::size_t jobs = 1;

    auto* train = app.add_subcommand("train", "train one defense stage (normal eval only)");
    std::string train_stage = "baseline";
    train->add_option("--config", config_path, "experiment config json")->required();
    train->add_option("--stage", train_stage, "baseline|adv_balance|feat_eng|fine_tuned");
    train->add_option("--out", out_override, "override output directory");
    train->add_option("--jobs", jobs, "worker count");

    auto* attack = app.add_subcommand("attack", "run the GA attack against a trained pipeline");
    std::string attack_pipeline, attack_ensemble = "tc";
    attack->add_option("--config", config_path, "experiment config json")->required();
    attack->add_option("--pipeline", attack_pipeline, "trained pipeline directory")->required();
    attack->add_option("--ensemble", attack_ensemble, "tc or dl");
    attack->add_option("--out", out_override, "override output directory");
    attack->add_option("--jobs", jobs, "worker count");

    auto* run_stages = app.add_subcommand("run-stages", "full cumulative-stage experiment");
    bool save_pipelines = false;
    run_stages->add_option("--config", config_path, "experiment config json")->required();
    run_stages->add_option("--out", out_override, "override output directory");
    run_stages->add_option("--jobs", jobs, "worker count");
    run_stages->add_flag("--save-pipelines", save_pipelines, "persist per-stage pipelines");

    auto* report = app.add_subcommand("report", "render a report csv as a table");
    std::string report_input;
    report->add_option("--input", report_input, "report csv path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    // config-phase failures are usage errors (exit 2)
    nids::ExperimentConfig cfg;
    if (*train || *attack || *run_stages) {
        try {
            cfg = nids::ExperimentConfig::from_json_file(config_path);
            if (!out_override.empty()) cfg.out_dir = out_override;
            cfg.validate();
            stash_config(cfg, cfg.out_dir);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
    }
    if (*ingest && !fs::exists(ingest_input)) {
        std::cerr << "config error: input not found: " << ingest_input << "\n";
        return 2;
    }

    try {
        if (*synth) return cmd_synth(synth_kind, synth_rows, synth_attack_fraction, synth_seed,
                                     synth_out);
        if (*ingest) return cmd_ingest(ingest_manifest, ingest_input, ingest_out);
        if (*train) return cmd_train(cfg, train_stage, jobs);
        if (*attack) return cmd_attack(cfg, attack_pipeline, attack_ensemble, jobs);
        if (*run_stages) return cmd_run_stages(cfg, jobs, save_pipelines);
        if (*report) return cmd_report(report_input);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
