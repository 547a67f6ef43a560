#ifndef NIDS_ATTACK_HPP
#define NIDS_ATTACK_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "nids/ensemble.hpp"
#include "nids/features.hpp"

namespace nids {

struct AttackConfig {
    std::size_t population_size = 200;
    std::size_t max_generations = 1000;
    double crossover_prob = 0.8;
    double mutation_rate = 0.01;       // per gene
    double elitism_fraction = 0.05;
    std::size_t tournament_size = 3;
    double lambda = 0.1;               // distance penalty weight
    std::size_t convergence_window = 50;
    double convergence_min_improvement = 1e-4;
    double tau = 0.5;                  // oracle decision threshold for evasion stats
    std::uint64_t seed = 0;

    void validate() const {
        if (population_size < 2) throw Error("attack: population_size must be >= 2");
        if (crossover_prob < 0.0 || crossover_prob > 1.0 || mutation_rate < 0.0 ||
            mutation_rate > 1.0 || elitism_fraction < 0.0 || elitism_fraction > 1.0)
            throw Error("attack: probabilities must lie in [0,1]");
        if (elitism_fraction * static_cast<double>(population_size) < 1.0)
            throw Error("attack: elitism_fraction * population_size must be >= 1");
        if (tournament_size < 1 || tournament_size > population_size)
            throw Error("attack: tournament_size out of range");
        if (lambda < 0.0) throw Error("attack: lambda must be >= 0");
        if (convergence_window < 1) throw Error("attack: convergence window must be >= 1");
    }
};

/// GA candidate: perturbed vector, its per-feature permissible ranges
/// (correlation-adjusted as the search moves), and a cached fitness.
struct Individual {
    std::vector<double> xhat;
    std::vector<double> range_lo, range_hi;  // meaningful on mutable coordinates
    double fitness = 0.0;
    bool evaluated = false;
};

namespace detail {

inline void feasible_interval(const TransformedSchema& schema, const std::vector<double>& x,
                              std::size_t i, double& lo, double& hi) {
    const auto& f = schema.features[i];
    lo = std::max(f.lower, x[i] - f.epsilon);
    hi = std::min(f.upper, x[i] + f.epsilon);
    if (lo > hi) {
        lo = x[i] - f.epsilon;
        hi = x[i] + f.epsilon;
    }
}

/// Recenter b's permissible range after feature a moved (correlation-aware
/// mutation), intersected with b's feasible box.
inline void recenter_correlated_range(Individual& ind, const TransformedSchema& schema,
                                      const std::vector<double>& x, const CorrelationFit& g) {
    double flo, fhi;
    feasible_interval(schema, x, g.b, flo, fhi);
    double center = g.slope * ind.xhat[g.a] + g.intercept;
    double band = schema.clamp_sigma * g.residual_sigma;
    double lo = std::max(flo, center - band);
    double hi = std::min(fhi, center + band);
    if (lo > hi) {  // band misses the box; pin to the nearest box edge
        double edge = center - band > fhi ? fhi : flo;
        lo = hi = edge;
    }
    ind.range_lo[g.b] = lo;
    ind.range_hi[g.b] = hi;
    ind.xhat[g.b] = std::clamp(ind.xhat[g.b], lo, hi);
}

}  // namespace detail

inline void project_individual(Individual& ind, const std::vector<double>& x,
                               const TransformedSchema& schema) {
    ind.xhat = project_to_valid(ind.xhat, x, schema);
    ind.evaluated = false;
}

/// f(xhat) = P(benign | xhat) - lambda * ||x - xhat|| (norm order from the
/// schema, computed in model-input space).
inline double fitness_value(double benign_prob, const std::vector<double>& xhat,
                            const std::vector<double>& x, const TransformedSchema& schema,
                            const AttackConfig& cfg) {
    return benign_prob - cfg.lambda * scaled_lp_distance(xhat, x, schema);
}

inline std::vector<Individual> initialize_population(const std::vector<double>& x,
                                                     const TransformedSchema& schema,
                                                     const AttackConfig& cfg, Rng& rng) {
    if (schema.mutable_count() == 0)
        throw Error("attack: schema has no mutable features to perturb");
    std::vector<Individual> pop;
    pop.reserve(cfg.population_size);

    Individual proto;
    proto.xhat = x;
    proto.range_lo.resize(schema.dim());
    proto.range_hi.resize(schema.dim());
    for (std::size_t i = 0; i < schema.dim(); ++i) {
        if (schema.features[i].is_mutable) {
            detail::feasible_interval(schema, x, i, proto.range_lo[i], proto.range_hi[i]);
        } else {
            proto.range_lo[i] = proto.range_hi[i] = x[i];
        }
    }
    project_individual(proto, x, schema);
    pop.push_back(proto);  // the unperturbed seed elite

    for (std::size_t k = 1; k < cfg.population_size; ++k) {
        Individual ind = proto;
        for (std::size_t i = 0; i < schema.dim(); ++i)
            if (schema.features[i].is_mutable)
                ind.xhat[i] = rng.uniform(ind.range_lo[i], ind.range_hi[i]);
        project_individual(ind, x, schema);
        pop.push_back(std::move(ind));
    }
    return pop;
}

/// Evaluate every individual without a cached fitness in one oracle call.
inline void evaluate_population(std::vector<Individual>& pop, const std::vector<double>& x,
                                const Oracle& oracle, const TransformedSchema& schema,
                                const AttackConfig& cfg) {
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (!pop[i].evaluated) pending.push_back(i);
    if (pending.empty()) return;
    Matrix X(pending.size(), schema.dim());
    for (std::size_t k = 0; k < pending.size(); ++k) X.set_row(k, pop[pending[k]].xhat);
    auto p_attack = oracle.proba(X);
    for (std::size_t k = 0; k < pending.size(); ++k) {
        auto& ind = pop[pending[k]];
        ind.fitness = fitness_value(1.0 - p_attack[k], ind.xhat, x, schema, cfg);
        ind.evaluated = true;
    }
}

/// Max-fitness member of a uniform sample without replacement; ties break
/// toward the lower population index.
inline std::size_t tournament_select(const std::vector<Individual>& pop, const AttackConfig& cfg,
                                     Rng& rng) {
    if (pop.empty()) throw Error("tournament_select: empty population");
    std::vector<std::size_t> picked;
    picked.reserve(cfg.tournament_size);
    while (picked.size() < std::min(cfg.tournament_size, pop.size())) {
        std::size_t c = rng.uniform_index(pop.size());
        if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
    }
    std::size_t best = picked[0];
    for (std::size_t c : picked)
        if (pop[c].fitness > pop[best].fitness ||
            (pop[c].fitness == pop[best].fitness && c < best))
            best = c;
    return best;
}

/// Uniform per-gene crossover of both feature values and their current
/// ranges, applied with probability crossover_prob; children are projected.
inline std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                                   const std::vector<double>& x,
                                                   const TransformedSchema& schema,
                                                   const AttackConfig& cfg, Rng& rng) {
    Individual ca = a, cb = b;
    if (rng.uniform() < cfg.crossover_prob) {
        for (std::size_t i = 0; i < schema.dim(); ++i) {
            if (!schema.features[i].is_mutable) continue;
            if (rng.uniform() < 0.5) {
                std::swap(ca.xhat[i], cb.xhat[i]);
                std::swap(ca.range_lo[i], cb.range_lo[i]);
                std::swap(ca.range_hi[i], cb.range_hi[i]);
            }
        }
        project_individual(ca, x, schema);
        project_individual(cb, x, schema);
    }
    return {std::move(ca), std::move(cb)};
}

/// Per-gene mutation within the individual's current range; mutating one
/// half of a correlated pair recenters and re-clamps the other. Result is
/// projected back into the valid set.
inline void mutate(Individual& ind, const std::vector<double>& x, const TransformedSchema& schema,
                   const AttackConfig& cfg, Rng& rng) {
    bool changed = false;
    for (std::size_t i = 0; i < schema.dim(); ++i) {
        if (!schema.features[i].is_mutable) continue;
        if (rng.uniform() >= cfg.mutation_rate) continue;
        ind.xhat[i] = rng.uniform(ind.range_lo[i], ind.range_hi[i]);
        changed = true;
        for (const auto& g : schema.correlation_groups)
            if (g.a == i && schema.features[g.b].is_mutable)
                detail::recenter_correlated_range(ind, schema, x, g);
    }
    if (changed) project_individual(ind, x, schema);
}

struct GenerationStat {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
};

struct EvolveResult {
    Individual best;
    std::vector<GenerationStat> log;
    std::size_t generations = 0;
};

/// Full GA loop: elitism, tournament selection, crossover, mutation, until
/// max_generations or a fitness plateau over the convergence window.
inline EvolveResult evolve(const std::vector<double>& x, const Oracle& oracle,
                           const TransformedSchema& schema, const AttackConfig& cfg, Rng& rng) {
    cfg.validate();
    auto pop = initialize_population(x, schema, cfg, rng);
    std::size_t n_elite = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.elitism_fraction * static_cast<double>(pop.size())));

    EvolveResult res;
    std::vector<double> best_history;
    bool have_best = false;

    for (std::size_t gen = 0; gen < cfg.max_generations; ++gen) {
        evaluate_population(pop, x, oracle, schema, cfg);

        std::vector<std::size_t> order(pop.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return pop[a].fitness > pop[b].fitness;
        });

        double best = pop[order[0]].fitness;
        double mean = 0.0;
        for (const auto& ind : pop) mean += ind.fitness;
        mean /= static_cast<double>(pop.size());
        res.log.push_back({gen, best, mean});
        best_history.push_back(best);
        if (!have_best || best > res.best.fitness) {
            res.best = pop[order[0]];
            have_best = true;
        }
        res.generations = gen + 1;

        if (gen >= cfg.convergence_window &&
            best_history[gen] - best_history[gen - cfg.convergence_window] <
                cfg.convergence_min_improvement)
            break;
        if (gen + 1 == cfg.max_generations) break;

        std::vector<Individual> next;
        next.reserve(pop.size());
        for (std::size_t e = 0; e < n_elite; ++e) next.push_back(pop[order[e]]);
        while (next.size() < pop.size()) {
            std::size_t pa = tournament_select(pop, cfg, rng);
            std::size_t pb = tournament_select(pop, cfg, rng);
            auto [ca, cb] = crossover(pop[pa], pop[pb], x, schema, cfg, rng);
            mutate(ca, x, schema, cfg, rng);
            mutate(cb, x, schema, cfg, rng);
            next.push_back(std::move(ca));
            if (next.size() < pop.size()) next.push_back(std::move(cb));
        }
        pop = std::move(next);
    }
    return res;
}

struct AdversarialStats {
    std::size_t attacked = 0;
    std::size_t evaded = 0;
    double evasion_rate = 0.0;

    nlohmann::json to_json() const {
        return {{"attacked", attacked}, {"evaded", evaded}, {"evasion_rate", evasion_rate}};
    }
};

struct RecordLog {
    std::size_t record = 0;  // row index in the input dataset
    std::vector<GenerationStat> stats;
};

struct AdversarialResult {
    LabeledDataset dataset;
    AdversarialStats stats;
    std::vector<RecordLog> logs;
};

/// Replace every attack-labeled row with its evolved adversarial variant;
/// benign rows pass through untouched. Deterministic regardless of the
/// worker count: per-record RNG substreams are keyed by row index.
inline AdversarialResult generate_adversarial_dataset(const LabeledDataset& test,
                                                      const Oracle& oracle,
                                                      const TransformedSchema& schema,
                                                      const AttackConfig& cfg,
                                                      std::size_t jobs = 1) {
    cfg.validate();
    AdversarialResult res;
    res.dataset = test;

    std::vector<std::size_t> attack_rows;
    for (std::size_t r = 0; r < test.size(); ++r)
        if (test.labels[r] == 1) attack_rows.push_back(r);

    std::vector<std::vector<double>> best(attack_rows.size());
    std::vector<std::vector<GenerationStat>> logs(attack_rows.size());

    auto work = [&](std::size_t k) {
        std::size_t r = attack_rows[k];
        Rng rng(Rng::substream(cfg.seed, 0xA77ACULL + r));
        auto ev = evolve(test.features.row_vec(r), oracle, schema, cfg, rng);
        best[k] = ev.best.xhat;
        logs[k] = std::move(ev.log);
    };

    if (jobs <= 1) {
        for (std::size_t k = 0; k < attack_rows.size(); ++k) work(k);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t k = cursor.fetch_add(1);
                    if (k >= attack_rows.size()) return;
                    work(k);
                }
            });
        for (auto& th : pool) th.join();
    }

    for (std::size_t k = 0; k < attack_rows.size(); ++k) {
        res.dataset.features.set_row(attack_rows[k], best[k]);
        res.dataset.provenance[attack_rows[k]] = Provenance::Adversarial;
        res.logs.push_back({attack_rows[k], std::move(logs[k])});
    }

    res.stats.attacked = attack_rows.size();
    if (!attack_rows.empty()) {
        Matrix X(attack_rows.size(), test.dim());
        for (std::size_t k = 0; k < attack_rows.size(); ++k)
            X.set_row(k, res.dataset.features.row_vec(attack_rows[k]));
        auto p = oracle.proba(X);
        for (double v : p)
            if (v < cfg.tau) ++res.stats.evaded;
        res.stats.evasion_rate =
            static_cast<double>(res.stats.evaded) / static_cast<double>(res.stats.attacked);
    }
    return res;
}

inline std::string render_generation_log_csv(const std::vector<RecordLog>& logs) {
    std::string out = "record,generation,best_fitness,mean_fitness\n";
    for (const auto& rl : logs)
        for (const auto& g : rl.stats)
            out += std::to_string(rl.record) + "," + std::to_string(g.generation) + "," +
                   format_double(g.best_fitness) + "," + format_double(g.mean_fitness) + "\n";
    return out;
}

}  // namespace nids

#endif  // NIDS_ATTACK_HPP
