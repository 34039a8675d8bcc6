#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "trimgame/core.hpp"
#include "trimgame/engine.hpp"
#include "trimgame/metrics.hpp"
#include "trimgame/privacy.hpp"
#include "trimgame/rng.hpp"
#include "trimgame/strategies.hpp"
#include "trimgame/theory.hpp"

namespace trimgame::harness {

// ---------------------------------------------------------------------------
// Datasets and synthetic sources
// ---------------------------------------------------------------------------

// Parses a CSV of numeric rows (one record per row, optionally multi-column).
inline std::vector<std::vector<double>> load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_table: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error("load_table: unparseable value at " + path + ":" +
                                         std::to_string(line_no));
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_table: empty file " + path);
    return rows;
}

// Loads the first column as a batch; when normalize is set, affine-maps the
// values so min -> -1 and max -> +1.
inline core::Batch load_dataset(const std::string& path, bool normalize) {
    auto rows = load_table(path);
    std::vector<double> values;
    values.reserve(rows.size());
    for (const auto& r : rows) values.push_back(r.front());
    if (normalize) {
        double lo = values.front(), hi = values.front();
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi > lo)
            for (double& v : values) v = -1.0 + 2.0 * (v - lo) / (hi - lo);
        else
            for (double& v : values) v = 0.0;
    }
    return core::Batch::from_values(std::move(values));
}

struct SynthSpec {
    enum class Kind { kUniform, kGaussian, kClusters };

    Kind kind = Kind::kUniform;
    double lo = 0.0, hi = 1.0;
    double mean = 0.0, sd = 1.0;
    std::vector<double> centers{-1.0, 1.0};
    double cluster_sd = 0.1;

    static SynthSpec uniform(double lo, double hi) {
        SynthSpec s;
        s.kind = Kind::kUniform;
        s.lo = lo;
        s.hi = hi;
        return s;
    }
    static SynthSpec gaussian(double mean, double sd) {
        SynthSpec s;
        s.kind = Kind::kGaussian;
        s.mean = mean;
        s.sd = sd;
        return s;
    }
    static SynthSpec clusters(std::vector<double> centers, double sd) {
        SynthSpec s;
        s.kind = Kind::kClusters;
        s.centers = std::move(centers);
        s.cluster_sd = sd;
        return s;
    }

    engine::BenignSource to_source() const {
        switch (kind) {
            case Kind::kUniform:
                return engine::BenignSource::uniform(lo, hi);
            case Kind::kGaussian:
                return engine::BenignSource::gaussian(mean, sd);
            case Kind::kClusters:
                return engine::BenignSource::clusters(centers, cluster_sd);
        }
        throw std::domain_error("SynthSpec: unknown kind");
    }
};

struct SynthData {
    core::Batch batch;
    std::vector<double> true_centers;  // clusters only
};

// Seeded deterministic sample; the clusters spec also reports its ground
// truth centers for metric tests.
inline SynthData synth_generate(const SynthSpec& spec, int n, std::uint64_t seed) {
    if (n < 1) throw std::domain_error("synth_generate: n < 1");
    engine::BenignSource source = spec.to_source();
    rng::Stream stream(seed);
    SynthData out;
    out.batch.values.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.batch.push_back(source.draw(stream), false);
    if (spec.kind == SynthSpec::Kind::kClusters) out.true_centers = spec.centers;
    return out;
}

// ---------------------------------------------------------------------------
// Scheme identifiers
// ---------------------------------------------------------------------------

inline strategies::DefenderScheme defender_from_id(const std::string& id, double tth, double red,
                                                   double k, double q) {
    using D = strategies::DefenderScheme;
    if (id == "ostrich") return D::ostrich();
    if (id == "baseline") return D::static_baseline(q);
    if (id == "titfortat") return D::titfortat(tth, red);
    if (id == "elastic") return D::elastic(tth, k);
    throw std::runtime_error("unknown defender id: " + id);
}

inline strategies::AttackerScheme attacker_from_id(const std::string& id, double q, double p,
                                                   double tth, double k) {
    using A = strategies::AttackerScheme;
    if (id == "static_attacker") return A::static_percentile(q);
    if (id == "ideal_static") return A::ideal_static();
    if (id == "mixed_evasive") return A::mixed_evasive(p);
    if (id == "elastic_adversary") return A::elastic_adversary(tth, k);
    throw std::runtime_error("unknown attacker id: " + id);
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct SchemePairing {
    std::string label;
    strategies::DefenderScheme defender;
    strategies::AttackerScheme attacker;
    bool no_trigger = false;
    std::optional<bool> stop_at_termination;  // overrides the config default
};

struct RatioInterval {
    std::string label;
    double lo = 0.0;
    double hi = 0.0;
};

struct ExperimentConfig {
    enum class Mode { kGame, kTheory, kLdp };

    Mode mode = Mode::kGame;

    // data
    SynthSpec synth = SynthSpec::clusters({-1.0, 1.0}, 0.1);
    std::string dataset_path;  // overrides synth when non-empty
    bool normalize = false;

    // game mode
    std::vector<SchemePairing> schemes;
    std::vector<RatioInterval> ratios;
    std::vector<double> tth_grid{0.95};
    int round_no = 20;
    int repetitions = 100;
    int samples_per_round = 1000;
    int board_samples = 10000;
    engine::TrimMode trim_mode = engine::TrimMode::kValue;
    engine::PercentileBasis basis = engine::PercentileBasis::kBoardReference;
    double monitor_from = 0.90;
    double red = 0.05;
    engine::TerminationProtocol termination = engine::TerminationProtocol::kNone;
    bool stop_at_termination = false;
    int kmeans_k = 2;

    // theory mode
    std::vector<double> d_grid{0.5, 0.9};
    std::vector<double> p_grid{0.0, 0.5, 0.9};
    std::vector<double> g_ac_grid{1.0};

    // ldp mode
    std::vector<double> epsilon_grid{0.5, 1.0, 2.0, 4.0};
    int ldp_users = 10000;
    int ldp_attackers = 0;
    double ldp_honest_value = 0.3;
    double ldp_target = 1.0;
    std::string ldp_attack = "input_manipulation";

    std::uint64_t seed = 1;
    std::string output_path;

    void validate() const {
        if (repetitions < 1) throw std::domain_error("ExperimentConfig: repetitions < 1");
        if (mode == Mode::kGame && (schemes.empty() || ratios.empty() || tth_grid.empty()))
            throw std::domain_error("ExperimentConfig: game mode needs schemes, ratios, tth grid");
    }

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

struct ResultRow {
    std::string scheme;
    std::string ratio_label;
    double tth = 0.0;
    std::string metric;
    double value = 0.0;
    double stderr_ = 0.0;
    int repetitions = 0;
};

inline void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
    os << "scheme,attack_ratio,tth,metric,value,stderr,repetitions\n";
    char line[320];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%s,%s,%.12g,%s,%.12g,%.12g,%d\n", r.scheme.c_str(),
                      r.ratio_label.c_str(), r.tth, r.metric.c_str(), r.value, r.stderr_,
                      r.repetitions);
        os << line;
    }
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Cell streams hash the cell's content, not its position, so adding or
// removing one cell never changes another cell's results.
inline std::uint64_t cell_seed(std::uint64_t master, const std::string& cell_id) {
    return rng::derive_seed(master, fnv1a(cell_id));
}

struct Aggregate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline Aggregate aggregate(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace detail

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// JSON parsing
// ---------------------------------------------------------------------------

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    std::string mode = j.value("mode", "game");
    if (mode == "game")
        c.mode = Mode::kGame;
    else if (mode == "theory")
        c.mode = Mode::kTheory;
    else if (mode == "ldp")
        c.mode = Mode::kLdp;
    else
        throw std::runtime_error("config: unknown mode " + mode);

    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        std::string kind = s.value("kind", "clusters");
        if (kind == "uniform")
            c.synth = SynthSpec::uniform(s.value("lo", 0.0), s.value("hi", 1.0));
        else if (kind == "gaussian")
            c.synth = SynthSpec::gaussian(s.value("mean", 0.0), s.value("sd", 1.0));
        else if (kind == "clusters")
            c.synth = SynthSpec::clusters(s.value("centers", std::vector<double>{-1.0, 1.0}),
                                          s.value("sd", 0.1));
        else
            throw std::runtime_error("config: unknown synth kind " + kind);
    }
    c.dataset_path = j.value("dataset", std::string{});
    c.normalize = j.value("normalize", false);

    c.round_no = j.value("round_no", c.round_no);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.samples_per_round = j.value("samples_per_round", c.samples_per_round);
    c.board_samples = j.value("board_samples", c.board_samples);
    c.monitor_from = j.value("monitor_from", c.monitor_from);
    c.red = j.value("red", c.red);
    c.seed = j.value("seed", static_cast<std::uint64_t>(1));
    c.output_path = j.value("output", std::string{});
    c.kmeans_k = j.value("kmeans_k", c.kmeans_k);

    std::string trim = j.value("trim_mode", "value");
    c.trim_mode = trim == "fixed_amount" ? engine::TrimMode::kFixedAmount : engine::TrimMode::kValue;
    std::string basis = j.value("percentile_basis", "board_reference");
    c.basis = basis == "combined_batch" ? engine::PercentileBasis::kCombinedBatch
                                        : engine::PercentileBasis::kBoardReference;
    std::string term = j.value("termination", "none");
    c.termination = term == "evasive_ratio" ? engine::TerminationProtocol::kEvasiveRatio
                                            : engine::TerminationProtocol::kNone;
    c.stop_at_termination = j.value("stop_at_termination", false);

    if (j.contains("tth_grid")) c.tth_grid = j.at("tth_grid").get<std::vector<double>>();
    if (j.contains("ratios")) {
        c.ratios.clear();
        for (const auto& r : j.at("ratios")) {
            RatioInterval ri;
            ri.lo = r.at("lo").get<double>();
            ri.hi = r.at("hi").get<double>();
            ri.label = r.value("label", "[" + std::to_string(ri.lo) + "," + std::to_string(ri.hi) + "]");
            c.ratios.push_back(ri);
        }
    }
    if (j.contains("schemes")) {
        c.schemes.clear();
        for (const auto& s : j.at("schemes")) {
            SchemePairing pair;
            pair.label = s.at("label").get<std::string>();
            double tth = s.value("tth", 0.95);
            pair.defender = defender_from_id(s.at("defender").get<std::string>(), tth,
                                             s.value("red", 0.05), s.value("k", 0.5),
                                             s.value("defender_q", 0.9));
            if (s.value("elastic_signal", "auto") == "quality")
                pair.defender.elastic_signal =
                    strategies::DefenderScheme::ElasticSignal::kQuality;
            pair.attacker = attacker_from_id(s.at("attacker").get<std::string>(),
                                             s.value("attacker_q", 0.99), s.value("p", 1.0), tth,
                                             s.value("k", 0.5));
            pair.no_trigger = s.value("no_trigger", false);
            if (s.contains("stop_at_termination"))
                pair.stop_at_termination = s.at("stop_at_termination").get<bool>();
            c.schemes.push_back(pair);
        }
    }

    if (j.contains("d_grid")) c.d_grid = j.at("d_grid").get<std::vector<double>>();
    if (j.contains("p_grid")) c.p_grid = j.at("p_grid").get<std::vector<double>>();
    if (j.contains("g_ac_grid")) c.g_ac_grid = j.at("g_ac_grid").get<std::vector<double>>();

    if (j.contains("epsilon_grid")) c.epsilon_grid = j.at("epsilon_grid").get<std::vector<double>>();
    c.ldp_users = j.value("ldp_users", c.ldp_users);
    c.ldp_attackers = j.value("ldp_attackers", c.ldp_attackers);
    c.ldp_honest_value = j.value("ldp_honest_value", c.ldp_honest_value);
    c.ldp_target = j.value("ldp_target", c.ldp_target);
    c.ldp_attack = j.value("ldp_attack", c.ldp_attack);
    return c;
}

// ---------------------------------------------------------------------------
// Runner implementation
// ---------------------------------------------------------------------------

namespace detail {

struct GameCellStats {
    std::vector<double> sse_per_point;
    std::vector<double> sse_offset;
    std::vector<double> centroid_dist;
    std::vector<double> untrimmed;
    std::vector<double> termination;
};

}  // namespace detail

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<ResultRow> rows;

    if (cfg.mode == ExperimentConfig::Mode::kTheory) {
        for (double d : cfg.d_grid)
            for (double p : cfg.p_grid)
                for (double g : cfg.g_ac_grid) {
                    char label[96];
                    std::snprintf(label, sizeof(label), "d=%g;p=%g;g_ac=%g", d, p, g);
                    rows.push_back(ResultRow{"compliance", label, 0.0, "delta_max",
                                             theory::compliance_threshold(d, p, g), 0.0, 1});
                }
        return rows;
    }

    if (cfg.mode == ExperimentConfig::Mode::kLdp) {
        privacy::AttackKind kind = cfg.ldp_attack == "output_manipulation"
                                       ? privacy::AttackKind::kOutputManipulation
                                       : privacy::AttackKind::kInputManipulation;
        for (double eps : cfg.epsilon_grid) {
            privacy::LdpConfig ldp{eps};
            std::vector<double> estimates;
            estimates.reserve(static_cast<std::size_t>(cfg.repetitions));
            for (int rep = 0; rep < cfg.repetitions; ++rep) {
                char cell[64];
                std::snprintf(cell, sizeof(cell), "ldp:%g:%s", eps, cfg.ldp_attack.c_str());
                rng::Stream stream(detail::cell_seed(cfg.seed, cell) + static_cast<std::uint64_t>(rep));
                std::vector<privacy::Report> reports;
                reports.reserve(static_cast<std::size_t>(cfg.ldp_users));
                int honest = cfg.ldp_users - cfg.ldp_attackers;
                for (int i = 0; i < honest; ++i)
                    reports.push_back(privacy::ldp_perturb(cfg.ldp_honest_value, ldp, stream));
                auto attack =
                    privacy::craft_attack(kind, cfg.ldp_target, cfg.ldp_attackers, ldp, stream);
                reports.insert(reports.end(), attack.begin(), attack.end());
                estimates.push_back(privacy::ldp_mean(reports));
            }
            auto agg_mean = detail::aggregate(estimates);
            char label[64];
            std::snprintf(label, sizeof(label), "eps=%g", eps);
            rows.push_back(ResultRow{cfg.ldp_attack, label, 0.0, "mean_estimate", agg_mean.mean,
                                     agg_mean.stderr_, cfg.repetitions});
            rows.push_back(ResultRow{cfg.ldp_attack, label, 0.0, "mse",
                                     privacy::mse(estimates, cfg.ldp_honest_value), 0.0,
                                     cfg.repetitions});
        }
        return rows;
    }

    // game mode
    engine::BenignSource source = cfg.dataset_path.empty()
                                      ? cfg.synth.to_source()
                                      : engine::BenignSource::empirical(
                                            load_dataset(cfg.dataset_path, cfg.normalize).values);
    std::optional<metrics::Centroids> truth;
    if (cfg.dataset_path.empty() && cfg.synth.kind == SynthSpec::Kind::kClusters) {
        metrics::Centroids t;
        for (double c : cfg.synth.centers) t.points.push_back({c});
        truth = t;
    }

    for (const auto& pairing : cfg.schemes) {
        for (const auto& ratio : cfg.ratios) {
            for (double tth : cfg.tth_grid) {
                char cell_id[160];
                std::snprintf(cell_id, sizeof(cell_id), "%s|%s|%g", pairing.label.c_str(),
                              ratio.label.c_str(), tth);
                std::uint64_t base = detail::cell_seed(cfg.seed, cell_id);
                char gt_id[64];
                std::snprintf(gt_id, sizeof(gt_id), "groundtruth|%g", tth);
                std::uint64_t gt_base = detail::cell_seed(cfg.seed, gt_id);

                detail::GameCellStats stats;
                try {
                for (int rep = 0; rep < cfg.repetitions; ++rep) {
                    engine::GameConfig game;
                    game.round_no = cfg.round_no;
                    game.samples_per_round = cfg.samples_per_round;
                    game.attack_ratio = engine::AttackRatio::interval(ratio.lo, ratio.hi);
                    game.defender = pairing.defender;
                    game.attacker = pairing.attacker;
                    game.seed = base + static_cast<std::uint64_t>(rep);
                    game.benign_source = source;
                    game.trim_mode = cfg.trim_mode;
                    game.percentile_basis = cfg.basis;
                    game.monitor_from = cfg.monitor_from;
                    game.red = cfg.red;
                    game.termination = cfg.termination;
                    game.stop_at_termination =
                        pairing.stop_at_termination.value_or(cfg.stop_at_termination);
                    game.no_trigger = pairing.no_trigger;
                    game.board_samples = cfg.board_samples;
                    game.collect_kept = true;
                    engine::GameTrace trace = engine::run_game(game);

                    stats.untrimmed.push_back(metrics::untrimmed_poison_fraction(trace));
                    stats.termination.push_back(trace.termination_round);

                    if (truth.has_value() && !trace.kept_values.empty()) {
                        std::vector<metrics::Point> pts;
                        pts.reserve(trace.kept_values.size());
                        for (double v : trace.kept_values) pts.push_back({v});
                        auto fit = metrics::kmeans_fit(pts, cfg.kmeans_k, 50,
                                                       game.seed ^ 0x5eedULL);
                        double per_point =
                            metrics::sse(pts, fit.centroids) / static_cast<double>(pts.size());

                        engine::GameConfig gt = game;
                        gt.attack_ratio = engine::AttackRatio::fixed(0.0);
                        gt.defender = strategies::DefenderScheme::ostrich();
                        gt.termination = engine::TerminationProtocol::kNone;
                        gt.stop_at_termination = false;
                        gt.seed = gt_base + static_cast<std::uint64_t>(rep);
                        engine::GameTrace gt_trace = engine::run_game(gt);
                        std::vector<metrics::Point> gt_pts;
                        gt_pts.reserve(gt_trace.kept_values.size());
                        for (double v : gt_trace.kept_values) gt_pts.push_back({v});
                        auto gt_fit = metrics::kmeans_fit(gt_pts, cfg.kmeans_k, 50,
                                                          gt.seed ^ 0x5eedULL);
                        double gt_per_point = metrics::sse(gt_pts, gt_fit.centroids) /
                                              static_cast<double>(gt_pts.size());

                        stats.sse_per_point.push_back(per_point);
                        stats.sse_offset.push_back(std::fabs(per_point - gt_per_point));
                        stats.centroid_dist.push_back(
                            metrics::centroid_distance(fit.centroids, *truth));
                    }
                }

                auto push = [&](const std::string& metric, const std::vector<double>& xs) {
                    if (xs.empty()) return;
                    auto agg = detail::aggregate(xs);
                    rows.push_back(ResultRow{pairing.label, ratio.label, tth, metric, agg.mean,
                                             agg.stderr_, cfg.repetitions});
                };
                push("sse_per_point", stats.sse_per_point);
                push("sse_offset", stats.sse_offset);
                push("centroid_distance", stats.centroid_dist);
                push("untrimmed_poison_fraction", stats.untrimmed);
                push("avg_termination_round", stats.termination);
            }
        }
    }
    return rows;
}

}  // namespace trimgame::harness
