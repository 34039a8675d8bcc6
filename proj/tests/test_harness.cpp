#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trimgame/harness.hpp"

using namespace trimgame;
using harness::ExperimentConfig;
using harness::SynthSpec;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("dataset loading with affine normalization") {
    auto path = temp_file("trimgame_ds.csv", "0\n43170\n86340\n");
    auto batch = harness::load_dataset(path, true);
    REQUIRE(batch.size() == 3);
    CHECK(batch.values[0] == Catch::Approx(-1.0));
    CHECK(batch.values[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(batch.values[2] == Catch::Approx(1.0));

    auto verbatim = harness::load_dataset(path, false);
    CHECK(verbatim.values[1] == Catch::Approx(43170.0));

    auto empty = temp_file("trimgame_empty.csv", "");
    CHECK_THROWS(harness::load_dataset(empty, true));

    auto broken = temp_file("trimgame_bad.csv", "1\nnot_a_number\n3\n");
    try {
        harness::load_dataset(broken, false);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);  // row number
    }
}

TEST_CASE("synthetic generation is deterministic and labeled") {
    auto spec = SynthSpec::uniform(0.0, 1.0);
    auto a = harness::synth_generate(spec, 10000, 42);
    auto b = harness::synth_generate(spec, 10000, 42);
    CHECK(a.batch.values == b.batch.values);

    auto c = harness::synth_generate(spec, 10000, 43);
    CHECK(a.batch.values != c.batch.values);

    auto single = harness::synth_generate(spec, 1, 1);
    CHECK(single.batch.size() == 1);

    auto clusters = harness::synth_generate(SynthSpec::clusters({-1.0, 1.0}, 0.1), 4000, 7);
    REQUIRE(clusters.true_centers.size() == 2);
    std::vector<metrics::Point> pts;
    for (double v : clusters.batch.values) pts.push_back({v});
    auto fit = metrics::kmeans_fit(pts, 2, 50, 7);
    metrics::Centroids truth{{{-1.0}, {1.0}}};
    CHECK(metrics::centroid_distance(fit.centroids, truth) < 0.05);
}

TEST_CASE("experiment runs are deterministic and aggregate correctly") {
    ExperimentConfig cfg;
    cfg.mode = ExperimentConfig::Mode::kGame;
    cfg.synth = SynthSpec::clusters({-1.0, 1.0}, 0.1);
    cfg.schemes = {{"titfortat", strategies::DefenderScheme::titfortat(0.95, 0.05),
                    strategies::AttackerScheme::mixed_evasive(1.0), true},
                   {"ostrich", strategies::DefenderScheme::ostrich(),
                    strategies::AttackerScheme::static_percentile(0.99), false}};
    cfg.ratios = {{"[0.2,0.5]", 0.2, 0.5}};
    cfg.tth_grid = {0.95};
    cfg.round_no = 5;
    cfg.repetitions = 3;
    cfg.samples_per_round = 300;
    cfg.board_samples = 4000;
    cfg.seed = 9;

    auto rows1 = harness::run_experiment(cfg);
    auto rows2 = harness::run_experiment(cfg);
    REQUIRE(rows1.size() == rows2.size());
    std::ostringstream a, b;
    harness::write_results_csv(rows1, a);
    harness::write_results_csv(rows2, b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("scheme,attack_ratio,tth,metric,value,stderr,repetitions\n", 0) == 0);

    bool found = false;
    for (const auto& r : rows1) {
        CHECK(r.stderr_ >= 0.0);
        CHECK(r.repetitions == 3);
        if (r.scheme == "ostrich" && r.metric == "untrimmed_poison_fraction") {
            found = true;
            CHECK(r.value > 0.15);  // ostrich keeps everything
        }
    }
    CHECK(found);
}

TEST_CASE("cell results do not depend on sibling cells") {
    ExperimentConfig base;
    base.mode = ExperimentConfig::Mode::kGame;
    base.synth = SynthSpec::clusters({-1.0, 1.0}, 0.1);
    base.schemes = {{"ostrich", strategies::DefenderScheme::ostrich(),
                     strategies::AttackerScheme::static_percentile(0.99), false}};
    base.ratios = {{"high", 0.2, 0.5}};
    base.tth_grid = {0.95};
    base.round_no = 4;
    base.repetitions = 2;
    base.samples_per_round = 200;
    base.board_samples = 3000;
    base.seed = 17;
    auto solo = harness::run_experiment(base);

    ExperimentConfig wide = base;
    wide.schemes.insert(wide.schemes.begin(),
                        {"titfortat", strategies::DefenderScheme::titfortat(0.95, 0.05),
                         strategies::AttackerScheme::ideal_static(), false});
    auto both = harness::run_experiment(wide);

    for (const auto& row : solo) {
        bool matched = false;
        for (const auto& other : both)
            if (other.scheme == row.scheme && other.metric == row.metric &&
                other.ratio_label == row.ratio_label && other.value == row.value)
                matched = true;
        CHECK(matched);
    }
}

TEST_CASE("aggregates equal a recomputation from per-repetition values") {
    // run the same cell twice with repetitions 1 and collect the values, then
    // compare against the aggregated mean at repetitions 2
    ExperimentConfig cfg;
    cfg.mode = ExperimentConfig::Mode::kGame;
    cfg.synth = SynthSpec::clusters({-1.0, 1.0}, 0.1);
    cfg.schemes = {{"ostrich", strategies::DefenderScheme::ostrich(),
                    strategies::AttackerScheme::static_percentile(0.99), false}};
    cfg.ratios = {{"r", 0.1, 0.1}};
    cfg.round_no = 3;
    cfg.repetitions = 2;
    cfg.samples_per_round = 200;
    cfg.board_samples = 3000;
    cfg.seed = 23;
    auto rows = harness::run_experiment(cfg);

    // independent recomputation of the per-rep untrimmed fractions
    std::vector<double> values;
    for (int rep = 0; rep < 2; ++rep) {
        engine::GameConfig game;
        game.round_no = 3;
        game.samples_per_round = 200;
        game.attack_ratio = engine::AttackRatio::interval(0.1, 0.1);
        game.defender = strategies::DefenderScheme::ostrich();
        game.attacker = strategies::AttackerScheme::static_percentile(0.99);
        game.benign_source = cfg.synth.to_source();
        game.board_samples = 3000;
        game.collect_kept = true;
        char cell_id[160];
        std::snprintf(cell_id, sizeof(cell_id), "%s|%s|%g", "ostrich", "r", 0.95);
        game.seed = harness::detail::cell_seed(cfg.seed, cell_id) + static_cast<std::uint64_t>(rep);
        values.push_back(metrics::untrimmed_poison_fraction(engine::run_game(game)));
    }
    double mean = 0.5 * (values[0] + values[1]);
    double sd = std::sqrt((values[0] - mean) * (values[0] - mean) +
                          (values[1] - mean) * (values[1] - mean));
    double se = sd / std::sqrt(2.0);
    for (const auto& r : rows)
        if (r.metric == "untrimmed_poison_fraction") {
            CHECK(std::fabs(r.value - mean) < 1e-12);
            CHECK(std::fabs(r.stderr_ - se) < 1e-12);
        }
}

TEST_CASE("config json round trip covers the documented fields") {
    nlohmann::json j = {
        {"mode", "game"},
        {"synth", {{"kind", "clusters"}, {"centers", {-1.0, 1.0}}, {"sd", 0.1}}},
        {"round_no", 7},
        {"repetitions", 4},
        {"samples_per_round", 256},
        {"seed", 99},
        {"trim_mode", "fixed_amount"},
        {"termination", "evasive_ratio"},
        {"stop_at_termination", true},
        {"tth_grid", {0.93}},
        {"ratios", {{{"lo", 0.2}, {"hi", 0.2}, {"label", "0.2"}}}},
        {"schemes",
         {{{"label", "titfortat"},
           {"defender", "titfortat"},
           {"attacker", "mixed_evasive"},
           {"tth", 0.93},
           {"p", 0.5}}}},
    };
    auto cfg = ExperimentConfig::from_json(j);
    CHECK(cfg.round_no == 7);
    CHECK(cfg.repetitions == 4);
    CHECK(cfg.trim_mode == engine::TrimMode::kFixedAmount);
    CHECK(cfg.termination == engine::TerminationProtocol::kEvasiveRatio);
    CHECK(cfg.stop_at_termination);
    REQUIRE(cfg.schemes.size() == 1);
    CHECK(cfg.schemes[0].defender.kind == strategies::DefenderScheme::Kind::kTitfortat);
    CHECK(cfg.schemes[0].attacker.p == Catch::Approx(0.5));
    CHECK(cfg.ratios[0].label == "0.2");

    nlohmann::json theory = {{"mode", "theory"}, {"d_grid", {0.5}}, {"p_grid", {0.0, 1.0}}};
    auto tcfg = ExperimentConfig::from_json(theory);
    auto rows = harness::run_experiment(tcfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].metric == "delta_max");
    CHECK(rows[0].value == Catch::Approx(0.5));   // p = 0 -> d * g_ac
    CHECK(rows[1].value == Catch::Approx(0.0).margin(1e-15));  // p = 1 -> 0
}

TEST_CASE("ldp mode emits a decreasing mse sweep") {
    ExperimentConfig cfg;
    cfg.mode = ExperimentConfig::Mode::kLdp;
    cfg.epsilon_grid = {0.5, 2.0};
    cfg.repetitions = 50;
    cfg.ldp_users = 2000;
    cfg.ldp_attackers = 0;
    cfg.ldp_honest_value = 0.3;
    cfg.seed = 5;
    auto rows = harness::run_experiment(cfg);
    double mse_lo = 0, mse_hi = 0;
    for (const auto& r : rows) {
        if (r.metric == "mse" && r.ratio_label == "eps=0.5") mse_lo = r.value;
        if (r.metric == "mse" && r.ratio_label == "eps=2") mse_hi = r.value;
    }
    CHECK(mse_lo > mse_hi);
}
