// Command-line front door: single games, config-driven experiments,
// compliance/trajectory sweeps, and perturbation sweeps. Every output is CSV
// with a fixed header.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trimgame/trimgame.hpp"

using namespace trimgame;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

void write_rows(const std::vector<harness::ResultRow>& rows, const std::string& path) {
    if (path.empty()) {
        harness::write_results_csv(rows, std::cout);
    } else {
        auto out = open_out(path);
        harness::write_results_csv(rows, out);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interactive trimming game simulator and analysis toolkit"};
    app.require_subcommand(1);

    // --- simulate: one game, trace CSV out ------------------------------------
    auto* sim = app.add_subcommand("simulate", "play one game and write its round-by-round trace");
    std::string sim_defender = "titfortat", sim_attacker = "mixed_evasive", sim_out;
    double sim_tth = 0.93, sim_red = 0.05, sim_k = 0.5, sim_p = 1.0, sim_q_def = 0.9,
           sim_q_att = 0.99;
    double sim_ratio_lo = 0.2, sim_ratio_hi = 0.2, sim_monitor = 0.9;
    int sim_rounds = 25, sim_samples = 1000, sim_board = 10000;
    std::uint64_t sim_seed = 1;
    std::string sim_trim = "value", sim_basis = "board_reference", sim_term = "none";
    bool sim_stop = false, sim_no_trigger = false;
    sim->add_option("--defender", sim_defender, "ostrich | baseline | titfortat | elastic");
    sim->add_option("--attacker", sim_attacker,
                    "static_attacker | ideal_static | mixed_evasive | elastic_adversary");
    sim->add_option("--tth", sim_tth, "threshold anchor (fraction)");
    sim->add_option("--red", sim_red, "titfortat redundancy");
    sim->add_option("--k", sim_k, "elastic response intensity");
    sim->add_option("--p", sim_p, "mixed-evasive high-base probability");
    sim->add_option("--defender-q", sim_q_def, "static baseline threshold");
    sim->add_option("--attacker-q", sim_q_att, "static attacker percentile");
    sim->add_option("--ratio-lo", sim_ratio_lo, "attack ratio interval low end");
    sim->add_option("--ratio-hi", sim_ratio_hi, "attack ratio interval high end");
    sim->add_option("--rounds", sim_rounds, "number of rounds");
    sim->add_option("--samples", sim_samples, "samples per round");
    sim->add_option("--board", sim_board, "public board reference size");
    sim->add_option("--monitor", sim_monitor, "quality monitor percentile");
    sim->add_option("--seed", sim_seed, "seed");
    sim->add_option("--trim-mode", sim_trim, "value | fixed_amount");
    sim->add_option("--basis", sim_basis, "board_reference | combined_batch");
    sim->add_option("--termination", sim_term, "none | evasive_ratio");
    sim->add_flag("--stop-at-termination", sim_stop, "end the game at the protocol trigger");
    sim->add_flag("--no-trigger", sim_no_trigger, "suppress the titfortat quality switch");
    sim->add_option("-o,--out", sim_out, "trace CSV path (stdout when omitted)");

    // --- experiment: config file in, result CSV out ---------------------------
    auto* exp = app.add_subcommand("experiment", "run a config-driven experiment grid");
    std::string exp_config, exp_out;
    std::optional<std::uint64_t> exp_seed;
    exp->add_option("-c,--config", exp_config, "experiment config (JSON)")->required();
    exp->add_option("-o,--out", exp_out, "result CSV path (overrides config output)");
    exp->add_option("--seed", exp_seed, "override the config seed");

    // --- theory: compliance sweeps and trajectories ---------------------------
    auto* theo = app.add_subcommand("theory", "compliance sweeps and dynamics trajectories");
    std::string theo_mode = "compliance", theo_out;
    double theo_ma = 1.0, theo_mc = 1.0, theo_k = 0.5;
    double theo_ua = 1.0, theo_uc = -1.0, theo_dua = 0.0, theo_duc = 0.0;
    double theo_r1 = 0.0, theo_r2 = 6.283185307179586, theo_h = 1e-3;
    std::vector<double> theo_d{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> theo_p{0.0, 0.25, 0.5, 0.75, 0.99};
    std::vector<double> theo_g{0.5, 1.0, 2.0};
    theo->add_option("--mode", theo_mode, "compliance | trajectory");
    theo->add_option("--m-a", theo_ma, "adversary inertia");
    theo->add_option("--m-c", theo_mc, "collector inertia");
    theo->add_option("--k", theo_k, "interaction strength");
    theo->add_option("--u-a", theo_ua, "initial adversary utility");
    theo->add_option("--u-c", theo_uc, "initial collector utility");
    theo->add_option("--du-a", theo_dua, "initial adversary rate");
    theo->add_option("--du-c", theo_duc, "initial collector rate");
    theo->add_option("--r1", theo_r1, "span start");
    theo->add_option("--r2", theo_r2, "span end");
    theo->add_option("--step", theo_h, "integrator step");
    theo->add_option("--d-grid", theo_d, "discount grid");
    theo->add_option("--p-grid", theo_p, "misjudgement grid");
    theo->add_option("--g-grid", theo_g, "cooperation gain grid");
    theo->add_option("-o,--out", theo_out, "output CSV path (stdout when omitted)");

    // --- ldp: perturbation / MSE sweeps ----------------------------------------
    auto* ldp = app.add_subcommand("ldp", "local-perturbation mean estimation sweeps");
    std::vector<double> ldp_eps{0.5, 1.0, 2.0, 4.0};
    int ldp_users = 10000, ldp_attackers = 0, ldp_reps = 100;
    double ldp_value = 0.3, ldp_target = 1.0;
    std::string ldp_attack = "input_manipulation", ldp_out;
    std::uint64_t ldp_seed = 1;
    ldp->add_option("--epsilon-grid", ldp_eps, "privacy budgets");
    ldp->add_option("--users", ldp_users, "total users per estimate");
    ldp->add_option("--attackers", ldp_attackers, "manipulating users");
    ldp->add_option("--honest-value", ldp_value, "honest input value");
    ldp->add_option("--target", ldp_target, "attack target value");
    ldp->add_option("--attack", ldp_attack, "input_manipulation | output_manipulation");
    ldp->add_option("--repetitions", ldp_reps, "estimates per cell");
    ldp->add_option("--seed", ldp_seed, "seed");
    ldp->add_option("-o,--out", ldp_out, "output CSV path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            engine::GameConfig cfg;
            cfg.round_no = sim_rounds;
            cfg.samples_per_round = sim_samples;
            cfg.attack_ratio = engine::AttackRatio::interval(sim_ratio_lo, sim_ratio_hi);
            cfg.defender =
                harness::defender_from_id(sim_defender, sim_tth, sim_red, sim_k, sim_q_def);
            cfg.attacker = harness::attacker_from_id(sim_attacker, sim_q_att, sim_p, sim_tth, sim_k);
            cfg.seed = sim_seed;
            cfg.board_samples = sim_board;
            cfg.monitor_from = sim_monitor;
            cfg.red = sim_red;
            cfg.trim_mode = sim_trim == "fixed_amount" ? engine::TrimMode::kFixedAmount
                                                       : engine::TrimMode::kValue;
            cfg.percentile_basis = sim_basis == "combined_batch"
                                       ? engine::PercentileBasis::kCombinedBatch
                                       : engine::PercentileBasis::kBoardReference;
            cfg.termination = sim_term == "evasive_ratio"
                                  ? engine::TerminationProtocol::kEvasiveRatio
                                  : engine::TerminationProtocol::kNone;
            cfg.stop_at_termination = sim_stop;
            cfg.no_trigger = sim_no_trigger;
            auto trace = engine::run_game(cfg);
            if (sim_out.empty()) {
                trace.write_csv(std::cout);
            } else {
                auto out = open_out(sim_out);
                trace.write_csv(out);
            }
            std::cerr << "termination_round=" << trace.termination_round
                      << (trace.terminated ? " (triggered)" : " (cap)") << "\n";
            return 0;
        }

        if (exp->parsed()) {
            auto cfg = harness::ExperimentConfig::from_file(exp_config);
            if (exp_seed.has_value()) cfg.seed = *exp_seed;
            if (!exp_out.empty()) cfg.output_path = exp_out;
            auto rows = harness::run_experiment(cfg);
            write_rows(rows, cfg.output_path);
            return 0;
        }

        if (theo->parsed()) {
            if (theo_mode == "trajectory") {
                theory::DynamicsParams params{theo_ma, theo_mc, theo_k};
                auto traj = theory::integrate_dynamics(
                    params, theory::InitialState{theo_ua, theo_uc, theo_dua, theo_duc}, theo_r1,
                    theo_r2, theo_h);
                if (theo_out.empty()) {
                    theory::write_trajectory_csv(traj, params, std::cout);
                } else {
                    auto out = open_out(theo_out);
                    theory::write_trajectory_csv(traj, params, out);
                }
                return 0;
            }
            harness::ExperimentConfig cfg;
            cfg.mode = harness::ExperimentConfig::Mode::kTheory;
            cfg.d_grid = theo_d;
            cfg.p_grid = theo_p;
            cfg.g_ac_grid = theo_g;
            write_rows(harness::run_experiment(cfg), theo_out);
            return 0;
        }

        if (ldp->parsed()) {
            harness::ExperimentConfig cfg;
            cfg.mode = harness::ExperimentConfig::Mode::kLdp;
            cfg.epsilon_grid = ldp_eps;
            cfg.ldp_users = ldp_users;
            cfg.ldp_attackers = ldp_attackers;
            cfg.ldp_honest_value = ldp_value;
            cfg.ldp_target = ldp_target;
            cfg.ldp_attack = ldp_attack;
            cfg.repetitions = ldp_reps;
            cfg.seed = ldp_seed;
            write_rows(harness::run_experiment(cfg), ldp_out);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
