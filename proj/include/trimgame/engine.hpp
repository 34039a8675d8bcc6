#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "trimgame/core.hpp"
#include "trimgame/rng.hpp"
#include "trimgame/strategies.hpp"

namespace trimgame::engine {

// ---------------------------------------------------------------------------
// Public board
// ---------------------------------------------------------------------------

// Shared record of untrimmed reference data. Both parties resolve percentile
// talk against it, which keeps the yardstick independent of the attack.
struct PublicBoard {
    std::vector<double> reference;  // ascending

    static PublicBoard from_values(std::vector<double> values) {
        PublicBoard b;
        b.reference = std::move(values);
        std::sort(b.reference.begin(), b.reference.end());
        return b;
    }

    std::size_t size() const { return reference.size(); }
    bool empty() const { return reference.empty(); }

    double percentile(double q) const {
        if (reference.empty()) throw std::domain_error("PublicBoard: empty reference");
        return core::quantile_sorted(reference, q);
    }
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Where the benign stream comes from. Kept engine-local so a game is fully
// reproducible from its config alone.
struct BenignSource {
    enum class Kind { kUniform, kGaussian, kClusters, kEmpirical };

    Kind kind = Kind::kUniform;
    double lo = 0.0, hi = 1.0;
    double mean = 0.0, sd = 1.0;
    std::vector<double> centers;
    double cluster_sd = 0.1;
    std::vector<double> pool;

    static BenignSource uniform(double lo, double hi) {
        BenignSource s;
        s.kind = Kind::kUniform;
        s.lo = lo;
        s.hi = hi;
        return s;
    }
    static BenignSource gaussian(double mean, double sd) {
        BenignSource s;
        s.kind = Kind::kGaussian;
        s.mean = mean;
        s.sd = sd;
        return s;
    }
    static BenignSource clusters(std::vector<double> centers, double sd) {
        BenignSource s;
        s.kind = Kind::kClusters;
        s.centers = std::move(centers);
        s.cluster_sd = sd;
        return s;
    }
    static BenignSource empirical(std::vector<double> pool) {
        BenignSource s;
        s.kind = Kind::kEmpirical;
        s.pool = std::move(pool);
        return s;
    }

    double draw(rng::Stream& stream) const {
        switch (kind) {
            case Kind::kUniform:
                return stream.uniform(lo, hi);
            case Kind::kGaussian:
                return stream.normal(mean, sd);
            case Kind::kClusters: {
                if (centers.empty()) throw std::domain_error("BenignSource: no cluster centers");
                std::size_t c = stream.uniform_index(centers.size());
                return stream.normal(centers[c], cluster_sd);
            }
            case Kind::kEmpirical:
                if (pool.empty()) throw std::domain_error("BenignSource: empty pool");
                return pool[stream.uniform_index(pool.size())];
        }
        throw std::domain_error("BenignSource: unknown kind");
    }
};

struct AttackRatio {
    double lo = 0.0;
    double hi = 0.0;

    static AttackRatio fixed(double r) { return AttackRatio{r, r}; }
    static AttackRatio interval(double lo, double hi) { return AttackRatio{lo, hi}; }

    bool is_interval() const { return hi > lo; }
    double mean() const { return 0.5 * (lo + hi); }

    void validate() const {
        if (lo < 0.0 || hi > 0.5 + 1e-12 || lo > hi)
            throw std::domain_error("AttackRatio: interval must satisfy 0 <= lo <= hi <= 0.5");
    }
};

enum class TrimMode {
    // Remove every value above the cutoff.
    kValue,
    // Remove at most round((1 - threshold) * n) values, taken from the top.
    // This is the "trim the same amount each round" reading: when poison
    // piles up at one point, only the top slice of it goes.
    kFixedAmount,
};

enum class PercentileBasis { kBoardReference, kCombinedBatch };

enum class TerminationProtocol {
    kNone,
    // Stop at the first round whose estimated evasive-poison ratio exceeds
    // (1 - p) + red. The estimate divides the quality monitor's excess mass
    // (benign-share corrected) by the declared attack ratio and clamps to
    // [0, 1]; its noise is the quality channel's sampling jitter.
    kEvasiveRatio,
};

struct GameConfig {
    int round_no = 20;
    int samples_per_round = 1000;
    AttackRatio attack_ratio = AttackRatio::fixed(0.0);
    strategies::DefenderScheme defender = strategies::DefenderScheme::ostrich();
    strategies::AttackerScheme attacker = strategies::AttackerScheme::static_percentile(0.99);
    std::uint64_t seed = 0;
    BenignSource benign_source = BenignSource::uniform(0.0, 1.0);
    PercentileBasis percentile_basis = PercentileBasis::kBoardReference;
    TrimMode trim_mode = TrimMode::kValue;
    double monitor_from = 0.90;   // quality monitor percentile
    double red = 0.05;            // redundancy for triggers
    TerminationProtocol termination = TerminationProtocol::kNone;
    std::optional<double> protocol_p;  // defaults to the attacker's mix p
    bool stop_at_termination = false;
    bool no_trigger = false;      // suppress the titfortat quality switch
    int board_samples = 10000;
    bool collect_kept = false;    // pool kept values into the trace

    void validate() const {
        if (round_no < 1) throw std::domain_error("GameConfig: round_no < 1");
        if (samples_per_round < 1) throw std::domain_error("GameConfig: samples_per_round < 1");
        attack_ratio.validate();
        defender.validate();
        attacker.validate();
        if (board_samples < samples_per_round)
            throw std::domain_error("GameConfig: board smaller than one round");
    }
};

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct RoundRecord {
    int round = 0;
    double threshold_pp = 100.0;
    double injection_pp = 0.0;  // mass-weighted mean of the round's placements
    double qe = 1.0;
    int kept_benign = 0;
    int kept_poison = 0;
    int removed_benign = 0;
    int removed_poison = 0;
    double u_a_increment = 0.0;
    double u_c_increment = 0.0;
    double monitor_observed = 0.0;  // raw monitored fraction; not serialized
};

struct GameTrace {
    std::vector<RoundRecord> rounds;
    bool terminated = false;
    int termination_round = 0;  // round cap when the protocol never fires
    std::vector<double> u_a;    // cumulative prefix sums
    std::vector<double> u_c;
    std::vector<double> kept_values;           // only when collect_kept
    std::vector<std::uint8_t> kept_poison_flags;

    // CSV columns: round,threshold_pp,injection_pp,qe,kept_benign,kept_poison,
    // removed_benign,removed_poison,u_a,u_c
    void write_csv(std::ostream& os) const {
        os << "round,threshold_pp,injection_pp,qe,kept_benign,kept_poison,"
              "removed_benign,removed_poison,u_a,u_c\n";
        char line[320];
        for (std::size_t i = 0; i < rounds.size(); ++i) {
            const RoundRecord& r = rounds[i];
            std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.12g,%d,%d,%d,%d,%.12g,%.12g\n",
                          r.round, r.threshold_pp, r.injection_pp, r.qe, r.kept_benign,
                          r.kept_poison, r.removed_benign, r.removed_poison, u_a[i], u_c[i]);
            os << line;
        }
    }
};

// ---------------------------------------------------------------------------
// Quality evaluation
// ---------------------------------------------------------------------------

// Fraction of the batch strictly above the board's monitor percentile.
inline double monitor_fraction(const core::Batch& batch, const PublicBoard& board,
                               double monitor_from) {
    if (board.empty()) throw std::domain_error("quality_evaluation: empty board");
    if (batch.empty()) throw std::domain_error("quality_evaluation: empty batch");
    double cut = board.percentile(monitor_from);
    std::size_t above = 0;
    for (double v : batch.values)
        if (v > cut) ++above;
    return static_cast<double>(above) / static_cast<double>(batch.size());
}

// Publicly recognized quality standard: QE = 1 - excess mass, where excess is
// the batch's fraction strictly above the board's monitor percentile minus
// the (1 - monitor) share a board-like batch would put there. QE = 1 for a
// batch distributed like the reference; a batch entirely above the monitor
// point bottoms out at QE = monitor_from's complement, 1 - monitor_from.
inline double quality_evaluation(const core::Batch& batch, const PublicBoard& board,
                                 double monitor_from) {
    double observed = monitor_fraction(batch, board, monitor_from);
    double excess = std::max(0.0, observed - (1.0 - monitor_from));
    return 1.0 - excess;
}

// ---------------------------------------------------------------------------
// Game state and rounds
// ---------------------------------------------------------------------------

struct GameState {
    PublicBoard board;
    rng::Stream stream;
    strategies::TriggerState trigger;
    double prev_threshold_pp = 0.0;            // defender's last published trim
    std::optional<double> prev_attacker_pp;    // set when last round had one position
    int round = 0;

    GameState(PublicBoard b, std::uint64_t seed) : board(std::move(b)), stream(seed) {}
};

namespace detail {

struct Placement {
    double pp = 0.0;
    int count = 0;
};

// Initial published positions: titfortat opens soft, elastic opens hard,
// statics are what they are.
inline double initial_threshold_pp(const strategies::DefenderScheme& d) {
    using K = strategies::DefenderScheme::Kind;
    switch (d.kind) {
        case K::kOstrich:
            return 100.0;
        case K::kStaticBaseline:
            return d.q * 100.0;
        case K::kTitfortat:
            return d.tth * 100.0 + d.soft_offset_pp;
        case K::kElastic:
            return d.tth * 100.0 + d.hard_offset_pp;
    }
    return 100.0;
}

// Poison placements for the round. The mixed scheme splits the round's poison
// mass across its two bases in exact proportion (a colluding pool realizes
// the mix deterministically); everything else is a single position.
inline std::vector<Placement> attacker_placements(const GameConfig& cfg, const GameState& state,
                                                  int poison_count) {
    using K = strategies::AttackerScheme::Kind;
    const auto& a = cfg.attacker;
    std::vector<Placement> out;
    if (poison_count <= 0) return out;
    switch (a.kind) {
        case K::kStaticPercentile:
            out.push_back({a.q * 100.0, poison_count});
            break;
        case K::kIdealStatic:
            out.push_back({state.prev_threshold_pp + a.offset_pp, poison_count});
            break;
        case K::kMixedEvasive: {
            int hi_count = static_cast<int>(std::llround(a.p * poison_count));
            if (hi_count > 0) out.push_back({a.hi * 100.0, hi_count});
            if (poison_count - hi_count > 0) out.push_back({a.lo * 100.0, poison_count - hi_count});
            break;
        }
        case K::kElasticAdversary: {
            double pp = state.round <= 1
                            ? a.tth * 100.0 + 1.0
                            : strategies::elastic_attacker_update(a.tth * 100.0, a.k,
                                                                  state.prev_threshold_pp);
            out.push_back({pp, poison_count});
            break;
        }
    }
    return out;
}

// Maps a percentile rank onto a concrete value. Board basis reads the public
// board. Combined basis accounts for the poison's own mass sitting at the
// point: the value is the benign draw's quantile at (q n - c) / (n - c).
inline double placement_value(double pp, const GameConfig& cfg,
                              const std::vector<double>& benign_sorted,
                              const PublicBoard& board, int poison_count) {
    double q = pp / 100.0;
    if (q < 0.0) q = 0.0;
    if (q > 1.0) q = 1.0;
    if (cfg.percentile_basis == PercentileBasis::kBoardReference) return board.percentile(q);
    double n = static_cast<double>(cfg.samples_per_round);
    double nb = n - static_cast<double>(poison_count);
    if (nb <= 0.0) return board.percentile(q);
    double adjusted = (q * n - static_cast<double>(poison_count)) / nb;
    if (adjusted < 0.0) adjusted = 0.0;
    if (adjusted > 1.0) adjusted = 1.0;
    return core::quantile_sorted(benign_sorted, adjusted);
}

}  // namespace detail

// One full exchange: read board, inject, collect, evaluate quality, trim,
// record, update both parties' positions.
inline RoundRecord play_round(GameState& state, const GameConfig& cfg, GameTrace& trace) {
    const int n = cfg.samples_per_round;
    state.round += 1;

    double ratio = cfg.attack_ratio.is_interval()
                       ? state.stream.uniform(cfg.attack_ratio.lo, cfg.attack_ratio.hi)
                       : cfg.attack_ratio.lo;
    int poison_count = static_cast<int>(std::llround(ratio * n));
    int benign_count = n - poison_count;

    std::vector<double> benign(static_cast<std::size_t>(benign_count));
    for (auto& v : benign) v = cfg.benign_source.draw(state.stream);
    std::vector<double> benign_sorted = benign;
    std::sort(benign_sorted.begin(), benign_sorted.end());

    auto placements = detail::attacker_placements(cfg, state, poison_count);

    core::Batch batch;
    batch.values.reserve(static_cast<std::size_t>(n));
    for (double v : benign) batch.push_back(v, false);
    double injection_pp = 0.0;
    for (const auto& pl : placements) {
        double value = detail::placement_value(pl.pp, cfg, benign_sorted, state.board, poison_count);
        for (int i = 0; i < pl.count; ++i) batch.push_back(value, true);
        injection_pp += pl.pp * pl.count;
    }
    if (poison_count > 0) injection_pp /= poison_count;

    double observed = monitor_fraction(batch, state.board, cfg.monitor_from);
    double qe = 1.0 - std::max(0.0, observed - (1.0 - cfg.monitor_from));

    // Defender's threshold for this round. Titfortat and the position-response
    // elastic rule depend on previous rounds only; the quality-driven elastic
    // rule evaluates the received batch and then trims it.
    using DK = strategies::DefenderScheme::Kind;
    const auto& d = cfg.defender;
    double threshold_pp = 100.0;
    bool trim = true;
    switch (d.kind) {
        case DK::kOstrich:
            trim = false;
            break;
        case DK::kStaticBaseline:
            threshold_pp = d.q * 100.0;
            break;
        case DK::kTitfortat:
            threshold_pp =
                d.tth * 100.0 + (state.trigger.triggered ? d.hard_offset_pp : d.soft_offset_pp);
            break;
        case DK::kElastic: {
            bool use_position =
                state.prev_attacker_pp.has_value() &&
                d.elastic_signal == strategies::DefenderScheme::ElasticSignal::kAuto;
            if (state.round <= 1) {
                threshold_pp = d.tth * 100.0 + d.hard_offset_pp;
            } else if (use_position) {
                threshold_pp =
                    strategies::elastic_defender_update(d.tth * 100.0, d.k, *state.prev_attacker_pp);
            } else {
                // No single observable position (mixed placement): respond to
                // quality instead. Quality scores are already in [0, 1].
                threshold_pp = strategies::elastic_threshold(
                    qe, d.k, d.tth * 100.0 + d.hard_offset_pp, d.tth * 100.0 + d.soft_offset_pp);
            }
            break;
        }
    }

    RoundRecord rec;
    rec.round = state.round;
    rec.threshold_pp = trim ? threshold_pp : 100.0;
    rec.injection_pp = injection_pp;
    rec.qe = qe;
    rec.monitor_observed = observed;

    std::vector<std::uint8_t> removed(batch.size(), 0);
    if (trim) {
        double cutoff;
        if (cfg.percentile_basis == PercentileBasis::kCombinedBatch) {
            std::vector<double> combined = batch.values;
            std::sort(combined.begin(), combined.end());
            cutoff = core::quantile_sorted(combined, threshold_pp / 100.0);
        } else {
            cutoff = state.board.percentile(threshold_pp / 100.0);
        }
        if (cfg.trim_mode == TrimMode::kValue) {
            for (std::size_t i = 0; i < batch.size(); ++i)
                if (batch.values[i] > cutoff) removed[i] = 1;
        } else {
            // Fixed-amount trim: the threshold fixes how much goes, the values
            // fix what goes. Highest first; poison first among equal values.
            auto cap = static_cast<std::size_t>(
                std::llround((1.0 - threshold_pp / 100.0) * static_cast<double>(n)));
            std::vector<std::size_t> above;
            for (std::size_t i = 0; i < batch.size(); ++i)
                if (batch.values[i] > cutoff) above.push_back(i);
            if (above.size() > cap) {
                std::sort(above.begin(), above.end(), [&](std::size_t lhs, std::size_t rhs) {
                    if (batch.values[lhs] != batch.values[rhs])
                        return batch.values[lhs] > batch.values[rhs];
                    if (batch.poison[lhs] != batch.poison[rhs])
                        return batch.poison[lhs] > batch.poison[rhs];
                    return lhs < rhs;
                });
                above.resize(cap);
            }
            for (std::size_t i : above) removed[i] = 1;
        }
    }

    for (std::size_t i = 0; i < batch.size(); ++i) {
        bool poison = batch.poison[i] != 0;
        if (removed[i]) {
            (poison ? rec.removed_poison : rec.removed_benign) += 1;
        } else {
            (poison ? rec.kept_poison : rec.kept_benign) += 1;
            if (cfg.collect_kept) {
                trace.kept_values.push_back(batch.values[i]);
                trace.kept_poison_flags.push_back(batch.poison[i]);
            }
        }
    }

    rec.u_a_increment =
        poison_count > 0 ? static_cast<double>(rec.kept_poison) / poison_count : 0.0;
    double benign_removed_frac =
        benign_count > 0 ? static_cast<double>(rec.removed_benign) / benign_count : 0.0;
    rec.u_c_increment = -(rec.u_a_increment + benign_removed_frac);

    // Trigger bookkeeping. With the evasive-ratio protocol active, the
    // protocol event is the judgement; otherwise titfortat watches raw
    // quality against the clean baseline.
    if (d.kind == DK::kTitfortat && cfg.termination == TerminationProtocol::kNone &&
        !cfg.no_trigger && !state.trigger.triggered) {
        auto step = strategies::titfortat_step(state.trigger, qe, 1.0, d.red, d, state.round);
        state.trigger = step.state;
    }

    state.prev_threshold_pp = trim ? threshold_pp : 100.0;
    if (placements.size() == 1)
        state.prev_attacker_pp = placements.front().pp;
    else
        state.prev_attacker_pp.reset();

    return rec;
}

namespace detail {

// Estimated fraction of the round's poison that evaded the monitor. The
// monitored tail mass, net of the benign share's expected tail, is the
// visible poison; dividing by the declared attack ratio and clamping to
// [0, 1] turns it into a ratio of the poison. Being a ratio it can never
// exceed 1, so a threshold above 1 is unreachable by construction.
inline double evasive_ratio_estimate(const RoundRecord& rec, const GameConfig& cfg) {
    double declared = cfg.attack_ratio.mean();
    if (declared <= 0.0) return 0.0;
    double benign_tail = (1.0 - declared) * (1.0 - cfg.monitor_from);
    double vis_frac = (rec.monitor_observed - benign_tail) / declared;
    if (vis_frac < 0.0) vis_frac = 0.0;
    if (vis_frac > 1.0) vis_frac = 1.0;
    return 1.0 - vis_frac;
}

}  // namespace detail

// Plays the configured number of rounds. The trace is a pure function of
// (config, seed). With the evasive-ratio protocol, termination_round is the
// first crossing; stop_at_termination additionally ends the game there.
inline GameTrace run_game(const GameConfig& cfg) {
    cfg.validate();

    rng::Stream board_stream(rng::derive_seed(cfg.seed, 0));
    std::vector<double> reference(static_cast<std::size_t>(cfg.board_samples));
    for (auto& v : reference) v = cfg.benign_source.draw(board_stream);

    GameState state(PublicBoard::from_values(std::move(reference)), rng::derive_seed(cfg.seed, 1));
    state.prev_threshold_pp = detail::initial_threshold_pp(cfg.defender);

    GameTrace trace;
    trace.termination_round = cfg.round_no;
    double protocol_p = cfg.protocol_p.value_or(cfg.attacker.p);

    double ua = 0.0, uc = 0.0;
    for (int i = 1; i <= cfg.round_no; ++i) {
        RoundRecord rec = play_round(state, cfg, trace);
        ua += rec.u_a_increment;
        uc += rec.u_c_increment;
        trace.rounds.push_back(rec);
        trace.u_a.push_back(ua);
        trace.u_c.push_back(uc);

        if (cfg.termination == TerminationProtocol::kEvasiveRatio && !trace.terminated) {
            double evasive = detail::evasive_ratio_estimate(rec, cfg);
            if (evasive > (1.0 - protocol_p) + cfg.red) {
                trace.terminated = true;
                trace.termination_round = i;
                state.trigger = state.trigger.fire(i);
                if (cfg.stop_at_termination) break;
            }
        }
    }
    return trace;
}

}  // namespace trimgame::engine
