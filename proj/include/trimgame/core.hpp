#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace trimgame::core {

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

// A round's collected values plus ground-truth poison flags. The flags are
// engine-internal bookkeeping; no strategy is allowed to read them.
struct Batch {
    std::vector<double> values;
    std::vector<std::uint8_t> poison;

    Batch() = default;

    static Batch from_values(std::vector<double> vals) {
        Batch b;
        b.poison.assign(vals.size(), 0);
        b.values = std::move(vals);
        return b;
    }

    void push_back(double value, bool is_poison) {
        values.push_back(value);
        poison.push_back(is_poison ? 1 : 0);
    }

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }

    void validate() const {
        if (values.size() != poison.size())
            throw std::domain_error("Batch: values and poison flags differ in length");
    }

    std::size_t poison_count() const {
        std::size_t n = 0;
        for (auto f : poison) n += f;
        return n;
    }
};

// ---------------------------------------------------------------------------
// Percentiles
// ---------------------------------------------------------------------------

// A percentile rank as a fraction in [0, 1]. Offsets between two ranks are
// expressed in percentage points (pp), e.g. 0.95 vs 0.92 is 3 pp.
struct PercentilePoint {
    double q = 0.0;

    static PercentilePoint from_fraction(double q) {
        if (q < 0.0 || q > 1.0) throw std::domain_error("PercentilePoint: q outside [0, 1]");
        return PercentilePoint{q};
    }
    static PercentilePoint from_pp(double pp) { return from_fraction(pp / 100.0); }

    double pp() const { return q * 100.0; }
};

// Nearest-rank quantile of an ascending-sorted range: value at rank
// ceil(q * n), clamped to rank >= 1. q = 1 returns the maximum. Trimming
// positions must be attainable data values, so no interpolation.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::domain_error("quantile_sorted: empty input");
    auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n));
    if (rank < 1) rank = 1;
    if (rank > sorted.size()) rank = sorted.size();
    return sorted[rank - 1];
}

inline double nearest_rank_percentile(const Batch& batch, PercentilePoint q) {
    if (batch.empty()) throw std::domain_error("nearest_rank_percentile: empty batch");
    std::vector<double> sorted = batch.values;
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, q.q);
}

// ---------------------------------------------------------------------------
// Trimming
// ---------------------------------------------------------------------------

struct TrimResult {
    Batch kept;
    Batch removed;
};

// Splits a batch at a cutoff: kept holds exactly the values <= cutoff,
// removed the values > cutoff. Order and poison flags are preserved.
inline TrimResult trim_above(const Batch& batch, double cutoff) {
    batch.validate();
    TrimResult out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch.values[i] <= cutoff)
            out.kept.push_back(batch.values[i], batch.poison[i] != 0);
        else
            out.removed.push_back(batch.values[i], batch.poison[i] != 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Strategy space
// ---------------------------------------------------------------------------

// The poison-value domain [x_lo, x_hi]; soft play sits near x_lo for the
// injector and near x_hi for the trimmer.
struct StrategySpace {
    double x_lo = 0.0;
    double x_hi = 0.0;

    void validate() const {
        if (!(x_lo <= x_hi)) throw std::domain_error("StrategySpace: x_lo > x_hi");
    }
    bool contains(double x) const { return x >= x_lo && x <= x_hi; }
};

struct MixedStrategy {
    double p_lo = 0.0;  // probability of playing x_lo

    double p_hi() const { return 1.0 - p_lo; }

    void validate() const {
        if (p_lo < 0.0 || p_lo > 1.0) throw std::domain_error("MixedStrategy: p_lo outside [0, 1]");
    }
};

// x = p_lo * x_lo + p_hi * x_hi; always inside the space.
inline double mixed_strategy_point(const StrategySpace& space, const MixedStrategy& mix) {
    space.validate();
    mix.validate();
    return mix.p_lo * space.x_lo + mix.p_hi() * space.x_hi;
}

// Inverse of mixed_strategy_point; unique when x_lo < x_hi.
inline MixedStrategy decompose_mixed_point(const StrategySpace& space, double x) {
    space.validate();
    if (!space.contains(x)) throw std::domain_error("decompose_mixed_point: x outside [x_lo, x_hi]");
    if (space.x_lo == space.x_hi) throw std::domain_error("decompose_mixed_point: degenerate space");
    return MixedStrategy{(space.x_hi - x) / (space.x_hi - space.x_lo)};
}

// ---------------------------------------------------------------------------
// One-shot stage game
// ---------------------------------------------------------------------------

enum class Move { kSoft, kHard };

// The 2x2 stage game. p_* are the injector's poisoning payoffs, t_* the
// collector's trimming losses, with p_hi > t_hi > p_lo > t_lo > 0. The game is
// zero-sum in the poisoning component; the collector additionally pays the
// trimming loss of her own move, so her payoff is -(P + T).
struct PayoffMatrix {
    double p_hi = 0.0;
    double t_hi = 0.0;
    double p_lo = 0.0;
    double t_lo = 0.0;

    void validate() const {
        if (!(p_hi > t_hi && t_hi > p_lo && p_lo > t_lo && t_lo > 0.0))
            throw std::domain_error("PayoffMatrix: requires p_hi > t_hi > p_lo > t_lo > 0");
    }

    // Trimming loss incurred by the collector's own move: trimming hard (near
    // x_lo) removes more honest data.
    double trimming_loss(Move collector) const { return collector == Move::kHard ? t_hi : t_lo; }

    // Poison payoff reaped by the adversary. A hard-trimming collector removes
    // the poison either way, so the adversary gains nothing against Hard.
    double poison_gain(Move collector, Move adversary) const {
        if (collector == Move::kHard) return 0.0;
        return adversary == Move::kHard ? p_hi : p_lo;
    }

    double adversary_payoff(Move collector, Move adversary) const {
        return poison_gain(collector, adversary);
    }

    double collector_payoff(Move collector, Move adversary) const {
        return -poison_gain(collector, adversary) - trimming_loss(collector);
    }
};

// Pure-strategy equilibrium of the stage game by exhaustive best-response
// check. The adversary is indifferent against a hard collector; that tie
// breaks toward Hard. Under the ordering invariants the result is
// (Hard, Hard).
inline std::pair<Move, Move> stage_game_equilibrium(const PayoffMatrix& m) {
    m.validate();
    constexpr Move moves[] = {Move::kSoft, Move::kHard};

    auto adversary_best = [&](Move c) {
        double soft = m.adversary_payoff(c, Move::kSoft);
        double hard = m.adversary_payoff(c, Move::kHard);
        return hard >= soft ? Move::kHard : Move::kSoft;
    };
    auto collector_best = [&](Move a) {
        double soft = m.collector_payoff(Move::kSoft, a);
        double hard = m.collector_payoff(Move::kHard, a);
        return hard >= soft ? Move::kHard : Move::kSoft;
    };

    for (Move c : moves)
        for (Move a : moves)
            if (collector_best(a) == c && adversary_best(c) == a) return {c, a};
    throw std::domain_error("stage_game_equilibrium: no pure equilibrium under tie-break");
}

}  // namespace trimgame::core
