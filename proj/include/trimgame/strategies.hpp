#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "trimgame/core.hpp"
#include "trimgame/rng.hpp"

namespace trimgame::strategies {

using core::PercentilePoint;

// ---------------------------------------------------------------------------
// Scheme descriptions
// ---------------------------------------------------------------------------

// Defender policies. All thresholds are percentile ranks; offsets are in
// percentage points around tth.
struct DefenderScheme {
    enum class Kind { kOstrich, kStaticBaseline, kTitfortat, kElastic };

    // What the elastic rule responds to: the attacker's published position
    // when one is observable (falling back to quality against mixed
    // placements), or always the quality score.
    enum class ElasticSignal { kAuto, kQuality };

    Kind kind = Kind::kOstrich;
    double q = 1.0;      // StaticBaseline threshold (fraction)
    double tth = 0.95;   // Titfortat / Elastic anchor (fraction)
    double red = 0.05;   // Titfortat redundancy
    double k = 0.0;      // Elastic response intensity, in [0, 1)
    ElasticSignal elastic_signal = ElasticSignal::kAuto;
    double soft_offset_pp = +1.0;
    double hard_offset_pp = -3.0;
    // Fidelity switch: trigger when qe < baseline + red instead of
    // qe < baseline - red. The subtracted form is the default; the added form
    // trips on any redundancy and is kept only for comparison runs.
    bool literal_trigger_sign = false;

    static DefenderScheme ostrich() { return DefenderScheme{}; }
    static DefenderScheme static_baseline(double q) {
        DefenderScheme s;
        s.kind = Kind::kStaticBaseline;
        s.q = q;
        return s;
    }
    static DefenderScheme titfortat(double tth, double red) {
        DefenderScheme s;
        s.kind = Kind::kTitfortat;
        s.tth = tth;
        s.red = red;
        return s;
    }
    static DefenderScheme elastic(double tth, double k) {
        DefenderScheme s;
        s.kind = Kind::kElastic;
        s.tth = tth;
        s.k = k;
        return s;
    }

    void validate() const {
        if (tth <= 0.0 || tth >= 1.0) throw std::domain_error("DefenderScheme: tth outside (0, 1)");
        if (k < 0.0 || k >= 1.0) throw std::domain_error("DefenderScheme: k outside [0, 1)");
        if (red < 0.0) throw std::domain_error("DefenderScheme: red < 0");
    }
};

// Attacker policies. ideal_static reads the collector's previous published
// threshold (white-box game) and injects offset_pp below it.
struct AttackerScheme {
    enum class Kind { kStaticPercentile, kIdealStatic, kMixedEvasive, kElasticAdversary };

    Kind kind = Kind::kStaticPercentile;
    double q = 0.99;     // StaticPercentile position (fraction)
    double p = 1.0;      // MixedEvasive probability of the high base
    double hi = 0.99;    // MixedEvasive bases
    double lo = 0.90;
    double tth = 0.95;   // ElasticAdversary anchor
    double k = 0.0;      // ElasticAdversary response intensity
    double offset_pp = -1.0;

    static AttackerScheme static_percentile(double q) {
        AttackerScheme s;
        s.kind = Kind::kStaticPercentile;
        s.q = q;
        return s;
    }
    static AttackerScheme ideal_static() {
        AttackerScheme s;
        s.kind = Kind::kIdealStatic;
        return s;
    }
    static AttackerScheme mixed_evasive(double p) {
        AttackerScheme s;
        s.kind = Kind::kMixedEvasive;
        s.p = p;
        return s;
    }
    static AttackerScheme elastic_adversary(double tth, double k) {
        AttackerScheme s;
        s.kind = Kind::kElasticAdversary;
        s.tth = tth;
        s.k = k;
        return s;
    }

    void validate() const {
        if (p < 0.0 || p > 1.0) throw std::domain_error("AttackerScheme: p outside [0, 1]");
        if (hi <= 0.0 || hi > 1.0 || lo <= 0.0 || lo > 1.0)
            throw std::domain_error("AttackerScheme: percentile base outside (0, 1]");
    }
};

// Absorbing trigger: once tripped it stays tripped.
struct TriggerState {
    bool triggered = false;
    std::optional<int> trigger_round;

    TriggerState fire(int round) const {
        if (triggered) return *this;
        TriggerState next;
        next.triggered = true;
        next.trigger_round = round;
        return next;
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct TitfortatResult {
    PercentilePoint threshold;
    TriggerState state;
};

// One trigger-strategy step: untriggered play trims at tth + 1 pp; the first
// quality violation switches to tth - 3 pp permanently.
inline TitfortatResult titfortat_step(TriggerState state, double qe_current, double qe_baseline,
                                      double red, const DefenderScheme& scheme, int round) {
    scheme.validate();
    double line = scheme.literal_trigger_sign ? qe_baseline + red : qe_baseline - red;
    TriggerState next = state;
    if (!next.triggered && qe_current < line) next = next.fire(round);
    double pp = scheme.tth * 100.0 + (next.triggered ? scheme.hard_offset_pp : scheme.soft_offset_pp);
    return TitfortatResult{PercentilePoint::from_pp(pp), next};
}

// Quality-proportional threshold: convex combination of the hard position
// t_lo and the soft position t_hi, weighted by k * qe. Clean data (qe = 1)
// earns the softest trim the intensity k allows; quality drops pull the trim
// toward t_lo, with built-in forgiveness on recovery.
inline double elastic_threshold(double qe, double k, double t_lo, double t_hi) {
    if (qe < 0.0 || qe > 1.0) throw std::domain_error("elastic_threshold: qe outside [0, 1]");
    if (k * qe > 1.0) throw std::domain_error("elastic_threshold: k * qe > 1");
    return (1.0 - k * qe) * t_lo + k * qe * t_hi;
}

// Position-response recurrences (all in percentage points):
//   T(i+1) = tth + k * (A(i) - tth - 1)
//   A(i+1) = tth - 3 + k * (T(i) - tth)
inline double elastic_defender_update(double tth_pp, double k, double a_prev_pp) {
    return tth_pp + k * (a_prev_pp - tth_pp - 1.0);
}

inline double elastic_attacker_update(double tth_pp, double k, double t_prev_pp) {
    return tth_pp - 3.0 + k * (t_prev_pp - tth_pp);
}

struct ElasticFixedPoint {
    double defender_pp = 0.0;
    double attacker_pp = 0.0;
};

// Unique fixed point of the coupled updates:
//   T* = tth - 4k / (1 - k^2),  A* = tth - (3 + k^2) / (1 - k^2).
// Both updates are affine, so iterating contracts by exactly k^2 per two
// rounds; k >= 1 has no contraction.
inline ElasticFixedPoint elastic_fixed_point(double tth_pp, double k) {
    if (k < 0.0 || k >= 1.0) throw std::domain_error("elastic_fixed_point: k outside [0, 1)");
    double denom = 1.0 - k * k;
    return ElasticFixedPoint{tth_pp - 4.0 * k / denom, tth_pp - (3.0 + k * k) / denom};
}

// Two-base mixed injection: the high base with probability p, else the low
// base. Deterministic for a fixed stream.
inline PercentilePoint mixed_evasive_injection(double p, rng::Stream& stream,
                                               double hi = 0.99, double lo = 0.90) {
    if (p < 0.0 || p > 1.0) throw std::domain_error("mixed_evasive_injection: p outside [0, 1]");
    return PercentilePoint::from_fraction(stream.bernoulli(p) ? hi : lo);
}

}  // namespace trimgame::strategies
