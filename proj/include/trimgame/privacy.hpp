#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "trimgame/rng.hpp"

namespace trimgame::privacy {

// Two-point unbiased mechanism for one-dimensional mean estimation over the
// domain [-1, 1]. Every report is exactly +B or -B with
// B = (e^eps + 1) / (e^eps - 1), so |report| exceeds 1 whenever eps is finite;
// that amplification is what makes raw-report manipulation potent.
struct LdpConfig {
    double epsilon = 1.0;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::domain_error("LdpConfig: epsilon must be > 0");
    }

    double boundary() const {
        validate();
        double e = std::exp(epsilon);
        return (e + 1.0) / (e - 1.0);
    }
};

struct Report {
    double value = 0.0;
};

// P[report = +B] for input x: (x (e^eps - 1) + e^eps + 1) / (2 (e^eps + 1)).
// Lies in [1/(e^eps + 1), e^eps/(e^eps + 1)] for x in [-1, 1].
inline double positive_probability(double x, const LdpConfig& cfg) {
    cfg.validate();
    if (x < -1.0 || x > 1.0) throw std::domain_error("ldp: input outside [-1, 1]");
    double e = std::exp(cfg.epsilon);
    return (x * (e - 1.0) + e + 1.0) / (2.0 * (e + 1.0));
}

// Unbiased: E[report] = B (2 P[+B] - 1) = x.
inline Report ldp_perturb(double x, const LdpConfig& cfg, rng::Stream& stream) {
    double prob = positive_probability(x, cfg);
    double b = cfg.boundary();
    return Report{stream.bernoulli(prob) ? b : -b};
}

inline double ldp_mean(const std::vector<Report>& reports) {
    if (reports.empty()) throw std::domain_error("ldp_mean: empty report list");
    double sum = 0.0;
    for (const auto& r : reports) sum += r.value;
    return sum / static_cast<double>(reports.size());
}

enum class AttackKind {
    // Counterfeit the input, then follow the protocol honestly. Deniable: the
    // reports are distribution-indistinguishable from honest users holding
    // the target value.
    kInputManipulation,
    // Skip the mechanism and pin raw reports at the target-side extreme +B.
    // Stronger shift (B > 1) but the reports are no longer protocol-shaped.
    kOutputManipulation,
};

inline std::vector<Report> craft_attack(AttackKind kind, double target, int n,
                                        const LdpConfig& cfg, rng::Stream& stream) {
    if (n < 0) throw std::domain_error("craft_attack: negative count");
    std::vector<Report> out;
    out.reserve(static_cast<std::size_t>(n));
    if (kind == AttackKind::kInputManipulation) {
        if (target < -1.0 || target > 1.0)
            throw std::domain_error("craft_attack: input manipulation target outside [-1, 1]");
        for (int i = 0; i < n; ++i) out.push_back(ldp_perturb(target, cfg, stream));
    } else {
        double b = cfg.boundary();
        double pinned = target >= 0.0 ? b : -b;
        for (int i = 0; i < n; ++i) out.push_back(Report{pinned});
    }
    return out;
}

inline double mse(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw std::domain_error("mse: empty estimate list");
    double sum = 0.0;
    for (double e : estimates) {
        double d = e - truth;
        sum += d * d;
    }
    return sum / static_cast<double>(estimates.size());
}

}  // namespace trimgame::privacy
