#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "trimgame/engine.hpp"
#include "trimgame/rng.hpp"
#include "trimgame/strategies.hpp"

namespace trimgame::metrics {

using Point = std::vector<double>;

struct Centroids {
    std::vector<Point> points;

    int k() const { return static_cast<int>(points.size()); }

    void validate() const {
        if (points.empty()) throw std::domain_error("Centroids: k must be >= 1");
        for (const auto& p : points)
            if (p.size() != points.front().size())
                throw std::domain_error("Centroids: mixed dimensionality");
    }
};

namespace detail {

inline double sq_dist(const Point& a, const Point& b) {
    if (a.size() != b.size()) throw std::domain_error("metrics: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline std::size_t nearest(const Point& p, const std::vector<Point>& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < centroids.size(); ++j) {
        double d = sq_dist(p, centroids[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

}  // namespace detail

inline double sse(const std::vector<Point>& points, const Centroids& centroids) {
    centroids.validate();
    double total = 0.0;
    for (const auto& p : points) total += detail::sq_dist(p, centroids.points[detail::nearest(p, centroids.points)]);
    return total;
}

struct KMeansResult {
    Centroids centroids;
    std::vector<double> sse_history;  // one entry per Lloyd iteration
    int iterations = 0;
};

// Lloyd's algorithm from seeded farthest-point initialization: the first
// center is a seeded draw, each further center the point farthest from the
// chosen set. Stops on an assignment fixpoint or max_iters. Deterministic per
// seed.
inline KMeansResult kmeans_fit(const std::vector<Point>& points, int k, int max_iters,
                               std::uint64_t seed) {
    if (k < 1) throw std::domain_error("kmeans_fit: k < 1");
    if (points.size() < static_cast<std::size_t>(k))
        throw std::domain_error("kmeans_fit: fewer points than centroids");

    rng::Stream stream(seed);
    std::vector<Point> centers;
    centers.push_back(points[stream.uniform_index(points.size())]);
    while (centers.size() < static_cast<std::size_t>(k)) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) d = std::min(d, detail::sq_dist(points[i], c));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        centers.push_back(points[far]);
    }

    std::vector<std::size_t> assign(points.size(), 0);
    KMeansResult result;
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t j = detail::nearest(points[i], centers);
            if (j != assign[i]) {
                assign[i] = j;
                changed = true;
            }
        }
        std::size_t dim = points.front().size();
        std::vector<Point> sums(static_cast<std::size_t>(k), Point(dim, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += points[i][d];
            counts[assign[i]] += 1;
        }
        for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
            if (counts[j] == 0) continue;  // empty cluster keeps its center
            for (std::size_t d = 0; d < dim; ++d) centers[j][d] = sums[j][d] / counts[j];
        }
        result.iterations = iter + 1;
        result.sse_history.push_back(sse(points, Centroids{centers}));
        if (iter > 0 && !changed) break;
    }
    result.centroids = Centroids{std::move(centers)};
    return result;
}

// Total Euclidean distance under the minimum-cost one-to-one matching of
// fitted to ground-truth centroids. Brute force over permutations; k <= 8.
inline double centroid_distance(const Centroids& fit, const Centroids& truth) {
    fit.validate();
    truth.validate();
    if (fit.k() != truth.k()) throw std::domain_error("centroid_distance: k mismatch");
    if (fit.k() > 8) throw std::domain_error("centroid_distance: k > 8 unsupported");

    std::vector<std::size_t> perm(static_cast<std::size_t>(fit.k()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i)
            total += std::sqrt(detail::sq_dist(fit.points[i], truth.points[perm[i]]));
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Pooled fraction of poison left in the kept data across all recorded rounds.
inline double untrimmed_poison_fraction(const engine::GameTrace& trace) {
    if (trace.rounds.empty()) throw std::domain_error("untrimmed_poison_fraction: empty trace");
    long long kept_poison = 0, kept_total = 0;
    for (const auto& r : trace.rounds) {
        kept_poison += r.kept_poison;
        kept_total += r.kept_poison + r.kept_benign;
    }
    return kept_total > 0 ? static_cast<double>(kept_poison) / static_cast<double>(kept_total)
                          : 0.0;
}

// Cumulative convergence cost of the position-response recurrences, measured
// as the injection position's shortfall below tth once the exchange has
// settled for the round: after playing round_no rounds the last post-response
// attacker position is A(o), o the largest odd index <= round_no + 1, and the
// cumulative cost is tth - A(o). It converges to (3 + k^2) / (1 - k^2) pp as
// round_no grows, so the per-round average decays to zero.
inline double elastic_cost_cumulative(double tth_pp, double k, int round_no) {
    if (k < 0.0 || k >= 1.0) throw std::domain_error("elastic_cost_cumulative: k outside [0, 1)");
    if (round_no < 1) throw std::domain_error("elastic_cost_cumulative: round_no < 1");
    // Positions indexed from 1; computing through round_no + 1 reflects the
    // response each side announces at the end of the last played round.
    std::vector<double> t(static_cast<std::size_t>(round_no) + 2);
    std::vector<double> a(static_cast<std::size_t>(round_no) + 2);
    t[1] = tth_pp - 3.0;
    a[1] = tth_pp + 1.0;
    for (int i = 1; i <= round_no; ++i) {
        t[static_cast<std::size_t>(i) + 1] = strategies::elastic_defender_update(tth_pp, k, a[static_cast<std::size_t>(i)]);
        a[static_cast<std::size_t>(i) + 1] = strategies::elastic_attacker_update(tth_pp, k, t[static_cast<std::size_t>(i)]);
    }
    // After one round only the first response A(2) exists; from round 2 on the
    // last settled position is the odd-indexed A(o), o <= round_no + 1.
    int o = round_no == 1 ? 2 : ((round_no % 2 == 1) ? round_no : round_no + 1);
    return tth_pp - a[static_cast<std::size_t>(o)];
}

// Average per-round cost: cumulative divided by the round count.
inline double roundwise_cost(double tth_pp, double k, int round_no) {
    return elastic_cost_cumulative(tth_pp, k, round_no) / static_cast<double>(round_no);
}

// Mean termination round; traces that never fired count at the round cap
// (termination_round already holds the cap in that case).
inline double termination_stats(const std::vector<engine::GameTrace>& traces) {
    if (traces.empty()) throw std::domain_error("termination_stats: empty trace list");
    double sum = 0.0;
    for (const auto& t : traces) sum += t.termination_round;
    return sum / static_cast<double>(traces.size());
}

struct MetricReport {
    double sse = 0.0;
    double centroid_distance = 0.0;
    double untrimmed_fraction = 0.0;
    double roundwise_cost_pp = 0.0;
    double avg_termination_round = 0.0;
};

}  // namespace trimgame::metrics
