#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "trimgame/core.hpp"
#include "trimgame/rng.hpp"

namespace trimgame::theory {

// ---------------------------------------------------------------------------
// Discounted-gain calculus and the compliance region
// ---------------------------------------------------------------------------

// Inputs of the compliance calculus:
//   d     roundwise discount rate in (0, 1)
//   p     probability a defection is judged compliant, in [0, 1]
//   g_a   adversary's roundwise cooperation gain
//   g_c   collector's roundwise cooperation gain
//   delta utility compromise conceded to keep cooperation attractive
struct ComplianceParams {
    double d = 0.9;
    double p = 0.0;
    double g_a = 1.0;
    double g_c = 1.0;
    double delta = 0.0;

    double g_ac() const { return 0.5 * (g_a + g_c); }
    double g_0() const { return g_ac() - delta; }

    // Symmetric gains derived from the stage game: g_c = t_hi - p_lo - t_lo,
    // g_a = p_hi.
    static ComplianceParams from_payoffs(const core::PayoffMatrix& m, double d, double p,
                                         double delta) {
        m.validate();
        ComplianceParams c;
        c.d = d;
        c.p = p;
        c.g_a = m.p_hi;
        c.g_c = m.t_hi - m.p_lo - m.t_lo;
        c.delta = delta;
        return c;
    }

    void validate() const {
        if (d <= 0.0 || d >= 1.0) throw std::domain_error("ComplianceParams: d outside (0, 1)");
        if (p < 0.0 || p > 1.0) throw std::domain_error("ComplianceParams: p outside [0, 1]");
        if (delta < 0.0) throw std::domain_error("ComplianceParams: delta < 0");
    }
};

struct DiscountedGains {
    double compliant = 0.0;   // g_com = g_0 / (1 - d)
    double defecting = 0.0;   // g_def = g_ac / (1 - d p)
};

// Closed forms of the two self-consistent gain expectations
//   g_com = g_0 + d * g_com,   g_def = g_ac + d p * g_def.
inline DiscountedGains discounted_gains(const ComplianceParams& c) {
    c.validate();
    if (c.d * c.p >= 1.0) throw std::domain_error("discounted_gains: d * p >= 1");
    return DiscountedGains{c.g_0() / (1.0 - c.d), c.g_ac() / (1.0 - c.d * c.p)};
}

// Largest compromise for which a rational adversary prefers compliance:
//   delta_max = g_ac * (d - d p) / (1 - d p),
// and comply(delta) <=> delta < delta_max <=> g_com > g_def.
inline double compliance_threshold(double d, double p, double g_ac) {
    if (d <= 0.0 || d >= 1.0) throw std::domain_error("compliance_threshold: d outside (0, 1)");
    if (p < 0.0 || p > 1.0) throw std::domain_error("compliance_threshold: p outside [0, 1]");
    if (g_ac <= 0.0) throw std::domain_error("compliance_threshold: g_ac <= 0");
    if (d * p >= 1.0) throw std::domain_error("compliance_threshold: d * p >= 1");
    return g_ac * (d - d * p) / (1.0 - d * p);
}

// ---------------------------------------------------------------------------
// Utility-trajectory dynamics
// ---------------------------------------------------------------------------

// Inertia factors of the two parties plus the interaction strength coupling
// their cumulative utilities. m_a, m_c have no operational calibration; they
// parameterize the theory only.
struct DynamicsParams {
    double m_a = 1.0;
    double m_c = 1.0;
    double k = 0.0;

    void validate() const {
        if (m_a <= 0.0 || m_c <= 0.0) throw std::domain_error("DynamicsParams: masses must be > 0");
        if (k < 0.0) throw std::domain_error("DynamicsParams: k < 0");
    }
};

enum class LagrangianMode { kEquilibrium, kInteraction };

// Two documented conventions:
//  - equilibrium: L = m_a du_a^2 + m_c du_c^2 (the converged, interaction-free
//    state, kept verbatim in this form);
//  - interaction: L = m_a du_a^2 / 2 + m_c du_c^2 / 2 - k (u_a - u_c)^2 / 2,
//    the convention whose stationary paths solve
//      m_a u_a'' = -k (u_a - u_c),  m_c u_c'' = +k (u_a - u_c)
//    and therefore oscillate. A plus sign on the interaction term would give
//    exponential, non-oscillatory paths instead.
inline double lagrangian(double u_a, double u_c, double du_a, double du_c,
                         const DynamicsParams& params, LagrangianMode mode) {
    params.validate();
    if (mode == LagrangianMode::kEquilibrium)
        return params.m_a * du_a * du_a + params.m_c * du_c * du_c;
    if (params.k <= 0.0) throw std::domain_error("lagrangian: interaction mode requires k > 0");
    double w = u_a - u_c;
    return 0.5 * params.m_a * du_a * du_a + 0.5 * params.m_c * du_c * du_c - 0.5 * params.k * w * w;
}

inline double energy(const DynamicsParams& params, double u_a, double u_c, double du_a,
                     double du_c) {
    double w = u_a - u_c;
    return 0.5 * params.m_a * du_a * du_a + 0.5 * params.m_c * du_c * du_c +
           0.5 * params.k * w * w;
}

// Sampled utility path: uniform grid over the round coordinate r with sampled
// positions and generalized velocities.
struct Trajectory {
    std::vector<double> r;
    std::vector<double> u_a, u_c;
    std::vector<double> du_a, du_c;

    std::size_t size() const { return r.size(); }

    double step() const {
        if (r.size() < 2) throw std::domain_error("Trajectory: needs at least 2 samples");
        double h = r[1] - r[0];
        for (std::size_t i = 1; i + 1 < r.size(); ++i)
            if (std::fabs((r[i + 1] - r[i]) - h) > 1e-9 * std::max(1.0, std::fabs(h)))
                throw std::domain_error("Trajectory: non-uniform grid");
        return h;
    }
};

// Composite Simpson integral of L along the trajectory; O(h^4) for smooth
// paths. An odd interval count is finished with a Simpson 3/8 tail so the
// order is preserved.
inline double action_integral(const Trajectory& t, const DynamicsParams& params,
                              LagrangianMode mode) {
    if (t.size() < 3) throw std::domain_error("action_integral: needs >= 3 samples");
    double h = t.step();
    std::vector<double> lag(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        lag[i] = lagrangian(t.u_a[i], t.u_c[i], t.du_a[i], t.du_c[i], params, mode);

    std::size_t intervals = t.size() - 1;
    std::size_t simpson_end = intervals;  // index where the plain Simpson part stops
    double total = 0.0;
    if (intervals % 2 != 0) {
        if (intervals < 3) throw std::domain_error("action_integral: grid too short");
        simpson_end = intervals - 3;
        std::size_t j = simpson_end;
        total += 3.0 * h / 8.0 * (lag[j] + 3.0 * lag[j + 1] + 3.0 * lag[j + 2] + lag[j + 3]);
    }
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2)
        total += h / 3.0 * (lag[i] + 4.0 * lag[i + 1] + lag[i + 2]);
    return total;
}

struct InitialState {
    double u_a = 0.0;
    double u_c = 0.0;
    double du_a = 0.0;
    double du_c = 0.0;
};

// Classic fixed-step RK4 on the coupled system
//   u_a'' = -(k / m_a)(u_a - u_c),   u_c'' = +(k / m_c)(u_a - u_c).
// The step is adjusted to divide the span exactly; global error O(h^4).
inline Trajectory integrate_dynamics(const DynamicsParams& params, const InitialState& init,
                                     double r1, double r2, double h) {
    params.validate();
    if (!(h > 0.0) || !(r2 > r1)) throw std::domain_error("integrate_dynamics: bad span or step");
    auto steps = static_cast<std::size_t>(std::llround((r2 - r1) / h));
    if (steps == 0) steps = 1;
    double dr = (r2 - r1) / static_cast<double>(steps);

    struct State {
        double ua, uc, va, vc;
    };
    auto deriv = [&](const State& s) {
        double w = s.ua - s.uc;
        return State{s.va, s.vc, -params.k / params.m_a * w, params.k / params.m_c * w};
    };
    auto advance = [](const State& s, const State& d, double scale) {
        return State{s.ua + scale * d.ua, s.uc + scale * d.uc, s.va + scale * d.va,
                     s.vc + scale * d.vc};
    };

    Trajectory t;
    t.r.reserve(steps + 1);
    State s{init.u_a, init.u_c, init.du_a, init.du_c};
    auto record = [&](double r, const State& st) {
        t.r.push_back(r);
        t.u_a.push_back(st.ua);
        t.u_c.push_back(st.uc);
        t.du_a.push_back(st.va);
        t.du_c.push_back(st.vc);
    };
    record(r1, s);
    for (std::size_t i = 0; i < steps; ++i) {
        State k1 = deriv(s);
        State k2 = deriv(advance(s, k1, dr / 2.0));
        State k3 = deriv(advance(s, k2, dr / 2.0));
        State k4 = deriv(advance(s, k3, dr));
        s.ua += dr / 6.0 * (k1.ua + 2.0 * k2.ua + 2.0 * k3.ua + k4.ua);
        s.uc += dr / 6.0 * (k1.uc + 2.0 * k2.uc + 2.0 * k3.uc + k4.uc);
        s.va += dr / 6.0 * (k1.va + 2.0 * k2.va + 2.0 * k3.va + k4.va);
        s.vc += dr / 6.0 * (k1.vc + 2.0 * k2.vc + 2.0 * k3.vc + k4.vc);
        record(r1 + dr * static_cast<double>(i + 1), s);
    }
    return t;
}

// Exact normal-mode solution. The relative coordinate w = u_a - u_c obeys
// w'' = -omega^2 w with omega = sqrt(k (1/m_a + 1/m_c)); the inertia-weighted
// center (m_a u_a + m_c u_c) / (m_a + m_c) drifts linearly.
struct AnalyticSolution {
    double omega = 0.0;
    double w0 = 0.0, dw0 = 0.0;        // relative coordinate and rate at r = 0
    double c0 = 0.0, dc0 = 0.0;        // center and its constant drift
    double m_a = 1.0, m_c = 1.0;

    double amplitude() const { return std::hypot(w0, dw0 / omega); }
    double phase() const { return std::atan2(dw0 / omega, w0) * -1.0; }  // w = A cos(omega r + phi)

    struct Sample {
        double u_a, u_c, du_a, du_c;
    };

    Sample at(double r) const {
        double w = w0 * std::cos(omega * r) + dw0 / omega * std::sin(omega * r);
        double dw = -w0 * omega * std::sin(omega * r) + dw0 * std::cos(omega * r);
        double c = c0 + dc0 * r;
        double total = m_a + m_c;
        return Sample{c + m_c / total * w, c - m_a / total * w, dc0 + m_c / total * dw,
                      dc0 - m_a / total * dw};
    }
};

inline AnalyticSolution analytic_solution(const DynamicsParams& params, const InitialState& init) {
    params.validate();
    if (params.k <= 0.0)
        throw std::domain_error("analytic_solution: k = 0 is the constant-velocity branch");
    AnalyticSolution s;
    s.omega = std::sqrt(params.k * (1.0 / params.m_a + 1.0 / params.m_c));
    s.w0 = init.u_a - init.u_c;
    s.dw0 = init.du_a - init.du_c;
    double total = params.m_a + params.m_c;
    s.c0 = (params.m_a * init.u_a + params.m_c * init.u_c) / total;
    s.dc0 = (params.m_a * init.du_a + params.m_c * init.du_c) / total;
    s.m_a = params.m_a;
    s.m_c = params.m_c;
    return s;
}

inline std::pair<double, double> analytic_trajectory(const DynamicsParams& params,
                                                     const InitialState& init, double r) {
    auto sample = analytic_solution(params, init).at(r);
    return {sample.u_a, sample.u_c};
}

// Least-action check: the integrated path must have strictly smaller action
// than every comparison path formed by adding endpoint-vanishing bumps
// eps * sin(pi (r - r1) / (r2 - r1)) to the coordinates. Minimality (rather
// than mere stationarity) only holds on spans shorter than half the
// oscillation period, so longer spans are rejected; k = 0 free motion has no
// such restriction.
inline bool variational_check(const DynamicsParams& params, const InitialState& init, double r1,
                              double r2, int n_perturbations, rng::Stream& stream) {
    params.validate();
    if (params.k > 0.0) {
        double omega = std::sqrt(params.k * (1.0 / params.m_a + 1.0 / params.m_c));
        if (r2 - r1 >= 3.141592653589793 / omega)
            throw std::domain_error("variational_check: span must be shorter than half a period");
    }
    // Free motion (k = 0) has no interaction term; its action is the kinetic
    // form, which is minimal on any span.
    LagrangianMode mode =
        params.k > 0.0 ? LagrangianMode::kInteraction : LagrangianMode::kEquilibrium;
    const double h = (r2 - r1) / 2000.0;
    Trajectory base = integrate_dynamics(params, init, r1, r2, h);
    double s0 = action_integral(base, params, mode);

    double span = r2 - r1;
    for (int i = 0; i < n_perturbations; ++i) {
        double eps_a = stream.uniform(1e-3, 1e-1) * (stream.bernoulli(0.5) ? 1.0 : -1.0);
        double eps_c = stream.uniform(1e-3, 1e-1) * (stream.bernoulli(0.5) ? 1.0 : -1.0);
        Trajectory bumped = base;
        for (std::size_t j = 0; j < base.size(); ++j) {
            double x = (base.r[j] - r1) / span;
            double bump = std::sin(3.141592653589793 * x);
            double dbump = 3.141592653589793 / span * std::cos(3.141592653589793 * x);
            bumped.u_a[j] += eps_a * bump;
            bumped.du_a[j] += eps_a * dbump;
            bumped.u_c[j] += eps_c * bump;
            bumped.du_c[j] += eps_c * dbump;
        }
        double s = action_integral(bumped, params, mode);
        if (!(s > s0)) return false;
    }
    return true;
}

// CSV with the fixed header: r,u_a,u_c,du_a,du_c,energy
inline void write_trajectory_csv(const Trajectory& t, const DynamicsParams& params,
                                 std::ostream& os) {
    os << "r,u_a,u_c,du_a,du_c,energy\n";
    char line[256];
    for (std::size_t i = 0; i < t.size(); ++i) {
        double e = energy(params, t.u_a[i], t.u_c[i], t.du_a[i], t.du_c[i]);
        std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", t.r[i],
                      t.u_a[i], t.u_c[i], t.du_a[i], t.du_c[i], e);
        os << line;
    }
}

}  // namespace trimgame::theory
