#pragma once

// Inner solvers for the level-set subproblem
//   minimize over the ball   psi(t, x) = max(f(x) - t, g_tilde(x)),
// by projected subgradient steps with averaging (nonsmooth levels) or an
// accelerated scheme around a two-model gradient mapping (smooth levels).

#include <cmath>
#include <optional>
#include <stdexcept>

#include "fcbio/core.hpp"
#include "fcbio/geometry.hpp"

namespace fcbio {

struct MinimaxProblem {
    FirstOrderOracle f;
    FirstOrderOracle g_tilde;
    double t = 0.0;
    Ball set;
    Setting setting = Setting::lipschitz;
    double constant = 0.0;  // max of the two levels' moduli
};

inline void validate_minimax(const MinimaxProblem& p) {
    if (!p.f || !p.g_tilde) throw std::invalid_argument("MinimaxProblem: both oracles required");
    if (!(p.constant > 0.0) || !std::isfinite(p.constant))
        throw std::invalid_argument("MinimaxProblem: constant must be positive");
    if (!std::isfinite(p.t)) throw std::invalid_argument("MinimaxProblem: level t must be finite");
}

inline double psi_value(const MinimaxProblem& p, const Vector& x) {
    return std::max(p.f.value(x) - p.t, p.g_tilde.value(x));
}

// Subgradient of the pointwise max; exact ties take the f branch.
inline Vector psi_subgradient(const MinimaxProblem& p, const Vector& x) {
    const double fv = p.f.value(x) - p.t;
    const double gv = p.g_tilde.value(x);
    return fv >= gv ? p.f.first_order(x) : p.g_tilde.first_order(x);
}

struct SubroutineResult {
    Vector x_hat;
    double psi_hat = kNaN;
    long long iterations = 0;
    long long oracle_calls = 0;  // first-order calls consumed by this run
};

namespace detail {

inline long long counter_sum(const MinimaxProblem& p) {
    return p.f.first_order_calls() + p.g_tilde.first_order_calls();
}

inline void require_start(const Ball& set, const Vector& x0) {
    if (!set.contains(x0, 1e-9))
        throw std::invalid_argument("subroutine start point lies outside the feasible set");
}

}  // namespace detail

// Projected subgradient steps with step size D/(C sqrt(K)), returning the
// average of the first K iterates. When a threshold is given the running
// average is evaluated every 50 steps and the run stops as soon as its psi
// value reaches the threshold.
inline SubroutineResult sgm_minimax(const MinimaxProblem& p, const Vector& x0, long long K,
                                    std::optional<double> exit_below = std::nullopt) {
    validate_minimax(p);
    detail::require_start(p.set, x0);
    if (K < 1) throw std::invalid_argument("sgm_minimax: K must be at least 1");
    const long long calls0 = detail::counter_sum(p);
    const double eta = p.set.diameter() / (p.constant * std::sqrt(static_cast<double>(K)));

    Vector x = x0;
    Vector sum(x.size(), 0.0);
    for (long long k = 0; k < K; ++k) {
        if (exit_below && k > 0 && k % 50 == 0) {
            Vector avg = scaled(sum, 1.0 / static_cast<double>(k));
            const double val = psi_value(p, avg);
            if (val <= *exit_below)
                return {std::move(avg), val, k, detail::counter_sum(p) - calls0};
        }
        axpy(1.0, x, sum);
        Vector s = psi_subgradient(p, x);
        axpy(-eta, s, x);
        x = p.set.project(x);
    }
    Vector avg = scaled(sum, 1.0 / static_cast<double>(K));
    const double val = psi_value(p, avg);
    return {std::move(avg), val, K, detail::counter_sum(p) - calls0};
}

// One constrained minimization of the two-quadratic model around y:
//   max(f(y) - t + <f'(y), x-y>, g_tilde(y) + <g_tilde'(y), x-y>) + L/2 |x-y|^2.
// The minimizer is one of: the projected step along either single model, or
// the projection onto the ball cut by the plane where the models tie. A tie
// plane missing the ball just drops that candidate.
inline Vector gradient_mapping_step(const MinimaxProblem& p, const Vector& y) {
    const double L = p.constant;
    const double fy = p.f.value(y) - p.t;
    const double gy = p.g_tilde.value(y);
    const Vector df = p.f.first_order(y);
    const Vector dg = p.g_tilde.first_order(y);

    auto model = [&](const Vector& x) {
        double d2 = 0.0, pf = 0.0, pg = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - y[i];
            d2 += d * d;
            pf += df[i] * d;
            pg += dg[i] * d;
        }
        const double quad = 0.5 * L * d2;
        return std::max(fy + pf + quad, gy + pg + quad);
    };

    Vector best;
    double best_val = 0.0;
    auto consider = [&](Vector cand) {
        const double val = model(cand);
        if (best.empty() || val < best_val) {
            best = std::move(cand);
            best_val = val;
        }
    };

    Vector z1 = y;
    axpy(-1.0 / L, df, z1);
    consider(p.set.project(z1));
    Vector z2 = y;
    axpy(-1.0 / L, dg, z2);
    consider(p.set.project(z2));

    Vector w = df;
    axpy(-1.0, dg, w);
    const double wn2 = squared_norm(w);
    if (wn2 > 0.0 && std::isfinite(1.0 / wn2)) {
        const double offset = fy - gy - dot(w, y);
        Vector z3 = y;
        axpy(-1.0 / L, df, z3);
        try {
            consider(project_ball_hyperplane(z3, p.set, Hyperplane(w, offset)));
        } catch (const InfeasibleSubproblemError&) {
            // models never tie inside the ball; the two plain candidates cover it
        }
    }
    return best;
}

// Value of the same two-quadratic model at an arbitrary point, evaluated
// through the raw callables so comparisons do not bill the oracles.
inline double gradient_mapping_model_value(const MinimaxProblem& p, const Vector& y,
                                           const Vector& x) {
    Vector d = x;
    axpy(-1.0, y, d);
    const double quad = 0.5 * p.constant * squared_norm(d);
    const double lin_f = p.f.value_fn()(y) - p.t + dot(p.f.first_order_fn()(y), d);
    const double lin_g = p.g_tilde.value_fn()(y) + dot(p.g_tilde.first_order_fn()(y), d);
    return std::max(lin_f, lin_g) + quad;
}

// Positive root of a^2 = (1 - a) * alpha^2.
inline double agm_next_alpha(double alpha) {
    const double a2 = alpha * alpha;
    return 0.5 * (-a2 + std::sqrt(a2 * a2 + 4.0 * a2));
}

inline double agm_momentum_beta(double alpha, double alpha_next) {
    return alpha * (1.0 - alpha) / (alpha * alpha + alpha_next);
}

// Accelerated scheme over the gradient mapping, alpha_0 = 1/2, returning the
// last iterate. With a threshold given, each iterate's psi value is checked
// and the run stops as soon as it reaches the threshold.
inline SubroutineResult agm_minimax(const MinimaxProblem& p, const Vector& x0, long long K,
                                    std::optional<double> exit_below = std::nullopt) {
    validate_minimax(p);
    detail::require_start(p.set, x0);
    if (K < 1) throw std::invalid_argument("agm_minimax: K must be at least 1");
    const long long calls0 = detail::counter_sum(p);

    Vector y = x0;
    Vector x = x0;
    double alpha = 0.5;
    for (long long k = 0; k < K; ++k) {
        Vector x_next = gradient_mapping_step(p, y);
        if (exit_below) {
            const double val = psi_value(p, x_next);
            if (val <= *exit_below)
                return {std::move(x_next), val, k + 1, detail::counter_sum(p) - calls0};
        }
        const double alpha_next = agm_next_alpha(alpha);
        const double beta = agm_momentum_beta(alpha, alpha_next);
        y = x_next;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += beta * (x_next[i] - x[i]);
        x = std::move(x_next);
        alpha = alpha_next;
    }
    const double val = psi_value(p, x);
    return {std::move(x), val, K, detail::counter_sum(p) - calls0};
}

// ---------------------------------------------------------------------------
// Single-level solvers used for pretreatment (finding the lower-level optimum
// and an initial lower endpoint). Same schemes, single objective. A level
// with modulus zero is constant, so its start point is already optimal.

inline SubroutineResult single_level_sgm(const FirstOrderOracle& h, const Ball& set, const Vector& x0,
                                         long long K, double lipschitz,
                                         std::optional<double> exit_below = std::nullopt) {
    detail::require_start(set, x0);
    if (K < 1) throw std::invalid_argument("single_level_sgm: K must be at least 1");
    if (lipschitz < 0.0 || !std::isfinite(lipschitz))
        throw std::invalid_argument("single_level_sgm: bad Lipschitz level");
    const long long calls0 = h.first_order_calls();
    if (lipschitz == 0.0) return {x0, h.value(x0), 0, 0};
    const double eta = set.diameter() / (lipschitz * std::sqrt(static_cast<double>(K)));

    Vector x = x0;
    Vector sum(x.size(), 0.0);
    for (long long k = 0; k < K; ++k) {
        if (exit_below && k > 0 && k % 50 == 0) {
            Vector avg = scaled(sum, 1.0 / static_cast<double>(k));
            const double val = h.value(avg);
            if (val <= *exit_below) return {std::move(avg), val, k, h.first_order_calls() - calls0};
        }
        axpy(1.0, x, sum);
        Vector s = h.first_order(x);
        axpy(-eta, s, x);
        x = set.project(x);
    }
    Vector avg = scaled(sum, 1.0 / static_cast<double>(K));
    const double val = h.value(avg);
    return {std::move(avg), val, K, h.first_order_calls() - calls0};
}

inline SubroutineResult single_level_agm(const FirstOrderOracle& h, const Ball& set, const Vector& x0,
                                         long long K, double smoothness,
                                         std::optional<double> exit_below = std::nullopt) {
    detail::require_start(set, x0);
    if (K < 1) throw std::invalid_argument("single_level_agm: K must be at least 1");
    if (smoothness < 0.0 || !std::isfinite(smoothness))
        throw std::invalid_argument("single_level_agm: bad smoothness modulus");
    const long long calls0 = h.first_order_calls();
    if (smoothness == 0.0) return {x0, h.value(x0), 0, 0};

    Vector y = x0;
    Vector x = x0;
    double alpha = 0.5;
    for (long long k = 0; k < K; ++k) {
        Vector step = h.first_order(y);
        Vector x_next = y;
        axpy(-1.0 / smoothness, step, x_next);
        x_next = set.project(x_next);
        if (exit_below) {
            const double val = h.value(x_next);
            if (val <= *exit_below)
                return {std::move(x_next), val, k + 1, h.first_order_calls() - calls0};
        }
        const double alpha_next = agm_next_alpha(alpha);
        const double beta = agm_momentum_beta(alpha, alpha_next);
        y = x_next;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += beta * (x_next[i] - x[i]);
        x = std::move(x_next);
        alpha = alpha_next;
    }
    const double val = h.value(x);
    return {std::move(x), val, K, h.first_order_calls() - calls0};
}

}  // namespace fcbio
