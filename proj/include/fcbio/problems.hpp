#pragma once

// Problem builders: worst-case zero chains with their known minimizers, the
// hard bilevel instances built from them, and the two data-driven benchmark
// problems (minimum-norm solution of a linear system, logistic validation
// loss over training optima).

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>

#include "fcbio/core.hpp"
#include "fcbio/data.hpp"

namespace fcbio {

// ---------------------------------------------------------------------------
// Zero chains. Both families reveal at most one new coordinate per
// first-order call when started from the origin, which is what makes them
// worst cases for span-respecting methods.

struct ChainSpec {
    int length;       // number of coordinates q
    double constant;  // smoothness modulus L or Lipschitz level C
    double scale;     // magnitude parameter of the minimizer
};

inline void validate_chain(const ChainSpec& s) {
    if (s.length < 1) throw std::invalid_argument("ChainSpec: length must be at least 1");
    if (!(s.constant > 0.0) || !std::isfinite(s.constant))
        throw std::invalid_argument("ChainSpec: constant must be positive");
    if (!(s.scale > 0.0) || !std::isfinite(s.scale))
        throw std::invalid_argument("ChainSpec: scale must be positive");
}

// (L/4) * (0.5*(x_1^2 + sum (x_i - x_{i+1})^2 + x_q^2) - R*x_1).
// The gradient is tridiagonal, so a point supported on the first j
// coordinates yields a gradient supported on the first j+1.
inline FirstOrderOracle make_smooth_chain(const ChainSpec& spec) {
    validate_chain(spec);
    const int q = spec.length;
    const double L = spec.constant;
    const double R = spec.scale;
    auto value = [q, L, R](const Vector& x) {
        if (static_cast<int>(x.size()) != q) throw std::invalid_argument("smooth chain: dimension mismatch");
        double s = x[0] * x[0] + x[static_cast<std::size_t>(q - 1)] * x[static_cast<std::size_t>(q - 1)];
        for (int i = 0; i + 1 < q; ++i) {
            const double d = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i + 1)];
            s += d * d;
        }
        return (L / 4.0) * (0.5 * s - R * x[0]);
    };
    auto grad = [q, L, R](const Vector& x) {
        if (static_cast<int>(x.size()) != q) throw std::invalid_argument("smooth chain: dimension mismatch");
        Vector out(x.size());
        for (int i = 0; i < q; ++i) {
            double v = 2.0 * x[static_cast<std::size_t>(i)];
            if (i > 0) v -= x[static_cast<std::size_t>(i - 1)];
            if (i + 1 < q) v -= x[static_cast<std::size_t>(i + 1)];
            out[static_cast<std::size_t>(i)] = (L / 4.0) * v;
        }
        out[0] -= (L / 4.0) * R;
        return out;
    };
    return FirstOrderOracle("chain_sm_q" + std::to_string(q), std::move(value), std::move(grad));
}

// Unconstrained minimizer of the smooth chain: x_j = R * (1 - j/(q+1)).
inline Vector smooth_chain_minimizer(const ChainSpec& spec) {
    validate_chain(spec);
    Vector out(static_cast<std::size_t>(spec.length));
    for (int j = 1; j <= spec.length; ++j)
        out[static_cast<std::size_t>(j - 1)] = spec.scale * (1.0 - static_cast<double>(j) / (spec.length + 1));
    return out;
}

// (C*sqrt(q)/(1+sqrt(q))) * max_j x_j + (C/(2R(1+sqrt(q)))) * |x|^2.
// The subgradient takes the smallest index attaining the max (ties by exact
// equality), which is the resisting choice for span-respecting methods.
inline FirstOrderOracle make_lipschitz_chain(const ChainSpec& spec) {
    validate_chain(spec);
    const int q = spec.length;
    const double root_q = std::sqrt(static_cast<double>(q));
    const double max_coef = spec.constant * root_q / (1.0 + root_q);
    const double quad_coef = spec.constant / (2.0 * spec.scale * (1.0 + root_q));
    auto value = [q, max_coef, quad_coef](const Vector& x) {
        if (static_cast<int>(x.size()) != q) throw std::invalid_argument("lipschitz chain: dimension mismatch");
        double mx = x[0];
        for (double v : x) mx = v > mx ? v : mx;
        return max_coef * mx + quad_coef * squared_norm(x);
    };
    auto subgrad = [q, max_coef, quad_coef](const Vector& x) {
        if (static_cast<int>(x.size()) != q) throw std::invalid_argument("lipschitz chain: dimension mismatch");
        std::size_t best = 0;
        for (std::size_t j = 1; j < x.size(); ++j)
            if (x[j] > x[best]) best = j;
        Vector out = scaled(x, 2.0 * quad_coef);
        out[best] += max_coef;
        return out;
    };
    return FirstOrderOracle("chain_lip_q" + std::to_string(q), std::move(value), std::move(subgrad));
}

// Minimizer of the Lipschitz chain: all coordinates equal to -R/sqrt(q).
inline Vector lipschitz_chain_minimizer(const ChainSpec& spec) {
    validate_chain(spec);
    return Vector(static_cast<std::size_t>(spec.length),
                  -spec.scale / std::sqrt(static_cast<double>(spec.length)));
}

inline FirstOrderOracle make_zero_oracle(std::size_t dim) {
    return FirstOrderOracle(
        "zero", [dim](const Vector& x) {
            if (x.size() != dim) throw std::invalid_argument("zero oracle: dimension mismatch");
            return 0.0;
        },
        [dim](const Vector& x) {
            if (x.size() != dim) throw std::invalid_argument("zero oracle: dimension mismatch");
            return Vector(dim, 0.0);
        });
}

// ---------------------------------------------------------------------------
// Benchmark instances with known optima.

struct ProblemWithTruth {
    BilevelProblem problem;
    Vector x_star;
    double f_star = kNaN;
    double g_star = kNaN;
};

// Upper level acting on the second half of the coordinates only:
// f(x) = 0.5 * sum_{j>half} x_j^2.
inline FirstOrderOracle make_tail_quadratic(int dim, int half) {
    auto value = [dim, half](const Vector& x) {
        if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("tail quadratic: dimension mismatch");
        double s = 0.0;
        for (int j = half; j < dim; ++j) s += x[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
        return 0.5 * s;
    };
    auto grad = [dim, half](const Vector& x) {
        if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("tail quadratic: dimension mismatch");
        Vector out(x.size(), 0.0);
        for (int j = half; j < dim; ++j) out[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];
        return out;
    };
    return FirstOrderOracle("tail_quadratic", std::move(value), std::move(grad));
}

// Smooth hard instance on the unit ball in dimension 2T: the lower level is
// the smooth chain with unit modulus and scale 1/sqrt(2T), the upper level
// penalizes the second half of the coordinates. Any span-respecting method
// keeps the upper level at exactly zero for its first T calls while the
// optimal value (T+1)/(24(2T+1)) stays above 1/48.
inline ProblemWithTruth make_smooth_hard_instance(int T) {
    if (T < 1) throw std::invalid_argument("make_smooth_hard_instance: T must be positive");
    const int q = 2 * T;
    ChainSpec spec{q, 1.0, 1.0 / std::sqrt(static_cast<double>(q))};
    ProblemWithTruth out{
        BilevelProblem{make_tail_quadratic(q, T), make_smooth_chain(spec),
                       Ball(Vector(static_cast<std::size_t>(q), 0.0), 1.0), Setting::smooth, 1.0, 1.0},
        smooth_chain_minimizer(spec), 0.0, 0.0};
    out.f_star = out.problem.f.value_untracked(out.x_star);
    out.g_star = out.problem.g.value_untracked(out.x_star);
    return out;
}

// Lipschitz counterpart on the unit ball: lower level is the Lipschitz chain
// with unit level and unit scale; the optimum sits at -1/sqrt(2T) in every
// coordinate with upper-level value 1/4.
inline ProblemWithTruth make_lipschitz_hard_instance(int T) {
    if (T < 1) throw std::invalid_argument("make_lipschitz_hard_instance: T must be positive");
    const int q = 2 * T;
    ChainSpec spec{q, 1.0, 1.0};
    ProblemWithTruth out{
        BilevelProblem{make_tail_quadratic(q, T), make_lipschitz_chain(spec),
                       Ball(Vector(static_cast<std::size_t>(q), 0.0), 1.0), Setting::lipschitz, 1.0, 1.0},
        lipschitz_chain_minimizer(spec), 0.0, 0.0};
    out.f_star = out.problem.f.value_untracked(out.x_star);
    out.g_star = out.problem.g.value_untracked(out.x_star);
    return out;
}

enum class ChainLevel { upper, lower };

// Single-level floor instances: one level is a chain, the other identically
// zero, on the ball of the given radius. The smooth family uses 2T+1
// coordinates, the Lipschitz family T. The recorded optimum is the chain's
// unconstrained one, which is the reference level the complexity floors are
// stated against (for the smooth family it can lie outside the ball; every
// floor check only uses differences of chain values, which that slack makes
// conservative).
inline ProblemWithTruth make_lower_bound_instance(Setting setting, ChainLevel level, int T,
                                                  double constant, double radius) {
    if (T < 1) throw std::invalid_argument("make_lower_bound_instance: T must be positive");
    const int q = setting == Setting::smooth ? 2 * T + 1 : T;
    ChainSpec spec{q, constant, radius};
    validate_chain(spec);
    FirstOrderOracle chain =
        setting == Setting::smooth ? make_smooth_chain(spec) : make_lipschitz_chain(spec);
    Vector x_star = setting == Setting::smooth ? smooth_chain_minimizer(spec)
                                               : lipschitz_chain_minimizer(spec);
    const double chain_star = chain.value_untracked(x_star);
    Ball ball(Vector(static_cast<std::size_t>(q), 0.0), radius);
    if (level == ChainLevel::upper) {
        return ProblemWithTruth{
            BilevelProblem{chain, make_zero_oracle(static_cast<std::size_t>(q)), ball, setting,
                           constant, 0.0},
            std::move(x_star), chain_star, 0.0};
    }
    return ProblemWithTruth{
        BilevelProblem{make_zero_oracle(static_cast<std::size_t>(q)), chain, ball, setting, 0.0,
                       constant},
        std::move(x_star), 0.0, chain_star};
}

// ---------------------------------------------------------------------------
// Data-driven problems.

struct LambdaMaxEstimate {
    double value = 0.0;
    bool floored = false;  // true when the matrix was zero and 1e-12 substituted
};

// Largest eigenvalue of A^T A by power iteration from the normalized all-ones
// vector; stops on relative change below 1e-10 or after 1000 rounds.
inline LambdaMaxEstimate estimate_lambda_max(const DesignMatrix& data) {
    Vector v(static_cast<std::size_t>(data.n), 1.0 / std::sqrt(static_cast<double>(data.n)));
    double lambda = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        Vector u = data.apply_transpose(data.apply(v));
        const double next = norm(u);
        if (next == 0.0) return {1e-12, true};
        const bool settled = std::fabs(next - lambda) < 1e-10 * std::max(1.0, next);
        lambda = next;
        for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] / next;
        if (settled) break;
    }
    return {lambda, false};
}

struct MinNormProblem {
    BilevelProblem problem;
    double lambda_max = 0.0;
    bool lambda_floored = false;
};

// Minimum-norm solution benchmark: f(x) = 0.5|x|^2 over the least-squares
// optima of g(x) = 0.5|Ax - b|^2, both smooth with moduli 1 and
// lambda_max(A^T A).
inline MinNormProblem make_min_norm_problem(const DesignMatrix& data, double radius) {
    if (!data.has_response()) throw InvalidDataError("min-norm problem needs a response vector");
    auto d = std::make_shared<DesignMatrix>(data);
    FirstOrderOracle f(
        "half_sqnorm", [](const Vector& x) { return 0.5 * squared_norm(x); },
        [](const Vector& x) { return x; });
    FirstOrderOracle g(
        "least_squares",
        [d](const Vector& x) {
            Vector r = d->apply(x);
            axpy(-1.0, d->b, r);
            return 0.5 * squared_norm(r);
        },
        [d](const Vector& x) {
            Vector r = d->apply(x);
            axpy(-1.0, d->b, r);
            return d->apply_transpose(r);
        });
    const LambdaMaxEstimate lam = estimate_lambda_max(data);
    return MinNormProblem{
        BilevelProblem{std::move(f), std::move(g),
                       Ball(Vector(static_cast<std::size_t>(data.n), 0.0), radius), Setting::smooth,
                       1.0, lam.value},
        lam.value, lam.floored};
}

namespace detail {

// Mean logistic loss over rows of `d` with labels in d->b, with the exp()
// argument kept nonpositive for stability.
inline FirstOrderOracle make_logistic_oracle(std::shared_ptr<const DesignMatrix> d, std::string label) {
    auto margins = [d](const Vector& x) {
        Vector m = d->apply(x);
        for (long long i = 0; i < d->m; ++i) m[static_cast<std::size_t>(i)] *= d->b[static_cast<std::size_t>(i)];
        return m;
    };
    auto value = [d, margins](const Vector& x) {
        Vector m = margins(x);
        double s = 0.0;
        for (double t : m) s += t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
        return s / static_cast<double>(d->m);
    };
    auto grad = [d, margins](const Vector& x) {
        Vector m = margins(x);
        Vector w(static_cast<std::size_t>(d->m));
        for (long long i = 0; i < d->m; ++i) {
            const double t = m[static_cast<std::size_t>(i)];
            const double sigma = t >= 0.0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
            w[static_cast<std::size_t>(i)] = -d->b[static_cast<std::size_t>(i)] * sigma / static_cast<double>(d->m);
        }
        return d->apply_transpose(w);
    };
    return FirstOrderOracle(std::move(label), std::move(value), std::move(grad));
}

inline void require_pm1_labels(const DesignMatrix& d, const char* who) {
    if (!d.has_response()) throw InvalidDataError(std::string(who) + ": labels missing");
    for (double label : d.b)
        if (label != 1.0 && label != -1.0)
            throw InvalidDataError(std::string(who) + ": labels must be +1 or -1");
}

}  // namespace detail

// Validation loss minimized over the training-loss optima. Moduli are
// lambda_max(A^T A) / (4m) of the respective split.
inline BilevelProblem make_logistic_problem(const DesignMatrix& train, const DesignMatrix& val,
                                            double radius) {
    detail::require_pm1_labels(train, "logistic");
    detail::require_pm1_labels(val, "logistic");
    if (train.n != val.n) throw std::invalid_argument("logistic: feature dimensions differ");
    auto tr = std::make_shared<const DesignMatrix>(train);
    auto va = std::make_shared<const DesignMatrix>(val);
    const double l_g = estimate_lambda_max(train).value / (4.0 * static_cast<double>(train.m));
    const double l_f = estimate_lambda_max(val).value / (4.0 * static_cast<double>(val.m));
    return BilevelProblem{detail::make_logistic_oracle(va, "val_logloss"),
                          detail::make_logistic_oracle(tr, "train_logloss"),
                          Ball(Vector(static_cast<std::size_t>(train.n), 0.0), radius),
                          Setting::smooth, l_f, l_g};
}

}  // namespace fcbio
