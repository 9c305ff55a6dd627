#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fcbio/core.hpp"
#include "fcbio/subroutines.hpp"

namespace fcbio {

enum class BudgetMode { certified, fixed_total, per_round_cap };

struct BudgetPolicy {
    BudgetMode mode = BudgetMode::certified;
    long long total = 0;      // fixed_total: first-order iterations split across rounds
    long long per_round = 0;  // per_round_cap: iterations per bisection round
    double k_scale = 1.0;     // certified: multiplier on the per-round iteration count
};

inline void validate_budget(const BudgetPolicy& budget) {
    switch (budget.mode) {
        case BudgetMode::certified:
            if (!(budget.k_scale > 0.0) || !std::isfinite(budget.k_scale))
                throw std::invalid_argument("budget: k_scale must be positive and finite");
            break;
        case BudgetMode::fixed_total:
            if (budget.total < 1) throw std::invalid_argument("budget: total must be at least 1");
            break;
        case BudgetMode::per_round_cap:
            if (budget.per_round < 1) throw std::invalid_argument("budget: per_round must be at least 1");
            break;
    }
}

struct SolveOptions {
    bool f_nonnegative = false;           // lets the bracket start at lower = 0
    std::optional<double> g_star_hint;    // known lower bound on min g; enables early exit
    std::optional<Vector> start = {};     // defaults to the feasible set's center
};

// Iterations that certify a psi gap of at most eps/2 for the level subroutines.
// The same expression with eps/2 plugged in covers the initialization solves.
inline long long certified_round_iters(Setting setting, double diameter, double modulus,
                                       double eps, double k_scale = 1.0) {
    if (!(eps > 0.0)) throw std::invalid_argument("certified_round_iters: eps must be positive");
    double raw = 0.0;
    if (setting == Setting::lipschitz) {
        raw = 4.0 * diameter * diameter * modulus * modulus / (eps * eps);
    } else {
        raw = diameter * std::sqrt(12.0 * modulus / eps);
    }
    raw = std::ceil(k_scale * raw);
    if (!std::isfinite(raw) || raw > 9.0e18)
        throw std::invalid_argument("certified_round_iters: iteration count overflows");
    return raw < 1.0 ? 1 : static_cast<long long>(raw);
}

struct InitResult {
    Vector x_g;
    double g_hat_star = kNaN;
    double upper = kNaN;
    double lower = kNaN;
    Vector x_f;  // empty when lower came from the nonnegativity declaration
    long long iterations_g = 0;
    long long iterations_f = 0;
};

namespace detail {

inline SubroutineResult solve_level(const FirstOrderOracle& h, const Ball& set, const Vector& start,
                                    long long iters, Setting setting, double modulus,
                                    std::optional<double> exit_below) {
    if (setting == Setting::lipschitz) return single_level_sgm(h, set, start, iters, modulus, exit_below);
    return single_level_agm(h, set, start, iters, modulus, exit_below);
}

}  // namespace detail

inline InitResult initialize(const BilevelProblem& problem, const Tolerances& tol,
                             const SolveOptions& options = {}, double k_scale = 1.0) {
    validate_problem(problem);
    const Ball& set = problem.feasible_set;
    const Vector start = options.start ? *options.start : set.center();
    const double diameter = set.diameter();

    InitResult out;
    {
        const long long iters = certified_round_iters(problem.setting, diameter, problem.constant_g,
                                                      tol.eps_g / 2.0, k_scale);
        std::optional<double> exit_below;
        if (options.g_star_hint) exit_below = *options.g_star_hint + tol.eps_g / 2.0;
        auto res = detail::solve_level(problem.g, set, start, iters, problem.setting,
                                       problem.constant_g, exit_below);
        out.x_g = std::move(res.x_hat);
        out.g_hat_star = res.psi_hat;
        out.iterations_g = res.iterations;
    }
    out.upper = problem.f.value(out.x_g);

    if (options.f_nonnegative) {
        out.lower = 0.0;
    } else {
        const long long iters = certified_round_iters(problem.setting, diameter, problem.constant_f,
                                                      tol.eps_f / 2.0, k_scale);
        auto res = detail::solve_level(problem.f, set, start, iters, problem.setting,
                                       problem.constant_f, std::nullopt);
        out.lower = res.psi_hat - tol.eps_f / 2.0;
        out.x_f = std::move(res.x_hat);
        out.iterations_f = res.iterations;
    }

    if (out.upper < out.lower) {
        throw BracketInversionError("initial bracket inverted (u=" + std::to_string(out.upper) +
                                    " < l=" + std::to_string(out.lower) +
                                    "); check the f-nonnegativity declaration");
    }
    return out;
}

inline SolveReport fc_bio(const BilevelProblem& problem, const Tolerances& tol,
                          const BudgetPolicy& budget = {}, const SolveOptions& options = {}) {
    validate_problem(problem);
    validate_budget(budget);
    const auto t_start = std::chrono::steady_clock::now();
    const auto wall = [&t_start] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    const Ball& set = problem.feasible_set;
    const double eps = tol.eps_f;
    const double half_eps = eps / 2.0;
    const double k_scale = budget.mode == BudgetMode::certified ? budget.k_scale : 1.0;

    const long long f_fo0 = problem.f.first_order_calls();
    const long long g_fo0 = problem.g.first_order_calls();
    const long long f_val0 = problem.f.value_calls();
    const long long g_val0 = problem.g.value_calls();
    const auto fo_spent = [&] {
        return (problem.f.first_order_calls() - f_fo0) + (problem.g.first_order_calls() - g_fo0);
    };

    SolveReport report;
    report.eps_f = tol.eps_f;
    report.eps_g = tol.eps_g;
    report.g_hat_star = kNaN;
    report.certified_budget = budget.mode == BudgetMode::certified;

    const Vector start = options.start ? *options.start : set.center();
    report.trace.push_back({-1, 0, 0, kNaN, kNaN, problem.f.value_untracked(start),
                            problem.g.value_untracked(start), wall()});

    InitResult init = initialize(problem, tol, options, k_scale);
    report.g_hat_star = init.g_hat_star;
    report.trace.push_back({-1, init.iterations_g, fo_spent(), kNaN, kNaN,
                            problem.f.value_untracked(init.x_g), init.g_hat_star, wall()});
    if (!init.x_f.empty()) {
        report.trace.push_back({-1, init.iterations_f, fo_spent(), kNaN, kNaN,
                                init.lower + tol.eps_f / 2.0, problem.g.value_untracked(init.x_f),
                                wall()});
    }

    // Corollary-style rescaling: only the relaxed constraint is scaled, and the
    // bisection then runs at the single tolerance eps = eps_f.
    const double scale = tol.eps_f / tol.eps_g;
    FirstOrderOracle g_shifted = scale_oracle(relaxed_constraint(problem.g, init.g_hat_star), scale);
    const double constant = std::max(problem.constant_f, scale * problem.constant_g);

    double lo = init.lower;
    double width = init.upper - init.lower;
    report.bracket_history.push_back({lo, lo + width, width});

    Vector x_upper = init.x_g;
    bool upper_updated = false;

    const auto finalize = [&](long long rounds_planned, bool degenerate) {
        report.rounds_planned = static_cast<int>(rounds_planned);
        report.degenerate_bracket = degenerate;
        report.upper_point_from_init = !upper_updated;
        report.solution = x_upper;
        report.lower = lo;
        report.upper = lo + width;
        report.bracket_width = width;
        report.f_value = problem.f.value_untracked(report.solution);
        report.g_value = problem.g.value_untracked(report.solution);
        report.f_first_order_calls = problem.f.first_order_calls() - f_fo0;
        report.g_first_order_calls = problem.g.first_order_calls() - g_fo0;
        report.oracle_calls = report.f_first_order_calls + report.g_first_order_calls;
        report.value_calls =
            (problem.f.value_calls() - f_val0) + (problem.g.value_calls() - g_val0);
        report.wall_seconds = wall();
    };

    if (width <= half_eps) {
        MinimaxProblem at_u{problem.f, g_shifted, init.upper, set, problem.setting, constant};
        const double psi = psi_value(at_u, x_upper);
        report.trace.push_back({0, 0, fo_spent(), init.upper, psi,
                                problem.f.value_untracked(x_upper),
                                problem.g.value_untracked(x_upper), wall()});
        finalize(0, true);
        return report;
    }

    long long rounds = static_cast<long long>(std::ceil(std::log2(width / half_eps)));
    if (rounds < 1) rounds = 1;
    while (std::ldexp(width, static_cast<int>(-rounds)) > half_eps) ++rounds;

    long long per_round = 0;
    switch (budget.mode) {
        case BudgetMode::certified:
            per_round = certified_round_iters(problem.setting, set.diameter(), constant, eps, k_scale);
            break;
        case BudgetMode::fixed_total:
            per_round = (budget.total + rounds - 1) / rounds;
            if (per_round < 1) per_round = 1;
            break;
        case BudgetMode::per_round_cap:
            per_round = budget.per_round;
            break;
    }

    Vector warm = init.x_g;
    for (long long n = 0; n < rounds; ++n) {
        const double t = lo + 0.5 * width;
        MinimaxProblem round_problem{problem.f, g_shifted, t, set, problem.setting, constant};
        SubroutineResult res = problem.setting == Setting::lipschitz
                                   ? sgm_minimax(round_problem, warm, per_round, half_eps)
                                   : agm_minimax(round_problem, warm, per_round, half_eps);
        RoundRecord record;
        record.t = t;
        record.iterations = res.iterations;
        record.psi_hat = res.psi_hat;
        record.upper_branch = !(res.psi_hat > half_eps);
        record.start = warm;
        record.end = res.x_hat;
        if (record.upper_branch) {
            x_upper = res.x_hat;
            upper_updated = true;
        } else {
            lo = t;
        }
        width *= 0.5;
        report.bracket_history.push_back({lo, lo + width, width});
        report.trace.push_back({static_cast<int>(n), res.iterations, fo_spent(), t, res.psi_hat,
                                problem.f.value_untracked(res.x_hat),
                                problem.g.value_untracked(res.x_hat), wall()});
        warm = std::move(res.x_hat);
        report.rounds.push_back(std::move(record));
    }

    finalize(rounds, false);
    report.trace.push_back({static_cast<int>(rounds), 0, report.oracle_calls, report.upper, kNaN,
                            report.f_value, report.g_value, report.wall_seconds});
    return report;
}

struct Certification {
    double f_gap_signed = kNaN;
    double g_gap = kNaN;
    bool f_ok = false;
    bool g_ok = false;
    bool weak_optimal = false;
};

inline Certification certify(const SolveReport& report, double f_star, double g_star) {
    Certification cert;
    cert.f_gap_signed = report.f_value - f_star;
    cert.g_gap = report.g_value - g_star;
    cert.f_ok = cert.f_gap_signed <= report.eps_f;
    cert.g_ok = cert.g_gap <= report.eps_g;
    cert.weak_optimal = cert.f_ok && cert.g_ok;
    return cert;
}

}  // namespace fcbio
