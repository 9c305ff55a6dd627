#pragma once

// Core vocabulary for the bilevel solver: dense vectors, call-counted
// first-order oracles, Euclidean balls, problem bundles, tolerances and
// run reports.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fcbio {

using Vector = std::vector<double>;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const Vector& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double norm(const Vector& a) { return std::sqrt(squared_norm(a)); }

inline double distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// y += c * x
inline void axpy(double c, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline Vector scaled(const Vector& x, double c) {
    Vector out(x);
    for (double& v : out) v *= c;
    return out;
}

inline bool all_finite(const Vector& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Error types surfaced to callers; the CLI maps them onto exit codes.

struct InfeasibleSubproblemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularSystemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BracketInversionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    long long line;
    ParseError(const std::string& what, long long line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
};

// ---------------------------------------------------------------------------

struct OracleCounters {
    std::atomic<long long> first_order{0};
    std::atomic<long long> value{0};
};

// A convex function exposed through value and subgradient queries. Calls are
// tallied on a shared counter block so wrappers built on top of an oracle
// (shifted, scaled) bill the oracle they wrap. Copies share counters.
class FirstOrderOracle {
  public:
    using ValueFn = std::function<double(const Vector&)>;
    using SubgradFn = std::function<Vector(const Vector&)>;

    FirstOrderOracle() = default;

    FirstOrderOracle(std::string label, ValueFn value, SubgradFn first_order)
        : FirstOrderOracle(std::move(label), std::move(value), std::move(first_order),
                           std::make_shared<OracleCounters>()) {}

    FirstOrderOracle(std::string label, ValueFn value, SubgradFn first_order,
                     std::shared_ptr<OracleCounters> counters)
        : label_(std::move(label)),
          value_fn_(std::move(value)),
          first_order_fn_(std::move(first_order)),
          counters_(std::move(counters)) {
        if (!value_fn_ || !first_order_fn_ || !counters_)
            throw std::invalid_argument("FirstOrderOracle: missing callable");
    }

    double value(const Vector& x) const {
        counters_->value.fetch_add(1, std::memory_order_relaxed);
        return value_fn_(x);
    }

    Vector first_order(const Vector& x) const {
        counters_->first_order.fetch_add(1, std::memory_order_relaxed);
        return first_order_fn_(x);
    }

    // Reporting path: no counter traffic.
    double value_untracked(const Vector& x) const { return value_fn_(x); }

    long long first_order_calls() const {
        return counters_->first_order.load(std::memory_order_relaxed);
    }
    long long value_calls() const { return counters_->value.load(std::memory_order_relaxed); }

    const std::shared_ptr<OracleCounters>& counters() const { return counters_; }
    const ValueFn& value_fn() const { return value_fn_; }
    const SubgradFn& first_order_fn() const { return first_order_fn_; }
    const std::string& label() const { return label_; }

    explicit operator bool() const { return static_cast<bool>(value_fn_); }

  private:
    std::string label_;
    ValueFn value_fn_;
    SubgradFn first_order_fn_;
    std::shared_ptr<OracleCounters> counters_;
};

// h shifted by a constant: x -> h(x) - shift. Billing stays on h's counters.
inline FirstOrderOracle relaxed_constraint(const FirstOrderOracle& h, double shift) {
    if (!std::isfinite(shift)) throw std::invalid_argument("relaxed_constraint: shift not finite");
    return FirstOrderOracle(
        h.label() + "~",
        [v = h.value_fn(), shift](const Vector& x) { return v(x) - shift; },
        h.first_order_fn(), h.counters());
}

// c * h for c > 0. Billing stays on h's counters. With c == 1 both the value
// and the subgradient reproduce h bitwise.
inline FirstOrderOracle scale_oracle(const FirstOrderOracle& h, double c) {
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::invalid_argument("scale_oracle: factor must be positive and finite");
    return FirstOrderOracle(
        h.label() + "*",
        [v = h.value_fn(), c](const Vector& x) { return c * v(x); },
        [s = h.first_order_fn(), c](const Vector& x) {
            Vector out = s(x);
            for (double& e : out) e *= c;
            return out;
        },
        h.counters());
}

// ---------------------------------------------------------------------------

// Closed Euclidean ball. Projection scales toward the center, so coordinates
// equal to the center's stay exactly equal; with a zero center this keeps
// exact zeros, which the support-tracking checks rely on.
class Ball {
  public:
    Ball(Vector center, double radius) : center_(std::move(center)), radius_(radius) {
        if (!(radius_ > 0.0) || !std::isfinite(radius_))
            throw std::invalid_argument("Ball: radius must be positive and finite");
        if (!all_finite(center_)) throw std::invalid_argument("Ball: center not finite");
    }

    const Vector& center() const { return center_; }
    double radius() const { return radius_; }
    // Step-size formulas take the diameter of the feasible set.
    double diameter() const { return 2.0 * radius_; }
    std::size_t dim() const { return center_.size(); }

    Vector project(const Vector& z) const {
        if (z.size() != center_.size()) throw std::invalid_argument("Ball::project: dimension mismatch");
        double d2 = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double d = z[i] - center_[i];
            d2 += d * d;
        }
        if (d2 <= radius_ * radius_) return z;
        const double scale = radius_ / std::sqrt(d2);
        Vector out(z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            out[i] = center_[i] + scale * (z[i] - center_[i]);
        return out;
    }

    bool contains(const Vector& x, double tol = 0.0) const {
        return distance(x, center_) <= radius_ + tol;
    }

  private:
    Vector center_;
    double radius_;
};

// ---------------------------------------------------------------------------

enum class Setting { lipschitz, smooth };

// Upper level f minimized over the lower level g's solution set, both
// restricted to a ball. The constants are Lipschitz levels of f and g in the
// lipschitz setting and gradient smoothness moduli in the smooth setting;
// zero is allowed so a level may be identically zero.
struct BilevelProblem {
    FirstOrderOracle f;
    FirstOrderOracle g;
    Ball feasible_set;
    Setting setting = Setting::lipschitz;
    double constant_f = 0.0;
    double constant_g = 0.0;
};

inline void validate_problem(const BilevelProblem& p) {
    if (!p.f || !p.g) throw std::invalid_argument("BilevelProblem: both oracles required");
    if (!(p.constant_f >= 0.0) || !std::isfinite(p.constant_f) ||
        !(p.constant_g >= 0.0) || !std::isfinite(p.constant_g))
        throw std::invalid_argument("BilevelProblem: constants must be finite and nonnegative");
    if (p.constant_f == 0.0 && p.constant_g == 0.0)
        throw std::invalid_argument("BilevelProblem: at least one level must have a positive constant");
}

struct Tolerances {
    double eps_f;
    double eps_g;

    Tolerances(double f_gap, double g_gap) : eps_f(f_gap), eps_g(g_gap) {
        if (!(eps_f > 0.0) || !std::isfinite(eps_f) || !(eps_g > 0.0) || !std::isfinite(eps_g))
            throw std::invalid_argument("Tolerances: target gaps must be positive and finite");
    }
    explicit Tolerances(double gap) : Tolerances(gap, gap) {}
};

// ---------------------------------------------------------------------------
// Run reports. Trace rows use outer_iter == -1 for pretreatment work (the
// lower- and upper-level single-level solves) and 0-based round indices after
// that. oracle_calls is the cumulative first-order call count over both
// levels; value-only queries are tallied separately.

struct TraceRow {
    int outer_iter = 0;
    long long inner_iter = 0;
    long long oracle_calls = 0;
    double t = kNaN;
    double psi_hat = kNaN;
    double f = kNaN;
    double g = kNaN;
    double wall_seconds = 0.0;
};

// The width field is bookkept by exact halving (width_k = width_0 / 2^k); the
// lower/upper endpoints are the floating-point values the rounds actually
// used, whose difference can drift from the width by rounding.
struct BracketRecord {
    double lower = kNaN;
    double upper = kNaN;
    double width = kNaN;
};

struct RoundRecord {
    double t = kNaN;
    long long iterations = 0;
    double psi_hat = kNaN;
    bool upper_branch = false;
    Vector start;  // inner solver start point, bitwise equal to the previous round's end
    Vector end;
};

struct SolveReport {
    Vector solution;
    double f_value = kNaN;
    double g_value = kNaN;
    double g_hat_star = kNaN;
    double lower = kNaN;          // final bracket endpoints
    double upper = kNaN;
    double bracket_width = kNaN;  // final tracked width
    int rounds_planned = 0;
    bool degenerate_bracket = false;
    // True when no bisection round ever lowered the upper endpoint, so the
    // returned point is the pretreatment minimizer of g.
    bool upper_point_from_init = false;
    long long f_first_order_calls = 0;
    long long g_first_order_calls = 0;
    long long oracle_calls = 0;
    long long value_calls = 0;
    double wall_seconds = 0.0;
    double eps_f = kNaN;
    double eps_g = kNaN;
    bool certified_budget = false;
    std::vector<BracketRecord> bracket_history;
    std::vector<RoundRecord> rounds;
    std::vector<TraceRow> trace;
};

}  // namespace fcbio
