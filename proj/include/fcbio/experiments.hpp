#pragma once

// Harness behind the command-line tool: run configuration (flags plus an
// optional flat key=value config file), benchmark dispatch, trace and summary
// serialization, synthetic dataset generation, and the self-check suites.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fcbio/core.hpp"
#include "fcbio/data.hpp"
#include "fcbio/driver.hpp"
#include "fcbio/geometry.hpp"
#include "fcbio/problems.hpp"
#include "fcbio/subroutines.hpp"
#include "fcbio/verify.hpp"

namespace fcbio {

// Bad or missing configuration values; maps to the usage exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files; maps to the I/O exit code.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Experiment { min_norm, logistic, hard_smooth, hard_lipschitz, lower_bound, custom };

inline const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::min_norm: return "min_norm";
        case Experiment::logistic: return "logistic";
        case Experiment::hard_smooth: return "hard_smooth";
        case Experiment::hard_lipschitz: return "hard_lipschitz";
        case Experiment::lower_bound: return "lower_bound";
        case Experiment::custom: return "custom";
    }
    return "?";
}

inline Experiment experiment_from_string(const std::string& name) {
    for (Experiment e : {Experiment::min_norm, Experiment::logistic, Experiment::hard_smooth,
                         Experiment::hard_lipschitz, Experiment::lower_bound, Experiment::custom})
        if (name == to_string(e)) return e;
    throw ConfigError("unknown experiment '" + name + "'");
}

inline Setting setting_from_string(const std::string& name) {
    if (name == "smooth") return Setting::smooth;
    if (name == "lipschitz") return Setting::lipschitz;
    throw ConfigError("unknown setting '" + name + "' (expected smooth or lipschitz)");
}

inline ChainLevel chain_level_from_string(const std::string& name) {
    if (name == "upper") return ChainLevel::upper;
    if (name == "lower") return ChainLevel::lower;
    throw ConfigError("unknown level '" + name + "' (expected upper or lower)");
}

inline DataFormat format_from_string(const std::string& name) {
    if (name == "csv") return DataFormat::csv;
    if (name == "libsvm") return DataFormat::libsvm;
    throw ConfigError("unknown format '" + name + "' (expected csv or libsvm)");
}

namespace detail {

inline double config_double(const std::string& field, const std::string& text) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (begin != end && *begin == '+') ++begin;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(field + ": bad number '" + text + "'");
    return out;
}

inline long long config_int(const std::string& field, const std::string& text) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError(field + ": bad integer '" + text + "'");
    return out;
}

inline std::uint64_t config_uint(const std::string& field, const std::string& text) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError(field + ": bad unsigned integer '" + text + "'");
    return out;
}

inline bool config_bool(const std::string& field, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(field + ": bad flag value '" + text + "'");
}

}  // namespace detail

// Grammar: "certified", "certified:<scale>", "per-round:<iterations>", or a
// bare integer meaning a fixed first-order total split across the rounds.
inline BudgetPolicy budget_from_string(const std::string& text) {
    BudgetPolicy out;
    if (text == "certified") return out;
    if (text.starts_with("certified:")) {
        out.k_scale = detail::config_double("budget", text.substr(10));
        return out;
    }
    if (text.starts_with("per-round:")) {
        out.mode = BudgetMode::per_round_cap;
        out.per_round = detail::config_int("budget", text.substr(10));
        return out;
    }
    out.mode = BudgetMode::fixed_total;
    out.total = detail::config_int("budget", text);
    return out;
}

struct RunConfig {
    Experiment experiment = Experiment::min_norm;
    double eps_f = 1e-6;
    double eps_g = 1e-6;
    BudgetPolicy budget;
    std::uint64_t seed = 0;
    std::string data_path;  // empty: synthesize from the seed
    DataFormat format = DataFormat::csv;
    long long columns = 0;  // optional libsvm feature count
    std::string out_path;   // trace destination; empty writes no trace
    double radius = 2.0;
    long long m = 40;
    long long n = 80;
    bool force_f_nonnegative = false;
    int chain_T = 50;                            // hard and lower_bound instances
    Setting chain_setting = Setting::smooth;     // lower_bound only
    ChainLevel chain_level = ChainLevel::upper;  // lower_bound only
    double chain_constant = 1.0;                 // lower_bound only
};

inline void validate_config(const RunConfig& cfg) {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(cfg.eps_f)) throw ConfigError("eps_f: must be positive");
    if (!positive(cfg.eps_g)) throw ConfigError("eps_g: must be positive");
    if (!positive(cfg.radius)) throw ConfigError("radius: must be positive");
    if (!positive(cfg.chain_constant)) throw ConfigError("chain_constant: must be positive");
    if (cfg.m < 1 || cfg.n < 1) throw ConfigError("dims: must be positive");
    if (cfg.chain_T < 1) throw ConfigError("chain_T: must be positive");
    try {
        validate_budget(cfg.budget);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.experiment == Experiment::logistic && cfg.data_path.empty() && cfg.m < 2)
        throw ConfigError("dims: logistic needs at least two rows to split");
    if (cfg.experiment == Experiment::custom && cfg.data_path.empty())
        throw ConfigError("data: custom experiment needs a dataset file");
}

namespace detail {

inline std::string strip_spaces(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return s.substr(i);
}

}  // namespace detail

// Config-file and flag values funnel through one entry point; keys are the
// long flag names with '-' or '_' separators used interchangeably.
inline void apply_config_entry(RunConfig& cfg, std::string key, const std::string& value) {
    for (char& c : key) {
        if (c == '-') c = '_';
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (key == "experiment") {
        cfg.experiment = experiment_from_string(value);
    } else if (key == "eps_f") {
        cfg.eps_f = detail::config_double(key, value);
    } else if (key == "eps_g") {
        cfg.eps_g = detail::config_double(key, value);
    } else if (key == "budget") {
        cfg.budget = budget_from_string(value);
    } else if (key == "seed") {
        cfg.seed = detail::config_uint(key, value);
    } else if (key == "data") {
        cfg.data_path = value;
    } else if (key == "format") {
        cfg.format = format_from_string(value);
    } else if (key == "columns") {
        cfg.columns = detail::config_int(key, value);
    } else if (key == "out") {
        cfg.out_path = value;
    } else if (key == "radius") {
        cfg.radius = detail::config_double(key, value);
    } else if (key == "dims") {
        std::string text = value;
        std::replace(text.begin(), text.end(), ',', ' ');
        const auto space = text.find(' ');
        if (space == std::string::npos) throw ConfigError("dims: expected two values");
        cfg.m = detail::config_int(key, detail::strip_spaces(text.substr(0, space)));
        cfg.n = detail::config_int(key, detail::strip_spaces(text.substr(space + 1)));
    } else if (key == "m") {
        cfg.m = detail::config_int(key, value);
    } else if (key == "n") {
        cfg.n = detail::config_int(key, value);
    } else if (key == "nonneg_f") {
        cfg.force_f_nonnegative = detail::config_bool(key, value);
    } else if (key == "chain_t") {
        cfg.chain_T = static_cast<int>(detail::config_int(key, value));
    } else if (key == "setting") {
        cfg.chain_setting = setting_from_string(value);
    } else if (key == "level") {
        cfg.chain_level = chain_level_from_string(value);
    } else if (key == "chain_constant") {
        cfg.chain_constant = detail::config_double(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

// Flat key=value lines, '#' to end of line is a comment, blank lines skipped.
// Flags passed on the command line override whatever the file set.
inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = detail::strip_spaces(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        try {
            apply_config_entry(cfg, detail::strip_spaces(line.substr(0, eq)),
                               detail::strip_spaces(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

// ---------------------------------------------------------------------------
// Experiment dispatch.

struct BuiltExperiment {
    BilevelProblem problem;
    std::optional<Vector> x_star;
    std::optional<double> f_star;
    std::optional<double> g_star;
    bool f_nonnegative = false;    // provable for this objective, not user-asserted
    bool g_nonnegative = false;    // lets the lower-level solve stop at zero
};

inline DesignMatrix load_configured_data(const RunConfig& cfg) {
    {
        std::ifstream probe(cfg.data_path);
        if (!probe) throw IoError("cannot open '" + cfg.data_path + "'");
    }
    return load_dataset(cfg.data_path, cfg.format, cfg.columns);
}

// First half of the rows (rounded up) trains, the rest validates.
inline std::pair<DesignMatrix, DesignMatrix> split_rows(const DesignMatrix& data) {
    if (data.m < 2) throw InvalidDataError("need at least two rows to split");
    const long long head = (data.m + 1) / 2;
    auto take = [&data](long long begin, long long end) {
        DesignMatrix out;
        out.m = end - begin;
        out.n = data.n;
        out.entries.assign(data.entries.begin() + begin * data.n,
                           data.entries.begin() + end * data.n);
        if (data.has_response())
            out.b.assign(data.b.begin() + begin, data.b.begin() + end);
        return out;
    };
    return {take(0, head), take(head, data.m)};
}

namespace detail {

// Ground truth only exists when the Gram solve is well conditioned; loaded
// datasets that fail it still run, just without gap reporting.
inline void attach_min_norm_truth(BuiltExperiment& built, const DesignMatrix& data) {
    try {
        MinNormTruth truth = min_norm_ground_truth(data);
        built.x_star = std::move(truth.x_star);
        built.f_star = truth.f_star;
        built.g_star = 0.0;
    } catch (const SingularSystemError&) {
    }
}

inline BuiltExperiment build_min_norm(const DesignMatrix& data, double radius) {
    BuiltExperiment built{make_min_norm_problem(data, radius).problem, {}, {}, {}, true, true};
    attach_min_norm_truth(built, data);
    return built;
}

inline BuiltExperiment build_logistic(const DesignMatrix& data, double radius) {
    auto [train, val] = split_rows(data);
    return BuiltExperiment{make_logistic_problem(train, val, radius), {}, {}, {}, true, true};
}

inline BuiltExperiment from_truth(ProblemWithTruth inst, bool f_nonnegative, bool g_nonnegative) {
    return BuiltExperiment{std::move(inst.problem), std::move(inst.x_star),
                           inst.f_star,             inst.g_star,
                           f_nonnegative,           g_nonnegative};
}

}  // namespace detail

inline BuiltExperiment build_experiment(const RunConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::min_norm: {
            DesignMatrix data = cfg.data_path.empty()
                                    ? make_min_norm_data(cfg.m, cfg.n, cfg.seed)
                                    : load_configured_data(cfg);
            if (!data.has_response())
                throw InvalidDataError("min_norm needs a response column");
            return detail::build_min_norm(data, cfg.radius);
        }
        case Experiment::logistic: {
            DesignMatrix data = cfg.data_path.empty()
                                    ? make_logistic_data(cfg.m, cfg.n, cfg.seed)
                                    : load_configured_data(cfg);
            return detail::build_logistic(data, cfg.radius);
        }
        case Experiment::hard_smooth:
            // Tail quadratic upper level is nonnegative; the chain is not.
            return detail::from_truth(make_smooth_hard_instance(cfg.chain_T), true, false);
        case Experiment::hard_lipschitz:
            return detail::from_truth(make_lipschitz_hard_instance(cfg.chain_T), true, false);
        case Experiment::lower_bound: {
            const bool chain_is_lower = cfg.chain_level == ChainLevel::lower;
            return detail::from_truth(
                make_lower_bound_instance(cfg.chain_setting, cfg.chain_level, cfg.chain_T,
                                          cfg.chain_constant, cfg.radius),
                chain_is_lower, !chain_is_lower);
        }
        case Experiment::custom: {
            DesignMatrix data = load_configured_data(cfg);
            if (!data.has_response())
                throw InvalidDataError("custom experiment needs a response column");
            // All-sign labels read as a classification task, anything else as
            // a regression right-hand side.
            const bool labeled = std::all_of(data.b.begin(), data.b.end(),
                                             [](double v) { return v == 1.0 || v == -1.0; });
            return labeled ? detail::build_logistic(data, cfg.radius)
                           : detail::build_min_norm(data, cfg.radius);
        }
    }
    throw ConfigError("unhandled experiment");
}

struct ExperimentRun {
    RunConfig config;
    BuiltExperiment built;
    SolveReport report;
    std::optional<double> f_gap;  // signed, against the known optimum
    std::optional<double> g_gap;
};

inline ExperimentRun run_experiment(const RunConfig& cfg) {
    validate_config(cfg);
    ExperimentRun run{cfg, build_experiment(cfg), {}, {}, {}};
    SolveOptions options;
    options.f_nonnegative = cfg.force_f_nonnegative || run.built.f_nonnegative;
    if (run.built.g_nonnegative) options.g_star_hint = 0.0;
    run.report = fc_bio(run.built.problem, Tolerances(cfg.eps_f, cfg.eps_g), cfg.budget, options);
    if (run.built.f_star) run.f_gap = run.report.f_value - *run.built.f_star;
    if (run.built.g_star) run.g_gap = run.report.g_value - *run.built.g_star;
    return run;
}

// ---------------------------------------------------------------------------
// Serialization. Everything but the wall-clock column is deterministic.

inline void write_trace(const std::vector<TraceRow>& trace, std::ostream& out) {
    out << "outer_iter,inner_iter,oracle_calls,t,psi_hat,f,g,wall_seconds\n";
    out.precision(17);
    for (const TraceRow& row : trace)
        out << row.outer_iter << ',' << row.inner_iter << ',' << row.oracle_calls << ',' << row.t
            << ',' << row.psi_hat << ',' << row.f << ',' << row.g << ',' << row.wall_seconds
            << '\n';
}

inline void write_trace_file(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_trace(trace, out);
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline nlohmann::ordered_json summary_json(const ExperimentRun& run) {
    nlohmann::ordered_json j;
    j["experiment"] = to_string(run.config.experiment);
    j["f_gap"] = nullptr;
    j["g_gap"] = nullptr;
    if (run.f_gap) j["f_gap"] = *run.f_gap;
    if (run.g_gap) j["g_gap"] = *run.g_gap;
    j["oracle_calls"] = run.report.oracle_calls;
    j["wall_seconds"] = run.report.wall_seconds;
    j["certified"] = run.report.certified_budget;
    return j;
}

inline int cmd_solve(const RunConfig& cfg, std::ostream& out) {
    ExperimentRun run = run_experiment(cfg);
    if (!cfg.out_path.empty()) write_trace_file(run.report.trace, cfg.out_path);
    out << summary_json(run).dump() << '\n';
    return 0;
}

inline int cmd_gen_data(const RunConfig& cfg) {
    if (cfg.m < 1 || cfg.n < 1) throw ConfigError("dims: must be positive");
    if (cfg.out_path.empty()) throw ConfigError("out: gen-data needs a destination");
    DesignMatrix data;
    switch (cfg.experiment) {
        case Experiment::min_norm:
            data = make_min_norm_data(cfg.m, cfg.n, cfg.seed);
            break;
        case Experiment::logistic:
            data = make_logistic_data(cfg.m, cfg.n, cfg.seed);
            break;
        default:
            throw ConfigError("experiment: gen-data supports min_norm and logistic");
    }
    std::ofstream out(cfg.out_path);
    if (!out) throw IoError("cannot open '" + cfg.out_path + "' for writing");
    write_csv(data, out);
    out.flush();
    if (!out) throw IoError("write to '" + cfg.out_path + "' failed");
    return 0;
}

// ---------------------------------------------------------------------------
// Self-check suites. Each check folds many trials into one verdict row.

struct CheckResult {
    std::string name;
    bool ok = false;
};

// Random bounded minimax instances for the spot checks: crossed quadratics in
// the smooth setting, three-piece max-affine pairs in the Lipschitz one. All
// live on the unit ball at the origin with moduli at most 1.5.
inline MinimaxProblem random_minimax_instance(Setting setting, std::size_t dim,
                                              std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Ball set(Vector(dim, 0.0), 1.0);
    if (setting == Setting::smooth) {
        std::uniform_real_distribution<double> curve(0.5, 1.5);
        auto quadratic = [&](std::string label) {
            const double a = curve(rng);
            Vector p(dim);
            for (double& e : p) e = 0.8 * unit(rng);
            const double c = 0.3 * unit(rng);
            FirstOrderOracle h(
                std::move(label),
                [a, p, c](const Vector& x) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        const double d = x[i] - p[i];
                        s += d * d;
                    }
                    return 0.5 * a * s + c;
                },
                [a, p](const Vector& x) {
                    Vector out = x;
                    axpy(-1.0, p, out);
                    return scaled(out, a);
                });
            return std::pair<FirstOrderOracle, double>(std::move(h), a);
        };
        auto [f, lf] = quadratic("rand_quad_f");
        auto [g, lg] = quadratic("rand_quad_g");
        const double t = 0.3 * unit(rng);
        return MinimaxProblem{std::move(f), std::move(g), t, std::move(set), Setting::smooth,
                              std::max(lf, lg)};
    }
    auto max_affine = [&](std::string label) {
        std::vector<Vector> slopes;
        std::vector<double> offsets;
        double level = 0.0;
        for (int piece = 0; piece < 3; ++piece) {
            Vector a(dim);
            for (double& e : a) e = unit(rng);
            const double len = norm(a);
            const double want = 0.3 + 0.7 * std::fabs(unit(rng));
            if (len > 0.0) a = scaled(a, want / len);
            level = std::max(level, norm(a));
            slopes.push_back(std::move(a));
            offsets.push_back(0.5 * unit(rng));
        }
        auto pick = [slopes, offsets](const Vector& x) {
            std::size_t best = 0;
            double best_val = dot(slopes[0], x) + offsets[0];
            for (std::size_t j = 1; j < slopes.size(); ++j) {
                const double val = dot(slopes[j], x) + offsets[j];
                if (val > best_val) {
                    best_val = val;
                    best = j;
                }
            }
            return std::pair<std::size_t, double>(best, best_val);
        };
        FirstOrderOracle h(
            std::move(label), [pick](const Vector& x) { return pick(x).second; },
            [pick, slopes](const Vector& x) { return slopes[pick(x).first]; });
        return std::pair<FirstOrderOracle, double>(std::move(h), level);
    };
    auto [f, cf] = max_affine("rand_affine_f");
    auto [g, cg] = max_affine("rand_affine_g");
    const double t = 0.3 * unit(rng);
    return MinimaxProblem{std::move(f), std::move(g), t, std::move(set), Setting::lipschitz,
                          std::max(cf, cg)};
}

inline std::vector<CheckResult> verify_projections() {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(101);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto sample = [&](std::size_t dim, double spread) {
        Vector v(dim);
        for (double& e : v) e = spread * gauss(rng);
        return v;
    };
    auto minus = [](Vector a, const Vector& b) {
        axpy(-1.0, b, a);
        return a;
    };

    bool idempotent = true, nonexpansive = true, on_plane = true;
    bool pair_feasible = true, pair_best = true;
    for (int trial = 0; trial < 50; ++trial) {
        const Ball ball(sample(4, 0.5), 0.5 + std::fabs(gauss(rng)));
        const Vector z = sample(4, 2.0);
        const Vector w = sample(4, 2.0);
        const Vector pz = ball.project(z);
        idempotent = idempotent && distance(ball.project(pz), pz) <= 1e-12 * (1.0 + norm(pz));
        nonexpansive = nonexpansive && distance(pz, ball.project(w)) <= distance(z, w) + 1e-12;

        Vector normal = sample(4, 1.0);
        if (norm(normal) == 0.0) normal[0] = 1.0;
        // Anchor the plane at an interior point so the pair stays feasible.
        Vector anchor = ball.center();
        axpy(0.5 * ball.radius(), scaled(sample(4, 1.0), 0.3), anchor);
        anchor = ball.project(anchor);
        const Hyperplane plane(normal, -dot(normal, anchor));

        const Vector q = project_hyperplane(z, plane);
        on_plane = on_plane &&
                   std::fabs(plane.evaluate(q)) <= 1e-9 * (1.0 + std::fabs(plane.offset) + norm(z));

        const Vector p = project_ball_hyperplane(z, ball, plane);
        pair_feasible = pair_feasible && ball.contains(p, 1e-9) &&
                        std::fabs(plane.evaluate(p)) <= 1e-8 * (1.0 + std::fabs(plane.offset));
        for (int probe = 0; probe < 20; ++probe) {
            const Vector y = project_ball_hyperplane(sample(4, 2.0), ball, plane);
            pair_best = pair_best && dot(minus(z, p), minus(y, p)) <= 1e-8;
        }
    }
    out.push_back({"ball projection is idempotent", idempotent});
    out.push_back({"ball projection is nonexpansive", nonexpansive});
    out.push_back({"hyperplane projection lands on the plane", on_plane});
    out.push_back({"ball-plane projection stays feasible", pair_feasible});
    out.push_back({"ball-plane projection beats feasible probes", pair_best});

    bool rejected = false;
    try {
        project_ball_hyperplane(Vector(3, 0.0), Ball(Vector(3, 0.0), 1.0),
                                Hyperplane(Vector{1.0, 0.0, 0.0}, -5.0));
    } catch (const InfeasibleSubproblemError&) {
        rejected = true;
    }
    out.push_back({"disjoint ball and plane are rejected", rejected});
    return out;
}

inline std::vector<CheckResult> verify_subroutines() {
    std::vector<CheckResult> out;
    std::mt19937_64 rng(202);
    const double eps = 0.1;

    bool sgm_ok = true;
    for (int trial = 0; trial < 5; ++trial) {
        const MinimaxProblem p = random_minimax_instance(Setting::lipschitz, 3, rng);
        const long long K =
            certified_round_iters(p.setting, p.set.diameter(), p.constant, eps);
        const auto run = sgm_minimax(p, p.set.center(), K);
        const double ref = psi_star_reference(p, eps);
        sgm_ok = sgm_ok && run.psi_hat - ref >= 0.0 && run.psi_hat - ref <= eps / 2 + 1e-6;
    }
    out.push_back({"subgradient method meets its psi certificate", sgm_ok});

    bool agm_ok = true;
    for (int trial = 0; trial < 5; ++trial) {
        const MinimaxProblem p = random_minimax_instance(Setting::smooth, 3, rng);
        const long long K =
            certified_round_iters(p.setting, p.set.diameter(), p.constant, eps);
        const auto run = agm_minimax(p, p.set.center(), K);
        const double ref = psi_star_reference(p, eps);
        agm_ok = agm_ok && run.psi_hat - ref >= 0.0 && run.psi_hat - ref <= eps / 2 + 1e-6;
    }
    out.push_back({"accelerated method meets its psi certificate", agm_ok});

    bool map_ok = true;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const MinimaxProblem p = random_minimax_instance(Setting::smooth, 3, rng);
        Vector y(3);
        for (double& e : y) e = 0.9 * unit(rng);
        y = p.set.project(y);
        const Vector stepped = gradient_mapping_step(p, y);
        const BruteForceResult brute = gradient_mapping_bruteforce(p, y, 100);
        map_ok = map_ok &&
                 std::fabs(gradient_mapping_model_value(p, y, stepped) - brute.value) <= 1e-6;
    }
    out.push_back({"gradient mapping matches the brute-force oracle", map_ok});

    bool alpha_ok = true;
    double alpha = 0.5;
    for (int k = 0; k < 200; ++k) {
        const double next = agm_next_alpha(alpha);
        alpha_ok = alpha_ok && next > 0.0 && next < alpha &&
                   std::fabs(next * next - (1.0 - next) * alpha * alpha) <= 1e-14;
        alpha = next;
    }
    out.push_back({"momentum coefficient recursion holds", alpha_ok});
    return out;
}

inline std::vector<CheckResult> verify_driver() {
    std::vector<CheckResult> out;
    const DesignMatrix data = make_min_norm_data(10, 20, 1);
    const MinNormProblem mn = make_min_norm_problem(data, 2.0);
    SolveOptions options;
    options.f_nonnegative = true;
    options.g_star_hint = 0.0;
    const SolveReport report = fc_bio(mn.problem, Tolerances(1e-4, 1e-4), {}, options);
    const MinNormTruth truth = min_norm_ground_truth(data);

    out.push_back({"min-norm f gap within tolerance", report.f_value - truth.f_star <= 1e-4});
    out.push_back({"min-norm g gap within tolerance", report.g_value <= 1e-4});

    bool widths = !report.bracket_history.empty();
    for (std::size_t i = 0; i + 1 < report.bracket_history.size(); ++i)
        widths = widths &&
                 report.bracket_history[i + 1].width == 0.5 * report.bracket_history[i].width;
    out.push_back({"bracket width halves exactly each round", widths});
    out.push_back({"planned bisection rounds all ran",
                   static_cast<int>(report.rounds.size()) == report.rounds_planned});
    out.push_back({"final bracket width within tolerance",
                   report.degenerate_bracket || report.bracket_width <= report.eps_f / 2.0});

    bool warm = true;
    for (std::size_t i = 1; i < report.rounds.size(); ++i)
        warm = warm && report.rounds[i].start == report.rounds[i - 1].end;
    out.push_back({"rounds warm start from the previous end", warm});
    out.push_back({"solution stays feasible",
                   mn.problem.feasible_set.contains(report.solution, 1e-9)});
    out.push_back({"trace starts with the pretreatment rows",
                   !report.trace.empty() && report.trace.front().outer_iter == -1});
    return out;
}

inline std::vector<CheckResult> verify_hardness() {
    std::vector<CheckResult> out;
    const int T = 20;

    for (Setting setting : {Setting::smooth, Setting::lipschitz}) {
        const bool smooth = setting == Setting::smooth;
        const ProblemWithTruth inst =
            smooth ? make_smooth_hard_instance(T) : make_lipschitz_hard_instance(T);
        MonitoredProblem monitored = monitor_zero_respecting(inst.problem);
        SolveOptions options;
        options.f_nonnegative = true;
        fc_bio(monitored.problem, Tolerances(smooth ? 0.01 : 0.1), {}, options);
        const SupportLedger& ledger = *monitored.ledger;

        bool stall = ledger.clean();
        long long window = 0;
        for (const auto& q : ledger.queries())
            if (q.first_order_calls_before <= T) {
                ++window;
                stall = stall && q.f_value == 0.0;
            }
        stall = stall && window > 0;
        out.push_back({smooth ? "smooth chain hides the upper level for T calls"
                              : "lipschitz chain hides the upper level for T calls",
                       stall});

        const double want = smooth ? (T + 1.0) / (24.0 * (2.0 * T + 1.0)) : 0.25;
        out.push_back({smooth ? "smooth hidden optimum matches the closed form"
                              : "lipschitz hidden optimum matches the closed form",
                       std::fabs(inst.f_star - want) <= 1e-12});
    }

    for (Setting setting : {Setting::smooth, Setting::lipschitz}) {
        const bool smooth = setting == Setting::smooth;
        const ProblemWithTruth inst =
            make_lower_bound_instance(setting, ChainLevel::upper, T, 1.0, 1.0);
        MonitoredProblem monitored = monitor_zero_respecting(inst.problem);
        fc_bio(monitored.problem, Tolerances(smooth ? 0.05 : 0.1), {}, {});
        // The k-th query is issued with k-1 call outputs in hand, so a T-call
        // budget covers exactly the queries with fewer than T calls before.
        double best = kNaN;
        for (const auto& q : monitored.ledger->queries())
            if (q.first_order_calls_before < T && !(q.f_value >= best)) best = q.f_value;
        const double floor = smooth ? 3.0 / (32.0 * (T + 1.0) * (T + 1.0))
                                    : 1.0 / (2.0 * (1.0 + std::sqrt(static_cast<double>(T))));
        const bool ok = std::isfinite(best) && best - inst.f_star >= floor - 1e-12;
        out.push_back({smooth ? "smooth complexity floor holds after T calls"
                              : "lipschitz complexity floor holds after T calls",
                       ok});
    }
    return out;
}

inline int run_verify_suite(const std::string& suite, std::ostream& out) {
    std::vector<std::pair<const char*, std::vector<CheckResult> (*)()>> suites;
    if (suite == "projections" || suite == "all") suites.emplace_back("projections", &verify_projections);
    if (suite == "subroutines" || suite == "all") suites.emplace_back("subroutines", &verify_subroutines);
    if (suite == "driver" || suite == "all") suites.emplace_back("driver", &verify_driver);
    if (suite == "hardness" || suite == "all") suites.emplace_back("hardness", &verify_hardness);
    if (suites.empty())
        throw ConfigError("unknown verify suite '" + suite +
                          "' (expected projections, subroutines, driver, hardness, or all)");
    int total = 0;
    int failures = 0;
    for (const auto& [name, fn] : suites) {
        out << '[' << name << "]\n";
        for (const CheckResult& check : fn()) {
            out << "  " << (check.ok ? "pass" : "FAIL") << "  " << check.name << '\n';
            ++total;
            if (!check.ok) ++failures;
        }
    }
    out << total << " checks, " << failures << " failures\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace fcbio
