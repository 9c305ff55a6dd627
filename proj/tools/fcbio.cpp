// Command-line front end. All of the substance lives in the headers; this
// file only maps flags onto a RunConfig and exceptions onto exit codes:
// 0 success, 1 check failure, 2 usage or config error, 3 I/O or parse error.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fcbio/fcbio.hpp"

namespace {

// Shared flag set for solve and gen-data; values only land in the RunConfig
// when the flag was actually given, so a config file can fill the rest.
struct FlagSet {
    std::string config_path;
    std::string experiment;
    double eps_f = 0.0;
    double eps_g = 0.0;
    std::string budget;
    std::uint64_t seed = 0;
    std::string data;
    std::string format;
    long long columns = 0;
    std::string out;
    double radius = 0.0;
    std::vector<long long> dims;
    bool nonneg_f = false;
    int chain_T = 0;
    std::string setting;
    std::string level;
    double chain_constant = 0.0;
};

void add_common_flags(CLI::App* cmd, FlagSet& flags) {
    cmd->add_option("--config", flags.config_path,
                    "key=value file applied before the explicit flags");
    cmd->add_option("--experiment", flags.experiment,
                    "min_norm|logistic|hard_smooth|hard_lipschitz|lower_bound|custom");
    cmd->add_option("--seed", flags.seed, "seed for synthetic data (default 0)");
    cmd->add_option("--out", flags.out, "output file path");
    cmd->add_option("--dims", flags.dims, "rows and columns of synthetic data")->expected(2);
}

void add_solve_flags(CLI::App* cmd, FlagSet& flags) {
    cmd->add_option("--eps-f", flags.eps_f, "upper-level accuracy (default 1e-6)");
    cmd->add_option("--eps-g", flags.eps_g, "lower-level accuracy (default 1e-6)");
    cmd->add_option("--budget", flags.budget,
                    "certified | certified:<scale> | per-round:<iters> | <total>");
    cmd->add_option("--data", flags.data, "dataset file instead of synthetic data");
    cmd->add_option("--format", flags.format, "csv|libsvm (default csv)");
    cmd->add_option("--columns", flags.columns, "feature count for libsvm files");
    cmd->add_option("--radius", flags.radius, "feasible ball radius (default 2)");
    cmd->add_flag("--nonneg-f", flags.nonneg_f,
                  "assert the upper level is nonnegative to skip its pretreatment solve");
    cmd->add_option("--chain-T", flags.chain_T,
                    "oracle-call horizon of the hard and lower_bound instances (default 50)");
    cmd->add_option("--setting", flags.setting, "lower_bound chain setting: smooth|lipschitz");
    cmd->add_option("--level", flags.level, "lower_bound chain placement: upper|lower");
    cmd->add_option("--chain-constant", flags.chain_constant,
                    "modulus of the lower_bound chain (default 1)");
}

fcbio::RunConfig make_config(const CLI::App* cmd, const FlagSet& flags) {
    fcbio::RunConfig cfg;
    if (!flags.config_path.empty()) fcbio::apply_config_file(cfg, flags.config_path);
    auto given = [cmd](const std::string& name) {
        const CLI::Option* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--experiment")) cfg.experiment = fcbio::experiment_from_string(flags.experiment);
    if (given("--eps-f")) cfg.eps_f = flags.eps_f;
    if (given("--eps-g")) cfg.eps_g = flags.eps_g;
    if (given("--budget")) cfg.budget = fcbio::budget_from_string(flags.budget);
    if (given("--seed")) cfg.seed = flags.seed;
    if (given("--data")) cfg.data_path = flags.data;
    if (given("--format")) cfg.format = fcbio::format_from_string(flags.format);
    if (given("--columns")) cfg.columns = flags.columns;
    if (given("--out")) cfg.out_path = flags.out;
    if (given("--radius")) cfg.radius = flags.radius;
    if (given("--dims")) {
        cfg.m = flags.dims[0];
        cfg.n = flags.dims[1];
    }
    if (given("--nonneg-f")) cfg.force_f_nonnegative = flags.nonneg_f;
    if (given("--chain-T")) cfg.chain_T = flags.chain_T;
    if (given("--setting")) cfg.chain_setting = fcbio::setting_from_string(flags.setting);
    if (given("--level")) cfg.chain_level = fcbio::chain_level_from_string(flags.level);
    if (given("--chain-constant")) cfg.chain_constant = flags.chain_constant;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"first-order solver for convex simple bilevel problems"};
    app.require_subcommand(1);

    FlagSet solve_flags;
    CLI::App* solve = app.add_subcommand("solve", "run an experiment, print a JSON summary");
    add_common_flags(solve, solve_flags);
    add_solve_flags(solve, solve_flags);

    std::string suite = "all";
    CLI::App* verify = app.add_subcommand("verify", "run the self-check suites");
    verify->add_option("suite", suite, "projections|subroutines|driver|hardness|all");

    FlagSet gen_flags;
    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
    add_common_flags(gen, gen_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (solve->parsed()) return fcbio::cmd_solve(make_config(solve, solve_flags), std::cout);
        if (verify->parsed()) return fcbio::run_verify_suite(suite, std::cout);
        if (gen->parsed()) return fcbio::cmd_gen_data(make_config(gen, gen_flags));
        return 2;
    } catch (const fcbio::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const fcbio::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const fcbio::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 3;
    } catch (const fcbio::InvalidDataError& e) {
        std::cerr << "invalid data: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
