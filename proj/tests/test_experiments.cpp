#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fcbio/fcbio.hpp"

using namespace fcbio;

namespace {

RunConfig small_min_norm() {
    RunConfig cfg;
    cfg.experiment = Experiment::min_norm;
    cfg.m = 5;
    cfg.n = 12;
    cfg.seed = 3;
    cfg.eps_f = 1e-4;
    cfg.eps_g = 1e-4;
    return cfg;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string field;
    while (std::getline(in, field, ',')) out.push_back(field);
    return out;
}

// Everything before the trailing wall-clock column.
std::string strip_wall(const std::string& line) {
    return line.substr(0, line.rfind(','));
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("trace serialization follows the published schema") {
    const ExperimentRun run = run_experiment(small_min_norm());
    std::ostringstream out;
    write_trace(run.report.trace, out);
    const auto lines = lines_of(out.str());

    REQUIRE(lines.size() == run.report.trace.size() + 1);
    CHECK(lines.front() == "outer_iter,inner_iter,oracle_calls,t,psi_hat,f,g,wall_seconds");
    for (std::size_t i = 1; i < lines.size(); ++i)
        CHECK(fields_of(lines[i]).size() == 8);

    // Pretreatment snapshot: no level or psi yet, nothing billed.
    const auto first = fields_of(lines[1]);
    CHECK(first[0] == "-1");
    CHECK(first[2] == "0");
    CHECK(first[3] == "nan");
    CHECK(first[4] == "nan");
}

TEST_CASE("identical configs reproduce everything except the wall clock") {
    const ExperimentRun a = run_experiment(small_min_norm());
    const ExperimentRun b = run_experiment(small_min_norm());

    std::ostringstream ta, tb;
    write_trace(a.report.trace, ta);
    write_trace(b.report.trace, tb);
    const auto la = lines_of(ta.str());
    const auto lb = lines_of(tb.str());
    REQUIRE(la.size() == lb.size());
    for (std::size_t i = 0; i < la.size(); ++i)
        CHECK(strip_wall(la[i]) == strip_wall(lb[i]));

    auto ja = summary_json(a);
    auto jb = summary_json(b);
    ja.erase("wall_seconds");
    jb.erase("wall_seconds");
    CHECK(ja == jb);
}

TEST_CASE("summary carries exactly the published keys in order") {
    const ExperimentRun run = run_experiment(small_min_norm());
    const auto j = summary_json(run);

    REQUIRE(j.size() == 6);
    const std::string dump = j.dump();
    CHECK(dump.starts_with("{\"experiment\":\"min_norm\",\"f_gap\":"));
    CHECK(j["f_gap"].is_number());
    CHECK(j["g_gap"].is_number());
    CHECK(j["oracle_calls"].is_number_integer());
    CHECK(j["wall_seconds"].is_number());
    CHECK(j["certified"] == true);
    CHECK(j["g_gap"].get<double>() <= 1e-4);
    CHECK(j["f_gap"].get<double>() <= 1e-4);

    RunConfig logistic = small_min_norm();
    logistic.experiment = Experiment::logistic;
    logistic.m = 8;
    logistic.n = 4;
    logistic.eps_f = 0.05;
    logistic.eps_g = 0.05;
    const auto jl = summary_json(run_experiment(logistic));
    CHECK(jl["f_gap"].is_null());
    CHECK(jl["g_gap"].is_null());
}

TEST_CASE("logistic trace opens at the zero-margin loss") {
    RunConfig cfg;
    cfg.experiment = Experiment::logistic;
    cfg.m = 8;
    cfg.n = 4;
    cfg.seed = 2;
    cfg.eps_f = 0.05;
    cfg.eps_g = 0.05;
    const ExperimentRun run = run_experiment(cfg);
    const TraceRow& first = run.report.trace.front();
    CHECK(first.outer_iter == -1);
    CHECK(first.f == std::log(2.0));
    CHECK(first.g == std::log(2.0));
}

TEST_CASE("config files feed the run and explicit entries override") {
    const auto path = temp_file("fcbio_test_config.txt");
    {
        std::ofstream out(path);
        out << "# comment line\n"
            << "experiment = logistic\n"
            << "eps-f = 1e-3   # flag spelling works too\n"
            << "eps_g=2e-3\n"
            << "dims = 6 9\n"
            << "seed = 11\n"
            << "radius = 3.5\n"
            << "budget = per-round:250\n"
            << "nonneg-f = true\n"
            << "chain-T = 7\n"
            << "setting = lipschitz\n"
            << "level = lower\n";
    }
    RunConfig cfg;
    apply_config_file(cfg, path.string());
    std::filesystem::remove(path);

    CHECK(cfg.experiment == Experiment::logistic);
    CHECK(cfg.eps_f == 1e-3);
    CHECK(cfg.eps_g == 2e-3);
    CHECK(cfg.m == 6);
    CHECK(cfg.n == 9);
    CHECK(cfg.seed == 11);
    CHECK(cfg.radius == 3.5);
    CHECK(cfg.budget.mode == BudgetMode::per_round_cap);
    CHECK(cfg.budget.per_round == 250);
    CHECK(cfg.force_f_nonnegative);
    CHECK(cfg.chain_T == 7);
    CHECK(cfg.chain_setting == Setting::lipschitz);
    CHECK(cfg.chain_level == ChainLevel::lower);

    apply_config_entry(cfg, "dims", "40,80");
    CHECK(cfg.m == 40);
    CHECK(cfg.n == 80);
}

TEST_CASE("config file errors are specific") {
    RunConfig cfg;
    CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/fcbio.cfg"), IoError);

    const auto path = temp_file("fcbio_test_badcfg.txt");
    {
        std::ofstream out(path);
        out << "radius 2\n";
    }
    CHECK_THROWS_AS(apply_config_file(cfg, path.string()), ConfigError);
    {
        std::ofstream out(path);
        out << "wibble = 3\n";
    }
    CHECK_THROWS_AS(apply_config_file(cfg, path.string()), ConfigError);
    {
        std::ofstream out(path);
        out << "radius = wide\n";
    }
    CHECK_THROWS_AS(apply_config_file(cfg, path.string()), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("budget grammar covers all modes") {
    CHECK(budget_from_string("certified").mode == BudgetMode::certified);
    CHECK(budget_from_string("certified").k_scale == 1.0);
    CHECK(budget_from_string("certified:2.5").k_scale == 2.5);
    CHECK(budget_from_string("per-round:400").mode == BudgetMode::per_round_cap);
    CHECK(budget_from_string("per-round:400").per_round == 400);
    CHECK(budget_from_string("123456").mode == BudgetMode::fixed_total);
    CHECK(budget_from_string("123456").total == 123456);
    CHECK_THROWS_AS(budget_from_string("sometimes"), ConfigError);
    CHECK_THROWS_AS(budget_from_string("certified:fast"), ConfigError);
}

TEST_CASE("validation names the offending field") {
    auto expect_reject = [](RunConfig cfg) { CHECK_THROWS_AS(validate_config(cfg), ConfigError); };
    RunConfig cfg = small_min_norm();

    RunConfig bad = cfg;
    bad.eps_f = 0.0;
    expect_reject(bad);
    bad = cfg;
    bad.eps_g = -1.0;
    expect_reject(bad);
    bad = cfg;
    bad.radius = 0.0;
    expect_reject(bad);
    bad = cfg;
    bad.m = 0;
    expect_reject(bad);
    bad = cfg;
    bad.chain_T = 0;
    expect_reject(bad);
    bad = cfg;
    bad.budget.mode = BudgetMode::fixed_total;
    bad.budget.total = 0;
    expect_reject(bad);
    bad = cfg;
    bad.experiment = Experiment::logistic;
    bad.m = 1;
    expect_reject(bad);
    bad = cfg;
    bad.experiment = Experiment::custom;
    expect_reject(bad);

    CHECK_THROWS_AS(experiment_from_string("bogus"), ConfigError);
    CHECK_THROWS_AS(setting_from_string("wavy"), ConfigError);
    CHECK_THROWS_AS(chain_level_from_string("middle"), ConfigError);
    CHECK_THROWS_AS(format_from_string("parquet"), ConfigError);
}

TEST_CASE("dispatch builds the advertised problems") {
    RunConfig cfg;
    cfg.experiment = Experiment::hard_smooth;
    cfg.chain_T = 5;
    BuiltExperiment built = build_experiment(cfg);
    REQUIRE(built.f_star.has_value());
    CHECK_THAT(*built.f_star, Catch::Matchers::WithinAbs(6.0 / (24.0 * 11.0), 1e-12));
    CHECK(built.problem.feasible_set.dim() == 10);
    CHECK(built.f_nonnegative);
    CHECK_FALSE(built.g_nonnegative);

    cfg.experiment = Experiment::lower_bound;
    cfg.chain_setting = Setting::lipschitz;
    cfg.chain_level = ChainLevel::upper;
    cfg.radius = 1.0;
    built = build_experiment(cfg);
    CHECK(built.problem.setting == Setting::lipschitz);
    CHECK(built.problem.feasible_set.dim() == 5);
    CHECK(built.g_nonnegative);
    CHECK_FALSE(built.f_nonnegative);
}

TEST_CASE("custom experiment infers the task from the response column") {
    const auto regression = temp_file("fcbio_test_reg.csv");
    write_csv_file(make_min_norm_data(4, 9, 21), regression.string());
    RunConfig cfg;
    cfg.experiment = Experiment::custom;
    cfg.data_path = regression.string();
    BuiltExperiment built = build_experiment(cfg);
    CHECK(built.problem.f.label() == "half_sqnorm");
    CHECK(built.f_star.has_value());
    std::filesystem::remove(regression);

    const auto labeled = temp_file("fcbio_test_labels.csv");
    write_csv_file(make_logistic_data(6, 3, 21), labeled.string());
    cfg.data_path = labeled.string();
    built = build_experiment(cfg);
    CHECK(built.problem.f.label() == "val_logloss");
    CHECK_FALSE(built.f_star.has_value());
    std::filesystem::remove(labeled);
}

TEST_CASE("datasets load through both formats") {
    const auto svm = temp_file("fcbio_test_rows.libsvm");
    {
        std::ofstream out(svm);
        out << "+1 1:0.5 3:-2\n-1 2:1.25\n+1 4:0.75\n-1 1:-1\n";
    }
    RunConfig cfg;
    cfg.experiment = Experiment::logistic;
    cfg.data_path = svm.string();
    cfg.format = DataFormat::libsvm;
    cfg.columns = 6;
    const BuiltExperiment built = build_experiment(cfg);
    CHECK(built.problem.feasible_set.dim() == 6);
    std::filesystem::remove(svm);

    RunConfig missing = cfg;
    missing.data_path = "/nonexistent/rows.libsvm";
    CHECK_THROWS_AS(build_experiment(missing), IoError);
}

TEST_CASE("generated datasets round trip through the loader") {
    const auto path = temp_file("fcbio_test_gen.csv");
    RunConfig cfg;
    cfg.experiment = Experiment::min_norm;
    cfg.m = 6;
    cfg.n = 10;
    cfg.seed = 5;
    cfg.out_path = path.string();
    REQUIRE(cmd_gen_data(cfg) == 0);

    const DesignMatrix loaded = load_csv_file(path.string());
    const DesignMatrix direct = make_min_norm_data(6, 10, 5);
    REQUIRE(loaded.m == 6);
    REQUIRE(loaded.n == 10);
    CHECK(loaded.entries == direct.entries);
    CHECK(loaded.b == direct.b);
    std::filesystem::remove(path);

    cfg.experiment = Experiment::logistic;
    cfg.out_path = path.string();
    REQUIRE(cmd_gen_data(cfg) == 0);
    const DesignMatrix labels = load_csv_file(path.string());
    for (double b : labels.b) CHECK((b == 1.0 || b == -1.0));
    std::filesystem::remove(path);

    cfg.experiment = Experiment::hard_smooth;
    CHECK_THROWS_AS(cmd_gen_data(cfg), ConfigError);
    cfg.experiment = Experiment::min_norm;
    cfg.out_path.clear();
    CHECK_THROWS_AS(cmd_gen_data(cfg), ConfigError);
}

TEST_CASE("solve command writes the trace file and a single summary line") {
    const auto path = temp_file("fcbio_test_trace.csv");
    RunConfig cfg = small_min_norm();
    cfg.out_path = path.string();
    std::ostringstream out;
    REQUIRE(cmd_solve(cfg, out) == 0);

    const auto printed = lines_of(out.str());
    REQUIRE(printed.size() == 1);
    const auto j = nlohmann::json::parse(printed.front());
    CHECK(j.at("experiment") == "min_norm");

    std::ifstream trace(path);
    REQUIRE(trace.good());
    std::string header;
    std::getline(trace, header);
    CHECK(header == "outer_iter,inner_iter,oracle_calls,t,psi_hat,f,g,wall_seconds");
    std::filesystem::remove(path);

    cfg.out_path = "/nonexistent_dir/trace.csv";
    CHECK_THROWS_AS(cmd_solve(cfg, out), IoError);
}

TEST_CASE("fixed budgets surface in the summary") {
    RunConfig cfg = small_min_norm();
    cfg.budget = budget_from_string("4000");
    const ExperimentRun run = run_experiment(cfg);
    CHECK_FALSE(run.report.certified_budget);
    CHECK(summary_json(run)["certified"] == false);
}

TEST_CASE("verify suites print a verdict per check") {
    std::ostringstream out;
    CHECK(run_verify_suite("all", out) == 0);
    const std::string text = out.str();
    CHECK(text.find("[projections]") != std::string::npos);
    CHECK(text.find("[subroutines]") != std::string::npos);
    CHECK(text.find("[driver]") != std::string::npos);
    CHECK(text.find("[hardness]") != std::string::npos);
    CHECK(text.find("  pass  ") != std::string::npos);
    CHECK(text.find("FAIL") == std::string::npos);
    CHECK(text.find(" 0 failures") != std::string::npos);

    CHECK_THROWS_AS(run_verify_suite("everything", out), ConfigError);
}
