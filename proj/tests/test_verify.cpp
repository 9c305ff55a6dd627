#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fcbio/problems.hpp"
#include "fcbio/verify.hpp"

using namespace fcbio;
using Catch::Matchers::WithinAbs;

TEST_CASE("minimum norm ground truth closed forms") {
    DesignMatrix wide;
    wide.m = 1;
    wide.n = 2;
    wide.entries = {1.0, 1.0};
    wide.b = {1.0};
    auto truth = min_norm_ground_truth(wide);
    REQUIRE(truth.x_star.size() == 2);
    CHECK_THAT(truth.x_star[0], WithinAbs(0.5, 1e-12));
    CHECK_THAT(truth.x_star[1], WithinAbs(0.5, 1e-12));
    CHECK_THAT(truth.f_star, WithinAbs(0.25, 1e-12));

    DesignMatrix eye;
    eye.m = 3;
    eye.n = 3;
    eye.entries = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    eye.b = {0.3, -0.2, 0.5};
    truth = min_norm_ground_truth(eye);
    for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(truth.x_star[i], WithinAbs(eye.b[i], 1e-12));

    eye.b = {0.0, 0.0, 0.0};
    truth = min_norm_ground_truth(eye);
    CHECK(truth.f_star == 0.0);
    CHECK(norm(truth.x_star) == 0.0);
}

TEST_CASE("ground truth on synthetic data interpolates") {
    auto data = make_min_norm_data(5, 9, 123);
    auto truth = min_norm_ground_truth(data);
    CHECK_THAT(truth.f_star, WithinAbs(0.5 * squared_norm(truth.x_star), 1e-14));
    Vector residual = data.apply(truth.x_star);
    axpy(-1.0, data.b, residual);
    CHECK(0.5 * squared_norm(residual) <= 1e-14 * (1.0 + squared_norm(data.b)));
}

TEST_CASE("ground truth failure modes") {
    DesignMatrix repeated;
    repeated.m = 2;
    repeated.n = 2;
    repeated.entries = {1.0, 1.0, 1.0, 1.0};
    repeated.b = {1.0, 1.0};
    CHECK_THROWS_AS(min_norm_ground_truth(repeated), SingularSystemError);

    DesignMatrix no_response;
    no_response.m = 1;
    no_response.n = 2;
    no_response.entries = {1.0, 0.0};
    CHECK_THROWS_AS(min_norm_ground_truth(no_response), InvalidDataError);
}

namespace {

MinimaxProblem opposing_lines(double t) {
    FirstOrderOracle f("f", [](const Vector& x) { return x[0]; },
                       [](const Vector&) { return Vector{1.0}; });
    FirstOrderOracle g("g", [](const Vector& x) { return -x[0]; },
                       [](const Vector&) { return Vector{-1.0}; });
    return MinimaxProblem{f, g, t, Ball(Vector{0.0}, 1.0), Setting::lipschitz, 1.0};
}

}  // namespace

TEST_CASE("psi star reference pins analytic optima") {
    // max(x, -x) has minimum 0
    CHECK(psi_star_reference(opposing_lines(0.0), 0.05) >= 0.0);
    CHECK(psi_star_reference(opposing_lines(0.0), 0.05) <= 0.05);
    // huge t: the constraint branch dominates, min of -x over [-1,1] is -1
    const double dominated = psi_star_reference(opposing_lines(100.0), 0.05);
    CHECK(dominated >= -1.0 - 1e-12);
    CHECK(dominated <= -1.0 + 0.05);
    CHECK_THROWS_AS(psi_star_reference(opposing_lines(0.0), 0.0), std::invalid_argument);
}

TEST_CASE("psi star reference never exceeds a certified run from the same start") {
    FirstOrderOracle f("f", [](const Vector& x) { return std::fabs(x[0] - 0.3); },
                       [](const Vector& x) { return Vector{x[0] >= 0.3 ? 1.0 : -1.0}; });
    FirstOrderOracle g("g", [](const Vector& x) { return std::fabs(x[0] + 0.2) - 0.1; },
                       [](const Vector& x) { return Vector{x[0] >= -0.2 ? 1.0 : -1.0}; });
    MinimaxProblem lips{f, g, 0.05, Ball(Vector{0.0}, 1.0), Setting::lipschitz, 1.0};
    const double eps = 0.1;
    const long long k = certified_round_iters(Setting::lipschitz, 2.0, 1.0, eps);
    auto run = sgm_minimax(lips, Vector{0.0}, k);
    const double ref = psi_star_reference(lips, eps);
    CHECK(ref <= run.psi_hat);
    CHECK(run.psi_hat - ref <= eps / 2.0 + 1e-6);
    CHECK(run.psi_hat - ref >= 0.0);

    FirstOrderOracle fs("fs", [](const Vector& x) { return (x[0] - 1.0) * (x[0] - 1.0); },
                        [](const Vector& x) { return Vector{2.0 * (x[0] - 1.0)}; });
    FirstOrderOracle gs("gs", [](const Vector& x) { return x[0] * x[0] - 0.4; },
                        [](const Vector& x) { return Vector{2.0 * x[0]}; });
    MinimaxProblem smooth{fs, gs, 0.2, Ball(Vector{0.0}, 1.0), Setting::smooth, 2.0};
    const long long ks = certified_round_iters(Setting::smooth, 2.0, 2.0, eps);
    auto runs = agm_minimax(smooth, Vector{0.0}, ks);
    const double refs = psi_star_reference(smooth, eps);
    CHECK(refs <= runs.psi_hat);
    CHECK(runs.psi_hat - refs <= eps / 2.0 + 1e-6);
}

TEST_CASE("brute force handles the degenerate and single branch cases") {
    FirstOrderOracle f("f", [](const Vector& x) { return 0.5 * squared_norm(x); },
                       [](const Vector& x) { return x; });
    FirstOrderOracle low("low", [](const Vector&) { return -10.0; },
                         [](const Vector& x) { return Vector(x.size(), 0.0); });
    MinimaxProblem p{f, low, 0.3, Ball(Vector{0.0, 0.0}, 1.5), Setting::smooth, 1.0};

    auto at_center = gradient_mapping_bruteforce(p, Vector{0.0, 0.0});
    CHECK(at_center.x == Vector{0.0, 0.0});
    CHECK(at_center.value == -0.3);

    // f dominates everywhere, so the model minimum is the projected step y - grad f(y)
    auto stepped = gradient_mapping_bruteforce(p, Vector{1.0, 0.5});
    CHECK(std::fabs(stepped.x[0]) <= 1e-4);
    CHECK(std::fabs(stepped.x[1]) <= 1e-4);
    CHECK_THAT(stepped.value, WithinAbs(0.5 * 1.25 - 0.3 - 1.25 + 0.5 * 1.25, 1e-8));

    CHECK_THROWS_AS(gradient_mapping_bruteforce(p, Vector{0.0, 0.0}, 50), std::invalid_argument);
    CHECK_THROWS_AS(gradient_mapping_bruteforce(p, Vector{0.0}), std::invalid_argument);
}

TEST_CASE("brute force agrees with the closed form step") {
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Vector a{u(rng), u(rng)};
        Vector c{u(rng), u(rng)};
        const double d = 0.3 * u(rng);
        const double t = 0.2 * u(rng);
        FirstOrderOracle f("f",
                           [a](const Vector& x) {
                               Vector r = x;
                               axpy(-1.0, a, r);
                               return 0.5 * squared_norm(r);
                           },
                           [a](const Vector& x) {
                               Vector r = x;
                               axpy(-1.0, a, r);
                               return r;
                           });
        FirstOrderOracle g("g",
                           [c, d](const Vector& x) {
                               Vector r = x;
                               axpy(-1.0, c, r);
                               return 0.5 * squared_norm(r) + d;
                           },
                           [c](const Vector& x) {
                               Vector r = x;
                               axpy(-1.0, c, r);
                               return r;
                           });
        MinimaxProblem p{f, g, t, Ball(Vector{0.0, 0.0}, 1.2), Setting::smooth, 1.0};
        Vector y{u(rng), u(rng)};

        Vector closed = gradient_mapping_step(p, y);
        auto brute = gradient_mapping_bruteforce(p, y);

        const double fy = p.f.value_untracked(y) - t;
        const double gy = p.g_tilde.value_untracked(y);
        Vector df = p.f.first_order_fn()(y);
        Vector dg = p.g_tilde.first_order_fn()(y);
        auto envelope = [&](const Vector& x) {
            Vector diff = x;
            axpy(-1.0, y, diff);
            const double quad = 0.5 * squared_norm(diff);
            return std::max(fy + dot(df, diff) + quad, gy + dot(dg, diff) + quad);
        };
        CHECK_THAT(envelope(closed), WithinAbs(brute.value, 1e-6));
        CHECK(envelope(closed) <= brute.value + 1e-9);
    }
}

TEST_CASE("finite differences recover smooth gradients") {
    FirstOrderOracle half_sq("h", [](const Vector& x) { return 0.5 * squared_norm(x); },
                             [](const Vector& x) { return x; });
    Vector x{0.7, -1.3, 2.2};
    Vector approx = finite_difference_gradient(half_sq, x, 1e-6);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::fabs(approx[i] - x[i]) <= 1e-8 * (1.0 + std::fabs(x[i])));

    FirstOrderOracle flat("flat", [](const Vector&) { return 3.5; },
                          [](const Vector& x) { return Vector(x.size(), 0.0); });
    Vector zero = finite_difference_gradient(flat, x, 1e-6);
    CHECK(norm(zero) == 0.0);

    auto train = make_logistic_data(6, 4, 99);
    auto logistic = make_logistic_problem(train, train, 5.0);
    Vector point{0.3, -0.1, 0.2, 0.05};
    Vector fd = finite_difference_gradient(logistic.g, point, 1e-6);
    Vector exact = logistic.g.first_order_fn()(point);
    for (std::size_t i = 0; i < point.size(); ++i)
        CHECK(std::fabs(fd[i] - exact[i]) <= 1e-6 * (1.0 + std::fabs(exact[i])));

    CHECK_THROWS_AS(finite_difference_gradient(flat, x, 0.0), std::invalid_argument);
}

TEST_CASE("support ledger flags escapes from the revealed span") {
    FirstOrderOracle f("f", [](const Vector& x) { return x[1]; },
                       [](const Vector&) { return Vector{0.0, 1.0, 0.0}; });
    FirstOrderOracle g("g", [](const Vector& x) { return x[0]; },
                       [](const Vector&) { return Vector{1.0, 0.0, 0.0}; });
    BilevelProblem problem{f, g, Ball(Vector{0.0, 0.0, 0.0}, 2.0), Setting::lipschitz, 1.0, 1.0};
    auto monitored = monitor_zero_respecting(problem);

    monitored.problem.g.value(Vector{0.0, 0.0, 0.0});
    monitored.problem.g.first_order(Vector{0.0, 0.0, 0.0});  // reveals coordinate 0
    monitored.problem.f.value(Vector{0.5, 0.0, 0.0});        // inside the span
    CHECK(monitored.ledger->clean());

    monitored.problem.f.value(Vector{0.0, 0.0, 0.25});  // coordinate 2 never revealed
    CHECK(!monitored.ledger->clean());
    auto violations = monitored.ledger->violations();
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].query_ordinal == 3);
    CHECK(violations[0].coordinate == 2);

    auto queries = monitored.ledger->queries();
    REQUIRE(queries.size() == 4);
    CHECK(queries[0].first_order_calls_before == 0);
    CHECK(queries[1].first_order);
    CHECK(queries[2].first_order_calls_before == 1);
    CHECK(queries[2].support_size == 1);
    CHECK(queries[2].max_support_index == 0);
    CHECK(queries[2].f_value == 0.0);  // f reads coordinate 1, still zero
    CHECK(monitored.ledger->allowed() == std::set<std::size_t>{0});
    CHECK(monitored.ledger->first_order_calls() == 1);

    // billing still lands on the wrapped oracles
    CHECK(problem.g.first_order_calls() == 1);
    CHECK(problem.f.value_calls() == 2);
}

TEST_CASE("monitored hard instance stalls within the budgeted window") {
    const int T = 5;
    auto hard = make_smooth_hard_instance(T);
    auto monitored = monitor_zero_respecting(hard.problem);
    SolveOptions opts;
    opts.f_nonnegative = true;
    auto report = fc_bio(monitored.problem, Tolerances(0.05), {}, opts);

    CHECK(monitored.ledger->clean());
    long long in_window = 0;
    for (const auto& q : monitored.ledger->queries()) {
        if (q.first_order_calls_before > T) continue;
        ++in_window;
        CHECK(q.f_value == 0.0);
    }
    CHECK(in_window > 0);
    CHECK(report.oracle_calls > 0);
}
