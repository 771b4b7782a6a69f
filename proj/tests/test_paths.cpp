#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sparsedom/paths.hpp"

using namespace sparsedom;

TEST_CASE("time grid validation") {
    TimeGrid g(1.0, 1e-3);
    CHECK(g.steps() == 1000);
    CHECK_THROWS_AS(TimeGrid(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(1.0, 3e-4), std::invalid_argument);     // non-integer step count
    CHECK_THROWS_AS(TimeGrid(1e5, 1e-3), std::invalid_argument);     // step budget
}

TEST_CASE("brownian determinism and moments") {
    TimeGrid g(1.0, 0.01);
    CadlagPath a = simulate_brownian(g, 2, 2.0, 42);
    CadlagPath b = simulate_brownian(g, 2, 2.0, 42);
    CHECK(a.values == b.values);  // bit-identical
    CadlagPath c = simulate_brownian(g, 2, 2.0, 43);
    CHECK(a.values != c.values);

    // E|B_1|^2 = 2 t d for variance rate 2
    const int n = 30000, d = 2;
    double mean = 0.0, meansq = 0.0;
    for (int i = 0; i < n; ++i) {
        CadlagPath p = simulate_brownian(g, d, 2.0, 1000 + i);
        const double v = sqnorm(p.value(g.steps()));
        mean += v;
        meansq += v * v;
    }
    mean /= n;
    meansq /= n;
    const double se = std::sqrt((meansq - mean * mean) / n);
    CHECK(std::abs(mean - 2.0 * 1.0 * d) <= 3.0 * se);

    CHECK_THROWS_AS(simulate_brownian(g, 1, 0.0, 1), std::invalid_argument);
    std::vector<double> cv{1.5, -2.0};
    CadlagPath k = constant_path(g, cv);
    for (std::size_t i = 0; i < g.points(); ++i) {
        CHECK(k.value(i)[0] == 1.5);
        CHECK(k.value(i)[1] == -2.0);
    }
}

TEST_CASE("quadratic variation") {
    TimeGrid g3(3.0, 1.0);
    std::vector<double> c{2.0};
    CadlagPath cp = constant_path(g3, c);
    BracketPath bc = quadratic_variation(cp);
    for (double v : bc.values) CHECK(v == doctest::Approx(4.0).epsilon(1e-15));

    // X_t = t with unit steps: brackets 0,1,2,3
    CadlagPath ramp = constant_path(g3, std::vector<double>{0.0});
    for (std::size_t kk = 0; kk <= 3; ++kk) ramp.value(kk)[0] = static_cast<double>(kk);
    BracketPath br = quadratic_variation(ramp);
    for (std::size_t kk = 0; kk <= 3; ++kk) CHECK(br.values[kk] == doctest::Approx(double(kk)).epsilon(1e-15));

    // E[X,X]_1 = 2 t d within 3 standard errors
    TimeGrid g(1.0, 0.01);
    const int n = 20000, d = 3;
    double mean = 0.0, meansq = 0.0;
    for (int i = 0; i < n; ++i) {
        BracketPath b = quadratic_variation(simulate_brownian(g, d, 2.0, 77 + i));
        mean += b.values.back();
        meansq += b.values.back() * b.values.back();
    }
    mean /= n;
    meansq /= n;
    const double se = std::sqrt((meansq - mean * mean) / n);
    CHECK(std::abs(mean - 2.0 * d) <= 3.0 * se);
}

TEST_CASE("differential subordination checks") {
    TimeGrid g(1.0, 1e-2);
    CadlagPath X = simulate_brownian(g, 1, 1.0, 5);

    SubordinationReport same = check_differential_subordination(X, X);
    CHECK(same.ok);
    CHECK(same.worst_violation == 0.0);

    CadlagPath X2 = X;
    for (auto& v : X2.values) v *= 2.0;
    CHECK_FALSE(check_differential_subordination(X, X2).ok);

    for (int i = 0; i < 2000; ++i) {
        CadlagPath Xi = simulate_brownian(g, 1, 1.0, 900 + i);
        CadlagPath Yi = transform_path(Xi, random_multipliers(g.points(), 12345 + i));
        CHECK(check_differential_subordination(Xi, Yi).ok);
    }

    CadlagPath other = simulate_brownian(TimeGrid(1.0, 1e-3), 1, 1.0, 5);
    CHECK_THROWS_AS(check_differential_subordination(X, other), std::invalid_argument);
}

TEST_CASE("maximal function sees left limits") {
    TimeGrid g(3.0, 1.0);
    CadlagPath p = constant_path(g, std::vector<double>{0.0});
    p.value(1)[0] = 3.0;
    p.value(2)[0] = -1.0;
    p.value(3)[0] = -1.0;
    CHECK(maximal_function(p) == doctest::Approx(3.0));

    CadlagPath j = constant_path(g, std::vector<double>{0.0});
    j.value(2)[0] = 1.0;
    j.value(3)[0] = 1.0;
    j.jumps.push_back({2, {5.0}});  // left limit 5 exceeds every recorded value
    CHECK(maximal_function(j) == doctest::Approx(5.0));
}

TEST_CASE("jump injection") {
    TimeGrid g(1.0, 1e-2);
    CadlagPath X = simulate_brownian(g, 1, 1.0, 9);

    JumpSpec none;
    none.rate = 0.0;
    JumpResult r0 = inject_jumps(X, none, 3);
    CHECK(r0.path.values == X.values);
    CHECK(r0.path.jumps.empty());

    JumpSpec spec;
    spec.rate = 3.0;
    spec.law = JumpSpec::Law::Gaussian;
    spec.param_a = 0.7;

    // empirical mean jump count = rate * t_max within 3 standard errors
    const int n = 30000;
    double mean = 0.0, meansq = 0.0;
    for (int i = 0; i < n; ++i) {
        Rng rng(500 + i);
        const long k = rng.poisson(spec.rate * g.t_max);
        mean += static_cast<double>(k);
        meansq += static_cast<double>(k) * k;
    }
    mean /= n;
    meansq /= n;
    const double se = std::sqrt((meansq - mean * mean) / n);
    CHECK(std::abs(mean - 3.0) <= 3.0 * se);

    JumpResult r = inject_jumps(X, spec, 4);
    CHECK(r.path.jumps.size() > 0);
    for (std::size_t i = 1; i < r.path.jumps.size(); ++i)
        CHECK(r.path.jumps[i].index > r.path.jumps[i - 1].index);

    // bracket additivity: continuous bracket plus summed squared jumps
    BracketPath before = quadratic_variation(X);
    BracketPath after = quadratic_variation(r.path);
    double jumpsq = 0.0;
    for (const auto& jj : r.path.jumps) {
        const double dj = r.path.value(jj.index)[0] - jj.pre[0];
        jumpsq += dj * dj;
    }
    CHECK(after.values.back() == doctest::Approx(before.values.back() + jumpsq).epsilon(1e-12));

    JumpResult again = inject_jumps(X, spec, 4);
    CHECK(again.path.values == r.path.values);  // reproducible

    // coupled pair with the cap stays subordinate on every path
    for (int i = 0; i < 300; ++i) {
        CadlagPath Xi = simulate_brownian(g, 1, 1.0, 40000 + i);
        CadlagPath Yi = transform_path(Xi, random_multipliers(g.points(), 50000 + i));
        auto cp = inject_jumps_coupled(Xi, Yi, spec, 60000 + i);
        CHECK(check_differential_subordination(cp.X, cp.Y).ok);
    }

    JumpSpec toomany;
    toomany.rate = 1e6;
    CHECK_THROWS_AS(inject_jumps(X, toomany, 1), std::invalid_argument);

    // grid collisions move to neighboring free indices and are counted
    TimeGrid tiny(1.0, 0.25);
    CadlagPath small = constant_path(tiny, std::vector<double>{1.0});
    JumpSpec crowded;
    crowded.rate = 40.0;
    crowded.law = JumpSpec::Law::Fixed;
    crowded.param_a = 0.1;
    JumpResult rc = inject_jumps(small, crowded, 11);
    CHECK(rc.relocated > 0);
    CHECK(rc.path.jumps.size() <= tiny.steps());
    for (std::size_t i = 1; i < rc.path.jumps.size(); ++i)
        CHECK(rc.path.jumps[i].index > rc.path.jumps[i - 1].index);
}

TEST_CASE("refinement stability of the maximal-function mean") {
    const int n = 8000;
    double m[3] = {0, 0, 0};
    const double dts[3] = {1e-2, 1e-3, 1e-4};
    for (int j = 0; j < 3; ++j) {
        TimeGrid g(1.0, dts[j]);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += maximal_function(simulate_brownian(g, 1, 2.0, 7000 + i));
        m[j] = acc / n;
    }
    // finer grids see more of the supremum, and the O(sqrt(dt)) bias shrinks
    CHECK(m[1] > m[0]);
    CHECK(m[2] > m[1]);
    CHECK(m[2] - m[1] < m[1] - m[0]);
}

TEST_CASE("transform_path maps jumps through the predictable multiplier") {
    TimeGrid g(1.0, 1e-2);
    CadlagPath X = simulate_brownian(g, 1, 1.0, 11);
    JumpSpec spec;
    spec.rate = 5.0;
    spec.param_a = 1.0;
    CadlagPath XJ = inject_jumps(X, spec, 2).path;
    auto mult = random_multipliers(g.points(), 77);
    CadlagPath Y = transform_path(XJ, mult);
    REQUIRE(Y.jumps.size() == XJ.jumps.size());
    for (std::size_t i = 0; i < Y.jumps.size(); ++i) {
        const auto& jx = XJ.jumps[i];
        const auto& jy = Y.jumps[i];
        const double dx = XJ.value(jx.index)[0] - jx.pre[0];
        const double dy = Y.value(jy.index)[0] - jy.pre[0];
        CHECK(dy == doctest::Approx(mult[jx.index - 1] * dx).epsilon(1e-12));
    }
    CHECK(check_differential_subordination(XJ, Y).ok);
}
