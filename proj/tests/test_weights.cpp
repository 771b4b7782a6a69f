#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sparsedom/batch.hpp"
#include "sparsedom/weights.hpp"

using namespace sparsedom;

TEST_CASE("A_p characteristic on hand examples") {
    // constant weight: Q_p = 1 for every p
    TreeSpace d2 = TreeSpace::dyadic(2);
    std::vector<double> ones(d2.leaf_count(), 1.0);
    for (double p : {1.5, 2.0, 3.0})
        CHECK(ap_characteristic(d2, WeightProcess::from_terminal(d2, ones, p)).qp ==
              doctest::Approx(1.0).epsilon(1e-14));

    // fair coin, terminal {2, 1/2}, p = 2: root gives (5/4)^2, leaves give 1
    TreeSpace coin = TreeSpace::build(1, {2}, {{0.5, 0.5}});
    WeightProcess w = WeightProcess::from_terminal(coin, std::vector<double>{2.0, 0.5}, 2.0);
    ApReport rep = ap_characteristic(coin, w);
    CHECK(rep.qp == doctest::Approx(25.0 / 16.0).epsilon(1e-14));
    CHECK(rep.attaining.marked(0, 0));
    CHECK(rep.mode == ApReport::Mode::Exact);

    // duality at p = 2: Q_2(1/w) = Q_2(w), here exactly
    WeightProcess wu = WeightProcess::from_terminal(coin, w.u_leaf, 2.0);
    CHECK(ap_characteristic(coin, wu).qp == doctest::Approx(rep.qp).epsilon(1e-13));

    CHECK_THROWS_AS(WeightProcess::from_terminal(coin, std::vector<double>{1.0, -1.0}, 2.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(WeightProcess::from_terminal(coin, std::vector<double>{1.0, 1.0}, 1.0),
                    std::invalid_argument);
}

TEST_CASE("node formula agrees with full stopping-time enumeration") {
    Rng rng(42);
    RandomTreeConfig cfg;
    cfg.min_depth = 2;
    cfg.max_depth = 3;
    for (int trial = 0; trial < 15; ++trial) {
        TreeSpace s = make_random_tree(cfg, rng);
        if (count_stopping_times(s, s.depth()) > 200000) continue;
        for (double p : {1.5, 2.0, 3.0}) {
            WeightProcess w = WeightProcess::from_terminal(s, make_random_weight(s, rng), p);
            const double qp = ap_characteristic(s, w).qp;
            double best = 0.0;
            for_each_stopping_time(s, s.depth(), [&](const TreeStoppingTime& T) {
                double v = 0.0;
                bool any_never = false;
                for (int leaf = 0; leaf < s.leaf_count(); ++leaf) {
                    const int sl = T.stop_level(s, leaf);
                    if (sl == TreeStoppingTime::kNever) {
                        any_never = true;
                        continue;
                    }
                    const int node = s.node_at(sl, leaf);
                    v = std::max(v, w.w.value(sl, node)[0] * std::pow(w.u.value(sl, node)[0], p - 1.0));
                }
                if (any_never) v = std::max(v, 1.0);
                best = std::max(best, v);
            });
            CHECK(std::abs(best - qp) <= 1e-12 * qp);
            CHECK(qp >= 1.0 - 1e-13);  // Jensen
        }
    }
}

TEST_CASE("sampled mode is a lower bound") {
    Rng rng(77);
    RandomTreeConfig cfg;
    for (int t = 0; t < 10; ++t) {
        TreeSpace s = make_random_tree(cfg, rng);
        WeightProcess w = WeightProcess::from_terminal(s, make_random_weight(s, rng), 2.0);
        const double exact = ap_characteristic(s, w).qp;
        ApReport sampled = ap_characteristic_sampled(s, w, 200, 5 + t);
        CHECK(sampled.mode == ApReport::Mode::SampledLowerBound);
        CHECK(sampled.qp <= exact * (1.0 + 1e-12));
        CHECK(sampled.qp >= 1.0 - 1e-13);
    }
}

TEST_CASE("weighted norms") {
    TreeSpace coin = TreeSpace::build(1, {2}, {{0.5, 0.5}});
    std::vector<double> ones(2, 1.0);

    // w = 1 reduces to the unweighted norm
    std::vector<double> vals{1.0, 3.0};
    const double unweighted = weighted_norm(coin, vals, 1, ones, 2.0);
    CHECK(unweighted == doctest::Approx(std::sqrt(0.5 * 1.0 + 0.5 * 9.0)).epsilon(1e-15));

    // constant |value| factors out
    std::vector<double> wl{2.0, 0.5};
    std::vector<double> cvals{3.0, 3.0};
    CHECK(weighted_norm(coin, cvals, 1, wl, 2.0) ==
          doctest::Approx(3.0 * std::sqrt(0.5 * 2.0 + 0.5 * 0.5)).epsilon(1e-15));

    // direct finite sum: values (1,3), w (2, 1/2), p = 2 -> sqrt(3.25)
    CHECK(weighted_norm(coin, vals, 1, wl, 2.0) ==
          doctest::Approx(1.8027756377319946).epsilon(1e-15));
}

TEST_CASE("weighted sparse and Doob bounds on random sweeps") {
    Rng rng(3000);
    RandomTreeConfig cfg;
    for (int t = 0; t < 120; ++t) {
        TreeSpace s = make_random_tree(cfg, rng);
        TreeProcess X = make_positive_martingale(s, rng);
        TreeProcess Y = make_random_transform(s, X, 1, rng);
        StoppingFamily fam = build_sparse_family_Y_tree(s, X, Y);
        auto wleaf = make_random_weight(s, rng);

        WeightProcess w2 = WeightProcess::from_terminal(s, wleaf, 2.0);
        auto sparse2 = verify_weighted_sparse_L2(s, X, fam, w2);
        CHECK(sparse2.ok);

        WeightProcess w3 = WeightProcess::from_terminal(s, wleaf, 3.0);
        auto sparse3 = verify_weighted_sparse_Lp(s, X, fam, w3);
        CHECK(sparse3.ok);

        for (double p : {1.5, 2.0, 3.0}) {
            WeightProcess wp = WeightProcess::from_terminal(s, wleaf, p);
            auto doob = verify_doob_weighted(s, X, wp, p);
            CHECK(doob.ok);
        }

        // Y* <= 8 S(X) and the weighted sparse bound give the subordinate
        // maximal bound with constant 8 N_p(Q_p); exact on the tree.
        WeightProcess wp = WeightProcess::from_terminal(s, wleaf, 3.0);
        const double qp = ap_characteristic(s, wp).qp;
        std::vector<double> ystar(s.leaf_count()), xterm(s.leaf_count());
        for (int leaf = 0; leaf < s.leaf_count(); ++leaf) {
            ystar[leaf] = maximal_along_path(s, Y, leaf);
            xterm[leaf] = X.value(s.depth(), leaf)[0];
        }
        const double lhs = weighted_norm(s, ystar, 1, wleaf, 3.0);
        const double rhs =
            8.0 * sparse_lp_constant(3.0, qp) * weighted_norm(s, xterm, 1, wleaf, 3.0);
        CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
}

TEST_CASE("doob constant instances") {
    CHECK(doob_constant(2.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(doob_constant(1.5) == doctest::Approx(6.75).epsilon(1e-15));
    CHECK(doob_constant(3.0) == doctest::Approx(2.5980762113533159).epsilon(1e-15));
}

TEST_CASE("extrapolated bounds") {
    auto n2 = [](double A) { return 8.0 * A; };

    // p = r: no extrapolation
    CHECK(extrapolate_bound(n2, 2.0, 2.0, 3.0) == doctest::Approx(24.0).epsilon(1e-15));

    // frozen instance of the p > r formula: r=2, N_2(A)=8A, p=4, B=1
    CHECK(extrapolate_bound(n2, 2.0, 4.0, 1.0) ==
          doctest::Approx(101.36447637507861).epsilon(1e-14));

    // nondecreasing in B, both branches
    double prev_hi = 0.0, prev_lo = 0.0;
    for (double B : {1.0, 2.0, 5.0, 17.0}) {
        const double hi = extrapolate_bound(n2, 2.0, 3.5, B);
        const double lo = extrapolate_bound(n2, 2.0, 1.4, B);
        CHECK(hi > prev_hi);
        CHECK(lo > prev_lo);
        prev_hi = hi;
        prev_lo = lo;
    }

    CHECK_THROWS_AS(extrapolate_bound(n2, 2.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(extrapolate_bound(n2, 2.0, 2.0, 0.5), std::invalid_argument);
}

TEST_CASE("sharpness probe reports growing Q_p and a stable full-exponent ratio") {
    const int depths[] = {4, 6};
    const double masses[] = {10.0, 100.0, 1000.0};
    auto rows = sharpness_probe(2.0, depths, masses);
    REQUIRE(rows.size() == 6);
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.ratio_full));
        CHECK(std::isfinite(r.ratio_half));
        CHECK(r.qp >= 1.0);
        CHECK(r.ratio_half >= r.ratio_full);  // halving the exponent can only grow the ratio
    }
    // Q_p grows along the mass ladder at fixed depth
    CHECK(rows[1].qp > rows[0].qp);
    CHECK(rows[2].qp > rows[1].qp);
}
