#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sparsedom/batch.hpp"
#include "sparsedom/weights.hpp"
#include "sparsedom/zprocess.hpp"

using namespace sparsedom;

TEST_CASE("evolve_Z basics") {
    TimeGrid g(1.0, 1e-3);
    CadlagPath zero = constant_path(g, std::vector<double>{0.0});

    // homogeneous from zero stays zero
    ZPath z0 = evolve_Z(zero, DriftSpec::scaled_identity(-1.0, 1, 0.5), std::vector<double>{0.0});
    for (double v : z0.Z.values) CHECK(v == 0.0);

    // V = 0, a = 1: Z_t = e^{-t} v up to O(dt)
    ZPath zexp = evolve_Z(zero, DriftSpec::zero(1, 1.0), std::vector<double>{2.0});
    const double exact = 2.0 * std::exp(-1.0);
    CHECK(std::abs(zexp.Z.values.back() - exact) / exact <= 2e-3);

    // V = 0, a = 0: pure transport of the Y increments, exactly
    CadlagPath Y = simulate_brownian(g, 2, 1.0, 5);
    ZPath zt = evolve_Z(Y, DriftSpec::zero(2, 0.0), std::vector<double>{0.5, -0.5});
    for (std::size_t k = 0; k <= g.steps(); ++k)
        for (int c = 0; c < 2; ++c)
            CHECK(zt.Z.value(k)[c] ==
                  doctest::Approx((c ? -0.5 : 0.5) + Y.value(k)[c] - Y.value(0)[c]).epsilon(1e-14));
}

TEST_CASE("stability bound is enforced with the required dt named") {
    TimeGrid g(1.0, 1e-3);
    CadlagPath zero = constant_path(g, std::vector<double>{0.0});
    CHECK_THROWS_WITH_AS(evolve_Z(zero, DriftSpec::zero(1, 2000.0), std::vector<double>{1.0}),
                         doctest::Contains("required dt"), std::invalid_argument);
}

TEST_CASE("drift validation catches asymmetric or positive V") {
    DriftSpec bad = DriftSpec::constant({0.0, 1.0, -1.0, 0.0}, 2, 0.0);  // antisymmetric
    CHECK_THROWS_AS(validate_drift(bad, 1), std::invalid_argument);
    DriftSpec pos = DriftSpec::scaled_identity(0.5, 2, 0.0);
    CHECK_THROWS_AS(validate_drift(pos, 1), std::invalid_argument);
    validate_drift(DriftSpec::scaled_identity(-0.5, 2, 0.0), 1);  // fine
}

TEST_CASE("homogeneous norm decay") {
    TimeGrid g(2.0, 1e-3);
    auto r1 = norm_decay_check(DriftSpec::scaled_identity(-1.0, 1, 0.0), std::vector<double>{1.0}, g);
    CHECK(r1.ok);
    auto r2 = norm_decay_check(DriftSpec::zero(3, 0.0), std::vector<double>{1.0, 2.0, 3.0}, g);
    CHECK(r2.ok);  // constant norm sits on the boundary of nonincreasing

    // randomized negative semidefinite V = -L L^T scaled
    Rng rng(4);
    TimeGrid gshort(0.2, 1e-2);
    for (int trial = 0; trial < 300; ++trial) {
        const int d = 1 + static_cast<int>(rng.uniform() * 3.0);
        std::vector<double> L(static_cast<std::size_t>(d) * d);
        for (auto& v : L) v = rng.uniform(-1.0, 1.0);
        std::vector<double> V(static_cast<std::size_t>(d) * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int k = 0; k < d; ++k) s += L[i * d + k] * L[j * d + k];
                V[i * d + j] = -s;
            }
        std::vector<double> z(d);
        for (auto& v : z) v = rng.uniform(-1.0, 1.0);
        auto rep = norm_decay_check(DriftSpec::constant(V, d, rng.uniform() * 0.5), z, gshort);
        CHECK(rep.ok);
    }
}

TEST_CASE("bellman functions") {
    std::vector<double> y0{0.0};
    CHECK(bellman_U(0.0, y0) == 0.0);
    CHECK(bellman_V(0.0, y0) == 0.0);
    std::vector<double> y02{0.2};
    CHECK(bellman_U(0.3, y02) == doctest::Approx(-0.05).epsilon(1e-15));
    CHECK(bellman_U(1.0, y0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(bellman_V(0.3, y02) == doctest::Approx(-0.6).epsilon(1e-15));

    // V <= U everywhere, randomized grid, both low and higher dimension
    Rng rng(9);
    for (int d : {1, 3}) {
        std::vector<double> y(d);
        for (int i = 0; i < 1000000 / (d == 1 ? 1 : 10); ++i) {
            const double x = rng.uniform(-2.0, 2.0);
            for (auto& v : y) v = rng.uniform(-2.0, 2.0);
            CHECK(bellman_V(x, y) <= bellman_U(x, y));
        }
    }
}

TEST_CASE("jump consistency of evolve_Z") {
    TimeGrid g(1.0, 1e-2);
    CadlagPath X = simulate_brownian(g, 1, 1.0, 21, std::vector<double>{1.0});
    JumpSpec spec;
    spec.rate = 5.0;
    spec.param_a = 0.6;
    CadlagPath Y = inject_jumps(transform_path(X, random_multipliers(g.points(), 22)), spec, 23).path;
    ZPath z = evolve_Z(Y, DriftSpec::scaled_identity(-1.0, 1, 0.3), std::vector<double>{0.0});
    REQUIRE(z.Z.jumps.size() == Y.jumps.size());
    for (std::size_t i = 0; i < Y.jumps.size(); ++i) {
        const auto& jy = Y.jumps[i];
        const auto& jz = z.Z.jumps[i];
        const double dy = Y.value(jy.index)[0] - jy.pre[0];
        const double dz = z.Z.value(jz.index)[0] - jz.pre[0];
        CHECK(dz == doctest::Approx(dy).epsilon(1e-15));  // drift contributes no jumps
    }
}

TEST_CASE("weak type experiment: deterministic and scaling cases") {
    TimeGrid g(1.0, 0.1);
    const double c = 0.8;
    SubmartingalePath sub;
    sub.X = constant_path(g, std::vector<double>{c});
    sub.A = constant_path(g, std::vector<double>{0.0});
    ZPath z;
    z.Z = constant_path(g, std::vector<double>{0.0});
    CadlagPath y = constant_path(g, std::vector<double>{0.0});

    std::vector<SubmartingalePath> subs{sub};
    std::vector<ZPath> zs{z};
    std::vector<CadlagPath> ys{y};
    std::vector<double> lambdas{0.4, c, 1.6};
    WeakTypeCurve curve = weak_type_experiment(subs, zs, ys, lambdas);
    CHECK(curve.excluded == 0);
    CHECK(curve.xtilde_l1 == doctest::Approx(c));
    CHECK(curve.points[0].empirical == 1.0);  // lambda <= c
    CHECK(curve.points[1].empirical == 1.0);
    CHECK(curve.points[2].empirical == 0.0);
    CHECK(curve.all_ok());

    // scaling: running (Xtilde/2, Z/2) at lambda = 1 equals lambda = 2 unscaled
    SyntheticBatchConfig cfg;
    cfg.a = 0.3;
    cfg.v_scale = -1.0;
    cfg.seed = 99;
    DriftSpec drift = DriftSpec::scaled_identity(-1.0, 1, cfg.a);
    const std::vector<double> z0{0.0};
    WeakTypeAccumulator unscaled, scaled_acc;
    for (long i = 0; i < 500; ++i) {
        SyntheticPath p = make_synthetic_path(cfg, i);
        ZPathInput in;
        in.ev = &p.events;
        in.xtilde = p.xtilde;
        in.z0 = z0;
        in.drift = &drift;
        auto s = evolve_Z_summary(in);
        unscaled.add_path(s.sup_z_plus_xtilde, p.xtilde_terminal, true);
        scaled_acc.add_path(s.sup_z_plus_xtilde / 2.0, p.xtilde_terminal / 2.0, true);
    }
    const double l2[] = {2.0};
    const double l1[] = {1.0};
    auto cu = unscaled.finalize(l2);
    auto cs = scaled_acc.finalize(l1);
    CHECK(cu.points[0].empirical == cs.points[0].empirical);  // exact: division by 2 is lossless
    CHECK(cu.points[0].bound == cs.points[0].bound);  // 2 (L1/2) / 1 = 2 L1 / 2, exactly
}

TEST_CASE("hypothesis violations are excluded and fail the run") {
    TimeGrid g(1.0, 0.1);
    SubmartingalePath bad;
    bad.X = constant_path(g, std::vector<double>{-1.0});  // negative X
    bad.A = constant_path(g, std::vector<double>{0.0});
    ZPath z;
    z.Z = constant_path(g, std::vector<double>{0.0});
    CadlagPath y = constant_path(g, std::vector<double>{0.0});
    std::vector<SubmartingalePath> subs{bad};
    std::vector<ZPath> zs{z};
    std::vector<CadlagPath> ys{y};
    std::vector<double> lambdas{1.0};
    auto curve = weak_type_experiment(subs, zs, ys, lambdas);
    CHECK(curve.excluded == 1);
    CHECK_FALSE(curve.all_ok());
}

TEST_CASE("Z families: telescoping, level bounds, domination") {
    const std::vector<double> z0_1{0.0};
    for (bool jumps : {false, true})
        for (double a : {0.0, 0.5})
            for (double v : {0.0, -1.0}) {
                SyntheticBatchConfig cfg;
                cfg.a = a;
                cfg.v_scale = v;
                cfg.with_jumps = jumps;
                cfg.seed = 1000 + (jumps ? 1 : 0) + static_cast<int>(a * 10) + static_cast<int>(-v);
                DriftSpec drift = DriftSpec::scaled_identity(v, 1, a);
                ZFamilyOptions opt;
                opt.jump_refoot = jumps;
                for (long i = 0; i < 150; ++i) {
                    SyntheticPath p = make_synthetic_path(cfg, i);
                    ZPathInput in;
                    in.ev = &p.events;
                    in.xtilde = p.xtilde;
                    in.cond_exp = p.cond_exp;
                    in.z0 = z0_1;
                    in.drift = &drift;
                    auto r = build_family_Z_path(in, opt);
                    CHECK(r.telescope_residual <= 1e-10);
                    CHECK(r.zstar <= (jumps ? 8.0 : 4.0) * r.s_value + 1e-9 * (1.0 + r.zstar));
                    if (jumps)  // each truncated process obeys |Ztilde^n| <= 8 E(Xtilde|F_{T^n})
                        for (std::size_t n = 0; n < r.level_sup.size(); ++n)
                            CHECK(r.level_sup[n] <=
                                  8.0 * r.fam.stop_value[n] + 1e-9 * (1.0 + r.level_sup[n]));
                }
            }
}

TEST_CASE("tree Z-family coincides with the Y-family when Z = Y") {
    Rng rng(2024);
    RandomTreeConfig cfg;
    for (int t = 0; t < 25; ++t) {
        TreeSpace s = make_random_tree(cfg, rng);
        TreeProcess X = make_positive_martingale(s, rng);
        TreeProcess Y = make_random_transform(s, X, 1, rng);
        TreeProcess A(s, 1);  // zero

        StoppingFamily yfam = build_sparse_family_Y_tree(s, X, Y);
        ZFamilyOptions opt;
        opt.jump_refoot = true;
        // Z = Y requires the same foot: Z_0 = Y_0 (allowed, |Y_0| <= X_0)
        auto zres = build_sparse_family_Z_tree(s, X, A, Y, DriftSpec::zero(1, 0.0), 1.0, opt,
                                               Y.value(0, 0));

        for (int leaf = 0; leaf < s.leaf_count(); ++leaf) {
            const auto& fy = yfam.paths[leaf];
            const auto& fz = zres.family.paths[leaf];
            // Y-family opens at T^0 = 0 iff X_0 > 0; the Z-family always does.
            REQUIRE(fz.levels() == fy.levels());
            for (int j = 0; j < fy.levels(); ++j) {
                CHECK(fz.stop_event[j] == fy.stop_event[j]);
                CHECK(fz.stop_value[j] == doctest::Approx(fy.stop_value[j]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("tree Z-family: exact sparsity and level-mass halving") {
    Rng rng(777);
    RandomTreeConfig cfg;
    for (int t = 0; t < 25; ++t) {
        TreeSpace s = make_random_tree(cfg, rng);
        TreeProcess X = make_positive_martingale(s, rng);
        TreeProcess Y = make_random_transform(s, X, 1, rng);
        // A accrues a Xtilde dt predictably
        const double a = 0.4, dt = 0.2;
        TreeProcess A(s, 1);
        for (int k = 1; k <= s.depth(); ++k)
            for (int i = 0; i < s.level_size(k); ++i) {
                const int p = s.node(k, i).parent;
                A.value(k, i)[0] =
                    A.value(k - 1, p)[0] + a * dt * (X.value(k - 1, p)[0] + A.value(k - 1, p)[0]);
            }
        ZFamilyOptions opt;
        opt.jump_refoot = true;
        auto zres = build_sparse_family_Z_tree(s, X, A, Y, DriftSpec::scaled_identity(-1.0, 1, a), dt, opt);

        auto rep = verify_sparsity_tree(s, zres.family, 1e-12);
        CHECK(rep.ok);
        auto mass = zres.family.level_mass(s.leaf_probs());
        for (std::size_t j = 0; j + 1 < mass.size(); ++j) CHECK(mass[j + 1] <= 0.5 * mass[j] + 1e-12);
        for (const auto& r : zres.per_leaf) {
            CHECK(r.telescope_residual <= 1e-10);
            CHECK(r.zstar <= 8.0 * r.s_value + 1e-9 * (1.0 + r.zstar));
        }

        // weighted chain: ||S(Xtilde)||_{L2(w)} <= 8 Q2 ||Xtilde||_{L2(w)} with
        // conditional-expectation contributions, hence ||Z*||_{L2(w)} <= 64 Q2 ...
        auto wleaf = make_random_weight(s, rng);
        WeightProcess w = WeightProcess::from_terminal(s, wleaf, 2.0);
        const double q2 = ap_characteristic(s, w).qp;
        std::vector<double> srow(s.leaf_count()), zrow(s.leaf_count()), xtrow(s.leaf_count());
        for (int leaf = 0; leaf < s.leaf_count(); ++leaf) {
            srow[leaf] = zres.per_leaf[leaf].s_value;
            zrow[leaf] = zres.per_leaf[leaf].zstar;
            xtrow[leaf] = X.value(s.depth(), leaf)[0] + A.value(s.depth(), leaf)[0];
        }
        const double xt_norm = weighted_norm(s, xtrow, 1, wleaf, 2.0);
        CHECK(weighted_norm(s, srow, 1, wleaf, 2.0) <= 8.0 * q2 * xt_norm * (1.0 + 1e-12));
        CHECK(weighted_norm(s, zrow, 1, wleaf, 2.0) <= 64.0 * q2 * xt_norm * (1.0 + 1e-12));
        // unweighted L^p bound for Z* via the same chain at w = 1
        std::vector<double> ones(s.leaf_count(), 1.0);
        for (double p : {1.5, 3.0})
            CHECK(weighted_norm(s, zrow, 1, ones, p) <=
                  8.0 * sparse_lp_constant(p, 1.0) * weighted_norm(s, xtrow, 1, ones, p) *
                      (1.0 + 1e-12));
    }
}
