#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sparsedom/batch.hpp"
#include "sparsedom/sparse.hpp"

using namespace sparsedom;

namespace {

/// +-1-increment martingale started at start on a dyadic tree.
TreeProcess walk_martingale(const TreeSpace& space, double start) {
    TreeProcess X(space, 1);
    X.value(0, 0)[0] = start;
    for (int k = 1; k <= space.depth(); ++k)
        for (int i = 0; i < space.level_size(k); ++i) {
            const int p = space.node(k, i).parent;
            const bool left = i == space.child_begin(k - 1, p);
            X.value(k, i)[0] = X.value(k - 1, p)[0] + (left ? 1.0 : -1.0);
        }
    return X;
}

}  // namespace

TEST_CASE("degenerate families") {
    TimeGrid g(1.0, 0.1);
    CadlagPath zero = constant_path(g, std::vector<double>{0.0});
    PathEvents ev0 = PathEvents::from_paths(zero, zero);
    FamilyPath f0 = build_family_Y_path(ev0);
    CHECK(f0.levels() == 0);
    CHECK(sparse_operator_sample(f0).total == 0.0);

    CadlagPath c = constant_path(g, std::vector<double>{2.5});
    PathEvents evc = PathEvents::from_paths(c, c);
    FamilyPath fc = build_family_Y_path(evc);
    REQUIRE(fc.levels() == 1);  // T0 = 0, threshold 4c never crossed
    CHECK(fc.stop_event[0] == 0);
    CHECK(sparse_operator_sample(fc).total == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("dyadic walk family: exact sparsity and level masses") {
    TreeSpace d6 = TreeSpace::dyadic(6);
    TreeProcess X = walk_martingale(d6, 1.0);
    REQUIRE(X.is_martingale(d6));
    StoppingFamily fam = build_sparse_family_Y_tree(d6, X, X);

    SparsityReport rep = verify_sparsity_tree(d6, fam, 1e-12);
    CHECK(rep.ok);
    CHECK(rep.max_ratio <= 0.5 + 1e-12);

    auto mass = fam.level_mass(d6.leaf_probs());
    for (std::size_t j = 0; j + 1 < mass.size(); ++j) CHECK(mass[j + 1] <= 0.5 * mass[j] + 1e-12);
}

TEST_CASE("single-level family is vacuously sparse; a stalled family is not") {
    TreeSpace d2 = TreeSpace::dyadic(2);
    StoppingFamily single;
    single.paths.assign(d2.leaf_count(), FamilyPath{});
    for (auto& p : single.paths) {
        p.stop_event = {0};
        p.stop_value = {1.0};
        p.foot = {{0.0}};
    }
    SparsityReport ok = verify_sparsity_tree(d2, single);
    CHECK(ok.ok);
    CHECK(ok.max_ratio == 0.0);

    StoppingFamily stalled = single;
    for (auto& p : stalled.paths) {
        p.stop_event = {0, 0};
        p.stop_value = {1.0, 1.0};
        p.foot = {{0.0}, {0.0}};
    }
    SparsityReport badrep = verify_sparsity_tree(d2, stalled);
    CHECK_FALSE(badrep.ok);
    CHECK(badrep.max_ratio == doctest::Approx(1.0));
}

TEST_CASE("sparse operator modes coincide for a nonnegative martingale") {
    Rng rng(31);
    RandomTreeConfig cfg;
    for (int t = 0; t < 20; ++t) {
        TreeSpace s = make_random_tree(cfg, rng);
        TreeProcess X = make_positive_martingale(s, rng);
        TreeProcess Y = make_random_transform(s, X, 1, rng);
        StoppingFamily fam = build_sparse_family_Y_tree(s, X, Y);
        auto sample = sparse_operator_tree(s, fam, X, SparseMode::SampleAtStop);
        auto cond = sparse_operator_tree(s, fam, X, SparseMode::ConditionalExpectation);
        for (int leaf = 0; leaf < s.leaf_count(); ++leaf)
            CHECK(std::abs(sample[leaf].total - cond[leaf].total) <= 1e-12 * (1.0 + cond[leaf].total));
    }
}

TEST_CASE("domination report edge cases") {
    std::vector<double> ystar{0.0, 1.0};
    std::vector<double> s{0.0, 0.0};
    auto rep = verify_domination(ystar, s, 8.0);
    CHECK_FALSE(rep.ok);
    CHECK(rep.violations == 1);  // Ystar > 0 with S = 0

    std::vector<double> ok_y{0.0, 0.5};
    std::vector<double> ok_s{0.0, 1.0};
    CHECK(verify_domination(ok_y, ok_s, 8.0).ok);
}

TEST_CASE("tree families: pathwise domination and the inductive estimate") {
    Rng rng(77);
    RandomTreeConfig cfg;
    for (int t = 0; t < 60; ++t) {
        TreeSpace s = make_random_tree(cfg, rng);
        TreeProcess X = make_positive_martingale(s, rng);
        TreeProcess Y = make_random_transform(s, X, t % 2 ? 2 : 1, rng);
        StoppingFamily fam = build_sparse_family_Y_tree(s, X, Y);
        for (int leaf = 0; leaf < s.leaf_count(); ++leaf) {
            PathEvents ev = PathEvents::from_tree(s, X, Y, leaf);
            const auto& fp = fam.paths[leaf];
            const double ystar = maximal_along_path(s, Y, leaf);
            double dominated = 0.0;
            for (int j = 0; j < fp.levels(); ++j) dominated += 8.0 * fp.stop_value[j];
            CHECK(ystar <= dominated + 1e-12 * (1.0 + ystar));
            // after n levels: Y* <= sum_{j<n} 8 |X|_{T^j} + Y^{n*}, every n
            for (int nlev = 0; nlev <= fp.levels(); ++nlev) {
                double bound = iterate_sup_Y(ev, fp, nlev);
                for (int j = 0; j < std::min(nlev, fp.levels()); ++j) bound += 8.0 * fp.stop_value[j];
                CHECK(ystar <= bound + 1e-12 * (1.0 + ystar));
            }
        }
    }
}

TEST_CASE("grid families with jumps: domination is exact") {
    TimeGrid g(1.0, 1e-2);
    JumpSpec spec;
    spec.rate = 4.0;
    spec.param_a = 0.8;
    std::vector<double> x0{1.0};
    std::vector<double> ystar(400), sval(400);
    for (int i = 0; i < 400; ++i) {
        CadlagPath X = simulate_brownian(g, 1, 1.0, 100 + i, x0);
        CadlagPath Y = transform_path(X, random_multipliers(g.points(), 200 + i));
        auto cp = inject_jumps_coupled(X, Y, spec, 300 + i);
        PathEvents ev = PathEvents::from_paths(cp.X, cp.Y);
        FamilyPath fam = build_family_Y_path(ev);
        ystar[i] = maximal_function(cp.Y);
        sval[i] = sparse_operator_sample(fam).total;
    }
    auto rep = verify_domination(ystar, sval, 8.0, 1e-9);
    CHECK(rep.ok);
    CHECK(rep.worst_ratio < 8.0);
}

TEST_CASE("threshold monotonicity on benign sweeps") {
    Rng rng(99);
    RandomTreeConfig cfg;
    for (int t = 0; t < 40; ++t) {
        TreeSpace s = make_random_tree(cfg, rng);
        TreeProcess X = make_positive_martingale(s, rng);
        TreeProcess Y = make_random_transform(s, X, 1, rng);
        StoppingFamily f4 = build_sparse_family_Y_tree(s, X, Y, 4.0);
        for (double c : {5.0, 8.0}) {
            StoppingFamily fc = build_sparse_family_Y_tree(s, X, Y, c);
            for (int leaf = 0; leaf < s.leaf_count(); ++leaf) {
                const auto& a = f4.paths[leaf];
                const auto& b = fc.paths[leaf];
                CHECK(b.levels() <= a.levels());
                for (int j = 0; j < std::min(a.levels(), b.levels()); ++j)
                    CHECK(b.stop_event[j] >= a.stop_event[j]);
            }
        }
    }
}

TEST_CASE("families are reproducible and exportable") {
    TimeGrid g(1.0, 1e-2);
    std::vector<double> x0{1.0};
    CadlagPath X = simulate_brownian(g, 1, 1.0, 17, x0);
    CadlagPath Y = transform_path(X, random_multipliers(g.points(), 18));
    PathEvents ev = PathEvents::from_paths(X, Y);
    FamilyPath a = build_family_Y_path(ev);
    FamilyPath b = build_family_Y_path(ev);
    CHECK(a.stop_event == b.stop_event);

    StoppingFamily fam;
    fam.paths = {a};
    const std::string text = family_to_text(fam);
    CHECK(text.find("# path level position") == 0);
}

TEST_CASE("binned MC sparsity accumulator flags a stalled family") {
    McSparsityAccumulator acc(8, 1.0);
    FamilyPath stalled;
    stalled.stop_event = {0, 1};
    stalled.stop_value = {1.0, 1.0};
    stalled.foot = {{0.0}, {0.0}};
    for (int i = 0; i < 1000; ++i) acc.add_path(stalled, 100);
    auto rep = acc.report();
    CHECK_FALSE(rep.ok);
    CHECK(rep.max_ratio == doctest::Approx(1.0));
}
