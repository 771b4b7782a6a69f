#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sparsedom/batch.hpp"
#include "sparsedom/treespace.hpp"

using namespace sparsedom;

namespace {

TreeSpace coin() { return TreeSpace::build(1, {2}, {{0.5, 0.5}}); }

TreeSpace skewed_depth2() {
    return TreeSpace::build(2, {2, 2}, {{0.3, 0.7}, {0.5, 0.5}, {0.2, 0.8}});
}

}  // namespace

TEST_CASE("build_tree examples") {
    TreeSpace c = coin();
    CHECK(c.leaf_count() == 2);
    CHECK(c.leaf_probs()[0] == doctest::Approx(0.5).epsilon(1e-15));

    TreeSpace u = TreeSpace::build(2, {2, 2}, {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}});
    CHECK(u.leaf_count() == 4);
    for (double p : u.leaf_probs()) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

    // transitions multiplied by hand along the four paths
    TreeSpace s = skewed_depth2();
    CHECK(s.leaf_probs()[0] == doctest::Approx(0.3 * 0.5).epsilon(1e-15));
    CHECK(s.leaf_probs()[1] == doctest::Approx(0.3 * 0.5).epsilon(1e-15));
    CHECK(s.leaf_probs()[2] == doctest::Approx(0.7 * 0.2).epsilon(1e-15));
    CHECK(s.leaf_probs()[3] == doctest::Approx(0.7 * 0.8).epsilon(1e-15));

    TreeSpace v = TreeSpace::build(2, {2, 2}, {{0.3, 0.7}, {0.5, 0.5}, {0.5, 0.5}});
    CHECK(v.leaf_probs()[2] == doctest::Approx(0.35).epsilon(1e-15));
    CHECK(v.leaf_probs()[3] == doctest::Approx(0.35).epsilon(1e-15));
}

TEST_CASE("build_tree rejections") {
    CHECK_THROWS_WITH_AS(TreeSpace::build(1, {2}, {{0.5, 0.6}}),
                         doctest::Contains("row 0"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(TreeSpace::build(2, {2, 2}, {{0.5, 0.5}, {1.0, 0.0}, {0.5, 0.5}}),
                         doctest::Contains("row 1"), std::invalid_argument);
    CHECK_THROWS_AS(TreeSpace::dyadic(13), std::invalid_argument);  // depth budget
}

TEST_CASE("node bookkeeping") {
    TreeSpace s = skewed_depth2();
    CHECK(s.total_nodes() == 7);
    CHECK(s.node_at(0, 3) == 0);
    CHECK(s.node_at(1, 0) == 0);
    CHECK(s.node_at(1, 3) == 1);
    CHECK(s.node_at(2, 2) == 2);
    CHECK(s.node_prob(1, 1) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(s.leaf_begin(1, 1) == 2);
    CHECK(s.leaf_end(1, 1) == 4);
}

TEST_CASE("tree file round trip and rejections") {
    TreeSpace s = skewed_depth2();
    std::stringstream ss;
    s.save(ss);
    TreeSpace t = TreeSpace::load(ss);
    CHECK(t.depth() == s.depth());
    REQUIRE(t.leaf_count() == s.leaf_count());
    for (int i = 0; i < s.leaf_count(); ++i)
        CHECK(t.leaf_probs()[i] == doctest::Approx(s.leaf_probs()[i]).epsilon(1e-15));

    std::stringstream bad("0 -1 1\n1 0 0.5\n1 0 0.6\n");
    CHECK_THROWS_AS(TreeSpace::load(bad), std::invalid_argument);
}

TEST_CASE("conditional expectation examples") {
    TreeSpace s = skewed_depth2();

    std::vector<double> constant(4, 3.25);
    auto ce = conditional_expectation(s, constant, 1, TreeStoppingTime::at_level(s, 1));
    for (double v : ce) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));

    TreeSpace c = coin();
    std::vector<double> leaves{2.0, 0.0};
    auto root = conditional_expectation(c, leaves, 1, TreeStoppingTime::at_level(c, 0));
    CHECK(root[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(root[1] == doctest::Approx(1.0).epsilon(1e-15));

    // subtree-average oracle by hand: left node 0.5*1+0.5*2, right 0.2*3+0.8*4
    std::vector<double> vals{1, 2, 3, 4};
    auto lvl1 = conditional_expectation(s, vals, 1, TreeStoppingTime::at_level(s, 1));
    CHECK(lvl1[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(lvl1[1] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(lvl1[2] == doctest::Approx(3.8).epsilon(1e-15));
    CHECK(lvl1[3] == doctest::Approx(3.8).epsilon(1e-15));
}

TEST_CASE("tower property, exact") {
    Rng rng(991);
    RandomTreeConfig cfg;
    cfg.min_depth = 3;
    cfg.max_depth = 4;
    for (int trial = 0; trial < 25; ++trial) {
        TreeSpace s = make_random_tree(cfg, rng);
        std::vector<double> vals(s.leaf_count());
        for (auto& v : vals) v = rng.uniform(-2.0, 2.0);
        TreeStoppingTime later = sample_stopping_time(s, s.depth(), rng);
        // earlier time: stop one level above wherever `later` stops (at root otherwise)
        TreeStoppingTime earlier(s);
        for (int k = 0; k <= s.depth(); ++k)
            for (int i = 0; i < s.level_size(k); ++i)
                if (later.marked(k, i) && k > 0) earlier.mark(k - 1, s.node(k, i).parent);
        if (later.marked(0, 0)) earlier.mark(0, 0);

        auto inner = conditional_expectation(s, vals, 1, later);
        auto both = conditional_expectation(s, inner, 1, earlier);
        auto direct = conditional_expectation(s, vals, 1, earlier);
        for (int leaf = 0; leaf < s.leaf_count(); ++leaf)
            CHECK(std::abs(both[leaf] - direct[leaf]) <= 1e-12);
    }
}

TEST_CASE("martingale transform") {
    TreeSpace d4 = TreeSpace::dyadic(4);
    Rng rng(7);
    TreeProcess X = make_positive_martingale(d4, rng);
    REQUIRE(X.is_martingale(d4));

    std::vector<std::vector<double>> ones(d4.depth() + 1), alt(d4.depth() + 1), bad(d4.depth() + 1);
    for (int k = 0; k <= d4.depth(); ++k) {
        ones[k].assign(d4.level_size(k), 1.0);
        alt[k].assign(d4.level_size(k), k % 2 ? -1.0 : 1.0);
        bad[k].assign(d4.level_size(k), 1.0);
    }
    bad[2][1] = 1.5;

    TreeProcess Y1 = martingale_transform(d4, X, ones);
    for (int leaf = 0; leaf < d4.leaf_count(); ++leaf)
        CHECK(Y1.value(d4.depth(), leaf)[0] ==
              doctest::Approx(X.value(d4.depth(), leaf)[0]).epsilon(1e-15));

    std::vector<std::vector<double>> minus(ones);
    for (auto& lvl : minus)
        for (auto& v : lvl) v = -1.0;
    TreeProcess Ym = martingale_transform(d4, X, minus);
    for (int leaf = 0; leaf < d4.leaf_count(); ++leaf) {
        auto bx = bracket_along_path(d4, X, leaf);
        auto by = bracket_along_path(d4, Ym, leaf);
        for (std::size_t k = 0; k < bx.size(); ++k) CHECK(bx[k] == doctest::Approx(by[k]).epsilon(1e-13));
        CHECK(Ym.value(d4.depth(), leaf)[0] ==
              doctest::Approx(-X.value(d4.depth(), leaf)[0]).epsilon(1e-15));
    }

    TreeProcess Ya = martingale_transform(d4, X, alt);
    CHECK(Ya.is_martingale(d4));
    for (int leaf = 0; leaf < d4.leaf_count(); ++leaf) {
        auto bx = bracket_along_path(d4, X, leaf);
        auto by = bracket_along_path(d4, Ya, leaf);
        double prev = 0.0;
        for (std::size_t k = 0; k < bx.size(); ++k) {
            const double diff = bx[k] - by[k];
            CHECK(diff >= prev - 1e-12);  // nondecreasing and nonnegative
            prev = diff;
        }
    }

    CHECK_THROWS_AS(martingale_transform(d4, X, bad), std::invalid_argument);
}

TEST_CASE("optional stopping, exact") {
    TreeSpace s = skewed_depth2();
    Rng rng(13);
    TreeProcess X = make_positive_martingale(s, rng);
    auto all = enumerate_stopping_times(s, s.depth());
    for (const auto& T : all) {
        auto e = expectation_at(s, X, T);
        CHECK(std::abs(e[0] - X.value(0, 0)[0]) <= 1e-12);
    }
}

TEST_CASE("stopping time enumeration counts") {
    TreeSpace c = coin();
    auto all = enumerate_stopping_times(c, 1);
    CHECK(all.size() == 5);

    // all five act differently on the two leaves
    std::set<std::pair<int, int>> signatures;
    for (const auto& T : all) signatures.insert({T.stop_level(c, 0), T.stop_level(c, 1)});
    CHECK(signatures.size() == 5);

    TreeSpace trivial = TreeSpace::build(0, {}, {});
    CHECK(enumerate_stopping_times(trivial, 0).size() == 2);

    // recursive count formula vs explicit enumeration
    TreeSpace d2 = TreeSpace::dyadic(2);
    CHECK(count_stopping_times(d2, 2) == 26);
    CHECK(enumerate_stopping_times(d2, 2).size() == 26);

    CHECK(count_stopping_times(TreeSpace::dyadic(5), 5) > 10'000'000ull);
    CHECK_THROWS_WITH_AS(enumerate_stopping_times(TreeSpace::dyadic(5), 5),
                         doctest::Contains("randomized-subset"), std::runtime_error);
}

TEST_CASE("sampled stopping times are adapted and valid") {
    TreeSpace d3 = TreeSpace::dyadic(3);
    Rng rng(55);
    for (int i = 0; i < 200; ++i) {
        TreeStoppingTime t = sample_stopping_time(d3, 3, rng);
        for (int leaf = 0; leaf < d3.leaf_count(); ++leaf) {
            const int s = t.stop_level(d3, leaf);
            CHECK((s == TreeStoppingTime::kNever || (s >= 0 && s <= 3)));
        }
    }
}

TEST_CASE("doob martingale closes terminal values") {
    Rng rng(1234);
    RandomTreeConfig cfg;
    TreeSpace s = make_random_tree(cfg, rng);
    std::vector<double> vals(s.leaf_count() * 2);
    for (auto& v : vals) v = rng.uniform(-1.0, 1.0);
    TreeProcess M = doob_martingale(s, vals, 2);
    CHECK(M.is_martingale(s));
    for (int leaf = 0; leaf < s.leaf_count(); ++leaf)
        CHECK(M.value(s.depth(), leaf)[1] == vals[static_cast<std::size_t>(leaf) * 2 + 1]);
}
