#include "sparsedom/treespace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "sparsedom/common.hpp"

namespace sparsedom {

TreeSpace TreeSpace::build(int depth, const std::vector<int>& branching,
                           const std::vector<std::vector<double>>& probs) {
    require(depth >= 0, "build_tree: depth must be >= 0");
    require(depth <= kMaxDepth, "build_tree: depth exceeds the enumeration budget limit " +
                                    std::to_string(kMaxDepth));
    require(static_cast<int>(branching.size()) == depth, "build_tree: branching needs one count per level");

    TreeSpace t;
    t.levels_.resize(depth + 1);
    t.levels_[0].push_back(Node{-1, 1.0});

    std::size_t row = 0;
    long long width = 1;
    for (int k = 0; k < depth; ++k) {
        require(branching[k] >= 1, "build_tree: branching counts must be >= 1");
        width *= branching[k];
        require(width <= kMaxLeaves, "build_tree: leaf budget exceeded, limit " + std::to_string(kMaxLeaves));
        auto& next = t.levels_[k + 1];
        next.reserve(static_cast<std::size_t>(width));
        for (int i = 0; i < t.level_size(k); ++i, ++row) {
            require(row < probs.size(), "build_tree: missing probability row " + std::to_string(row));
            const auto& p = probs[row];
            require(static_cast<int>(p.size()) == branching[k],
                    "build_tree: row " + std::to_string(row) + " width mismatch");
            double sum = 0.0;
            for (double q : p) {
                require(q > 0.0, "build_tree: non-stochastic row " + std::to_string(row) +
                                     " (entries must be strictly positive)");
                sum += q;
            }
            require(std::abs(sum - 1.0) <= 1e-12,
                    "build_tree: non-stochastic row " + std::to_string(row) + " (sum != 1)");
            for (double q : p) next.push_back(Node{i, q});
        }
    }
    require(row == probs.size(), "build_tree: extra probability rows");
    t.finalize();
    return t;
}

TreeSpace TreeSpace::dyadic(int depth) {
    std::vector<int> branching(depth, 2);
    std::vector<std::vector<double>> probs;
    int nodes = 1;
    for (int k = 0; k < depth; ++k) {
        for (int i = 0; i < nodes; ++i) probs.push_back({0.5, 0.5});
        nodes *= 2;
    }
    return build(depth, branching, probs);
}

TreeSpace TreeSpace::load(std::istream& is) {
    TreeSpace t;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        int level, parent;
        double prob;
        if (!(ss >> level >> parent >> prob))
            fail("tree file line " + std::to_string(lineno) + ": expected 'level parent probability'");
        require(level >= 0 && level <= kMaxDepth, "tree file: bad level at line " + std::to_string(lineno));
        if (static_cast<int>(t.levels_.size()) <= level) t.levels_.resize(level + 1);
        if (level == 0) {
            require(t.levels_[0].empty(), "tree file: multiple roots");
            require(parent == -1, "tree file: root parent must be -1");
        } else {
            require(parent >= 0 && parent < static_cast<int>(t.levels_[level - 1].size()),
                    "tree file: missing parent at line " + std::to_string(lineno));
            require(t.levels_[level].empty() || t.levels_[level].back().parent <= parent,
                    "tree file: nodes must be grouped by parent (line " + std::to_string(lineno) + ")");
        }
        require(prob > 0.0, "tree file: probabilities must be strictly positive");
        t.levels_[level].push_back(Node{parent, prob});
    }
    require(!t.levels_.empty() && !t.levels_[0].empty(), "tree file: empty");
    for (const auto& lvl : t.levels_) require(!lvl.empty(), "tree file: empty level");
    t.finalize();
    return t;
}

void TreeSpace::save(std::ostream& os) const {
    for (std::size_t k = 0; k < levels_.size(); ++k)
        for (const auto& n : levels_[k]) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", n.prob);
            os << k << ' ' << n.parent << ' ' << buf << '\n';
        }
}

int TreeSpace::total_nodes() const {
    int n = 0;
    for (const auto& lvl : levels_) n += static_cast<int>(lvl.size());
    return n;
}

void TreeSpace::finalize() {
    const int L = depth();
    require(leaf_count() <= kMaxLeaves, "tree: leaf budget exceeded");

    child_begin_.assign(L + 1, {});
    for (int k = 0; k < L; ++k) {
        child_begin_[k].assign(level_size(k) + 1, 0);
        for (int j = 0; j < level_size(k + 1); ++j) child_begin_[k][levels_[k + 1][j].parent + 1]++;
        for (int i = 0; i < level_size(k); ++i) child_begin_[k][i + 1] += child_begin_[k][i];
        for (int i = 0; i < level_size(k); ++i)
            require(child_begin_[k][i + 1] > child_begin_[k][i],
                    "tree: node without children at level " + std::to_string(k));
    }
    child_begin_[L].assign(level_size(L) + 1, 0);

    // Transition probabilities out of each node must sum to 1.
    for (int k = 0; k < L; ++k)
        for (int i = 0; i < level_size(k); ++i) {
            double sum = 0.0;
            for (int c = child_begin(k, i); c < child_end(k, i); ++c) sum += levels_[k + 1][c].prob;
            require(std::abs(sum - 1.0) <= 1e-12, "tree: transition probabilities out of node (" +
                                                      std::to_string(k) + "," + std::to_string(i) +
                                                      ") do not sum to 1");
        }

    node_probs_.assign(L + 1, {});
    node_probs_[0] = {1.0};
    for (int k = 1; k <= L; ++k) {
        node_probs_[k].resize(level_size(k));
        for (int i = 0; i < level_size(k); ++i)
            node_probs_[k][i] = node_probs_[k - 1][levels_[k][i].parent] * levels_[k][i].prob;
    }
    leaf_probs_ = node_probs_[L];
    double total = 0.0;
    for (double p : leaf_probs_) total += p;
    require(std::abs(total - 1.0) <= 1e-12, "tree: leaf probabilities do not sum to 1");

    leaf_begin_.assign(L + 1, {});
    leaf_end_.assign(L + 1, {});
    leaf_begin_[L].resize(level_size(L));
    leaf_end_[L].resize(level_size(L));
    for (int i = 0; i < level_size(L); ++i) {
        leaf_begin_[L][i] = i;
        leaf_end_[L][i] = i + 1;
    }
    for (int k = L - 1; k >= 0; --k) {
        leaf_begin_[k].resize(level_size(k));
        leaf_end_[k].resize(level_size(k));
        for (int i = 0; i < level_size(k); ++i) {
            leaf_begin_[k][i] = leaf_begin_[k + 1][child_begin(k, i)];
            leaf_end_[k][i] = leaf_end_[k + 1][child_end(k, i) - 1];
        }
    }
}

int TreeSpace::node_at(int level, int leaf) const {
    const auto& begins = leaf_begin_[level];
    auto it = std::upper_bound(begins.begin(), begins.end(), leaf);
    return static_cast<int>(it - begins.begin()) - 1;
}

TreeProcess::TreeProcess(const TreeSpace& space, int dim) : dim_(dim) {
    vals_.resize(space.depth() + 1);
    for (int k = 0; k <= space.depth(); ++k)
        vals_[k].assign(static_cast<std::size_t>(space.level_size(k)) * dim, 0.0);
}

bool TreeProcess::is_martingale(const TreeSpace& space, double tol) const {
    for (int k = 0; k < space.depth(); ++k)
        for (int i = 0; i < space.level_size(k); ++i)
            for (int c = 0; c < dim_; ++c) {
                double avg = 0.0;
                for (int j = space.child_begin(k, i); j < space.child_end(k, i); ++j)
                    avg += space.node(k + 1, j).prob * value(k + 1, j)[c];
                if (std::abs(avg - value(k, i)[c]) > tol) return false;
            }
    return true;
}

TreeStoppingTime::TreeStoppingTime(const TreeSpace& space) {
    mark_.resize(space.depth() + 1);
    for (int k = 0; k <= space.depth(); ++k) mark_[k].assign(space.level_size(k), 0);
}

TreeStoppingTime TreeStoppingTime::at_level(const TreeSpace& space, int level) {
    TreeStoppingTime t(space);
    for (int i = 0; i < space.level_size(level); ++i) t.mark(level, i);
    return t;
}

TreeStoppingTime TreeStoppingTime::never(const TreeSpace& space) { return TreeStoppingTime(space); }

int TreeStoppingTime::stop_level(const TreeSpace& space, int leaf) const {
    for (int k = 0; k <= space.depth(); ++k)
        if (mark_[k][space.node_at(k, leaf)]) return k;
    return kNever;
}

TreeProcess doob_martingale(const TreeSpace& space, std::span<const double> leaf_values, int dim) {
    require(static_cast<int>(leaf_values.size()) == space.leaf_count() * dim,
            "doob_martingale: leaf value count mismatch");
    const int L = space.depth();
    TreeProcess out(space, dim);
    for (int i = 0; i < space.level_size(L); ++i)
        for (int c = 0; c < dim; ++c) out.value(L, i)[c] = leaf_values[static_cast<std::size_t>(i) * dim + c];
    for (int k = L - 1; k >= 0; --k)
        for (int i = 0; i < space.level_size(k); ++i)
            for (int c = 0; c < dim; ++c) {
                double avg = 0.0;
                for (int j = space.child_begin(k, i); j < space.child_end(k, i); ++j)
                    avg += space.node(k + 1, j).prob * out.value(k + 1, j)[c];
                out.value(k, i)[c] = avg;
            }
    return out;
}

std::vector<double> conditional_expectation(const TreeSpace& space, std::span<const double> leaf_values,
                                            int dim, const TreeStoppingTime& T) {
    for (double v : leaf_values) require(std::isfinite(v), "conditional_expectation: leaf values must be finite");
    TreeProcess doob = doob_martingale(space, leaf_values, dim);
    std::vector<double> out(leaf_values.begin(), leaf_values.end());
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
        const int s = T.stop_level(space, leaf);
        if (s == TreeStoppingTime::kNever) continue;  // F_T gives full information on {T = infinity}
        auto v = doob.value(s, space.node_at(s, leaf));
        for (int c = 0; c < dim; ++c) out[static_cast<std::size_t>(leaf) * dim + c] = v[c];
    }
    return out;
}

TreeProcess martingale_transform(const TreeSpace& space, const TreeProcess& X,
                                 const std::vector<std::vector<double>>& multipliers) {
    const int d = X.dim();
    for (int k = 0; k <= space.depth(); ++k)
        for (int i = 0; i < space.level_size(k); ++i)
            require(std::abs(multipliers[k][i]) <= 1.0,
                    "martingale_transform: |multiplier| > 1 breaks differential subordination");
    TreeProcess Y(space, d);
    for (int c = 0; c < d; ++c) Y.value(0, 0)[c] = multipliers[0][0] * X.value(0, 0)[c];
    for (int k = 1; k <= space.depth(); ++k)
        for (int i = 0; i < space.level_size(k); ++i) {
            const int p = space.node(k, i).parent;
            const double s = multipliers[k - 1][p];
            for (int c = 0; c < d; ++c)
                Y.value(k, i)[c] = Y.value(k - 1, p)[c] + s * (X.value(k, i)[c] - X.value(k - 1, p)[c]);
        }
    return Y;
}

TreeProcess martingale_transform_vector(const TreeSpace& space, const TreeProcess& X,
                                        const std::vector<std::vector<std::vector<double>>>& multipliers) {
    require(X.dim() == 1, "martingale_transform_vector: X must be scalar");
    const int d = static_cast<int>(multipliers[0][0].size());
    for (int k = 0; k <= space.depth(); ++k)
        for (int i = 0; i < space.level_size(k); ++i)
            require(norm2(multipliers[k][i]) <= 1.0 + 1e-15,
                    "martingale_transform_vector: |multiplier| > 1 breaks differential subordination");
    TreeProcess Y(space, d);
    for (int c = 0; c < d; ++c) Y.value(0, 0)[c] = multipliers[0][0][c] * X.value(0, 0)[0];
    for (int k = 1; k <= space.depth(); ++k)
        for (int i = 0; i < space.level_size(k); ++i) {
            const int p = space.node(k, i).parent;
            const auto& m = multipliers[k - 1][p];
            const double dx = X.value(k, i)[0] - X.value(k - 1, p)[0];
            for (int c = 0; c < d; ++c) Y.value(k, i)[c] = Y.value(k - 1, p)[c] + m[c] * dx;
        }
    return Y;
}

std::vector<double> bracket_along_path(const TreeSpace& space, const TreeProcess& X, int leaf) {
    std::vector<double> b(space.depth() + 1);
    b[0] = sqnorm(X.value(0, 0));
    int prev = 0;
    for (int k = 1; k <= space.depth(); ++k) {
        const int cur = space.node_at(k, leaf);
        double inc = 0.0;
        for (int c = 0; c < X.dim(); ++c) {
            const double d = X.value(k, cur)[c] - X.value(k - 1, prev)[c];
            inc += d * d;
        }
        b[k] = b[k - 1] + inc;
        prev = cur;
    }
    return b;
}

double maximal_along_path(const TreeSpace& space, const TreeProcess& X, int leaf) {
    double m = 0.0;
    for (int k = 0; k <= space.depth(); ++k) m = std::max(m, norm2(X.value(k, space.node_at(k, leaf))));
    return m;
}

std::vector<double> expectation_at(const TreeSpace& space, const TreeProcess& X, const TreeStoppingTime& T) {
    std::vector<double> e(X.dim(), 0.0);
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
        int s = T.stop_level(space, leaf);
        if (s == TreeStoppingTime::kNever) s = space.depth();
        auto v = X.value(s, space.node_at(s, leaf));
        for (int c = 0; c < X.dim(); ++c) e[c] += space.leaf_probs()[leaf] * v[c];
    }
    return e;
}

namespace {

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b, std::uint64_t cap) {
    if (a == 0 || b == 0) return 0;
    if (a > cap / b) return cap;
    return a * b;
}

std::uint64_t count_rec(const TreeSpace& space, int level, int i, int max_depth, std::uint64_t cap) {
    if (level >= max_depth || level == space.depth()) return 2;  // stop here or never
    std::uint64_t prod = 1;
    for (int c = space.child_begin(level, i); c < space.child_end(level, i); ++c)
        prod = sat_mul(prod, count_rec(space, level + 1, c, max_depth, cap), cap);
    return prod >= cap ? cap : prod + 1;
}

}  // namespace

std::uint64_t count_stopping_times(const TreeSpace& space, int max_depth, std::uint64_t cap) {
    return count_rec(space, 0, 0, max_depth, cap);
}

void for_each_stopping_time(const TreeSpace& space, int max_depth,
                            const std::function<void(const TreeStoppingTime&)>& fn) {
    TreeStoppingTime cur(space);
    struct Item {
        int level, idx;
    };
    // Depth-first over per-node decisions: each frontier node either stops
    // (marked) or defers to its children (to "never" at the depth cut).
    std::vector<Item> frontier = {{0, 0}};
    std::function<void()> rec = [&]() {
        if (frontier.empty()) {
            fn(cur);
            return;
        }
        const Item it = frontier.back();
        frontier.pop_back();

        cur.mark(it.level, it.idx);
        rec();
        cur.unmark(it.level, it.idx);

        if (it.level < max_depth && it.level < space.depth()) {
            const int b = space.child_begin(it.level, it.idx), e = space.child_end(it.level, it.idx);
            for (int c = b; c < e; ++c) frontier.push_back({it.level + 1, c});
            rec();
            for (int c = b; c < e; ++c) frontier.pop_back();
        } else {
            rec();  // never stop in this subtree
        }
        frontier.push_back(it);
    };
    rec();
}

TreeStoppingTime sample_stopping_time(const TreeSpace& space, int max_depth, Rng& rng) {
    TreeStoppingTime t(space);
    std::vector<std::pair<int, int>> stack = {{0, 0}};
    while (!stack.empty()) {
        auto [lv, ix] = stack.back();
        stack.pop_back();
        const double n = static_cast<double>(count_rec(space, lv, ix, max_depth, UINT64_C(1) << 62));
        if (rng.uniform() < 1.0 / n) {
            t.mark(lv, ix);
            continue;
        }
        if (lv < max_depth && lv < space.depth())
            for (int c = space.child_begin(lv, ix); c < space.child_end(lv, ix); ++c)
                stack.push_back({lv + 1, c});
        // else: never stop in this subtree
    }
    return t;
}

std::vector<TreeStoppingTime> enumerate_stopping_times(const TreeSpace& space, int max_depth,
                                                       std::uint64_t budget) {
    const std::uint64_t n = count_stopping_times(space, max_depth, budget + 1);
    if (n > budget)
        fail("enumerate_stopping_times: count exceeds budget " + std::to_string(budget) +
             "; use the randomized-subset fallback (sample_stopping_time)");
    std::vector<TreeStoppingTime> out;
    out.reserve(n);
    for_each_stopping_time(space, max_depth, [&](const TreeStoppingTime& t) { out.push_back(t); });
    return out;
}

}  // namespace sparsedom
