#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "sparsedom/rng.hpp"

namespace sparsedom {

/// Finite filtered probability space: a rooted weighted tree. Level k is the
/// time-k sigma algebra; a root-to-leaf path is one outcome. Everything the
/// continuous theory quantifies over (expectations, stopping times, suprema)
/// is computed here by exhaustive enumeration.
class TreeSpace {
public:
    struct Node {
        int parent = -1;     // index into the previous level
        double prob = 1.0;   // transition probability from the parent
    };

    /// branching[k] = number of children of every level-k node; probs has one
    /// row per node in level-major order, row length matching its branching.
    static TreeSpace build(int depth, const std::vector<int>& branching,
                           const std::vector<std::vector<double>>& probs);

    /// Uniform binary tree of the given depth.
    static TreeSpace dyadic(int depth);

    /// Plain-text format: one line per node, "level parent probability",
    /// level-major, parents nondecreasing within a level.
    static TreeSpace load(std::istream& is);
    void save(std::ostream& os) const;

    int depth() const { return static_cast<int>(levels_.size()) - 1; }
    int level_size(int level) const { return static_cast<int>(levels_[level].size()); }
    const Node& node(int level, int i) const { return levels_[level][i]; }
    int total_nodes() const;

    int child_begin(int level, int i) const { return child_begin_[level][i]; }
    int child_end(int level, int i) const { return child_begin_[level][i + 1]; }

    int leaf_count() const { return level_size(depth()); }
    const std::vector<double>& leaf_probs() const { return leaf_probs_; }
    double node_prob(int level, int i) const { return node_probs_[level][i]; }

    /// Node index on the path of `leaf` at `level`.
    int node_at(int level, int leaf) const;
    /// Leaves below a node: [leaf_begin, leaf_end).
    int leaf_begin(int level, int i) const { return leaf_begin_[level][i]; }
    int leaf_end(int level, int i) const { return leaf_end_[level][i]; }

    static constexpr int kMaxDepth = 12;
    static constexpr int kMaxLeaves = 1 << 20;

private:
    void finalize();  // children/leaf spans, probabilities, validation

    std::vector<std::vector<Node>> levels_;
    std::vector<std::vector<int>> child_begin_;
    std::vector<std::vector<int>> leaf_begin_, leaf_end_;
    std::vector<std::vector<double>> node_probs_;
    std::vector<double> leaf_probs_;
};

/// Adapted process: one d-dimensional value per node.
class TreeProcess {
public:
    TreeProcess() = default;
    TreeProcess(const TreeSpace& space, int dim);

    int dim() const { return dim_; }
    std::span<double> value(int level, int i) {
        return {vals_[level].data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const double> value(int level, int i) const {
        return {vals_[level].data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
    }

    /// Exact martingale property at every internal node, within tol.
    bool is_martingale(const TreeSpace& space, double tol = 1e-12) const;

private:
    int dim_ = 0;
    std::vector<std::vector<double>> vals_;
};

/// Stopping time as a set of marked nodes; a path stops at the first marked
/// node it passes through, and at infinity if it meets none. Adaptedness is
/// structural: the marker is a property of the node alone.
class TreeStoppingTime {
public:
    TreeStoppingTime() = default;
    explicit TreeStoppingTime(const TreeSpace& space);

    static TreeStoppingTime at_level(const TreeSpace& space, int level);
    static TreeStoppingTime never(const TreeSpace& space);

    void mark(int level, int i) { mark_[level][i] = 1; }
    void unmark(int level, int i) { mark_[level][i] = 0; }
    bool marked(int level, int i) const { return mark_[level][i] != 0; }

    static constexpr int kNever = -1;
    /// Level at which `leaf`'s path stops (kNever if it never stops).
    int stop_level(const TreeSpace& space, int leaf) const;

private:
    std::vector<std::vector<std::uint8_t>> mark_;
};

/// Exact martingale closure of terminal values: at every node the
/// probability-weighted average of the leaf values below it.
TreeProcess doob_martingale(const TreeSpace& space, std::span<const double> leaf_values, int dim);

/// E[X | F_T] evaluated pathwise: for each leaf, the subtree average at its
/// stopping node, or the leaf value itself on {T = infinity}. Exact.
std::vector<double> conditional_expectation(const TreeSpace& space, std::span<const double> leaf_values,
                                            int dim, const TreeStoppingTime& T);

/// Martingale transform: Y0 = s(root) X0 and dY = s(parent) dX along every
/// edge. Rejects any |multiplier| > 1, which would break the stepwise bracket
/// domination. `multipliers[level][i]` sits on the node where the next
/// increment is predicted.
TreeProcess martingale_transform(const TreeSpace& space, const TreeProcess& X,
                                 const std::vector<std::vector<double>>& multipliers);

/// Transform of a scalar martingale into a dim(m)-valued one: dY = m(parent) dX
/// with |m|_2 <= 1 per node.
TreeProcess martingale_transform_vector(const TreeSpace& space, const TreeProcess& X,
                                        const std::vector<std::vector<std::vector<double>>>& multipliers);

/// Discrete bracket [X,X]_k = |X_0|^2 + sum of squared increment norms along
/// the path of `leaf`; index k runs over levels.
std::vector<double> bracket_along_path(const TreeSpace& space, const TreeProcess& X, int leaf);

/// Pathwise maximum of |X| over the path of `leaf`.
double maximal_along_path(const TreeSpace& space, const TreeProcess& X, int leaf);

/// E[X_T] with X_T the leaf (closure) value on {T = infinity}. Exact.
std::vector<double> expectation_at(const TreeSpace& space, const TreeProcess& X, const TreeStoppingTime& T);

/// Number of adapted stopping times with stopping levels <= max_depth,
/// saturating at `cap`.
std::uint64_t count_stopping_times(const TreeSpace& space, int max_depth,
                                   std::uint64_t cap = UINT64_C(1) << 62);

/// Complete enumeration, including the never-stopping time. Rejects when the
/// count exceeds the budget, advising the randomized-subset fallback.
std::vector<TreeStoppingTime> enumerate_stopping_times(const TreeSpace& space, int max_depth,
                                                       std::uint64_t budget = 10'000'000);

/// Visitor form of the enumeration (no materialized list).
void for_each_stopping_time(const TreeSpace& space, int max_depth,
                            const std::function<void(const TreeStoppingTime&)>& fn);

/// Uniform-ish random adapted stopping time (exact when counts do not
/// saturate); the fallback sampler for trees too deep to enumerate.
TreeStoppingTime sample_stopping_time(const TreeSpace& space, int max_depth, Rng& rng);

}  // namespace sparsedom
