#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparsedom/paths.hpp"
#include "sparsedom/treespace.hpp"

namespace sparsedom {

/// Per-path event sequence shared by both engines. Event 0 holds the initial
/// values; every later event delivers one increment (a grid step, a tree
/// edge, or a jump; jumps advance no time).
struct PathEvents {
    int dim_x = 1, dim_y = 1;
    std::vector<double> x, y;               // values after each event
    std::vector<double> dt_before;          // time elapsed ahead of the event (0 for jumps)
    std::vector<std::uint8_t> jump;         // event is a jump
    std::vector<int> position;              // grid index / tree level of the event

    std::size_t count() const { return position.size(); }
    std::span<const double> X(std::size_t e) const {
        return {x.data() + e * static_cast<std::size_t>(dim_x), static_cast<std::size_t>(dim_x)};
    }
    std::span<const double> Y(std::size_t e) const {
        return {y.data() + e * static_cast<std::size_t>(dim_y), static_cast<std::size_t>(dim_y)};
    }

    static PathEvents from_paths(const CadlagPath& X, const CadlagPath& Y);
    static PathEvents from_tree(const TreeSpace& space, const TreeProcess& X, const TreeProcess& Y,
                                int leaf, double dt = 1.0);
};

/// One path's stopping levels T^0 <= T^1 <= ... (finite ones only).
struct FamilyPath {
    std::vector<int> stop_event;                 // event index of each finite T^j
    std::vector<double> stop_value;              // contribution base at T^j
    std::vector<std::vector<double>> foot;       // re-footed Y (or Z) value at T^j
    bool hit_level_budget = false;

    int levels() const { return static_cast<int>(stop_event.size()); }
};

/// Stopping procedure for the pair (X, Y): T^0 = first time |X| > 0 (which is
/// time 0 or never), then
///   T^{n+1} = first event with |Y^n| or |X| above c * |X|_{T^n},
/// with the iterate re-footed at r X_{T^n}, r the contraction aligning the
/// arriving Y increment with the X increment (r = 0 on a null X increment).
FamilyPath build_family_Y_path(const PathEvents& ev, double threshold_c = 4.0, int level_budget = 200);

/// sup over all events of the n-th iterate |Y^n| (the re-footed process);
/// feeds the inductive-estimate check.
double iterate_sup_Y(const PathEvents& ev, const FamilyPath& fam, int n);

struct StoppingFamily {
    enum class Kind { YConstruction, ZConstruction };

    Kind kind = Kind::YConstruction;
    double threshold_c = 4.0;
    std::vector<FamilyPath> paths;

    int max_levels() const;
    /// P(E_j) for each level.
    std::vector<double> level_mass(std::span<const double> path_probs) const;
};

StoppingFamily build_sparse_family_Y_tree(const TreeSpace& space, const TreeProcess& X,
                                          const TreeProcess& Y, double threshold_c = 4.0,
                                          int level_budget = 200);

/// Sparse operator value of one path. The sampled family stores its own
/// contributions; conditional-expectation mode lives on the tree engine.
struct SparseValue {
    double total = 0.0;
    std::vector<double> contributions;
};

SparseValue sparse_operator_sample(const FamilyPath& fam);

enum class SparseMode { SampleAtStop, ConditionalExpectation };

/// Per-leaf sparse operator on the tree engine. Sample mode uses |base| at
/// the stopping node; conditional-expectation mode uses the exact average of
/// the terminal |base| over the stopped subtree.
std::vector<SparseValue> sparse_operator_tree(const TreeSpace& space, const StoppingFamily& family,
                                              const TreeProcess& base, SparseMode mode);

struct SparsityReport {
    bool ok = true;
    double max_ratio = 0.0;
    int witness_level = -1;
    std::string witness;
    long atoms_checked = 0;
    long atoms_skipped = 0;
    double slack = 0.0;  // statistical margin applied on top of 1/2 (0 when exact)
};

/// Exact check over every F_{T^j}-atom: P(A cap E_{j+1}) <= 1/2 P(A).
/// Checking atoms settles all F_{T^j}-measurable subsets by additivity.
SparsityReport verify_sparsity_tree(const TreeSpace& space, const StoppingFamily& family,
                                    double tol = 1e-12);

/// Monte Carlo sparsity check over the finite sigma-algebra generated by
/// binning (|X|_{T^j}, T^j) on a fixed 32x32 grid; atoms pass at
/// 1/2 + 3 binomial standard errors. Coarser than the full quantifier, and
/// reported as such.
class McSparsityAccumulator {
public:
    McSparsityAccumulator(int bins = 32, double value_scale = 1.0);
    void add_path(const FamilyPath& fam, std::size_t max_event);
    SparsityReport report() const;

private:
    int bins_;
    double value_scale_;
    struct Cell {
        long total = 0;
        long survived = 0;
    };
    // level -> flat bin grid
    std::vector<std::vector<Cell>> cells_;
    std::size_t max_event_seen_ = 1;
};

struct DominationReport {
    bool ok = true;
    double worst_ratio = 0.0;  // max Ystar / S over paths with S > 0
    long violations = 0;
    long paths = 0;
    std::string witness;
};

/// Pathwise check Ystar <= constant * S + tol, tol = tol_scale * (1 + Ystar).
/// S = 0 with Ystar above tolerance counts as a violation.
DominationReport verify_domination(std::span<const double> ystar, std::span<const double> s_values,
                                   double constant, double tol_scale = 1e-9);

/// Contraction aligning dy with dx: r(v) = dy (dx . v) / |dx|^2, zero when
/// dx = 0. Operator norm |dy|/|dx| <= 1 under stepwise subordination.
void apply_refoot(std::span<const double> dy, std::span<const double> dx, std::span<const double> v,
                  std::span<double> out);

/// Audit export: one line per (path, level, stop position).
std::string family_to_text(const StoppingFamily& family);

}  // namespace sparsedom
