#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sparsedom/paths.hpp"
#include "sparsedom/sparse.hpp"
#include "sparsedom/treespace.hpp"

namespace sparsedom {

/// Curvature data driving dZ = (V - a I) Z dt + dY: a >= 0 and a source of
/// symmetric negative-semidefinite matrices, constant or per-step.
struct DriftSpec {
    double a = 0.0;
    int dim = 1;
    std::function<void(std::size_t k, std::span<double> V)> source;  // fills dim x dim row-major

    static DriftSpec zero(int dim, double a = 0.0);
    static DriftSpec constant(std::vector<double> V, int dim, double a = 0.0);
    static DriftSpec scaled_identity(double c, int dim, double a = 0.0);  // V = c I, c <= 0
    /// V_k from a per-step scalar state path: V = v(state_k) I (Bessel-style).
    static DriftSpec from_state(std::vector<double> states, std::function<double(double)> v, int dim,
                                double a = 0.0);
};

/// Symmetry within 1e-9 and max eigenvalue <= 1e-9, checked with an exact
/// symmetric eigensolve at the sampled steps.
void validate_drift(const DriftSpec& drift, std::size_t steps, std::size_t stride = 1);

/// Largest |eigenvalue| bound of V_k (Gershgorin; exact for diagonal V).
double drift_eig_bound(std::span<const double> V, int dim);

struct SubmartingalePath {
    CadlagPath X;  // nonnegative martingale part
    CadlagPath A;  // nondecreasing finite-variation part, A_0 = 0
    CadlagPath xtilde() const;
};

struct ZPath {
    CadlagPath Z;
};

/// Explicit Euler for dZ = (V - aI) Z dt + dY, jump increments of Y applied
/// atomically (the drift never acts across a jump). Enforces the stability
/// bound dt (a + max|eig V|) < 1 and rejects with the required dt otherwise.
ZPath evolve_Z(const CadlagPath& Y, const DriftSpec& drift, std::span<const double> z0);

struct DecayReport {
    bool ok = true;
    std::size_t violation_step = 0;
    double worst_increase = 0.0;
};

/// Homogeneous evolution (Y = 0): |W_t| must be nonincreasing within 1e-9
/// per step. A failure points at a non-NSD V or a stability breach.
DecayReport norm_decay_check(const DriftSpec& drift, std::span<const double> z0, const TimeGrid& grid);

/// Special functions of the weak-type estimate: quadratic inside the diamond
/// |x| + |y| < 1, affine outside (closed boundary takes the outside branch),
/// with V <= U everywhere.
double bellman_U(double x, std::span<const double> y);
double bellman_V(double x, std::span<const double> y);

struct HypothesisReport {
    bool ok = true;
    std::string failure;
};

/// Checks the standing assumptions on a (X, A, Y, Z) tuple: X >= 0, A
/// nondecreasing from 0, Y differentially subordinate to X, |Z_0| <= |Xtilde_0|.
HypothesisReport check_hypothesis(const SubmartingalePath& sub, const CadlagPath& Y, const CadlagPath& Z,
                                  double tol = 1e-9);

struct WeakTypePoint {
    double lambda = 0.0;
    double empirical = 0.0;
    double bound = 0.0;   // 2 ||Xtilde||_1 / lambda
    double sigma = 0.0;   // binomial standard error of the empirical probability
    bool ok = true;       // empirical <= bound + 3 sigma
};

struct WeakTypeCurve {
    std::vector<WeakTypePoint> points;
    double xtilde_l1 = 0.0;  // sample mean of the terminal Xtilde (the closure norm)
    long paths = 0;
    long excluded = 0;  // hypothesis failures; any exclusion is a construction bug
    bool all_ok() const;
};

/// Streaming form: feed per-path sup_t(|Z_t| + |Xtilde_t|) and the terminal
/// Xtilde, then evaluate the curve on a lambda grid.
class WeakTypeAccumulator {
public:
    void add_path(double sup_z_plus_x, double xtilde_terminal, bool hypothesis_ok);
    WeakTypeCurve finalize(std::span<const double> lambdas) const;

private:
    std::vector<double> sups_;
    double xsum_ = 0.0;
    long n_ = 0, excluded_ = 0;
};

/// Materialized-batch form of the experiment (checks each pair's hypothesis;
/// excluded paths are counted and make the run fail upstream).
WeakTypeCurve weak_type_experiment(std::span<const SubmartingalePath> subs, std::span<const ZPath> zs,
                                   std::span<const CadlagPath> ys, std::span<const double> lambdas);

/// Inputs of the Z stopping construction for one path. xtilde and cond_exp
/// are per event; cond_exp[e] = E(Xtilde closure | F at event e) supplies the
/// thresholds (exact on trees, the sampled martingale value when a = 0).
struct ZPathInput {
    const PathEvents* ev = nullptr;      // x: scalar martingale part X, y: driver Y
    std::span<const double> xtilde;
    std::span<const double> cond_exp;
    std::span<const double> z0;
    const DriftSpec* drift = nullptr;
};

struct ZFamilyOptions {
    double threshold_c = 4.0;
    int level_budget = 200;
    /// Re-foot the level processes at r X (the jump construction, valid with
    /// jumps present); false restarts levels at the bare crossing increment
    /// (the continuous-path construction).
    bool jump_refoot = true;
};

struct ZFamilyPathResult {
    FamilyPath fam;        // stop_value holds E(Xtilde | F_{T^j})
    double zstar = 0.0;
    double sup_z_plus_xtilde = 0.0;
    double s_value = 0.0;  // sparse operator total
    double telescope_residual = 0.0;  // max_e |sum_n Ztilde^n - Z| / (1 + |Z|)
    std::vector<double> level_sup;    // sup_t |Ztilde^n|
};

/// Builds the level processes, their stopping times, the truncated-driver
/// array Ztilde^n, and verifies the telescoping identity sum_n Ztilde^n = Z.
ZFamilyPathResult build_family_Z_path(const ZPathInput& input, const ZFamilyOptions& options);

struct ZEvolveSummary {
    double zstar = 0.0;
    double sup_z_plus_xtilde = 0.0;
};

/// Base evolution only (no stopping construction); cond_exp may be empty.
ZEvolveSummary evolve_Z_summary(const ZPathInput& input);

struct ZFamilyTreeResult {
    StoppingFamily family;
    std::vector<ZFamilyPathResult> per_leaf;
};

/// Tree analogue: Xtilde = X + A with A predictable nondecreasing, conditional
/// expectations exact by subtree averaging, one event per level (dt apart).
/// z0 empty starts Z at the origin.
ZFamilyTreeResult build_sparse_family_Z_tree(const TreeSpace& space, const TreeProcess& X,
                                             const TreeProcess& A, const TreeProcess& Y,
                                             const DriftSpec& drift, double dt,
                                             const ZFamilyOptions& options,
                                             std::span<const double> z0 = {});

}  // namespace sparsedom
