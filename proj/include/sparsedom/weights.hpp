#pragma once

#include <span>
#include <vector>

#include "sparsedom/sparse.hpp"
#include "sparsedom/treespace.hpp"

namespace sparsedom {

/// Weight pair (w, u): w a positive martingale given by terminal values and
/// exact tree averaging, u the dual weight with u^p w = u, i.e. the martingale
/// closure of w^{-1/(p-1)}.
struct WeightProcess {
    double p = 2.0;
    std::vector<double> w_leaf, u_leaf;
    TreeProcess w, u;  // exact martingale extensions

    static WeightProcess from_terminal(const TreeSpace& space, std::span<const double> w_leaf, double p);
};

struct ApReport {
    double qp = 1.0;
    TreeStoppingTime attaining;
    enum class Mode { Exact, SampledLowerBound } mode = Mode::Exact;
    /// The supremum ranges over non-randomized adapted stopping times only.
    bool randomized_times_excluded = true;
};

/// Exact A_p characteristic sup_tau ||w_tau u_tau^{p-1}||_inf. On a finite
/// tree the supremum is attained by stopping at the single node maximizing
/// E[w|F] E[u|F]^{p-1}, since every node is the stopping set of an adapted
/// time and each tau samples only node values; the enumeration over all
/// stopping times (tested against this) agrees.
ApReport ap_characteristic(const TreeSpace& space, const WeightProcess& w);

/// Certified lower bound from a random subset of stopping times plus all
/// constant-level times; the fallback for spaces too deep to enumerate.
ApReport ap_characteristic_sampled(const TreeSpace& space, const WeightProcess& w, int samples,
                                   std::uint64_t seed);

/// (sum_leaf prob |value|^p w_leaf)^(1/p); dim-d values use Euclidean norms.
double weighted_norm(const TreeSpace& space, std::span<const double> leaf_values, int dim,
                     std::span<const double> w_leaf, double p);

struct WeightedBoundReport {
    bool ok = true;
    double lhs = 0.0, rhs = 0.0;
    double ratio = 0.0;  // lhs / rhs
    double qp = 1.0;
};

/// || S(X) ||_{L^2(w)} <= 8 Q_2(w) || X ||_{L^2(w)}, exact tree arithmetic.
WeightedBoundReport verify_weighted_sparse_L2(const TreeSpace& space, const TreeProcess& X,
                                              const StoppingFamily& family, const WeightProcess& w);

/// || S(X) ||_{L^p(w)} <= N_p(Q_p) || X ||_{L^p(w)} with N_p extrapolated
/// from N_2(A) = 8A; exponent max{1, 1/(p-1)} on the characteristic.
WeightedBoundReport verify_weighted_sparse_Lp(const TreeSpace& space, const TreeProcess& X,
                                              const StoppingFamily& family, const WeightProcess& w);

/// || X* ||_{L^p(w)} <= (p^{p'} / (p-1)) Q_p(w)^{1/(p-1)} || X ||_{L^p(w)}.
WeightedBoundReport verify_doob_weighted(const TreeSpace& space, const TreeProcess& X,
                                         const WeightProcess& w, double p);

/// Numeric part of the weighted Doob maximal bound: p^{p'} / (p-1).
double doob_constant(double p);

/// Extrapolation of weighted bounds from exponent r to p:
///   p > r: N_p(B) = 2^{1/r} N_r(2 c_{p'}^{(p-r)/(p-1)} B)
///   p < r: N_p(B) = 2^{(r-1)/r} N_r(2^{r-1} (c_p^{p-r} B)^{(r-1)/(p-1)})
/// with c_q the Doob constant q^{q'}/(q-1); N_p(B) = N_r(B) at p = r.
double extrapolate_bound(const std::function<double(double)>& N_r, double r, double p, double B);

/// The sparse-operator L^p(w) constant extrapolated from N_2(A) = 8A.
double sparse_lp_constant(double p, double qp);

struct SharpnessRow {
    int depth = 0;
    double mass = 0.0;  // two-point weight mass ratio
    double qp = 1.0;
    double ratio_full = 0.0;  // ||X*|| / (Q_p^{1/(p-1)} ||X||)
    double ratio_half = 0.0;  // same with exponent 1/(2(p-1))
};

/// Degenerate two-point-weight family probing the exponent 1/(p-1): the full
/// exponent keeps the ratio bounded while the halved exponent lets it grow.
/// Reported, never asserted.
std::vector<SharpnessRow> sharpness_probe(double p, std::span<const int> depths,
                                          std::span<const double> masses);

}  // namespace sparsedom
