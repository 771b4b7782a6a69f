#include "sparsedom/weights.hpp"

#include <algorithm>
#include <cmath>

namespace sparsedom {

WeightProcess WeightProcess::from_terminal(const TreeSpace& space, std::span<const double> w_leaf,
                                           double p) {
    require(p > 1.0 && std::isfinite(p), "WeightProcess: p must lie in (1, infinity)");
    require(static_cast<int>(w_leaf.size()) == space.leaf_count(), "WeightProcess: leaf count mismatch");
    WeightProcess wp;
    wp.p = p;
    wp.w_leaf.assign(w_leaf.begin(), w_leaf.end());
    wp.u_leaf.resize(w_leaf.size());
    for (std::size_t i = 0; i < w_leaf.size(); ++i) {
        require(w_leaf[i] > 0.0, "WeightProcess: weights must be strictly positive");
        wp.u_leaf[i] = std::pow(w_leaf[i], -1.0 / (p - 1.0));
    }
    wp.w = doob_martingale(space, wp.w_leaf, 1);
    wp.u = doob_martingale(space, wp.u_leaf, 1);
    return wp;
}

ApReport ap_characteristic(const TreeSpace& space, const WeightProcess& w) {
    ApReport rep;
    rep.attaining = TreeStoppingTime(space);
    double best = 0.0;
    int best_level = 0, best_node = 0;
    for (int k = 0; k <= space.depth(); ++k)
        for (int i = 0; i < space.level_size(k); ++i) {
            const double v = w.w.value(k, i)[0] * std::pow(w.u.value(k, i)[0], w.p - 1.0);
            if (v > best) {
                best = v;
                best_level = k;
                best_node = i;
            }
        }
    rep.qp = best;
    rep.attaining.mark(best_level, best_node);
    rep.mode = ApReport::Mode::Exact;
    return rep;
}

namespace {

/// ess sup over outcomes of w_tau u_tau^{p-1} for one stopping time: the max
/// of the node expression over stopped nodes, and 1 from the never-stopped
/// outcomes (where the closure values multiply to exactly w u^{p-1} = 1).
double ap_value_for(const TreeSpace& space, const WeightProcess& w, const TreeStoppingTime& T) {
    double v = 0.0;
    bool any_never = false;
    std::vector<char> seen_stop(space.leaf_count(), 0);
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
        const int s = T.stop_level(space, leaf);
        if (s == TreeStoppingTime::kNever) {
            any_never = true;
            continue;
        }
        const int node = space.node_at(s, leaf);
        v = std::max(v, w.w.value(s, node)[0] * std::pow(w.u.value(s, node)[0], w.p - 1.0));
    }
    if (any_never) v = std::max(v, 1.0);
    return v;
}

}  // namespace

ApReport ap_characteristic_sampled(const TreeSpace& space, const WeightProcess& w, int samples,
                                   std::uint64_t seed) {
    ApReport rep;
    rep.attaining = TreeStoppingTime(space);
    rep.mode = ApReport::Mode::SampledLowerBound;
    double best = 0.0;
    TreeStoppingTime best_t(space);
    for (int k = 0; k <= space.depth(); ++k) {
        TreeStoppingTime t = TreeStoppingTime::at_level(space, k);
        const double v = ap_value_for(space, w, t);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    Rng rng(seed);
    for (int s = 0; s < samples; ++s) {
        TreeStoppingTime t = sample_stopping_time(space, space.depth(), rng);
        const double v = ap_value_for(space, w, t);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    rep.qp = best;
    rep.attaining = best_t;
    return rep;
}

double weighted_norm(const TreeSpace& space, std::span<const double> leaf_values, int dim,
                     std::span<const double> w_leaf, double p) {
    require(p > 1.0, "weighted_norm: p must lie in (1, infinity)");
    require(leaf_values.size() == static_cast<std::size_t>(space.leaf_count()) * dim,
            "weighted_norm: leaf value count mismatch");
    double sum = 0.0;
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
        const double a = norm2(leaf_values.subspan(static_cast<std::size_t>(leaf) * dim, dim));
        sum += space.leaf_probs()[leaf] * std::pow(a, p) * w_leaf[leaf];
    }
    return std::pow(sum, 1.0 / p);
}

namespace {

WeightedBoundReport sparse_bound_report(const TreeSpace& space, const TreeProcess& X,
                                        const StoppingFamily& family, const WeightProcess& w,
                                        double p, double constant) {
    WeightedBoundReport rep;
    auto svals = sparse_operator_tree(space, family, X, SparseMode::SampleAtStop);
    std::vector<double> s(space.leaf_count());
    for (int i = 0; i < space.leaf_count(); ++i) s[i] = svals[i].total;

    std::vector<double> xterm(space.leaf_count());
    for (int i = 0; i < space.leaf_count(); ++i) xterm[i] = norm2(X.value(space.depth(), i));

    rep.lhs = weighted_norm(space, s, 1, w.w_leaf, p);
    rep.rhs = constant * weighted_norm(space, xterm, 1, w.w_leaf, p);
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    rep.ok = rep.lhs <= rep.rhs * (1.0 + 1e-12) + 1e-300;
    return rep;
}

}  // namespace

WeightedBoundReport verify_weighted_sparse_L2(const TreeSpace& space, const TreeProcess& X,
                                              const StoppingFamily& family, const WeightProcess& w) {
    require(std::abs(w.p - 2.0) < 1e-12, "verify_weighted_sparse_L2: weight must carry p = 2");
    const double qp = ap_characteristic(space, w).qp;
    auto rep = sparse_bound_report(space, X, family, w, 2.0, 8.0 * qp);
    rep.qp = qp;
    return rep;
}

WeightedBoundReport verify_weighted_sparse_Lp(const TreeSpace& space, const TreeProcess& X,
                                              const StoppingFamily& family, const WeightProcess& w) {
    const double qp = ap_characteristic(space, w).qp;
    auto rep = sparse_bound_report(space, X, family, w, w.p, sparse_lp_constant(w.p, qp));
    rep.qp = qp;
    return rep;
}

WeightedBoundReport verify_doob_weighted(const TreeSpace& space, const TreeProcess& X,
                                         const WeightProcess& w, double p) {
    require(std::abs(w.p - p) < 1e-12, "verify_doob_weighted: weight exponent mismatch");
    WeightedBoundReport rep;
    rep.qp = ap_characteristic(space, w).qp;

    std::vector<double> xstar(space.leaf_count()), xterm(space.leaf_count());
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
        xstar[leaf] = maximal_along_path(space, X, leaf);
        xterm[leaf] = norm2(X.value(space.depth(), leaf));
    }
    rep.lhs = weighted_norm(space, xstar, 1, w.w_leaf, p);
    rep.rhs = doob_constant(p) * std::pow(rep.qp, 1.0 / (p - 1.0)) *
              weighted_norm(space, xterm, 1, w.w_leaf, p);
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    rep.ok = rep.lhs <= rep.rhs * (1.0 + 1e-12) + 1e-300;
    return rep;
}

double doob_constant(double p) {
    require(p > 1.0 && std::isfinite(p), "doob_constant: p must lie in (1, infinity)");
    const double pprime = p / (p - 1.0);
    return std::pow(p, pprime) / (p - 1.0);
}

double extrapolate_bound(const std::function<double(double)>& N_r, double r, double p, double B) {
    require(r > 1.0 && std::isfinite(r) && p > 1.0 && std::isfinite(p),
            "extrapolate_bound: exponents must lie in (1, infinity)");
    require(B >= 1.0, "extrapolate_bound: characteristic must be >= 1");
    if (p == r) return N_r(B);
    if (p > r) {
        const double c = doob_constant(p / (p - 1.0));  // constant at the dual exponent p'
        return std::pow(2.0, 1.0 / r) * N_r(2.0 * std::pow(c, (p - r) / (p - 1.0)) * B);
    }
    const double c = doob_constant(p);
    return std::pow(2.0, (r - 1.0) / r) *
           N_r(std::pow(2.0, r - 1.0) * std::pow(std::pow(c, p - r) * B, (r - 1.0) / (p - 1.0)));
}

double sparse_lp_constant(double p, double qp) {
    return extrapolate_bound([](double A) { return 8.0 * A; }, 2.0, p, std::max(qp, 1.0));
}

std::vector<SharpnessRow> sharpness_probe(double p, std::span<const int> depths,
                                          std::span<const double> masses) {
    std::vector<SharpnessRow> rows;
    for (int depth : depths)
        for (double mass : masses) {
            TreeSpace space = TreeSpace::dyadic(depth);
            std::vector<double> wl(space.leaf_count(), 1.0);
            wl[0] = mass;
            WeightProcess w = WeightProcess::from_terminal(space, wl, p);

            // Pair the weight with the martingale generated by its own dual:
            // the classical extremal direction for the maximal operator.
            TreeProcess X = doob_martingale(space, w.u_leaf, 1);
            std::vector<double> xstar(space.leaf_count()), xterm(space.leaf_count());
            for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
                xstar[leaf] = maximal_along_path(space, X, leaf);
                xterm[leaf] = X.value(space.depth(), leaf)[0];
            }
            SharpnessRow row;
            row.depth = depth;
            row.mass = mass;
            row.qp = ap_characteristic(space, w).qp;
            const double num = weighted_norm(space, xstar, 1, w.w_leaf, p);
            const double den = weighted_norm(space, xterm, 1, w.w_leaf, p);
            row.ratio_full = num / (std::pow(row.qp, 1.0 / (p - 1.0)) * den);
            row.ratio_half = num / (std::pow(row.qp, 0.5 / (p - 1.0)) * den);
            rows.push_back(row);
        }
    return rows;
}

}  // namespace sparsedom
