#include "sparsedom/zprocess.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace sparsedom {

DriftSpec DriftSpec::zero(int dim, double a) { return scaled_identity(0.0, dim, a); }

DriftSpec DriftSpec::constant(std::vector<double> V, int dim, double a) {
    require(static_cast<int>(V.size()) == dim * dim, "DriftSpec: V size mismatch");
    DriftSpec d;
    d.a = a;
    d.dim = dim;
    d.source = [V = std::move(V)](std::size_t, std::span<double> out) {
        std::copy(V.begin(), V.end(), out.begin());
    };
    return d;
}

DriftSpec DriftSpec::scaled_identity(double c, int dim, double a) {
    std::vector<double> V(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) V[static_cast<std::size_t>(i) * dim + i] = c;
    return constant(std::move(V), dim, a);
}

DriftSpec DriftSpec::from_state(std::vector<double> states, std::function<double(double)> v, int dim,
                                double a) {
    DriftSpec d;
    d.a = a;
    d.dim = dim;
    d.source = [states = std::move(states), v = std::move(v), dim](std::size_t k, std::span<double> out) {
        const double c = v(states[std::min(k, states.size() - 1)]);
        std::fill(out.begin(), out.end(), 0.0);
        for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i) * dim + i] = c;
    };
    return d;
}

void validate_drift(const DriftSpec& drift, std::size_t steps, std::size_t stride) {
    const int d = drift.dim;
    std::vector<double> V(static_cast<std::size_t>(d) * d);
    for (std::size_t k = 0; k < steps; k += std::max<std::size_t>(stride, 1)) {
        drift.source(k, V);
        Eigen::MatrixXd M(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) M(i, j) = V[static_cast<std::size_t>(i) * d + j];
        require((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-9,
                "DriftSpec: V not symmetric at step " + std::to_string(k));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        require(es.eigenvalues().maxCoeff() <= 1e-9,
                "DriftSpec: V not negative semidefinite at step " + std::to_string(k));
    }
}

double drift_eig_bound(std::span<const double> V, int dim) {
    double bound = 0.0;
    for (int i = 0; i < dim; ++i) {
        double row = 0.0;
        for (int j = 0; j < dim; ++j) row += std::abs(V[static_cast<std::size_t>(i) * dim + j]);
        bound = std::max(bound, row);
    }
    return bound;
}

CadlagPath SubmartingalePath::xtilde() const {
    require(X.grid == A.grid, "SubmartingalePath: grid mismatch");
    CadlagPath t = X;
    for (std::size_t k = 0; k < t.grid.points(); ++k)
        for (int c = 0; c < t.dim; ++c) t.value(k)[c] += A.value(k)[c];
    for (auto& j : t.jumps)
        for (int c = 0; c < t.dim; ++c) j.pre[c] += A.value(j.index)[c];
    return t;
}

namespace {

void check_stability(double dt, double a, double eig_bound) {
    if (dt * (a + eig_bound) >= 1.0) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "Z evolution unstable: dt (a + max|eig V|) >= 1; required dt < %.6g", 1.0 / (a + eig_bound));
        throw std::invalid_argument(buf);
    }
}

/// z += dt ((V - a I) z); row-major V.
void drift_step(std::span<double> z, std::span<const double> V, double a, double dt, int d,
                std::span<double> scratch) {
    for (int i = 0; i < d; ++i) {
        double w = 0.0;
        for (int j = 0; j < d; ++j) w += V[static_cast<std::size_t>(i) * d + j] * z[j];
        scratch[i] = w - a * z[i];
    }
    for (int i = 0; i < d; ++i) z[i] += dt * scratch[i];
}

}  // namespace

ZPath evolve_Z(const CadlagPath& Y, const DriftSpec& drift, std::span<const double> z0) {
    require(drift.dim == Y.dim, "evolve_Z: drift dimension mismatch");
    require(static_cast<int>(z0.size()) == Y.dim, "evolve_Z: z0 dimension mismatch");
    const int d = Y.dim;
    const double dt = Y.grid.dt;

    ZPath out;
    out.Z.grid = Y.grid;
    out.Z.dim = d;
    out.Z.values.assign(Y.grid.points() * static_cast<std::size_t>(d), 0.0);
    std::copy(z0.begin(), z0.end(), out.Z.value(0).begin());

    std::vector<double> V(static_cast<std::size_t>(d) * d), scratch(d), z(z0.begin(), z0.end());
    for (std::size_t k = 1; k <= Y.grid.steps(); ++k) {
        drift.source(k - 1, V);
        check_stability(dt, drift.a, drift_eig_bound(V, d));
        drift_step(z, V, drift.a, dt, d, scratch);
        const auto* jy = Y.jump_at(k);
        if (jy) {
            // continuous part of the Y increment, then the jump, atomically
            CadlagPath::Jump jz;
            jz.index = k;
            jz.pre.resize(d);
            for (int c = 0; c < d; ++c) {
                z[c] += jy->pre[c] - Y.value(k - 1)[c];
                jz.pre[c] = z[c];
            }
            for (int c = 0; c < d; ++c) z[c] += Y.value(k)[c] - jy->pre[c];
            out.Z.jumps.push_back(std::move(jz));
        } else {
            for (int c = 0; c < d; ++c) z[c] += Y.value(k)[c] - Y.value(k - 1)[c];
        }
        std::copy(z.begin(), z.end(), out.Z.value(k).begin());
    }
    return out;
}

DecayReport norm_decay_check(const DriftSpec& drift, std::span<const double> z0, const TimeGrid& grid) {
    DecayReport rep;
    const int d = drift.dim;
    std::vector<double> V(static_cast<std::size_t>(d) * d), scratch(d), w(z0.begin(), z0.end());
    double prev = norm2(w);
    for (std::size_t k = 1; k <= grid.steps(); ++k) {
        drift.source(k - 1, V);
        check_stability(grid.dt, drift.a, drift_eig_bound(V, d));
        drift_step(w, V, drift.a, grid.dt, d, scratch);
        const double cur = norm2(w);
        if (cur > prev + 1e-9) {
            rep.ok = false;
            rep.violation_step = k;
            rep.worst_increase = std::max(rep.worst_increase, cur - prev);
        }
        prev = cur;
    }
    return rep;
}

double bellman_U(double x, std::span<const double> y) {
    const double ax = std::abs(x), ay = norm2(y);
    if (ax + ay < 1.0) return ay * ay - ax * ax;
    return 1.0 - 2.0 * ax;
}

double bellman_V(double x, std::span<const double> y) {
    const double ax = std::abs(x), ay = norm2(y);
    if (ax + ay < 1.0) return -2.0 * ax;
    return 1.0 - 2.0 * ax;
}

HypothesisReport check_hypothesis(const SubmartingalePath& sub, const CadlagPath& Y, const CadlagPath& Z,
                                  double tol) {
    HypothesisReport rep;
    auto bad = [&](const std::string& why) {
        rep.ok = false;
        if (rep.failure.empty()) rep.failure = why;
    };
    for (std::size_t k = 0; k < sub.X.grid.points(); ++k)
        if (sub.X.value(k)[0] < -tol) {
            bad("X negative at index " + std::to_string(k));
            break;
        }
    for (const auto& j : sub.X.jumps)
        if (j.pre[0] < -tol) bad("X left limit negative at index " + std::to_string(j.index));
    if (std::abs(sub.A.value(0)[0]) > tol) bad("A does not start at 0");
    if (!sub.A.jumps.empty()) bad("A must be continuous (predictable finite variation)");
    for (std::size_t k = 1; k < sub.A.grid.points(); ++k)
        if (sub.A.value(k)[0] < sub.A.value(k - 1)[0] - tol) {
            bad("A decreases at index " + std::to_string(k));
            break;
        }
    const auto sr = check_differential_subordination(sub.X, Y);
    if (!sr.ok) bad("Y not differentially subordinate to X (violation " + std::to_string(sr.worst_violation) + ")");
    const double x0 = sub.X.value(0)[0] + sub.A.value(0)[0];
    if (norm2(Z.value(0)) > std::abs(x0) + tol) bad("|Z_0| exceeds |Xtilde_0|");
    return rep;
}

void WeakTypeAccumulator::add_path(double sup_z_plus_x, double xtilde_terminal, bool hypothesis_ok) {
    if (!hypothesis_ok) {
        ++excluded_;
        return;
    }
    sups_.push_back(sup_z_plus_x);
    xsum_ += xtilde_terminal;
    ++n_;
}

WeakTypeCurve WeakTypeAccumulator::finalize(std::span<const double> lambdas) const {
    WeakTypeCurve curve;
    curve.paths = n_;
    curve.excluded = excluded_;
    curve.xtilde_l1 = n_ > 0 ? xsum_ / static_cast<double>(n_) : 0.0;
    for (double lam : lambdas) {
        WeakTypePoint pt;
        pt.lambda = lam;
        long hits = 0;
        for (double s : sups_)
            if (s >= lam) ++hits;
        pt.empirical = n_ > 0 ? static_cast<double>(hits) / static_cast<double>(n_) : 0.0;
        pt.bound = 2.0 * curve.xtilde_l1 / lam;
        pt.sigma = n_ > 0 ? std::sqrt(pt.empirical * (1.0 - pt.empirical) / static_cast<double>(n_)) : 0.0;
        pt.ok = pt.empirical <= pt.bound + 3.0 * pt.sigma;
        curve.points.push_back(pt);
    }
    return curve;
}

bool WeakTypeCurve::all_ok() const {
    if (excluded > 0) return false;
    for (const auto& p : points)
        if (!p.ok) return false;
    return true;
}

namespace {

double sup_abs_z_plus_xtilde(const SubmartingalePath& sub, const CadlagPath& Z) {
    double sup = 0.0;
    for (std::size_t k = 0; k < Z.grid.points(); ++k)
        sup = std::max(sup, norm2(Z.value(k)) + std::abs(sub.X.value(k)[0] + sub.A.value(k)[0]));
    for (const auto& j : Z.jumps) {
        const double xpre = (sub.X.jump_at(j.index) ? sub.X.jump_at(j.index)->pre[0]
                                                    : sub.X.value(j.index)[0]) +
                            sub.A.value(j.index)[0];
        sup = std::max(sup, norm2(j.pre) + std::abs(xpre));
    }
    return sup;
}

}  // namespace

WeakTypeCurve weak_type_experiment(std::span<const SubmartingalePath> subs, std::span<const ZPath> zs,
                                   std::span<const CadlagPath> ys, std::span<const double> lambdas) {
    require(subs.size() == zs.size() && subs.size() == ys.size(), "weak_type_experiment: batch size mismatch");
    WeakTypeAccumulator acc;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        const auto hyp = check_hypothesis(subs[i], ys[i], zs[i].Z);
        const double sup = sup_abs_z_plus_xtilde(subs[i], zs[i].Z);
        const std::size_t last = subs[i].X.grid.points() - 1;
        acc.add_path(sup, subs[i].X.value(last)[0] + subs[i].A.value(last)[0], hyp.ok);
    }
    return acc.finalize(lambdas);
}

ZFamilyPathResult build_family_Z_path(const ZPathInput& input, const ZFamilyOptions& options) {
    const PathEvents& ev = *input.ev;
    const int d = ev.dim_y;
    const std::size_t E = ev.count();
    require(ev.dim_x == 1, "build_family_Z_path: the martingale part X must be scalar");
    require(input.xtilde.size() == E && input.cond_exp.size() == E, "build_family_Z_path: event data mismatch");
    require(input.drift->dim == d, "build_family_Z_path: drift dimension mismatch");

    ZFamilyPathResult out;

    // Per-event drift matrices, filled once; jump events carry no drift.
    std::vector<double> Vbuf(E * static_cast<std::size_t>(d) * d, 0.0);
    for (std::size_t e = 1; e < E; ++e) {
        if (ev.dt_before[e] <= 0.0) continue;
        std::span<double> V(Vbuf.data() + e * d * d, static_cast<std::size_t>(d) * d);
        input.drift->source(static_cast<std::size_t>(std::max(ev.position[e] - 1, 0)), V);
        check_stability(ev.dt_before[e], input.drift->a, drift_eig_bound(V, d));
    }
    std::vector<double> scratch(d);
    auto advance = [&](std::span<double> z, std::size_t e) {
        if (ev.dt_before[e] > 0.0)
            drift_step(z, {Vbuf.data() + e * d * d, static_cast<std::size_t>(d) * d}, input.drift->a,
                       ev.dt_before[e], d, scratch);
    };

    // Base evolution Z(e) = G_e Z(e-1) + dY(e).
    std::vector<double> Z(E * static_cast<std::size_t>(d));
    std::copy(input.z0.begin(), input.z0.end(), Z.begin());
    {
        std::vector<double> z(input.z0.begin(), input.z0.end());
        out.zstar = norm2(z);
        out.sup_z_plus_xtilde = out.zstar + std::abs(input.xtilde[0]);
        for (std::size_t e = 1; e < E; ++e) {
            advance(z, e);
            for (int c = 0; c < d; ++c) z[c] += ev.Y(e)[c] - ev.Y(e - 1)[c];
            std::copy(z.begin(), z.end(), Z.begin() + e * d);
            const double nz = norm2(z);
            out.zstar = std::max(out.zstar, nz);
            out.sup_z_plus_xtilde = std::max(out.sup_z_plus_xtilde, nz + std::abs(input.xtilde[e]));
        }
    }

    // Level construction. T^0 = 0 on every path.
    std::vector<std::vector<double>> ztilde;  // one truncated-driver process per level
    std::vector<double> lev(input.z0.begin(), input.z0.end());  // current level process value
    std::vector<double> dy(d), newfoot(d);
    double dx = 0.0;
    std::size_t s = 0;
    out.fam.stop_event.push_back(0);
    out.fam.stop_value.push_back(input.cond_exp[0]);
    out.fam.foot.push_back(lev);

    while (true) {
        const double theta = options.threshold_c * out.fam.stop_value.back();
        std::size_t cross = E;
        // ztilde for this level: level values in the window, decay after.
        std::vector<double> zt(E * static_cast<std::size_t>(d), 0.0);
        std::copy(lev.begin(), lev.end(), zt.begin() + s * d);
        std::vector<double> cur = lev;
        for (std::size_t e = s + 1; e < E && cross == E; ++e) {
            advance(cur, e);
            for (int c = 0; c < d; ++c) cur[c] += ev.Y(e)[c] - ev.Y(e - 1)[c];
            if (norm2(cur) > theta || input.xtilde[e] > theta) cross = e;
            if (cross == E) std::copy(cur.begin(), cur.end(), zt.begin() + e * d);
        }

        if (cross == E) {
            // final level: window runs to the end, nothing to truncate
            ztilde.push_back(std::move(zt));
            break;
        }

        // close this level's truncated process and decay it homogeneously
        for (int c = 0; c < d; ++c) dy[c] = ev.Y(cross)[c] - ev.Y(cross - 1)[c];
        dx = ev.X(cross)[0] - ev.X(cross - 1)[0];
        {
            std::vector<double> tail(zt.begin() + (cross - 1) * d, zt.begin() + cross * d);
            advance(tail, cross);
            if (options.jump_refoot && dx != 0.0) {
                const double rprev = ev.X(cross - 1)[0] / dx;
                for (int c = 0; c < d; ++c) tail[c] -= dy[c] * rprev;
            }
            std::copy(tail.begin(), tail.end(), zt.begin() + cross * d);
            for (std::size_t e = cross + 1; e < E; ++e) {
                advance(tail, e);
                std::copy(tail.begin(), tail.end(), zt.begin() + e * d);
            }
        }
        ztilde.push_back(std::move(zt));

        // next level's foot
        if (options.jump_refoot && dx != 0.0) {
            const double rcur = ev.X(cross)[0] / dx;
            for (int c = 0; c < d; ++c) newfoot[c] = dy[c] * rcur;
        } else if (options.jump_refoot) {
            std::fill(newfoot.begin(), newfoot.end(), 0.0);
        } else {
            newfoot.assign(dy.begin(), dy.end());
        }
        if (static_cast<int>(out.fam.levels()) >= options.level_budget) {
            out.fam.hit_level_budget = true;
            break;
        }
        lev = newfoot;
        s = cross;
        out.fam.stop_event.push_back(static_cast<int>(s));
        out.fam.stop_value.push_back(input.cond_exp[s]);
        out.fam.foot.push_back(lev);
    }

    for (double v : out.fam.stop_value) out.s_value += v;

    // Telescoping sum_n Ztilde^n = Z, exact up to rounding.
    out.level_sup.assign(ztilde.size(), 0.0);
    std::vector<double> sum(d);
    for (std::size_t e = 0; e < E; ++e) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t n = 0; n < ztilde.size(); ++n) {
            double nrm2 = 0.0;
            for (int c = 0; c < d; ++c) {
                const double v = ztilde[n][e * d + c];
                sum[c] += v;
                nrm2 += v * v;
            }
            out.level_sup[n] = std::max(out.level_sup[n], std::sqrt(nrm2));
        }
        double diff = 0.0, zn = 0.0;
        for (int c = 0; c < d; ++c) {
            const double dz = sum[c] - Z[e * d + c];
            diff += dz * dz;
            zn += Z[e * d + c] * Z[e * d + c];
        }
        out.telescope_residual =
            std::max(out.telescope_residual, std::sqrt(diff) / (1.0 + std::sqrt(zn)));
    }
    return out;
}

ZEvolveSummary evolve_Z_summary(const ZPathInput& input) {
    const PathEvents& ev = *input.ev;
    const int d = ev.dim_y;
    const std::size_t E = ev.count();
    require(input.xtilde.size() == E, "evolve_Z_summary: event data mismatch");

    std::vector<double> V(static_cast<std::size_t>(d) * d), scratch(d);
    std::vector<double> z(input.z0.begin(), input.z0.end());
    ZEvolveSummary s;
    s.zstar = norm2(z);
    s.sup_z_plus_xtilde = s.zstar + std::abs(input.xtilde[0]);
    for (std::size_t e = 1; e < E; ++e) {
        if (ev.dt_before[e] > 0.0) {
            input.drift->source(static_cast<std::size_t>(std::max(ev.position[e] - 1, 0)), V);
            check_stability(ev.dt_before[e], input.drift->a, drift_eig_bound(V, d));
            drift_step(z, V, input.drift->a, ev.dt_before[e], d, scratch);
        }
        for (int c = 0; c < d; ++c) z[c] += ev.Y(e)[c] - ev.Y(e - 1)[c];
        const double nz = norm2(z);
        s.zstar = std::max(s.zstar, nz);
        s.sup_z_plus_xtilde = std::max(s.sup_z_plus_xtilde, nz + std::abs(input.xtilde[e]));
    }
    return s;
}

ZFamilyTreeResult build_sparse_family_Z_tree(const TreeSpace& space, const TreeProcess& X,
                                             const TreeProcess& A, const TreeProcess& Y,
                                             const DriftSpec& drift, double dt,
                                             const ZFamilyOptions& options,
                                             std::span<const double> z0_in) {
    require(X.dim() == 1 && A.dim() == 1, "build_sparse_family_Z_tree: X and A must be scalar");
    require(z0_in.empty() || static_cast<int>(z0_in.size()) == Y.dim(),
            "build_sparse_family_Z_tree: z0 dimension mismatch");
    const int L = space.depth();

    // Exact conditional expectations of the closure of Xtilde.
    std::vector<double> xt_term(space.leaf_count());
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf)
        xt_term[leaf] = X.value(L, leaf)[0] + A.value(L, leaf)[0];
    TreeProcess cond = doob_martingale(space, xt_term, 1);

    ZFamilyTreeResult out;
    out.family.kind = StoppingFamily::Kind::ZConstruction;
    out.family.threshold_c = options.threshold_c;
    std::vector<double> z0(Y.dim(), 0.0);
    if (!z0_in.empty()) z0.assign(z0_in.begin(), z0_in.end());
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
        PathEvents ev = PathEvents::from_tree(space, X, Y, leaf, dt);
        std::vector<double> xtilde(L + 1), ce(L + 1);
        for (int k = 0; k <= L; ++k) {
            const int node = space.node_at(k, leaf);
            xtilde[k] = X.value(k, node)[0] + A.value(k, node)[0];
            ce[k] = cond.value(k, node)[0];
        }
        ZPathInput in;
        in.ev = &ev;
        in.xtilde = xtilde;
        in.cond_exp = ce;
        in.z0 = z0;
        in.drift = &drift;
        out.per_leaf.push_back(build_family_Z_path(in, options));
        out.family.paths.push_back(out.per_leaf.back().fam);
    }
    return out;
}

}  // namespace sparsedom
