#include "sparsedom/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sparsedom {

PathEvents PathEvents::from_paths(const CadlagPath& X, const CadlagPath& Y) {
    require(X.grid == Y.grid, "PathEvents: grid mismatch");
    PathEvents ev;
    ev.dim_x = X.dim;
    ev.dim_y = Y.dim;
    const std::size_t n = X.grid.steps();
    ev.x.reserve((n + 1) * X.dim);
    ev.y.reserve((n + 1) * Y.dim);

    auto push = [&](std::span<const double> xv, std::span<const double> yv, double dt, bool is_jump,
                    int pos) {
        ev.x.insert(ev.x.end(), xv.begin(), xv.end());
        ev.y.insert(ev.y.end(), yv.begin(), yv.end());
        ev.dt_before.push_back(dt);
        ev.jump.push_back(is_jump ? 1 : 0);
        ev.position.push_back(pos);
    };

    push(X.value(0), Y.value(0), 0.0, false, 0);
    for (std::size_t k = 1; k <= n; ++k) {
        const auto* jx = X.jump_at(k);
        const auto* jy = Y.jump_at(k);
        if (jx || jy) {
            // Continuous part arrives first (the left limit), then the jump.
            std::span<const double> px = jx ? std::span<const double>(jx->pre) : X.value(k);
            std::span<const double> py = jy ? std::span<const double>(jy->pre) : Y.value(k);
            push(px, py, X.grid.dt, false, static_cast<int>(k));
            push(X.value(k), Y.value(k), 0.0, true, static_cast<int>(k));
        } else {
            push(X.value(k), Y.value(k), X.grid.dt, false, static_cast<int>(k));
        }
    }
    return ev;
}

PathEvents PathEvents::from_tree(const TreeSpace& space, const TreeProcess& X, const TreeProcess& Y,
                                 int leaf, double dt) {
    PathEvents ev;
    ev.dim_x = X.dim();
    ev.dim_y = Y.dim();
    for (int k = 0; k <= space.depth(); ++k) {
        const int node = space.node_at(k, leaf);
        auto xv = X.value(k, node);
        auto yv = Y.value(k, node);
        ev.x.insert(ev.x.end(), xv.begin(), xv.end());
        ev.y.insert(ev.y.end(), yv.begin(), yv.end());
        ev.dt_before.push_back(k == 0 ? 0.0 : dt);
        ev.jump.push_back(k == 0 ? 0 : 1);  // discrete increments are jumps
        ev.position.push_back(k);
    }
    return ev;
}

void apply_refoot(std::span<const double> dy, std::span<const double> dx, std::span<const double> v,
                  std::span<double> out) {
    const double nx2 = sqnorm(dx);
    if (nx2 == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const double c = dot(dx, v) / nx2;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = dy[i] * c;
}

FamilyPath build_family_Y_path(const PathEvents& ev, double threshold_c, int level_budget) {
    FamilyPath fam;
    const std::size_t count = ev.count();
    if (count == 0) return fam;
    if (norm2(ev.X(0)) == 0.0) return fam;  // T^0 = infinity

    std::vector<double> foot(ev.Y(0).begin(), ev.Y(0).end());
    std::vector<double> dy(ev.dim_y), dx(ev.dim_x), newfoot(ev.dim_y);
    std::size_t s = 0;
    while (true) {
        if (fam.levels() >= level_budget) {
            fam.hit_level_budget = true;
            break;
        }
        const double xstop = norm2(ev.X(s));
        fam.stop_event.push_back(static_cast<int>(s));
        fam.stop_value.push_back(xstop);
        fam.foot.push_back(foot);
        if (xstop == 0.0) break;  // |X| frozen at 0: next stop is infinite

        const double theta = threshold_c * xstop;
        std::size_t cross = count;
        for (std::size_t e = s + 1; e < count; ++e) {
            double yn2 = 0.0;
            for (int c = 0; c < ev.dim_y; ++c) {
                const double vy = foot[c] + ev.Y(e)[c] - ev.Y(s)[c];
                yn2 += vy * vy;
            }
            if (yn2 > theta * theta || sqnorm(ev.X(e)) > theta * theta) {
                cross = e;
                break;
            }
        }
        if (cross == count) break;  // T^{n+1} = infinity

        for (int c = 0; c < ev.dim_y; ++c) dy[c] = ev.Y(cross)[c] - ev.Y(cross - 1)[c];
        for (int c = 0; c < ev.dim_x; ++c) dx[c] = ev.X(cross)[c] - ev.X(cross - 1)[c];
        apply_refoot(dy, dx, ev.X(cross), newfoot);
        foot = newfoot;
        s = cross;
    }
    return fam;
}

double iterate_sup_Y(const PathEvents& ev, const FamilyPath& fam, int n) {
    if (n >= fam.levels()) return 0.0;  // path left E_n
    const std::size_t s = static_cast<std::size_t>(fam.stop_event[n]);
    const auto& foot = fam.foot[n];
    double sup = norm2(foot);
    for (std::size_t e = s + 1; e < ev.count(); ++e) {
        double yn2 = 0.0;
        for (int c = 0; c < ev.dim_y; ++c) {
            const double vy = foot[c] + ev.Y(e)[c] - ev.Y(s)[c];
            yn2 += vy * vy;
        }
        sup = std::max(sup, std::sqrt(yn2));
    }
    return sup;
}

int StoppingFamily::max_levels() const {
    int m = 0;
    for (const auto& p : paths) m = std::max(m, p.levels());
    return m;
}

std::vector<double> StoppingFamily::level_mass(std::span<const double> path_probs) const {
    std::vector<double> mass(max_levels(), 0.0);
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (int j = 0; j < paths[i].levels(); ++j) mass[j] += path_probs[i];
    return mass;
}

StoppingFamily build_sparse_family_Y_tree(const TreeSpace& space, const TreeProcess& X,
                                          const TreeProcess& Y, double threshold_c, int level_budget) {
    StoppingFamily fam;
    fam.kind = StoppingFamily::Kind::YConstruction;
    fam.threshold_c = threshold_c;
    fam.paths.reserve(space.leaf_count());
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
        PathEvents ev = PathEvents::from_tree(space, X, Y, leaf);
        fam.paths.push_back(build_family_Y_path(ev, threshold_c, level_budget));
    }
    return fam;
}

SparseValue sparse_operator_sample(const FamilyPath& fam) {
    SparseValue s;
    s.contributions = fam.stop_value;
    for (double v : s.contributions) s.total += v;
    return s;
}

std::vector<SparseValue> sparse_operator_tree(const TreeSpace& space, const StoppingFamily& family,
                                              const TreeProcess& base, SparseMode mode) {
    require(static_cast<int>(family.paths.size()) == space.leaf_count(),
            "sparse_operator_tree: family/space mismatch");
    const int L = space.depth();

    TreeProcess cond;
    if (mode == SparseMode::ConditionalExpectation) {
        std::vector<double> term(space.leaf_count());
        for (int leaf = 0; leaf < space.leaf_count(); ++leaf) term[leaf] = norm2(base.value(L, leaf));
        cond = doob_martingale(space, term, 1);
    }

    std::vector<SparseValue> out(space.leaf_count());
    for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
        const auto& fp = family.paths[leaf];
        auto& sv = out[leaf];
        for (int j = 0; j < fp.levels(); ++j) {
            const int level = fp.stop_event[j];
            const int node = space.node_at(level, leaf);
            const double contrib = mode == SparseMode::SampleAtStop
                                       ? norm2(base.value(level, node))
                                       : cond.value(level, node)[0];
            sv.contributions.push_back(contrib);
            sv.total += contrib;
        }
    }
    return out;
}

SparsityReport verify_sparsity_tree(const TreeSpace& space, const StoppingFamily& family, double tol) {
    SparsityReport rep;
    const int top = family.max_levels();
    for (int j = 0; j < top; ++j) {
        // F_{T^j} atoms inside E_j are exactly the stopped subtrees: every
        // leaf under a stopping node shares the whole history up to it.
        std::map<std::pair<int, int>, std::pair<double, double>> atoms;  // (level,node) -> (mass, survived)
        for (int leaf = 0; leaf < space.leaf_count(); ++leaf) {
            const auto& fp = family.paths[leaf];
            if (fp.levels() <= j) continue;
            const int level = fp.stop_event[j];
            const int node = space.node_at(level, leaf);
            auto& a = atoms[{level, node}];
            a.first += space.leaf_probs()[leaf];
            if (fp.levels() > j + 1) a.second += space.leaf_probs()[leaf];
        }
        for (const auto& [key, m] : atoms) {
            if (m.first <= 0.0) {
                ++rep.atoms_skipped;
                continue;
            }
            ++rep.atoms_checked;
            const double ratio = m.second / m.first;
            if (ratio > rep.max_ratio) {
                rep.max_ratio = ratio;
                rep.witness_level = j;
                rep.witness = "level " + std::to_string(j) + " atom at node (" + std::to_string(key.first) +
                              "," + std::to_string(key.second) + ")";
            }
            if (ratio > 0.5 + tol) rep.ok = false;
        }
    }
    return rep;
}

McSparsityAccumulator::McSparsityAccumulator(int bins, double value_scale)
    : bins_(bins), value_scale_(value_scale) {}

void McSparsityAccumulator::add_path(const FamilyPath& fam, std::size_t max_event) {
    max_event_seen_ = std::max(max_event_seen_, max_event);
    for (int j = 0; j < fam.levels(); ++j) {
        if (static_cast<int>(cells_.size()) <= j) cells_.resize(j + 1);
        auto& grid = cells_[j];
        if (grid.empty()) grid.resize(static_cast<std::size_t>(bins_) * bins_);

        int tbin = static_cast<int>(static_cast<double>(fam.stop_event[j]) /
                                    static_cast<double>(max_event) * bins_);
        tbin = std::clamp(tbin, 0, bins_ - 1);
        const double v = fam.stop_value[j] / value_scale_;
        int vbin = v <= 0.0 ? 0
                            : std::clamp(static_cast<int>(std::floor(std::log2(v))) + bins_ / 2, 0,
                                         bins_ - 1);
        auto& cell = grid[static_cast<std::size_t>(tbin) * bins_ + vbin];
        cell.total += 1;
        if (fam.levels() > j + 1) cell.survived += 1;
    }
}

SparsityReport McSparsityAccumulator::report() const {
    SparsityReport rep;
    for (std::size_t j = 0; j < cells_.size(); ++j) {
        for (std::size_t c = 0; c < cells_[j].size(); ++c) {
            const auto& cell = cells_[j][c];
            if (cell.total == 0) {
                ++rep.atoms_skipped;
                continue;
            }
            ++rep.atoms_checked;
            const double ratio = static_cast<double>(cell.survived) / static_cast<double>(cell.total);
            const double slack = 3.0 * std::sqrt(0.25 / static_cast<double>(cell.total));
            if (ratio > rep.max_ratio) {
                rep.max_ratio = ratio;
                rep.witness_level = static_cast<int>(j);
                rep.witness = "level " + std::to_string(j) + " bin " + std::to_string(c) + " (" +
                              std::to_string(cell.survived) + "/" + std::to_string(cell.total) + ")";
            }
            if (ratio > 0.5 + slack) rep.ok = false;
            rep.slack = std::max(rep.slack, slack);
        }
    }
    return rep;
}

DominationReport verify_domination(std::span<const double> ystar, std::span<const double> s_values,
                                   double constant, double tol_scale) {
    require(ystar.size() == s_values.size(), "verify_domination: size mismatch");
    DominationReport rep;
    rep.paths = static_cast<long>(ystar.size());
    for (std::size_t i = 0; i < ystar.size(); ++i) {
        const double tol = tol_scale * (1.0 + ystar[i]);
        if (s_values[i] > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, ystar[i] / s_values[i]);
        if (ystar[i] > constant * s_values[i] + tol) {
            rep.ok = false;
            ++rep.violations;
            if (rep.witness.empty())
                rep.witness = "path " + std::to_string(i) + ": Ystar " + std::to_string(ystar[i]) +
                              " vs " + std::to_string(constant) + " * S " + std::to_string(s_values[i]);
        }
    }
    return rep;
}

std::string family_to_text(const StoppingFamily& family) {
    std::string out = "# path level position\n";
    for (std::size_t i = 0; i < family.paths.size(); ++i)
        for (int j = 0; j < family.paths[i].levels(); ++j)
            out += std::to_string(i) + " " + std::to_string(j) + " " +
                   std::to_string(family.paths[i].stop_event[j]) + "\n";
    return out;
}

}  // namespace sparsedom
