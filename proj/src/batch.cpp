#include "sparsedom/batch.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sparsedom {

SyntheticPath make_synthetic_path(const SyntheticBatchConfig& cfg, long path_index) {
    require(cfg.x0 > 0.0, "make_synthetic_path: x0 must be > 0");
    require(cfg.step_sigma * std::sqrt(cfg.grid.dt) < 1.0, "make_synthetic_path: step too large for positivity");
    require(cfg.v_scale <= 0.0, "make_synthetic_path: V must be negative semidefinite");
    require(cfg.jump_span < 1.0, "make_synthetic_path: jump span must keep X positive");

    Rng rng(cfg.seed, static_cast<std::uint64_t>(path_index));
    const std::size_t steps = cfg.grid.steps();
    const double dt = cfg.grid.dt;
    const double mstep = cfg.step_sigma * std::sqrt(dt);

    // jump times (distinct grid indices)
    std::set<std::size_t> jump_at;
    if (cfg.with_jumps) {
        const long njumps = rng.poisson(cfg.jump_rate * cfg.grid.t_max);
        for (long i = 0; i < njumps; ++i) {
            std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(steps));
            jump_at.insert(std::min(k, steps));
        }
    }

    SyntheticPath out;
    auto& X = out.sub.X;
    auto& A = out.sub.A;
    auto& Y = out.Y;
    X.grid = A.grid = Y.grid = cfg.grid;
    X.dim = A.dim = 1;
    Y.dim = cfg.dim_y;
    X.values.assign(cfg.grid.points(), 0.0);
    A.values.assign(cfg.grid.points(), 0.0);
    Y.values.assign(cfg.grid.points() * static_cast<std::size_t>(cfg.dim_y), 0.0);

    std::vector<double> m(cfg.dim_y);
    auto draw_multiplier = [&]() {
        // uniform direction scaled by uniform radius in [0, 1]
        double norm = 0.0;
        for (auto& v : m) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        const double r = rng.uniform();
        if (norm > 0.0)
            for (auto& v : m) v *= r / norm;
    };

    X.values[0] = cfg.x0;
    draw_multiplier();
    for (int c = 0; c < cfg.dim_y; ++c) Y.values[c] = m[c] * cfg.x0;

    double x = cfg.x0, a_acc = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        a_acc += cfg.a * (x + a_acc) * dt;  // predictable: uses the left endpoint
        const double sgn = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double dx = x * mstep * sgn;
        draw_multiplier();
        double xpre = x + dx;
        for (int c = 0; c < cfg.dim_y; ++c)
            Y.values[k * cfg.dim_y + c] = Y.values[(k - 1) * cfg.dim_y + c] + m[c] * dx;
        if (jump_at.count(k)) {
            const double j = rng.uniform(-cfg.jump_span, cfg.jump_span);
            const double djump = xpre * j;
            CadlagPath::Jump jx;
            jx.index = k;
            jx.pre = {xpre};
            X.jumps.push_back(std::move(jx));
            CadlagPath::Jump jy;
            jy.index = k;
            jy.pre.assign(Y.values.begin() + k * cfg.dim_y, Y.values.begin() + (k + 1) * cfg.dim_y);
            draw_multiplier();
            for (int c = 0; c < cfg.dim_y; ++c) Y.values[k * cfg.dim_y + c] += m[c] * djump;
            Y.jumps.push_back(std::move(jy));
            x = xpre + djump;
        } else {
            x = xpre;
        }
        X.values[k] = x;
        A.values[k] = a_acc;
    }

    out.events = PathEvents::from_paths(X, Y);
    const std::size_t E = out.events.count();
    out.xtilde.resize(E);
    out.cond_exp.resize(E);
    // E[Xtilde_N | F_k] = (1 + a dt)^{N-k} Xtilde_k here: X is a martingale
    // and A accrues the predictable increment a Xtilde_k dt.
    const double g = 1.0 + cfg.a * dt;
    for (std::size_t e = 0; e < E; ++e) {
        const int pos = out.events.position[e];
        const double xt = out.events.X(e)[0] + A.values[pos];
        out.xtilde[e] = xt;
        out.cond_exp[e] = xt * std::pow(g, static_cast<double>(steps - static_cast<std::size_t>(pos)));
    }
    out.xtilde_terminal = X.values[steps] + A.values[steps];
    return out;
}

TreeSpace make_random_tree(const RandomTreeConfig& cfg, Rng& rng) {
    const int depth = cfg.min_depth + static_cast<int>(rng.uniform() * (cfg.max_depth - cfg.min_depth + 1));
    std::vector<int> branching(depth);
    std::vector<std::vector<double>> probs;
    long long width = 1;
    for (int k = 0; k < depth; ++k) {
        branching[k] = 2 + static_cast<int>(rng.uniform() * (cfg.max_branching - 1));
        // keep the sweep cheap
        if (width * branching[k] > 4096) branching[k] = 2;
        width *= branching[k];
    }
    int nodes = 1;
    for (int k = 0; k < depth; ++k) {
        for (int i = 0; i < nodes; ++i) {
            std::vector<double> row(branching[k]);
            double sum = 0.0;
            for (auto& p : row) {
                p = cfg.min_prob + rng.uniform();
                sum += p;
            }
            double acc = 0.0;
            for (std::size_t j = 0; j + 1 < row.size(); ++j) {
                row[j] /= sum;
                acc += row[j];
            }
            row.back() = 1.0 - acc;  // exact unit sum
            probs.push_back(std::move(row));
        }
        nodes *= branching[k];
    }
    return TreeSpace::build(depth, branching, probs);
}

TreeProcess make_positive_martingale(const TreeSpace& space, Rng& rng, double x_root) {
    TreeProcess X(space, 1);
    X.value(0, 0)[0] = x_root;
    for (int k = 0; k < space.depth(); ++k)
        for (int i = 0; i < space.level_size(k); ++i) {
            const int b = space.child_begin(k, i), e = space.child_end(k, i);
            double mean = 0.0;
            std::vector<double> g(e - b);
            for (int c = b; c < e; ++c) {
                g[c - b] = 0.3 + 1.4 * rng.uniform();
                mean += space.node(k + 1, c).prob * g[c - b];
            }
            for (int c = b; c < e; ++c)
                X.value(k + 1, c)[0] = X.value(k, i)[0] * g[c - b] / mean;
        }
    return X;
}

TreeProcess make_random_transform(const TreeSpace& space, const TreeProcess& X, int dim_y, Rng& rng) {
    std::vector<std::vector<std::vector<double>>> mult(space.depth() + 1);
    for (int k = 0; k <= space.depth(); ++k) {
        mult[k].resize(space.level_size(k));
        for (int i = 0; i < space.level_size(k); ++i) {
            std::vector<double> m(dim_y);
            double norm = 0.0;
            for (auto& v : m) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            const double r = rng.uniform();
            for (auto& v : m) v = norm > 0.0 ? v * r / norm : 0.0;
            mult[k][i] = std::move(m);
        }
    }
    return martingale_transform_vector(space, X, mult);
}

std::vector<double> make_random_weight(const TreeSpace& space, Rng& rng, double spread) {
    std::vector<double> w(space.leaf_count());
    for (auto& v : w) v = std::exp(rng.uniform(-spread, spread));
    return w;
}

}  // namespace sparsedom
