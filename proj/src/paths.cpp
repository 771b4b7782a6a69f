#include "sparsedom/paths.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sparsedom {

TimeGrid::TimeGrid(double t_max_, double dt_) : t_max(t_max_), dt(dt_) {
    require(dt > 0.0, "TimeGrid: dt must be > 0");
    require(t_max > 0.0, "TimeGrid: t_max must be > 0");
    const double n = t_max / dt;
    steps_ = static_cast<std::size_t>(std::llround(n));
    require(std::abs(n - static_cast<double>(steps_)) <= 1e-9 * (1.0 + n),
            "TimeGrid: t_max/dt must be an integer");
    require(steps_ >= 1 && steps_ <= kMaxSteps,
            "TimeGrid: step count out of budget (1.." + std::to_string(kMaxSteps) + ")");
}

const CadlagPath::Jump* CadlagPath::jump_at(std::size_t k) const {
    auto it = std::lower_bound(jumps.begin(), jumps.end(), k,
                               [](const Jump& j, std::size_t v) { return j.index < v; });
    return (it != jumps.end() && it->index == k) ? &*it : nullptr;
}

void CadlagPath::validate() const {
    require(dim >= 1, "CadlagPath: dim must be >= 1");
    require(values.size() == grid.points() * static_cast<std::size_t>(dim), "CadlagPath: value size mismatch");
    std::size_t prev = 0;
    bool first = true;
    for (const auto& j : jumps) {
        require(j.index >= 1 && j.index <= grid.steps(), "CadlagPath: jump index out of range");
        require(first || j.index > prev, "CadlagPath: jump indices must be strictly increasing");
        require(j.pre.size() == static_cast<std::size_t>(dim), "CadlagPath: jump left-limit dim mismatch");
        prev = j.index;
        first = false;
    }
}

CadlagPath simulate_brownian(const TimeGrid& grid, int dim, double variance_rate, std::uint64_t seed,
                             std::span<const double> x0) {
    require(dim >= 1, "simulate_brownian: dim must be >= 1");
    require(variance_rate > 0.0,
            "simulate_brownian: variance_rate must be > 0 (use constant_path for the degenerate case)");
    require(x0.empty() || static_cast<int>(x0.size()) == dim, "simulate_brownian: x0 dim mismatch");

    CadlagPath p;
    p.grid = grid;
    p.dim = dim;
    p.values.assign(grid.points() * static_cast<std::size_t>(dim), 0.0);
    if (!x0.empty())
        for (int c = 0; c < dim; ++c) p.values[c] = x0[c];

    Rng rng(seed);
    const double sd = std::sqrt(variance_rate * grid.dt);
    for (std::size_t k = 1; k <= grid.steps(); ++k)
        for (int c = 0; c < dim; ++c)
            p.values[k * dim + c] = p.values[(k - 1) * dim + c] + sd * rng.normal();
    return p;
}

CadlagPath constant_path(const TimeGrid& grid, std::span<const double> value) {
    CadlagPath p;
    p.grid = grid;
    p.dim = static_cast<int>(value.size());
    p.values.resize(grid.points() * value.size());
    for (std::size_t k = 0; k < grid.points(); ++k)
        std::copy(value.begin(), value.end(), p.values.begin() + k * value.size());
    return p;
}

BracketPath quadratic_variation(const CadlagPath& path) {
    BracketPath b;
    b.grid = path.grid;
    b.values.resize(path.grid.points());
    b.values[0] = sqnorm(path.value(0));
    for (std::size_t k = 1; k <= path.grid.steps(); ++k) {
        double inc = 0.0;
        if (const auto* j = path.jump_at(k)) {
            for (int c = 0; c < path.dim; ++c) {
                const double dc = j->pre[c] - path.value(k - 1)[c];
                const double dj = path.value(k)[c] - j->pre[c];
                inc += dc * dc + dj * dj;
            }
        } else {
            for (int c = 0; c < path.dim; ++c) {
                const double d = path.value(k)[c] - path.value(k - 1)[c];
                inc += d * d;
            }
        }
        b.values[k] = b.values[k - 1] + inc;
    }
    return b;
}

SubordinationReport check_differential_subordination(const CadlagPath& X, const CadlagPath& Y, double tol) {
    require(X.grid == Y.grid, "check_differential_subordination: grid mismatch");
    SubordinationReport r;
    const BracketPath bx = quadratic_variation(X);
    if (tol < 0.0) tol = 1e-9 * (1.0 + bx.values.back());
    r.tol = tol;

    auto note = [&](double slack, double t) {
        if (slack < -tol) r.ok = false;
        if (slack < r.worst_violation) {
            r.worst_violation = slack;
            r.worst_time = t;
        }
    };

    // |Y_0| <= |X_0| and per-event increment domination; summing these gives
    // the nonnegative nondecreasing bracket difference exactly.
    note(sqnorm(X.value(0)) - sqnorm(Y.value(0)), 0.0);
    for (std::size_t k = 1; k <= X.grid.steps(); ++k) {
        const auto* jx = X.jump_at(k);
        const auto* jy = Y.jump_at(k);
        double cx = 0.0, cy = 0.0, qx = 0.0, qy = 0.0;
        for (int c = 0; c < X.dim; ++c) {
            const double px = jx ? jx->pre[c] : X.value(k)[c];
            const double d = px - X.value(k - 1)[c];
            cx += d * d;
            if (jx) {
                const double dj = X.value(k)[c] - jx->pre[c];
                qx += dj * dj;
            }
        }
        for (int c = 0; c < Y.dim; ++c) {
            const double py = jy ? jy->pre[c] : Y.value(k)[c];
            const double d = py - Y.value(k - 1)[c];
            cy += d * d;
            if (jy) {
                const double dj = Y.value(k)[c] - jy->pre[c];
                qy += dj * dj;
            }
        }
        note(cx - cy, X.grid.time(k));
        if (jx || jy) note(qx - qy, X.grid.time(k));
    }
    return r;
}

double maximal_function(const CadlagPath& path) {
    double m = 0.0;
    for (std::size_t k = 0; k < path.grid.points(); ++k) m = std::max(m, norm2(path.value(k)));
    for (const auto& j : path.jumps) m = std::max(m, norm2(j.pre));
    return m;
}

namespace {

double draw_amplitude(const JumpSpec& spec, Rng& rng) {
    switch (spec.law) {
        case JumpSpec::Law::Gaussian: return spec.param_a * rng.normal();
        case JumpSpec::Law::Uniform: return rng.uniform(spec.param_a, spec.param_b);
        case JumpSpec::Law::Fixed: return spec.param_a;
    }
    return 0.0;
}

/// Poisson-many distinct grid indices in [1, steps]; collisions move to the
/// nearest free neighbor.
std::vector<std::size_t> draw_jump_indices(const TimeGrid& grid, const JumpSpec& spec, Rng& rng,
                                           long& requested, long& relocated) {
    require(spec.rate >= 0.0, "inject_jumps: rate must be >= 0");
    require(spec.rate * grid.t_max <= 1e4, "inject_jumps: expected jump count exceeds 1e4 budget");
    const long n = rng.poisson(spec.rate * grid.t_max);
    requested = n;
    std::set<std::size_t> used;
    for (long i = 0; i < n; ++i) {
        std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(grid.steps()));
        if (k > grid.steps()) k = grid.steps();
        if (used.count(k)) {
            bool placed = false;
            for (std::size_t off = 1; off <= grid.steps() && !placed; ++off) {
                if (k + off <= grid.steps() && !used.count(k + off)) {
                    k += off;
                    placed = true;
                } else if (k > off && !used.count(k - off)) {
                    k -= off;
                    placed = true;
                }
            }
            if (!placed) continue;  // grid saturated
            ++relocated;
        }
        used.insert(k);
    }
    return {used.begin(), used.end()};
}

void apply_jump(CadlagPath& p, std::size_t k, std::span<const double> amp) {
    CadlagPath::Jump j;
    j.index = k;
    j.pre.assign(p.value(k).begin(), p.value(k).end());
    for (std::size_t i = k; i < p.grid.points(); ++i)
        for (int c = 0; c < p.dim; ++c) p.value(i)[c] += amp[c];
    p.jumps.push_back(std::move(j));
}

}  // namespace

JumpResult inject_jumps(const CadlagPath& path, const JumpSpec& spec, std::uint64_t seed) {
    require(path.jumps.empty(), "inject_jumps: path already carries jumps");
    JumpResult out;
    out.path = path;
    Rng rng(seed);
    auto idx = draw_jump_indices(path.grid, spec, rng, out.requested, out.relocated);
    std::vector<double> amp(path.dim);
    for (std::size_t k : idx) {
        for (int c = 0; c < path.dim; ++c) amp[c] = draw_amplitude(spec, rng);
        apply_jump(out.path, k, amp);
    }
    return out;
}

CoupledJumpResult inject_jumps_coupled(const CadlagPath& X, const CadlagPath& Y, const JumpSpec& spec,
                                       std::uint64_t seed) {
    require(X.grid == Y.grid, "inject_jumps_coupled: grid mismatch");
    require(X.jumps.empty() && Y.jumps.empty(), "inject_jumps_coupled: paths already carry jumps");
    require(X.dim == Y.dim, "inject_jumps_coupled: dim mismatch");
    CoupledJumpResult out;
    out.X = X;
    out.Y = Y;
    Rng rng(seed);
    auto idx = draw_jump_indices(X.grid, spec, rng, out.requested, out.relocated);
    std::vector<double> ax(X.dim), ay(X.dim);
    for (std::size_t k : idx) {
        for (int c = 0; c < X.dim; ++c) ax[c] = draw_amplitude(spec, rng);
        for (int c = 0; c < X.dim; ++c) ay[c] = draw_amplitude(spec, rng);
        if (spec.subordination_cap) {
            const double nx = norm2(ax), ny = norm2(ay);
            if (ny > nx) {
                const double scale = ny > 0.0 ? nx / ny : 0.0;
                for (double& v : ay) v *= scale;
            }
        }
        apply_jump(out.X, k, ax);
        apply_jump(out.Y, k, ay);
    }
    return out;
}

CadlagPath transform_path(const CadlagPath& X, std::span<const double> multipliers) {
    require(multipliers.size() == X.grid.points(), "transform_path: need one multiplier per grid point");
    for (double m : multipliers)
        require(std::abs(m) <= 1.0, "transform_path: |multiplier| > 1 breaks differential subordination");

    CadlagPath Y;
    Y.grid = X.grid;
    Y.dim = X.dim;
    Y.values.assign(X.values.size(), 0.0);
    for (int c = 0; c < X.dim; ++c) Y.value(0)[c] = multipliers[0] * X.value(0)[c];
    for (std::size_t k = 1; k <= X.grid.steps(); ++k) {
        const double m = multipliers[k - 1];
        const auto* jx = X.jump_at(k);
        if (jx) {
            CadlagPath::Jump jy;
            jy.index = k;
            jy.pre.resize(X.dim);
            for (int c = 0; c < X.dim; ++c) {
                jy.pre[c] = Y.value(k - 1)[c] + m * (jx->pre[c] - X.value(k - 1)[c]);
                Y.value(k)[c] = jy.pre[c] + m * (X.value(k)[c] - jx->pre[c]);
            }
            Y.jumps.push_back(std::move(jy));
        } else {
            for (int c = 0; c < X.dim; ++c)
                Y.value(k)[c] = Y.value(k - 1)[c] + m * (X.value(k)[c] - X.value(k - 1)[c]);
        }
    }
    return Y;
}

std::vector<double> random_multipliers(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> m(count);
    for (auto& v : m) v = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace sparsedom
