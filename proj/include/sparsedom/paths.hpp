#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparsedom/common.hpp"
#include "sparsedom/rng.hpp"

namespace sparsedom {

/// Uniform grid 0, dt, 2dt, ..., t_max.
struct TimeGrid {
    double t_max = 1.0;
    double dt = 1e-3;

    TimeGrid() = default;
    TimeGrid(double t_max_, double dt_);

    std::size_t steps() const { return steps_; }
    std::size_t points() const { return steps_ + 1; }
    double time(std::size_t k) const { return static_cast<double>(k) * dt; }

    bool operator==(const TimeGrid& o) const { return t_max == o.t_max && dt == o.dt; }

    static constexpr std::size_t kMaxSteps = 10'000'000;

private:
    std::size_t steps_ = 0;
};

/// Discretized cadlag path: per-grid-point (post-jump) values plus the marked
/// jumps with their left limits. Between grid points the path is the recorded
/// piecewise value.
struct CadlagPath {
    struct Jump {
        std::size_t index;        // grid index where the jump lands
        std::vector<double> pre;  // left limit just before the jump
    };

    TimeGrid grid;
    int dim = 1;
    std::vector<double> values;  // points() x dim, row-major
    std::vector<Jump> jumps;     // strictly increasing in index

    std::span<double> value(std::size_t k) {
        return {values.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    std::span<const double> value(std::size_t k) const {
        return {values.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    const Jump* jump_at(std::size_t k) const;

    void validate() const;
};

/// Nondecreasing scalar path [X,X]_t on the same grid.
struct BracketPath {
    TimeGrid grid;
    std::vector<double> values;
};

struct JumpSpec {
    enum class Law { Gaussian, Uniform, Fixed };

    double rate = 0.0;  // Poisson intensity per unit time
    Law law = Law::Gaussian;
    double param_a = 1.0;  // sigma | lo | amplitude
    double param_b = 0.0;  // unused | hi | unused
    bool subordination_cap = true;
};

/// Dim-d Brownian motion from x0 with E[increment^2] = variance_rate * dt per
/// coordinate. Bit-reproducible from (seed, grid).
CadlagPath simulate_brownian(const TimeGrid& grid, int dim, double variance_rate, std::uint64_t seed,
                             std::span<const double> x0 = {});

/// Deterministic constant path (the degenerate zero-noise case).
CadlagPath constant_path(const TimeGrid& grid, std::span<const double> value);

/// [X,X]_t with [X,X]_0 = |X_0|^2; jump increments enter as |jump|^2 and the
/// continuous part of a jump step as the squared left-limit increment.
BracketPath quadratic_variation(const CadlagPath& path);

struct SubordinationReport {
    bool ok = true;
    double worst_violation = 0.0;  // most negative slack seen
    double worst_time = 0.0;
    double tol = 0.0;
};

/// Checks that [X,X] - [Y,Y] is nonnegative with nonnegative increments at
/// every grid point and every jump. tol < 0 selects 1e-9 * (1 + final [X,X]).
SubordinationReport check_differential_subordination(const CadlagPath& X, const CadlagPath& Y,
                                                     double tol = -1.0);

/// sup_t |X_t| over grid values and stored left limits.
double maximal_function(const CadlagPath& path);

struct JumpResult {
    CadlagPath path;
    long requested = 0;
    long relocated = 0;  // jumps moved to a neighboring free grid index
};

/// Compound-Poisson jumps on grid points, amplitudes iid per coordinate.
JumpResult inject_jumps(const CadlagPath& path, const JumpSpec& spec, std::uint64_t seed);

/// Coupled jumps on an (X, Y) pair at shared times. Y amplitudes are clipped
/// multiplicatively to |Y jump| <= |X jump| when spec.subordination_cap holds.
struct CoupledJumpResult {
    CadlagPath X, Y;
    long requested = 0;
    long relocated = 0;
};
CoupledJumpResult inject_jumps_coupled(const CadlagPath& X, const CadlagPath& Y, const JumpSpec& spec,
                                       std::uint64_t seed);

/// Martingale transform on the grid: the increment arriving at k (continuous
/// or jump) is scaled by the predictable multiplier m[k-1], and Y0 = m[0] X0.
/// Requires |m| <= 1 everywhere and multipliers.size() == points().
CadlagPath transform_path(const CadlagPath& X, std::span<const double> multipliers);

/// `count` multipliers drawn uniform in [-1, 1].
std::vector<double> random_multipliers(std::size_t count, std::uint64_t seed);

}  // namespace sparsedom
