#pragma once

#include <cstdint>

#include "sparsedom/paths.hpp"
#include "sparsedom/sparse.hpp"
#include "sparsedom/treespace.hpp"
#include "sparsedom/zprocess.hpp"

namespace sparsedom {

/// Synthetic grid batches satisfying the standing hypotheses: X a positive
/// multiplicative martingale (fair-coin steps, optional independent mean-zero
/// multiplicative jumps), A the predictable Riemann sum of a Xtilde dt,
/// Y a bounded-multiplier transform of X, Z evolved from 0 under V = v_scale I.
struct SyntheticBatchConfig {
    TimeGrid grid{1.0, 1e-3};
    int dim_y = 1;
    double x0 = 1.0;
    double step_sigma = 1.0;  // X_{k+1} = X_k (1 +- step_sigma sqrt(dt))
    double a = 0.0;
    double v_scale = -1.0;  // V = v_scale I, v_scale <= 0
    bool with_jumps = false;
    double jump_rate = 3.0;
    double jump_span = 0.4;  // multiplicative jump factor uniform in [-span, span]
    std::uint64_t seed = 1;
};

struct SyntheticPath {
    SubmartingalePath sub;  // X >= 0 and A
    CadlagPath Y;
    PathEvents events;               // x = X (scalar), y = Y
    std::vector<double> xtilde;      // per event
    std::vector<double> cond_exp;    // per event: E[Xtilde closure | F] (exact for this family)
    double xtilde_terminal = 0.0;
};

SyntheticPath make_synthetic_path(const SyntheticBatchConfig& cfg, long path_index);

/// Randomized positive trees for the exact sweeps.
struct RandomTreeConfig {
    int min_depth = 3, max_depth = 6;
    int max_branching = 3;
    double min_prob = 0.1;
    int dim_y = 1;  // transform target dimension
};

TreeSpace make_random_tree(const RandomTreeConfig& cfg, Rng& rng);

/// Positive exact martingale: multiplicative child factors renormalized to
/// conditional mean one.
TreeProcess make_positive_martingale(const TreeSpace& space, Rng& rng, double x_root = 1.0);

/// Bounded multiplier transform of a scalar martingale into dim_y dimensions
/// (per-node multiplier vectors inside the unit ball).
TreeProcess make_random_transform(const TreeSpace& space, const TreeProcess& X, int dim_y, Rng& rng);

/// Positive random terminal weight values exp(U[-spread, spread]).
std::vector<double> make_random_weight(const TreeSpace& space, Rng& rng, double spread = 2.0);

}  // namespace sparsedom
