#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsedom/paths.hpp"
#include "sparsedom/zprocess.hpp"

namespace sparsedom {

/// The three explicit example geometries. The manifold component B^M solves
/// dB^M = sqrt(2) dW - grad(phi) dt; U_t = Id throughout.
struct Geometry {
    enum class Kind { EuclideanTorus, Gauss, Bessel };

    Kind kind = Kind::EuclideanTorus;
    int n = 1;           // manifold dimension (Bessel: 1)
    double alpha = 0.0;  // Bessel index

    static Geometry torus(int n);
    static Geometry gauss(int n);
    static Geometry bessel(double alpha);

    /// b(x) = -grad(phi) per coordinate: 0 | -x | 2 alpha / x.
    double drift(double x) const;
    /// Z-ODE curvature source: V = 0 | -I | -2 alpha / x^2 (with a = 0).
    DriftSpec z_drift(int dim) const;
    DriftSpec z_drift_from_path(std::vector<double> states, int dim) const;  // Bessel, per-step
    std::string name() const;
};

/// Closed-form Poisson extension Q f(x, y) = e^{-y sqrt(-Laplacian_phi)} f(x)
/// over the geometry's diagonalizing family: finite Fourier sums on the torus
/// (mode k scales by e^{-y |k|}), finite Hermite expansions in Gauss space
/// (He_k scales by e^{-y sqrt(k)}). Values and gradients are exact per mode.
class PoissonField {
public:
    struct TorusMode {
        std::vector<std::pair<int, int>> freq;  // sparse (coordinate, integer frequency)
        double amp = 1.0;
        double phase = 0.0;  // f += amp cos(k . x + phase)
        double knorm = 1.0;
    };
    struct GaussMode {
        int coord = 0;
        int order = 1;  // probabilists' Hermite index, >= 1 (mean zero)
        double amp = 1.0;
    };

    static PoissonField torus_mode(int n, int coord, int freq, double amp = 1.0, double phase = 0.0);
    static PoissonField gauss_hermite(int n, int coord, int order, double amp = 1.0);
    /// "cos", "sin", "cos2", "he1".."he6", and +-combinations like "cos+sin2".
    static PoissonField parse(const Geometry& geom, const std::string& spec);

    PoissonField& add_torus_mode(int coord, int freq, double amp, double phase = 0.0);
    PoissonField& add_gauss_mode(int coord, int order, double amp);

    Geometry::Kind kind() const { return kind_; }
    int dim() const { return n_; }
    bool empty() const { return tmodes_.empty() && gmodes_.empty(); }
    const std::vector<int>& active_coords() const { return active_; }
    const std::vector<TorusMode>& torus_modes() const { return tmodes_; }
    const std::vector<GaussMode>& gauss_modes() const { return gmodes_; }

    double value(std::span<const double> x, double y) const;
    /// Fills the horizontal gradient (all n coordinates) and returns the value;
    /// grad_y optionally receives the vertical derivative.
    double value_gradient(std::span<const double> x, double y, std::span<double> grad_x,
                          double* grad_y = nullptr) const;

private:
    PoissonField(Geometry::Kind kind, int n) : kind_(kind), n_(n) {}
    void note_active(int coord);

    Geometry::Kind kind_;
    int n_;
    std::vector<TorusMode> tmodes_;
    std::vector<GaussMode> gmodes_;
    std::vector<int> active_;
};

struct PoissonPoint {
    double value = 0.0;
    std::vector<double> grad_x;
    double grad_y = 0.0;
};

/// Checked single-point evaluation (rejects unsupported (geometry, f, a)).
PoissonPoint poisson_extension(const Geometry& geom, const PoissonField& f, std::span<const double> x,
                               double y, double a = 0.0);

/// Background radiation pair: manifold diffusion plus the independent vertical
/// Brownian motion (variance rate 2) started at y0 and absorbed at 0.
struct BackgroundState {
    CadlagPath bm;          // manifold component
    CadlagPath b;           // vertical component; values beyond tau are zeroed
    long tau_index = -1;    // first grid index with B <= 0 (bridge hits land on it)
    bool censored = false;  // reached t_max without hitting
};

BackgroundState simulate_background(const Geometry& geom, double y0, const TimeGrid& grid,
                                    std::uint64_t seed, bool bridge_correction = true);

struct RieszRunConfig {
    Geometry geom;
    PoissonField field = PoissonField::torus_mode(1, 0, 1);
    double y0 = 8.0;
    long paths = 100000;
    int bins = 64;
    double dt = 1e-3;
    double t_max = -1.0;  // auto: sized so the censored fraction stays below 1%
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency
    bool bridge_correction = true;
    /// The vertical excursions above y0 + ceiling_offset are advanced by exact
    /// first-passage sampling; the Poisson gradient up there is below
    /// e^{-(y0+offset)} and is not accumulated.
    double ceiling_offset = 0.0;
    double gauss_bin_halfwidth = 4.0;  // Gauss bins cover [-h, h], ends clamped
};

/// Binned conditional-expectation estimate of -2 E[Z_tau | B^M_tau in bin]
/// over the active coordinate, with counts, standard errors and diagnostics.
struct RieszEstimate {
    int bins = 0;
    int n = 1;
    std::vector<double> bin_center;
    std::vector<double> bin_weight;  // invariant-measure mass of each bin
    std::vector<long> count;
    std::vector<double> mean;     // bins x n
    std::vector<double> stderr_;  // bins x n
    std::vector<std::uint8_t> low_confidence;  // fewer than 100 hits
    long paths = 0;
    long censored = 0;
    double censored_fraction = 0.0;
    bool usable = false;  // censored fraction <= 1%
    double t_max = 0.0;

    /// Relative L2(bin_weight) distance of the component-`c` means from a
    /// reference profile evaluated per bin.
    double relative_l2_error(std::span<const double> reference, int component = 0) const;
};

RieszEstimate gv_li_estimator(const RieszRunConfig& config);

/// Riesz vector via the Fourier symbol: component j multiplies mode xi by
/// i xi_j / |xi| in the e^{+i xi x} synthesis (so cos maps to -sin), zero at
/// xi = 0 and at the unpaired Nyquist frequency. Input: size^n samples on the
/// uniform periodic grid, row-major; mean removed (and returned) if nonzero.
struct FftRieszResult {
    std::vector<std::vector<double>> components;  // n fields of size^n values
    double removed_mean = 0.0;
};
FftRieszResult fft_riesz_oracle(std::span<const double> f_samples, int dim, int size);

struct DimSweepRow {
    int n = 0;
    double ratio = 0.0;   // ||R f||_2 / ||f||_2 over bins
    double se = 0.0;      // delta-method standard error of the ratio
    double weighted_ratio = 0.0;  // qualitative power-weight variant
    double low_confidence_fraction = 0.0;
    bool flagged = false;
    long paths = 0;
};

/// Fixed single-mode profile cos(x_1) lifted across dimensions; the exact
/// ratio is dimension-free, so the rows must agree within pooled MC error.
std::vector<DimSweepRow> dimension_free_sweep(std::span<const int> dims, long paths_per_dim, double p,
                                              std::uint64_t seed, int bins = 64, double dt = 1e-3,
                                              int threads = 0);

/// chi-squared statistic of binned hit counts against expected masses.
double chi_squared(std::span<const long> counts, std::span<const double> expected_mass, long total);

/// Mean of a standard normal conditioned to a bin [a, b] (exact; feeds the
/// Gauss-space reference profile).
double truncated_normal_mean(double a, double b);
/// Standard normal measure of [a, b].
double normal_mass(double a, double b);

}  // namespace sparsedom
