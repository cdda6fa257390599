#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kernel.hpp"
#include "sampler.hpp"

namespace jumplab {

enum class Regime { on_diagonal, gaussian, far };
const char* regime_name(Regime r);

// Three-way (t,r) split: OnDiagonal for t >= r^2, Gaussian down to
// theta0 r^2 / max(log Phi(r), 1), Far below. The clamp keeps the boundary
// defined near r ~ 1 where Phi(r) <= e.
Regime classify_regime(double t, double r, const JumpKernel& k, double theta0);

struct DensityEstimate {
    double t = 0.0;
    std::vector<double> shell_edges;        // size m+1, increasing
    std::vector<double> p_hat;              // m
    std::vector<double> std_err;            // m
    std::vector<std::uint64_t> counts;      // m, combined raw counts
    std::vector<bool> low_count;            // flagged (count < 5), never dropped
    std::uint64_t n_samples = 0;
    double on_diagonal = 0.0;               // small-ball estimate of p(t,0,0)
    double on_diagonal_stderr = 0.0;
    double ball_radius = 0.0;               // h = h_rel sqrt(t)
    double total_mass = 0.0;                // sum p_hat * shell volume
    double mass_stderr = 0.0;

    double shell_mid(std::size_t i) const {  // geometric midpoint
        const double lo = std::max(shell_edges[i], 1e-12);
        return std::sqrt(lo * shell_edges[i + 1]);
    }
};

// Shell histogram of |X_t| with binomial standard errors. positions is
// n x d row-major; callers should supply n >= 1000 for usable errors.
DensityEstimate estimate_radial_density(const double* positions, std::uint64_t n, int d, double t,
                                        const std::vector<double>& shell_edges,
                                        double h_rel = 0.25);

// Log-spaced shell edges with a leading [0, r_min) shell.
std::vector<double> make_shell_edges(double r_min, double r_max, int per_decade);

// Monte Carlo marginals at cfg.t_grid: one DensityEstimate per observation
// time, counting over cfg.n_paths paths.
std::vector<DensityEstimate> estimate_density_mc(const JumpKernel& k, const SamplerConfig& cfg,
                                                 const std::vector<double>& shell_edges,
                                                 double h_rel, int threads);

// Same marginals, stratified by the number of jumps with radius >= split_K:
// one capped run covers the {no tail jump} stratum at every t, one forced-tail
// run per t covers the rest, and the mixture is exact:
//   p = (1-q(t)) p_cap + q(t) p_forced,   q(t) = 1 - exp(-t tail_mass(split_K)).
// Far shells get usable counts at desk-scale path budgets this way.
std::vector<DensityEstimate> estimate_density_stratified(const JumpKernel& k,
                                                         const SamplerConfig& cfg,
                                                         const std::vector<double>& shell_edges,
                                                         double h_rel, double split_K,
                                                         std::uint64_t n_tail_paths, int threads);

// E|X_t|^2 at each grid time; per-path terms are stored and reduced in path
// order so the result is independent of the thread count.
std::vector<double> mean_square_displacement(const JumpKernel& k, const SamplerConfig& cfg,
                                             int threads);

// |X_t| samples per grid time (memory: n_paths per time); for KS-style tests.
std::vector<std::vector<double>> sample_radii(const JumpKernel& k, const SamplerConfig& cfg,
                                              int threads);
// Signed positions for d=1 kernels, one vector per grid time.
std::vector<std::vector<double>> sample_positions_1d(const JumpKernel& k, const SamplerConfig& cfg,
                                                     int threads);

struct FitConstants {
    double c1 = 0.0;           // on-diagonal level, slope pinned at -d/2
    double ondiag_slope = 0.0; // free-fit slope of log p(t,0,0) vs log t
    double c2 = 0.0;           // Gaussian exponent rate
    double gauss_level = 0.0;  // Gaussian-regime level (intercept)
    double gauss_r2 = 0.0;
    double theta0 = 0.05;
    double t0 = 32.0;
    double far_coeff = 0.0;    // geometric mean of p r^{d+2+eps}/t (power-law kernels)
    double margin = 3.0;       // envelope level margin
    double c2_spread = 1.5;    // envelope exponent margin
    double kappa_far = 8.0;    // Far-regime U constant (8(d+2+eps)/eps for power laws)
    int n_ondiag = 0, n_gauss = 0, n_far = 0;

    std::string to_json(std::uint64_t digest) const;
};

// Least-squares constants from estimated densities: c1 from the on-diagonal
// decay, (c2, level, R^2) from the Gaussian-regime regression, theta0 as the
// largest candidate in {0.5,0.2,0.1,0.05} keeping R^2 >= 0.9.
FitConstants fit_constants(const std::vector<DensityEstimate>& ests, const JumpKernel& k);

struct RegimeBound {
    double t = 0.0, r = 0.0;
    Regime regime = Regime::on_diagonal;
    double upper = 0.0;
    std::optional<double> lower;  // absent in the Far regime for non-power-law profiles
    double far_U = 0.0;           // the U(t,r,phi,Phi,kappa) value where applicable
};

// Regime-wise envelope curves with the fitted constants and margins applied.
std::vector<RegimeBound> bound_curves(const JumpKernel& k, double t,
                                      const std::vector<double>& r_grid,
                                      const FitConstants& constants);

}  // namespace jumplab
