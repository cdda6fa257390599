#pragma once

#include <cstdint>
#include <vector>

#include "kernel.hpp"
#include "sampler.hpp"

namespace jumplab {

// psi(t) = C sqrt(t log log t); defined for t >= e^e.
double rate_function(double t, double C);

struct LilConfig {
    int k_min = 8;
    int k_max = 18;
    std::vector<double> C_grid;
    std::uint64_t n_paths = 2000;
    int observations_per_block = 64;  // log-spaced sup sampling per dyadic block
    double c_small = 0.1;             // threshold constant for the B_k events
    double delta = 0.1;               // sampler cutoff
    int inverse_cdf_resolution = 4096;
    int any_from_k = 10;  // any-exceedance statistic counts blocks k >= this

    void validate() const;
};

struct ExceedanceTable {
    std::vector<int> ks;       // dyadic block indices
    std::vector<double> Cs;    // rate constants
    // p_hat[ki][ci]: fraction of paths with sup_{s in block k} |X_s|/psi(s) >= C
    std::vector<std::vector<double>> p_hat;
    std::vector<std::vector<double>> std_err;
    std::vector<std::vector<double>> bc_partial;  // partial sums over k' <= k
    std::vector<double> b_freq;                   // per k: frequency of B_k
    std::uint64_t n_paths = 0;

    // fraction of paths exceeding in at least one block with k >= cfg.any_from_k
    std::vector<double> any_exceedance_from_k;  // per C
};

// Dyadic-block experiment over [2^{k_min-1}, 2^{k_max}] (B_k events read one
// block further): per-block sup statistics on nested log-spaced grids,
// Borel-Cantelli partial sums, and B_k frequencies.
ExceedanceTable run_lil_experiment(const JumpKernel& k, const LilConfig& cfg, std::uint64_t seed,
                                   int threads);

struct ExitTimeTable {
    std::vector<double> r_grid, t_grid;
    // row-major [ri][ti]
    std::vector<double> lhs, lhs_se;  // P(tau_{B(0,r)} <= t), grid-sampled
    std::vector<double> rhs, rhs_se;  // 2 max_{s in {t,1.5t,2t}} P(|X_s| >= r/2)
    std::vector<double> margin;       // rhs - lhs

    double at(const std::vector<double>& m, std::size_t ri, std::size_t ti) const {
        return m[ri * t_grid.size() + ti];
    }
};

// Monte Carlo check of the exit-time inequality; the left side uses the first
// exit over a discrete grid (an underestimate, so the check is conservative).
ExitTimeTable exit_time_bound_check(const JumpKernel& k, const std::vector<double>& r_grid,
                                    const std::vector<double>& t_grid, std::uint64_t n_paths,
                                    std::uint64_t seed, int threads, double delta = 0.1);

// Per-k frequency of B_k = {|X_{2^{k+1}} - X_{2^k}| >= c_small psi(2^{k-1})}.
std::vector<double> block_event_frequencies(const JumpKernel& k, double c_small, int k_min,
                                            int k_max, std::uint64_t n_paths, std::uint64_t seed,
                                            int threads, double delta = 0.1);

}  // namespace jumplab
