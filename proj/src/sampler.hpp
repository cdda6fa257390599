#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "kernel.hpp"
#include "rng.hpp"

namespace jumplab {

struct PathSample {
    std::vector<double> times;      // strictly increasing, starts at 0
    std::vector<double> positions;  // times.size() * d, row-major
    std::uint64_t seed_id = 0;
    std::uint64_t kernel_hash = 0;
};

struct SamplerConfig {
    double delta = 0.1;           // small-jump cutoff
    std::vector<double> t_grid;   // observation times, increasing, positive
    std::uint64_t n_paths = 0;
    std::uint64_t master_seed = 1;
    bool modulation_enabled = false;
    int inverse_cdf_resolution = 4096;

    void validate() const;
};

// Sampler for the normalized radial tail density ~ r^{-3}/phi(r) on [lo, hi).
// Closed-form inversion where the profile admits one, otherwise a log-spaced
// monotone-cubic inverse-CDF table with exact bisection past its last node.
class RadialTailSampler {
public:
    RadialTailSampler(const JumpKernel& k, double lo, double hi, int table_nodes);

    double sample(double u) const;  // u in (0,1), strictly increasing in u
    double mass() const { return mass_; }  // int_lo^hi r^{-3}/phi dr

private:
    double invert_closed(double u) const;
    double invert_bisect(double u) const;

    const TailProfile profile_;
    double lo_, hi_;
    double q_ = 0.0;           // power exponent for closed-form families
    bool closed_form_ = false;
    double mass_ = 0.0;        // T(lo) - T(hi)
    double tail_at_hi_ = 0.0;  // T(hi)
    // table: u_ strictly increasing in (0,1), r_ the matching radii
    std::vector<double> u_, r_, slope_;
};

// One-shot convenience for the [1,inf) tail; builds a fresh sampler, so use
// RadialTailSampler directly in loops.
double sample_big_jump_radius(const JumpKernel& k, double u);

// Single-time convenience draw: the position of path path_index at time t,
// identical in law and determinism contract to sample_path with t_grid = {t}.
std::vector<double> sample_increment(const JumpKernel& k, const SamplerConfig& cfg, double t,
                                     std::uint64_t path_index);

// Simulates the jump process as Brownian surrogate (|z| < delta) + mid-jump
// compound Poisson ([delta,1)) + big-jump compound Poisson ([1,inf)).
// Every draw for path i comes from a counter stream keyed by
// (master_seed, stream_tag, i), so results are independent of scheduling.
class PathGenerator {
public:
    PathGenerator(const JumpKernel& k, const SamplerConfig& cfg);

    // Restrict the big-jump component to radii < cap (the K-truncated process).
    void set_cap(double cap);
    // Condition on at least one jump with radius >= K before the final grid
    // time (zero-truncated count, times uniform); unmodulated kernels only.
    void set_forced_tail(double K);
    void set_stream_tag(std::uint64_t tag) { stream_tag_ = tag; }

    const std::vector<double>& times() const { return times_; }
    const LevyRates& rates() const { return rates_; }
    double sigma_per_coord() const { return sigma2_per_coord_; }

    PathSample sample_path(std::uint64_t path_index) const;
    // positions only, written to out[times().size() * d]
    void sample_positions(std::uint64_t path_index, double* out) const;

private:
    void draw_direction(CounterRng& rng, double* dir) const;
    double mid_radius(double u) const;

    JumpKernel kernel_;
    SamplerConfig cfg_;
    LevyRates rates_;
    std::vector<double> times_;  // with leading 0
    double sigma2_per_coord_ = 0.0;
    double rate_scale_ = 1.0;  // m_hi majorant scaling under modulation

    double mid_a_ = 0.0, mid_b_ = 0.0, mid_inv_exp_ = 0.0;
    bool mid_is_sqrt_ = false;  // alpha == 1/2 fast path

    std::vector<RadialTailSampler> big_;  // one or two radial pieces
    std::vector<double> big_rate_;
    double forced_K_ = 0.0;
    double forced_rate_ = 0.0;
    std::uint64_t stream_tag_ = 0;
};

}  // namespace jumplab
