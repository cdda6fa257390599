#include "sampler.hpp"

#include <algorithm>
#include <cmath>

namespace jumplab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void SamplerConfig::validate() const {
    require(delta > 0.0 && delta < 1.0, Err::config, "sampler delta must lie in (0,1)");
    require(inverse_cdf_resolution >= 1024, Err::config,
            "inverse_cdf_resolution must be at least 1024");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        require(t_grid[i] >= 0.0, Err::config, "observation times must be nonnegative");
        if (i) require(t_grid[i] > t_grid[i - 1], Err::config, "t_grid must be strictly increasing");
    }
}

RadialTailSampler::RadialTailSampler(const JumpKernel& k, double lo, double hi, int table_nodes)
    : profile_(k.profile), lo_(lo), hi_(hi) {
    require(lo_ >= 1.0, Err::config, "radial tail sampler starts at lo >= 1");
    switch (profile_.family) {
        case ProfileFamily::power_law:
            closed_form_ = true;
            q_ = 2.0 + profile_.param;
            break;
        case ProfileFamily::constant:
            closed_form_ = true;
            q_ = 2.0;
            break;
        case ProfileFamily::truncated:
            closed_form_ = true;
            q_ = 2.0;
            hi_ = std::min(hi_, profile_.r_max);
            break;
        default:
            break;
    }
    const double t_lo = radial_tail_integral(profile_, lo_);
    tail_at_hi_ = std::isinf(hi_) ? 0.0 : radial_tail_integral(profile_, hi_);
    mass_ = t_lo - tail_at_hi_;
    require(mass_ > 0.0, Err::config, "radial tail piece has zero mass");
    if (closed_form_) return;

    // Quantile 1 - 1e-6 of the piece locates the last table node.
    const double target = tail_at_hi_ + 1e-6 * mass_;
    double b = std::isinf(hi_) ? 2.0 * lo_ : hi_;
    if (std::isinf(hi_))
        while (radial_tail_integral(profile_, b) > target) b *= 2.0;
    double a = lo_;
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (radial_tail_integral(profile_, m) > target)
            a = m;
        else
            b = m;
    }
    const double r_top = b;

    const int n = std::max(table_nodes, 16);
    const double lr0 = std::log(lo_), lr1 = std::log(r_top);
    for (int i = 0; i < n; ++i) {
        const double r = std::exp(lr0 + (lr1 - lr0) * double(i) / double(n - 1));
        const double u = (t_lo - radial_tail_integral(profile_, r)) / mass_;
        if (!u_.empty() && !(u > u_.back())) continue;
        u_.push_back(u);
        r_.push_back(r);
    }
    u_.front() = 0.0;
    r_.front() = lo_;

    // Fritsch-Carlson slopes keep the interpolant monotone.
    const std::size_t m = u_.size();
    std::vector<double> sec(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) sec[i] = (r_[i + 1] - r_[i]) / (u_[i + 1] - u_[i]);
    slope_.assign(m, 0.0);
    slope_[0] = sec[0];
    slope_[m - 1] = sec[m - 2];
    for (std::size_t i = 1; i + 1 < m; ++i) slope_[i] = 0.5 * (sec[i - 1] + sec[i]);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        if (sec[i] == 0.0) {
            slope_[i] = slope_[i + 1] = 0.0;
            continue;
        }
        const double a1 = slope_[i] / sec[i];
        const double b1 = slope_[i + 1] / sec[i];
        const double s = a1 * a1 + b1 * b1;
        if (s > 9.0) {
            const double tau = 3.0 / std::sqrt(s);
            slope_[i] = tau * a1 * sec[i];
            slope_[i + 1] = tau * b1 * sec[i];
        }
    }
}

double RadialTailSampler::invert_closed(double u) const {
    // F(r) = (T(lo) - T(r)) / mass with T(r) = r^{-q}/q.
    const double t_lo = std::pow(lo_, -q_) / q_;
    const double t_r = t_lo - u * mass_;
    return std::pow(q_ * t_r, -1.0 / q_);
}

double RadialTailSampler::invert_bisect(double u) const {
    const double t_lo = radial_tail_integral(profile_, lo_);
    const double target = t_lo - u * mass_;
    double a = r_.empty() ? lo_ : r_.back();
    double b = std::isinf(hi_) ? 2.0 * a : hi_;
    if (std::isinf(hi_))
        while (radial_tail_integral(profile_, b) > target) b *= 2.0;
    for (int it = 0; it < 100; ++it) {
        const double m = 0.5 * (a + b);
        if (radial_tail_integral(profile_, m) > target)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

double RadialTailSampler::sample(double u) const {
    require(u > 0.0 && u < 1.0, Err::domain, "radius sampler needs u in (0,1)");
    if (closed_form_) return invert_closed(u);
    if (u >= u_.back()) return invert_bisect(u);
    // binary search for the bracketing table cell
    std::size_t lo = 0, hi = u_.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (u_[mid] <= u)
            lo = mid;
        else
            hi = mid;
    }
    const double h = u_[hi] - u_[lo];
    const double t = (u - u_[lo]) / h;
    const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    const double h10 = t * (1.0 - t) * (1.0 - t);
    const double h01 = t * t * (3.0 - 2.0 * t);
    const double h11 = t * t * (t - 1.0);
    return h00 * r_[lo] + h10 * h * slope_[lo] + h01 * r_[hi] + h11 * h * slope_[hi];
}

double sample_big_jump_radius(const JumpKernel& k, double u) {
    require(k.c_tail > 0.0, Err::config, "big-jump sampler needs c_tail > 0");
    RadialTailSampler s(k, 1.0, kInf, 4096);
    return s.sample(u);
}

std::vector<double> sample_increment(const JumpKernel& k, const SamplerConfig& cfg, double t,
                                     std::uint64_t path_index) {
    require(t >= 0.0, Err::domain, "sample_increment needs t >= 0");
    SamplerConfig one = cfg;
    one.t_grid = t > 0.0 ? std::vector<double>{t} : std::vector<double>{};
    PathGenerator gen(k, one);
    PathSample p = gen.sample_path(path_index);
    const std::size_t last = p.times.size() - 1;
    return std::vector<double>(p.positions.begin() + std::ptrdiff_t(last * std::size_t(k.d)),
                               p.positions.end());
}

PathGenerator::PathGenerator(const JumpKernel& k, const SamplerConfig& cfg)
    : kernel_(k), cfg_(cfg) {
    kernel_.validate();
    cfg_.validate();
    rates_ = levy_rates(kernel_, cfg_.delta);
    sigma2_per_coord_ = rates_.sigma2_small / double(kernel_.d);
    rate_scale_ = cfg_.modulation_enabled && kernel_.modulation.enabled ? kernel_.modulation.hi : 1.0;

    times_.clear();
    if (cfg_.t_grid.empty() || cfg_.t_grid.front() > 0.0) times_.push_back(0.0);
    times_.insert(times_.end(), cfg_.t_grid.begin(), cfg_.t_grid.end());

    mid_a_ = std::pow(cfg_.delta, -kernel_.alpha);
    mid_b_ = mid_a_ - 1.0;
    mid_inv_exp_ = -1.0 / kernel_.alpha;
    mid_is_sqrt_ = kernel_.alpha == 0.5;

    if (kernel_.c_tail > 0.0 && rates_.lambda_big > 0.0) {
        big_.emplace_back(kernel_, 1.0, kInf, cfg_.inverse_cdf_resolution);
        big_rate_.push_back(kernel_.omega() * kernel_.c_tail * big_.back().mass());
    }
}

void PathGenerator::set_cap(double cap) {
    require(cap > 1.0, Err::config, "cap must exceed 1");
    big_.clear();
    big_rate_.clear();
    forced_K_ = 0.0;
    forced_rate_ = 0.0;
    if (kernel_.c_tail <= 0.0) return;
    const double m = radial_tail_integral(kernel_.profile, 1.0) -
                     radial_tail_integral(kernel_.profile, cap);
    if (m <= 0.0) return;
    big_.emplace_back(kernel_, 1.0, cap, cfg_.inverse_cdf_resolution);
    big_rate_.push_back(kernel_.omega() * kernel_.c_tail * big_.back().mass());
}

void PathGenerator::set_forced_tail(double K) {
    require(K > 1.0, Err::config, "forced-tail split must exceed 1");
    require(!cfg_.modulation_enabled, Err::config,
            "forced-tail stratification requires an unmodulated kernel");
    require(kernel_.c_tail > 0.0, Err::config, "forced tail needs c_tail > 0");
    big_.clear();
    big_rate_.clear();
    const double m_lo = radial_tail_integral(kernel_.profile, 1.0) -
                        radial_tail_integral(kernel_.profile, K);
    if (m_lo > 0.0) {
        big_.emplace_back(kernel_, 1.0, K, cfg_.inverse_cdf_resolution);
        big_rate_.push_back(kernel_.omega() * kernel_.c_tail * big_.back().mass());
    }
    const double m_hi = radial_tail_integral(kernel_.profile, K);
    require(m_hi > 0.0, Err::config, "forced-tail split is past the jump support");
    big_.emplace_back(kernel_, K, kInf, cfg_.inverse_cdf_resolution);
    big_rate_.push_back(0.0);  // forced piece handled separately
    forced_K_ = K;
    forced_rate_ = kernel_.omega() * kernel_.c_tail * m_hi;
}

void PathGenerator::draw_direction(CounterRng& rng, double* dir) const {
    const int d = kernel_.d;
    if (d == 1) {
        dir[0] = rng.next_unit() < 0.5 ? -1.0 : 1.0;
        return;
    }
    if (d == 2) {
        const double ang = 2.0 * M_PI * rng.next_unit();
        dir[0] = std::cos(ang);
        dir[1] = std::sin(ang);
        return;
    }
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (int c = 0; c < d; ++c) {
            dir[c] = rng.next_normal();
            norm2 += dir[c] * dir[c];
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (int c = 0; c < d; ++c) dir[c] *= inv;
}

double PathGenerator::mid_radius(double u) const {
    const double y = mid_a_ - u * mid_b_;
    if (mid_is_sqrt_) return 1.0 / (y * y);
    return std::pow(y, mid_inv_exp_);
}

PathSample PathGenerator::sample_path(std::uint64_t path_index) const {
    PathSample p;
    p.times = times_;
    p.positions.resize(times_.size() * std::size_t(kernel_.d));
    p.seed_id = path_index;
    p.kernel_hash = kernel_.hash();
    sample_positions(path_index, p.positions.data());
    return p;
}

void PathGenerator::sample_positions(std::uint64_t path_index, double* out) const {
    if (cfg_.n_paths) require(path_index < cfg_.n_paths, Err::domain, "path index out of range");
    const int d = kernel_.d;
    CounterRng rng(cfg_.master_seed, path_index, stream_tag_);

    std::vector<double> x(d, 0.0);
    std::vector<double> dir(d, 0.0);
    std::size_t row = 0;
    if (!times_.empty() && times_[0] == 0.0) {
        std::fill(out, out + d, 0.0);
        ++row;
    }

    const bool modulated = cfg_.modulation_enabled && kernel_.modulation.enabled;
    const double t_final = times_.back();

    // Forced tail jumps live on [0, t_final]; count first, then one (time,
    // radius-u, direction) block per jump, in that order.
    struct TailJump {
        double time;
        std::vector<double> step;
    };
    std::vector<TailJump> forced;
    if (forced_K_ > 0.0 && t_final > 0.0) {
        const std::uint64_t n = rng.next_poisson_positive(forced_rate_ * t_final);
        const RadialTailSampler& tail = big_.back();
        forced.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            TailJump tj;
            tj.time = rng.next_unit() * t_final;
            const double r = tail.sample(rng.next_unit());
            tj.step.resize(d);
            draw_direction(rng, dir.data());
            for (int c = 0; c < d; ++c) tj.step[c] = r * dir[c];
            forced.push_back(std::move(tj));
        }
        std::sort(forced.begin(), forced.end(),
                  [](const TailJump& a, const TailJump& b) { return a.time < b.time; });
    }
    std::size_t next_forced = 0;

    const double sig = std::sqrt(sigma2_per_coord_);
    const std::size_t n_big = big_rate_.size();

    for (std::size_t i = row; i < times_.size(); ++i) {
        const double t0 = times_[i - 1];
        const double t1 = times_[i];
        const double dt = t1 - t0;

        if (!modulated) {
            if (sigma2_per_coord_ > 0.0) {
                const double s = sig * std::sqrt(dt);
                for (int c = 0; c < d; ++c) x[c] += s * rng.next_normal();
            }
            if (rates_.lambda_small > 0.0) {
                const std::uint64_t n = rng.next_poisson(rates_.lambda_small * dt);
                for (std::uint64_t j = 0; j < n; ++j) {
                    const double r = mid_radius(rng.next_unit());
                    draw_direction(rng, dir.data());
                    for (int c = 0; c < d; ++c) x[c] += r * dir[c];
                }
            }
            for (std::size_t b = 0; b < n_big; ++b) {
                if (big_rate_[b] <= 0.0) continue;
                const std::uint64_t n = rng.next_poisson(big_rate_[b] * dt);
                for (std::uint64_t j = 0; j < n; ++j) {
                    const double r = big_[b].sample(rng.next_unit());
                    draw_direction(rng, dir.data());
                    for (int c = 0; c < d; ++c) x[c] += r * dir[c];
                }
            }
            while (next_forced < forced.size() && forced[next_forced].time <= t1) {
                for (int c = 0; c < d; ++c) x[c] += forced[next_forced].step[c];
                ++next_forced;
            }
        } else {
            // State-dependent thinning needs jump times; draw counts, then
            // times, then walk events in time order with Brownian infill.
            struct Event {
                double time;
                int piece;  // -1 = mid jump
            };
            std::vector<Event> events;
            const std::uint64_t n_mid =
                rates_.lambda_small > 0.0
                    ? rng.next_poisson(rate_scale_ * rates_.lambda_small * dt)
                    : 0;
            for (std::uint64_t j = 0; j < n_mid; ++j)
                events.push_back({t0 + dt * rng.next_unit(), -1});
            for (std::size_t b = 0; b < n_big; ++b) {
                if (big_rate_[b] <= 0.0) continue;
                const std::uint64_t n = rng.next_poisson(rate_scale_ * big_rate_[b] * dt);
                for (std::uint64_t j = 0; j < n; ++j)
                    events.push_back({t0 + dt * rng.next_unit(), int(b)});
            }
            std::stable_sort(events.begin(), events.end(),
                             [](const Event& a, const Event& b) { return a.time < b.time; });
            double t_prev = t0;
            std::vector<double> y(d);
            for (const Event& ev : events) {
                if (sigma2_per_coord_ > 0.0 && ev.time > t_prev) {
                    const double s = sig * std::sqrt(ev.time - t_prev);
                    for (int c = 0; c < d; ++c) x[c] += s * rng.next_normal();
                }
                t_prev = ev.time;
                const double r = ev.piece < 0 ? mid_radius(rng.next_unit())
                                              : big_[ev.piece].sample(rng.next_unit());
                draw_direction(rng, dir.data());
                for (int c = 0; c < d; ++c) y[c] = x[c] + r * dir[c];
                const double accept =
                    kernel_.modulation.value(x.data(), y.data(), d) / kernel_.modulation.hi;
                if (rng.next_unit() <= accept)
                    for (int c = 0; c < d; ++c) x[c] = y[c];
            }
            if (sigma2_per_coord_ > 0.0 && t1 > t_prev) {
                const double s = sig * std::sqrt(t1 - t_prev);
                for (int c = 0; c < d; ++c) x[c] += s * rng.next_normal();
            }
        }

        for (int c = 0; c < d; ++c) out[i * std::size_t(d) + c] = x[c];
    }
}

}  // namespace jumplab
