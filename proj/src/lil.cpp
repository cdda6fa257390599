#include "lil.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"

namespace jumplab {

namespace {
const double kEE = std::exp(std::exp(1.0));
}

double rate_function(double t, double C) {
    require(t >= kEE, Err::domain, "rate function defined for t >= e^e");
    return C * std::sqrt(t * std::log(std::log(t)));
}

void LilConfig::validate() const {
    require(k_min >= 1 && k_max >= k_min, Err::config, "need 1 <= k_min <= k_max");
    require(std::pow(2.0, k_min - 1) > kEE, Err::config,
            "blocks must start above e^e (k_min >= 5)");
    require(!C_grid.empty(), Err::config, "C grid must be nonempty");
    for (std::size_t i = 0; i < C_grid.size(); ++i) {
        require(C_grid[i] > 0.0, Err::config, "C grid must be positive");
        if (i) require(C_grid[i] > C_grid[i - 1], Err::config, "C grid must increase");
    }
    require(n_paths > 0, Err::config, "need paths");
    require(observations_per_block >= 1, Err::config, "need observations per block");
    require(c_small >= 0.0, Err::config, "c_small must be nonnegative");
}

ExceedanceTable run_lil_experiment(const JumpKernel& k, const LilConfig& cfg, std::uint64_t seed,
                                   int threads) {
    cfg.validate();
    const int nk = cfg.k_max - cfg.k_min + 1;
    const int m = cfg.observations_per_block;

    // Nested per-block grids s = 2^{k-1} 2^{j/m}, j = 0..m; block endpoints are
    // shared, and doubling m refines every grid in place.
    std::vector<double> obs;
    std::vector<std::pair<std::size_t, std::size_t>> block_range(nk);  // [first, last) obs rows
    for (int ki = 0; ki < nk; ++ki) {
        const int kk = cfg.k_min + ki;
        const double t0 = std::pow(2.0, kk - 1);
        const std::size_t first = obs.size();
        for (int j = (ki == 0 ? 0 : 1); j <= m; ++j)
            obs.push_back(t0 * std::pow(2.0, double(j) / double(m)));
        block_range[ki] = {ki == 0 ? first : first - 1, obs.size()};
    }
    // one extra endpoint for the B_k increment of the last block
    obs.push_back(std::pow(2.0, cfg.k_max + 1));
    const std::size_t n_obs = obs.size();

    SamplerConfig scfg;
    scfg.delta = cfg.delta;
    scfg.t_grid = obs;
    scfg.n_paths = cfg.n_paths;
    scfg.master_seed = seed;
    scfg.inverse_cdf_resolution = cfg.inverse_cdf_resolution;
    PathGenerator gen(k, scfg);
    const auto& times = gen.times();
    const std::size_t off = times.size() - n_obs;

    // endpoint rows (within obs) for t_k, k = k_min-1 .. k_max+1
    auto endpoint_row = [&](int kk) -> std::size_t {
        const double target = std::pow(2.0, kk);
        auto it = std::lower_bound(obs.begin(), obs.end(), target * (1.0 - 1e-12));
        return std::size_t(it - obs.begin());
    };

    const std::size_t nC = cfg.C_grid.size();
    struct Local {
        std::vector<std::uint64_t> exceed;      // [ki*nC + ci]
        std::vector<std::uint64_t> b_events;    // [ki]
        std::vector<std::uint64_t> any_from_k;  // [ci], over blocks k >= k_min
    };
    const int n_chunks = 64;
    std::vector<Local> partial(n_chunks);

    parallel_chunks(cfg.n_paths, threads, n_chunks, [&](std::uint64_t b, std::uint64_t e, int ch) {
        Local loc;
        loc.exceed.assign(std::size_t(nk) * nC, 0);
        loc.b_events.assign(nk, 0);
        loc.any_from_k.assign(nC, 0);
        std::vector<double> pos(times.size() * std::size_t(k.d));
        std::vector<double> sup_ratio(nk);
        for (std::uint64_t p = b; p < e; ++p) {
            gen.sample_positions(p, pos.data());
            auto radius_at_row = [&](std::size_t obs_row) {
                const double* x = &pos[(off + obs_row) * std::size_t(k.d)];
                double r2 = 0.0;
                for (int c = 0; c < k.d; ++c) r2 += x[c] * x[c];
                return std::sqrt(r2);
            };
            for (int ki = 0; ki < nk; ++ki) {
                double sup = 0.0;
                for (std::size_t row = block_range[ki].first; row < block_range[ki].second; ++row)
                    sup = std::max(sup, radius_at_row(row) / rate_function(obs[row], 1.0));
                sup_ratio[ki] = sup;
                for (std::size_t ci = 0; ci < nC; ++ci)
                    if (sup >= cfg.C_grid[ci]) loc.exceed[std::size_t(ki) * nC + ci]++;
            }
            const int ki_from = std::clamp(cfg.any_from_k - cfg.k_min, 0, nk - 1);
            for (std::size_t ci = 0; ci < nC; ++ci) {
                bool any = false;
                for (int ki = ki_from; ki < nk && !any; ++ki)
                    any = sup_ratio[ki] >= cfg.C_grid[ci];
                if (any) loc.any_from_k[ci]++;
            }
            for (int ki = 0; ki < nk; ++ki) {
                const int kk = cfg.k_min + ki;
                const std::size_t ra = endpoint_row(kk), rb = endpoint_row(kk + 1);
                const double* xa = &pos[(off + ra) * std::size_t(k.d)];
                const double* xb = &pos[(off + rb) * std::size_t(k.d)];
                double inc2 = 0.0;
                for (int c = 0; c < k.d; ++c) inc2 += (xb[c] - xa[c]) * (xb[c] - xa[c]);
                const double thr = cfg.c_small * rate_function(std::pow(2.0, kk - 1), 1.0);
                if (std::sqrt(inc2) >= thr) loc.b_events[ki]++;
            }
        }
        partial[ch] = std::move(loc);
    });

    ExceedanceTable tbl;
    tbl.n_paths = cfg.n_paths;
    for (int ki = 0; ki < nk; ++ki) tbl.ks.push_back(cfg.k_min + ki);
    tbl.Cs = cfg.C_grid;
    std::vector<std::uint64_t> exceed(std::size_t(nk) * nC, 0), b_events(nk, 0), any(nC, 0);
    for (const auto& loc : partial) {
        if (loc.exceed.empty()) continue;
        for (std::size_t i = 0; i < exceed.size(); ++i) exceed[i] += loc.exceed[i];
        for (int ki = 0; ki < nk; ++ki) b_events[ki] += loc.b_events[ki];
        for (std::size_t ci = 0; ci < nC; ++ci) any[ci] += loc.any_from_k[ci];
    }
    const double N = double(cfg.n_paths);
    tbl.p_hat.assign(nk, std::vector<double>(nC));
    tbl.std_err.assign(nk, std::vector<double>(nC));
    tbl.bc_partial.assign(nk, std::vector<double>(nC));
    for (int ki = 0; ki < nk; ++ki)
        for (std::size_t ci = 0; ci < nC; ++ci) {
            const double p = double(exceed[std::size_t(ki) * nC + ci]) / N;
            tbl.p_hat[ki][ci] = p;
            tbl.std_err[ki][ci] = std::sqrt(p * (1.0 - p) / N);
            tbl.bc_partial[ki][ci] = p + (ki ? tbl.bc_partial[ki - 1][ci] : 0.0);
        }
    for (int ki = 0; ki < nk; ++ki) tbl.b_freq.push_back(double(b_events[ki]) / N);
    for (std::size_t ci = 0; ci < nC; ++ci)
        tbl.any_exceedance_from_k.push_back(double(any[ci]) / N);
    return tbl;
}

ExitTimeTable exit_time_bound_check(const JumpKernel& k, const std::vector<double>& r_grid,
                                    const std::vector<double>& t_grid, std::uint64_t n_paths,
                                    std::uint64_t seed, int threads, double delta) {
    require(!r_grid.empty() && !t_grid.empty(), Err::domain, "need (r,t) grids");
    require(n_paths > 0, Err::domain, "need paths");
    for (double r : r_grid) require(r > 0.0, Err::domain, "radii must be positive");
    for (double t : t_grid) require(t > 0.0, Err::domain, "times must be positive");
    require(!k.modulation.enabled, Err::domain,
            "exit-time check needs a translation-invariant kernel");

    const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
    const double t_min = *std::min_element(t_grid.begin(), t_grid.end());

    // observation grid: log-spaced on [t_min/64, 2 t_max] plus every marginal
    // time {t, 1.5t, 2t} the right side needs
    std::vector<double> obs;
    const int n_log = 128;
    const double lo = t_min / 64.0, hi = 2.0 * t_max;
    for (int i = 0; i <= n_log; ++i)
        obs.push_back(lo * std::pow(hi / lo, double(i) / double(n_log)));
    for (double t : t_grid)
        for (double f : {1.0, 1.5, 2.0}) obs.push_back(f * t);
    std::sort(obs.begin(), obs.end());
    obs.erase(std::unique(obs.begin(), obs.end(),
                          [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
              obs.end());

    SamplerConfig scfg;
    scfg.delta = delta;
    scfg.t_grid = obs;
    scfg.n_paths = n_paths;
    scfg.master_seed = seed;
    PathGenerator gen(k, scfg);
    const auto& times = gen.times();
    const std::size_t off = times.size() - obs.size();

    auto obs_row = [&](double t) {
        auto it = std::lower_bound(obs.begin(), obs.end(), t * (1.0 - 1e-9));
        return std::size_t(it - obs.begin());
    };

    const std::size_t nr = r_grid.size(), nt = t_grid.size();
    struct Local {
        std::vector<std::uint64_t> exit_by;   // [ri*nt + ti]
        std::vector<std::uint64_t> marginal;  // [ri*nt*3 + ti*3 + si]
    };
    const int n_chunks = 64;
    std::vector<Local> partial(n_chunks);

    parallel_chunks(n_paths, threads, n_chunks, [&](std::uint64_t b, std::uint64_t e, int ch) {
        Local loc;
        loc.exit_by.assign(nr * nt, 0);
        loc.marginal.assign(nr * nt * 3, 0);
        std::vector<double> pos(times.size() * std::size_t(k.d));
        std::vector<double> first_exit(nr);
        for (std::uint64_t p = b; p < e; ++p) {
            gen.sample_positions(p, pos.data());
            std::fill(first_exit.begin(), first_exit.end(),
                      std::numeric_limits<double>::infinity());
            for (std::size_t row = 0; row < obs.size(); ++row) {
                const double* x = &pos[(off + row) * std::size_t(k.d)];
                double r2 = 0.0;
                for (int c = 0; c < k.d; ++c) r2 += x[c] * x[c];
                const double rad = std::sqrt(r2);
                for (std::size_t ri = 0; ri < nr; ++ri)
                    if (rad > r_grid[ri] && !std::isfinite(first_exit[ri]))
                        first_exit[ri] = obs[row];
            }
            for (std::size_t ri = 0; ri < nr; ++ri)
                for (std::size_t ti = 0; ti < nt; ++ti)
                    if (first_exit[ri] <= t_grid[ti] * (1.0 + 1e-12))
                        loc.exit_by[ri * nt + ti]++;
            for (std::size_t ti = 0; ti < nt; ++ti) {
                const double fs[3] = {1.0, 1.5, 2.0};
                for (int si = 0; si < 3; ++si) {
                    const std::size_t row = obs_row(fs[si] * t_grid[ti]);
                    const double* x = &pos[(off + row) * std::size_t(k.d)];
                    double r2 = 0.0;
                    for (int c = 0; c < k.d; ++c) r2 += x[c] * x[c];
                    const double rad = std::sqrt(r2);
                    for (std::size_t ri = 0; ri < nr; ++ri)
                        if (rad >= 0.5 * r_grid[ri])
                            loc.marginal[ri * nt * 3 + ti * 3 + si]++;
                }
            }
        }
        partial[ch] = std::move(loc);
    });

    std::vector<std::uint64_t> exit_by(nr * nt, 0), marginal(nr * nt * 3, 0);
    for (const auto& loc : partial) {
        if (loc.exit_by.empty()) continue;
        for (std::size_t i = 0; i < exit_by.size(); ++i) exit_by[i] += loc.exit_by[i];
        for (std::size_t i = 0; i < marginal.size(); ++i) marginal[i] += loc.marginal[i];
    }

    ExitTimeTable t;
    t.r_grid = r_grid;
    t.t_grid = t_grid;
    const double N = double(n_paths);
    t.lhs.resize(nr * nt);
    t.lhs_se.resize(nr * nt);
    t.rhs.resize(nr * nt);
    t.rhs_se.resize(nr * nt);
    t.margin.resize(nr * nt);
    for (std::size_t ri = 0; ri < nr; ++ri)
        for (std::size_t ti = 0; ti < nt; ++ti) {
            const double pl = double(exit_by[ri * nt + ti]) / N;
            double pm = 0.0;
            for (int si = 0; si < 3; ++si)
                pm = std::max(pm, double(marginal[ri * nt * 3 + ti * 3 + si]) / N);
            t.lhs[ri * nt + ti] = pl;
            t.lhs_se[ri * nt + ti] = std::sqrt(pl * (1.0 - pl) / N);
            t.rhs[ri * nt + ti] = 2.0 * pm;
            t.rhs_se[ri * nt + ti] = 2.0 * std::sqrt(pm * (1.0 - pm) / N);
            t.margin[ri * nt + ti] = t.rhs[ri * nt + ti] - pl;
        }
    return t;
}

std::vector<double> block_event_frequencies(const JumpKernel& k, double c_small, int k_min,
                                            int k_max, std::uint64_t n_paths, std::uint64_t seed,
                                            int threads, double delta) {
    LilConfig cfg;
    cfg.k_min = k_min;
    cfg.k_max = k_max;
    cfg.C_grid = {1.0};  // unused by the B_k statistics
    cfg.n_paths = n_paths;
    cfg.observations_per_block = 1;
    cfg.c_small = c_small;
    cfg.delta = delta;
    ExceedanceTable t = run_lil_experiment(k, cfg, seed, threads);
    return t.b_freq;
}

}  // namespace jumplab
