#include "heatkernel.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"

#include <json.hpp>

namespace jumplab {

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::on_diagonal: return "ondiag";
        case Regime::gaussian: return "gauss";
        case Regime::far: return "far";
    }
    return "?";
}

Regime classify_regime(double t, double r, const JumpKernel& k, double theta0) {
    require(t > 0.0, Err::domain, "classify_regime needs t > 0");
    require(r >= 0.0, Err::domain, "classify_regime needs r >= 0");
    require(theta0 > 0.0 && theta0 < 1.0, Err::domain, "theta0 must lie in (0,1)");
    if (t >= r * r) return Regime::on_diagonal;
    const PhiValue pv = capital_phi(k.profile, std::max(r, 1.0));
    double L = 1.0;
    if (!pv.divergent && pv.value > 0.0) L = std::max(std::log(pv.value), 1.0);
    if (std::isinf(pv.value)) return Regime::gaussian;  // truncated tail: no far zone
    return t >= theta0 * r * r / L ? Regime::gaussian : Regime::far;
}

std::vector<double> make_shell_edges(double r_min, double r_max, int per_decade) {
    require(r_min > 0.0 && r_max > r_min && per_decade >= 1, Err::domain, "bad shell spec");
    std::vector<double> edges{0.0, r_min};
    const double step = std::pow(10.0, 1.0 / per_decade);
    double r = r_min;
    while (r * step < r_max * 0.999999) {
        r *= step;
        edges.push_back(r);
    }
    edges.push_back(r_max);
    return edges;
}

namespace {

void validate_edges(const std::vector<double>& edges) {
    require(edges.size() >= 2, Err::domain, "need at least one shell");
    for (std::size_t i = 1; i < edges.size(); ++i)
        require(edges[i] > edges[i - 1], Err::domain, "shell edges must increase");
    require(edges.front() >= 0.0, Err::domain, "shell edges must be nonnegative");
}

struct Counts {
    std::vector<std::uint64_t> shell;  // per shell
    std::uint64_t ondiag = 0;
    std::uint64_t inside = 0;  // total landing in any shell
};

DensityEstimate assemble(double t, const std::vector<double>& edges, const Counts& c,
                         std::uint64_t n, int d, double h_rel) {
    DensityEstimate e;
    e.t = t;
    e.shell_edges = edges;
    e.n_samples = n;
    const std::size_t m = edges.size() - 1;
    e.p_hat.resize(m);
    e.std_err.resize(m);
    e.counts = c.shell;
    e.low_count.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double vol = ball_volume(d, edges[i + 1]) - ball_volume(d, edges[i]);
        const double p = double(c.shell[i]) / double(n);
        e.p_hat[i] = p / vol;
        e.std_err[i] = std::sqrt(p * (1.0 - p) / double(n)) / vol;
        e.low_count[i] = c.shell[i] < 5;
    }
    e.ball_radius = h_rel * std::sqrt(t);
    const double vb = ball_volume(d, e.ball_radius);
    const double pb = double(c.ondiag) / double(n);
    e.on_diagonal = pb / vb;
    e.on_diagonal_stderr = std::sqrt(pb * (1.0 - pb) / double(n)) / vb;
    const double mass = double(c.inside) / double(n);
    e.total_mass = mass;
    e.mass_stderr = std::sqrt(mass * (1.0 - mass) / double(n));
    return e;
}

// Accumulate shell / ball counts for every observation time of gen.
std::vector<Counts> count_marginals(const PathGenerator& gen, std::uint64_t n_paths,
                                    const std::vector<double>& t_list,
                                    const std::vector<double>& edges, double h_rel, int d,
                                    int threads) {
    const auto& times = gen.times();
    std::vector<std::size_t> rows;  // observation row per requested t
    for (double t : t_list) {
        auto it = std::find(times.begin(), times.end(), t);
        require(it != times.end(), Err::domain, "requested time missing from grid");
        rows.push_back(std::size_t(it - times.begin()));
    }
    const std::size_t nt = t_list.size();
    const std::size_t m = edges.size() - 1;

    const int n_chunks = 64;
    std::vector<std::vector<Counts>> partial(n_chunks);

    parallel_chunks(n_paths, threads, n_chunks, [&](std::uint64_t b, std::uint64_t e, int chunk) {
        std::vector<Counts> local(nt);
        for (auto& c : local) c.shell.assign(m, 0);
        std::vector<double> pos(times.size() * std::size_t(d));
        for (std::uint64_t p = b; p < e; ++p) {
            gen.sample_positions(p, pos.data());
            for (std::size_t ti = 0; ti < nt; ++ti) {
                const double* x = &pos[rows[ti] * std::size_t(d)];
                double r2 = 0.0;
                for (int c = 0; c < d; ++c) r2 += x[c] * x[c];
                const double r = std::sqrt(r2);
                auto it = std::upper_bound(edges.begin(), edges.end(), r);
                if (it != edges.begin() && it != edges.end()) {
                    local[ti].shell[std::size_t(it - edges.begin()) - 1]++;
                    local[ti].inside++;
                }
                if (r <= h_rel * std::sqrt(t_list[ti])) local[ti].ondiag++;
            }
        }
        partial[chunk] = std::move(local);
    });

    std::vector<Counts> total(nt);
    for (auto& c : total) c.shell.assign(m, 0);
    for (int c = 0; c < n_chunks; ++c) {
        if (partial[c].empty()) continue;
        for (std::size_t ti = 0; ti < nt; ++ti) {
            total[ti].ondiag += partial[c][ti].ondiag;
            total[ti].inside += partial[c][ti].inside;
            for (std::size_t s = 0; s < m; ++s) total[ti].shell[s] += partial[c][ti].shell[s];
        }
    }
    return total;
}

}  // namespace

DensityEstimate estimate_radial_density(const double* positions, std::uint64_t n, int d, double t,
                                        const std::vector<double>& shell_edges, double h_rel) {
    require(n > 0, Err::domain, "empty sample set");
    require(t > 0.0, Err::domain, "density estimation needs t > 0");
    validate_edges(shell_edges);
    Counts c;
    c.shell.assign(shell_edges.size() - 1, 0);
    const double h = h_rel * std::sqrt(t);
    for (std::uint64_t p = 0; p < n; ++p) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
            const double v = positions[p * std::size_t(d) + k];
            r2 += v * v;
        }
        const double r = std::sqrt(r2);
        auto it = std::upper_bound(shell_edges.begin(), shell_edges.end(), r);
        if (it != shell_edges.begin() && it != shell_edges.end()) {
            c.shell[std::size_t(it - shell_edges.begin()) - 1]++;
            c.inside++;
        }
        if (r <= h) c.ondiag++;
    }
    return assemble(t, shell_edges, c, n, d, h_rel);
}

std::vector<DensityEstimate> estimate_density_mc(const JumpKernel& k, const SamplerConfig& cfg,
                                                 const std::vector<double>& shell_edges,
                                                 double h_rel, int threads) {
    require(!cfg.t_grid.empty() && cfg.t_grid.front() > 0.0, Err::config,
            "density estimation needs positive observation times");
    require(cfg.n_paths > 0, Err::config, "density estimation needs paths");
    validate_edges(shell_edges);
    PathGenerator gen(k, cfg);
    auto counts = count_marginals(gen, cfg.n_paths, cfg.t_grid, shell_edges, h_rel, k.d, threads);
    std::vector<DensityEstimate> out;
    for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti)
        out.push_back(assemble(cfg.t_grid[ti], shell_edges, counts[ti], cfg.n_paths, k.d, h_rel));
    return out;
}

std::vector<DensityEstimate> estimate_density_stratified(const JumpKernel& k,
                                                         const SamplerConfig& cfg,
                                                         const std::vector<double>& shell_edges,
                                                         double h_rel, double split_K,
                                                         std::uint64_t n_tail_paths, int threads) {
    require(!cfg.t_grid.empty() && cfg.t_grid.front() > 0.0, Err::config,
            "density estimation needs positive observation times");
    require(cfg.n_paths > 0 && n_tail_paths > 0, Err::config, "both strata need paths");
    validate_edges(shell_edges);
    require(!cfg.modulation_enabled, Err::config, "stratified estimation is unmodulated only");

    const double tail_rate = tail_mass(k, split_K);
    require(tail_rate > 0.0, Err::config, "split radius is past the jump support");

    PathGenerator cap_gen(k, cfg);
    cap_gen.set_cap(split_K);
    cap_gen.set_stream_tag(1);
    auto cap_counts =
        count_marginals(cap_gen, cfg.n_paths, cfg.t_grid, shell_edges, h_rel, k.d, threads);

    const std::size_t m = shell_edges.size() - 1;
    std::vector<DensityEstimate> out;
    for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
        const double t = cfg.t_grid[ti];
        SamplerConfig bcfg = cfg;
        bcfg.t_grid = {t};
        bcfg.n_paths = n_tail_paths;
        PathGenerator tail_gen(k, bcfg);
        tail_gen.set_forced_tail(split_K);
        tail_gen.set_stream_tag(2 + ti);
        auto tail_counts =
            count_marginals(tail_gen, n_tail_paths, {t}, shell_edges, h_rel, k.d, threads);

        DensityEstimate a =
            assemble(t, shell_edges, cap_counts[ti], cfg.n_paths, k.d, h_rel);
        DensityEstimate b = assemble(t, shell_edges, tail_counts[0], n_tail_paths, k.d, h_rel);
        const double q = -std::expm1(-tail_rate * t);

        DensityEstimate e = a;
        e.n_samples = cfg.n_paths + n_tail_paths;
        for (std::size_t s = 0; s < m; ++s) {
            e.p_hat[s] = (1.0 - q) * a.p_hat[s] + q * b.p_hat[s];
            e.std_err[s] = std::hypot((1.0 - q) * a.std_err[s], q * b.std_err[s]);
            e.counts[s] = a.counts[s] + b.counts[s];
            e.low_count[s] = e.counts[s] < 5;
        }
        e.on_diagonal = (1.0 - q) * a.on_diagonal + q * b.on_diagonal;
        e.on_diagonal_stderr =
            std::hypot((1.0 - q) * a.on_diagonal_stderr, q * b.on_diagonal_stderr);
        e.total_mass = (1.0 - q) * a.total_mass + q * b.total_mass;
        e.mass_stderr = std::hypot((1.0 - q) * a.mass_stderr, q * b.mass_stderr);
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<double> mean_square_displacement(const JumpKernel& k, const SamplerConfig& cfg,
                                             int threads) {
    require(!cfg.t_grid.empty(), Err::config, "need observation times");
    require(cfg.n_paths > 0, Err::config, "need paths");
    PathGenerator gen(k, cfg);
    const auto& times = gen.times();
    const std::size_t nt = cfg.t_grid.size();
    const std::size_t off = times.size() - nt;  // leading 0 row when present
    std::vector<double> per_path(cfg.n_paths * nt);

    parallel_chunks(cfg.n_paths, threads, 64, [&](std::uint64_t b, std::uint64_t e, int) {
        std::vector<double> pos(times.size() * std::size_t(k.d));
        for (std::uint64_t p = b; p < e; ++p) {
            gen.sample_positions(p, pos.data());
            for (std::size_t ti = 0; ti < nt; ++ti) {
                const double* x = &pos[(off + ti) * std::size_t(k.d)];
                double r2 = 0.0;
                for (int c = 0; c < k.d; ++c) r2 += x[c] * x[c];
                per_path[p * nt + ti] = r2;
            }
        }
    });

    std::vector<double> out(nt, 0.0);
    for (std::uint64_t p = 0; p < cfg.n_paths; ++p)
        for (std::size_t ti = 0; ti < nt; ++ti) out[ti] += per_path[p * nt + ti];
    for (auto& v : out) v /= double(cfg.n_paths);
    return out;
}

namespace {

std::vector<std::vector<double>> collect_scalar(const JumpKernel& k, const SamplerConfig& cfg,
                                                int threads, bool signed_1d) {
    require(!cfg.t_grid.empty(), Err::config, "need observation times");
    require(cfg.n_paths > 0, Err::config, "need paths");
    if (signed_1d) require(k.d == 1, Err::domain, "signed positions need d = 1");
    PathGenerator gen(k, cfg);
    const auto& times = gen.times();
    const std::size_t nt = cfg.t_grid.size();
    const std::size_t off = times.size() - nt;
    std::vector<std::vector<double>> out(nt, std::vector<double>(cfg.n_paths));

    parallel_chunks(cfg.n_paths, threads, 64, [&](std::uint64_t b, std::uint64_t e, int) {
        std::vector<double> pos(times.size() * std::size_t(k.d));
        for (std::uint64_t p = b; p < e; ++p) {
            gen.sample_positions(p, pos.data());
            for (std::size_t ti = 0; ti < nt; ++ti) {
                const double* x = &pos[(off + ti) * std::size_t(k.d)];
                if (signed_1d) {
                    out[ti][p] = x[0];
                } else {
                    double r2 = 0.0;
                    for (int c = 0; c < k.d; ++c) r2 += x[c] * x[c];
                    out[ti][p] = std::sqrt(r2);
                }
            }
        }
    });
    return out;
}

struct LinFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    int n = 0;
};

LinFit linfit(const std::vector<double>& xs, const std::vector<double>& ys) {
    LinFit f;
    f.n = int(xs.size());
    if (f.n < 2) return f;
    double sx = 0, sy = 0;
    for (int i = 0; i < f.n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / f.n, my = sy / f.n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < f.n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

}  // namespace

std::vector<std::vector<double>> sample_radii(const JumpKernel& k, const SamplerConfig& cfg,
                                              int threads) {
    return collect_scalar(k, cfg, threads, false);
}

std::vector<std::vector<double>> sample_positions_1d(const JumpKernel& k, const SamplerConfig& cfg,
                                                     int threads) {
    return collect_scalar(k, cfg, threads, true);
}

FitConstants fit_constants(const std::vector<DensityEstimate>& ests, const JumpKernel& k) {
    FitConstants fc;
    const double half_d = 0.5 * double(k.d);

    std::vector<double> xs, ys;
    for (const auto& e : ests) {
        if (e.t < fc.t0 || !(e.on_diagonal > 0.0)) continue;
        xs.push_back(std::log(e.t));
        ys.push_back(std::log(e.on_diagonal));
    }
    require(xs.size() >= 3, Err::domain,
            "insufficient on-diagonal regime points (need >= 3 times at t >= t0)");
    LinFit od = linfit(xs, ys);
    fc.ondiag_slope = od.slope;
    fc.n_ondiag = od.n;
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += ys[i] + half_d * xs[i];
    fc.c1 = std::exp(acc / double(xs.size()));

    // theta0: largest candidate whose Gaussian-regime regression stays linear.
    const double cands[] = {0.5, 0.2, 0.1, 0.05};
    double best_r2 = -1.0;
    bool chosen = false;
    for (double th : cands) {
        std::vector<double> gx, gy;
        for (const auto& e : ests) {
            if (e.t < fc.t0) continue;
            for (std::size_t s = 0; s + 1 < e.shell_edges.size(); ++s) {
                if (e.counts[s] < 50 || !(e.p_hat[s] > 0.0)) continue;
                const double r = e.shell_mid(s);
                if (classify_regime(e.t, r, k, th) != Regime::gaussian) continue;
                gx.push_back(r * r / e.t);
                gy.push_back(std::log(e.p_hat[s]) + half_d * std::log(e.t));
            }
        }
        if (gx.size() < 10) continue;
        LinFit g = linfit(gx, gy);
        const bool ok = g.r2 >= 0.9 && g.slope < 0.0;
        if (ok || g.r2 > best_r2) {
            fc.theta0 = th;
            fc.c2 = -g.slope;
            fc.gauss_level = std::exp(g.intercept);
            fc.gauss_r2 = g.r2;
            fc.n_gauss = g.n;
            best_r2 = g.r2;
        }
        if (ok) {
            chosen = true;
            break;
        }
    }
    require(fc.n_gauss >= 10, Err::domain,
            "insufficient gaussian regime points (need >= 10 qualifying (t,r) cells)");
    (void)chosen;

    if (k.profile.family == ProfileFamily::power_law) {
        const double eps = k.profile.param;
        fc.kappa_far = 8.0 * (double(k.d) + 2.0 + eps) / eps;
        // The classifier's far zone still starts inside the Gaussian shoulder;
        // fit the far coefficient only where the fitted Gaussian model has
        // died off (below 10% of the measurement).
        double lsum = 0.0;
        int n = 0;
        for (const auto& e : ests) {
            if (e.t < fc.t0) continue;
            for (std::size_t s = 0; s + 1 < e.shell_edges.size(); ++s) {
                if (e.counts[s] < 50 || !(e.p_hat[s] > 0.0)) continue;
                const double r = e.shell_mid(s);
                if (classify_regime(e.t, r, k, fc.theta0) != Regime::far) continue;
                const double gauss = fc.gauss_level * std::pow(e.t, -half_d) *
                                     std::exp(-fc.c2 * r * r / e.t);
                if (gauss > 0.1 * e.p_hat[s]) continue;
                lsum += std::log(e.p_hat[s] * std::pow(r, double(k.d) + 2.0 + eps) / e.t);
                ++n;
            }
        }
        fc.n_far = n;
        if (n > 0) fc.far_coeff = std::exp(lsum / n);
    }
    return fc;
}

std::vector<RegimeBound> bound_curves(const JumpKernel& k, double t,
                                      const std::vector<double>& r_grid,
                                      const FitConstants& c) {
    require(t >= c.t0, Err::domain, "bound_curves needs t >= t0");
    require(c.c1 > 0.0 && c.gauss_level > 0.0 && c.c2 > 0.0, Err::domain,
            "bound_curves needs fitted (c1, gauss level, c2)");
    const double half_d = 0.5 * double(k.d);
    const double t_pow = std::pow(t, -half_d);
    const bool plaw = k.profile.family == ProfileFamily::power_law;
    const double eps = k.profile.param;

    std::vector<RegimeBound> out;
    out.reserve(r_grid.size());
    for (double r : r_grid) {
        RegimeBound b;
        b.t = t;
        b.r = r;
        b.regime = classify_regime(t, r, k, c.theta0);
        switch (b.regime) {
            case Regime::on_diagonal:
                b.upper = c.margin * c.c1 * t_pow;
                b.lower = c.c1 / c.margin * t_pow;
                break;
            case Regime::gaussian:
                b.upper = c.margin * c.gauss_level * t_pow *
                          std::exp(-(c.c2 / c.c2_spread) * r * r / t);
                b.lower = c.gauss_level / c.margin * t_pow *
                          std::exp(-(c.c2 * c.c2_spread) * r * r / t);
                break;
            case Regime::far: {
                const double arg = std::max(r / c.kappa_far, 1.0);
                const PhiValue pv = capital_phi(k.profile, arg);
                const double phi_arg = k.profile.phi(arg);
                const double cu = c.margin * c.c1;
                const double rpow = std::pow(r, double(k.d) + 2.0);
                double first = cu * t / rpow;
                if (!pv.divergent && pv.value > 0.0)
                    first = std::min(first,
                                     cu * t_pow / std::pow(pv.value, c.kappa_far / 8.0));
                const double second =
                    std::isinf(phi_arg) ? 0.0 : cu * t / (rpow * phi_arg);
                b.far_U = first + second;
                b.upper = b.far_U;
                if (plaw && c.far_coeff > 0.0) {
                    const double shape = t * std::pow(r, -(double(k.d) + 2.0 + eps));
                    b.upper = std::min(b.upper, c.margin * c.far_coeff * shape);
                    b.lower = c.far_coeff / c.margin * shape;
                }
                // just past the boundary the Gaussian shoulder still holds
                // (the middle-regime display is valid for any theta); keep it
                // in the upper envelope so the transition zone is covered
                b.upper = std::max(b.upper, c.margin * c.gauss_level * t_pow *
                                                std::exp(-(c.c2 / c.c2_spread) * r * r / t));
                break;
            }
        }
        out.push_back(b);
    }
    return out;
}

std::string FitConstants::to_json(std::uint64_t digest) const {
    nlohmann::ordered_json j;
    char dg[20];
    std::snprintf(dg, sizeof(dg), "%016llx", static_cast<unsigned long long>(digest));
    j["config_digest"] = dg;
    j["c1"] = c1;
    j["ondiag_slope"] = ondiag_slope;
    j["c2"] = c2;
    j["gauss_level"] = gauss_level;
    j["gauss_r2"] = gauss_r2;
    j["theta0"] = theta0;
    j["t0"] = t0;
    j["far_coeff"] = far_coeff;
    j["margin"] = margin;
    j["c2_spread"] = c2_spread;
    j["kappa_far"] = kappa_far;
    j["n_ondiag"] = n_ondiag;
    j["n_gauss"] = n_gauss;
    j["n_far"] = n_far;
    return j.dump(2) + "\n";
}

}  // namespace jumplab
