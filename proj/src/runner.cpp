#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "davies.hpp"
#include "heatkernel.hpp"
#include "io.hpp"
#include "lil.hpp"
#include "parallel.hpp"

#include <json.hpp>

namespace jumplab {

using nlohmann::ordered_json;

namespace {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
};

ordered_json checks_json(const std::vector<CheckResult>& checks) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : checks) {
        ordered_json j;
        j["name"] = c.name;
        j["pass"] = c.pass;
        j["value"] = c.value;
        arr.push_back(j);
    }
    return arr;
}

bool all_pass(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void log_timing(const RunContext& ctx, const std::string& stage, double wall_ms) {
    // Wall clock is inherently nondeterministic, so it lives in a log file
    // outside the CSV/JSON/SVG determinism contract.
    std::ofstream out(ctx.path("timings.log"), std::ios::app);
    if (out) out << "stage=" << stage << " wall_ms=" << std::llround(wall_ms) << "\n";
}

std::vector<double> kernel_check_grid(const Config& cfg) {
    const double lo = cfg.get_double("kernel.grid_min", 1.0);
    const double hi = cfg.get_double("kernel.grid_max", 256.0);
    const int n = int(cfg.get_int("kernel.grid_points", 64));
    const std::string spacing = cfg.get_string("kernel.grid_spacing", "log");
    require(hi > lo && lo >= 1.0 && n >= 8, Err::config, "bad assumption-A audit grid");
    std::vector<double> g;
    for (int i = 0; i < n; ++i) {
        const double f = double(i) / double(n - 1);
        g.push_back(spacing == "linear" ? lo + f * (hi - lo) : lo * std::pow(hi / lo, f));
    }
    return g;
}

Err stage_check_kernel(RunContext& ctx) {
    const JumpKernel k = kernel_from_config(ctx.cfg);
    const double gamma = ctx.cfg.get_double("kernel.gamma", 1.0);
    KernelReport rep = check_assumption_A(k, kernel_check_grid(ctx.cfg), gamma);
    write_file(ctx.path("kernel_report.json"), rep.to_json(ctx.digest));
    if (!rep.assumption_A_ok()) {
        ctx.last_error = "check=assumption_A pass=false";
        return Err::check_failed;
    }
    return Err::ok;
}

Err stage_sample_paths(RunContext& ctx) {
    const JumpKernel k = kernel_from_config(ctx.cfg);
    SamplerConfig scfg = sampler_from_config(ctx.cfg);
    require(!scfg.t_grid.empty(), Err::config, "sampler.t_grid must be set for sample-paths");
    PathGenerator gen(k, scfg);

    PathsFile pf;
    pf.digest = ctx.digest;
    pf.d = k.d;
    pf.times = gen.times();
    pf.n_paths = scfg.n_paths;
    const std::size_t row = pf.times.size() * std::size_t(k.d);
    require(double(pf.n_paths) * double(row) * 8.0 < 2e9, Err::config,
            "paths file would exceed 2 GB; reduce n_paths or t_grid");
    pf.data.resize(pf.n_paths * row);
    parallel_chunks(pf.n_paths, ctx.threads, 64, [&](std::uint64_t b, std::uint64_t e, int) {
        for (std::uint64_t p = b; p < e; ++p) gen.sample_positions(p, &pf.data[p * row]);
    });

    const std::string format = ctx.cfg.get_string("sampler.format", "binary");
    std::string file;
    if (format == "binary") {
        file = "paths.bin";
        write_paths_binary(ctx.path(file), pf);
    } else if (format == "csv") {
        file = "paths.csv";
        write_file(ctx.path(file), paths_to_csv(pf));
    } else {
        fail(Err::config, "sampler.format must be binary or csv");
    }

    ordered_json j;
    j["config_digest"] = digest_hex(ctx.digest);
    j["file"] = file;
    j["format"] = format;
    j["n_paths"] = pf.n_paths;
    j["dimension"] = pf.d;
    j["times"] = pf.times;
    j["kernel_hash"] = digest_hex(k.hash());
    j["checks"] = ordered_json::array();
    write_file(ctx.path("stage_sample_paths.json"), j.dump(2) + "\n");
    return Err::ok;
}

PathsFile load_paths(const RunContext& ctx) {
    if (file_exists(ctx.path("paths.bin"))) return read_paths_binary(ctx.path("paths.bin"));
    require(file_exists(ctx.path("paths.csv")), Err::missing_input,
            "no paths file in output directory; run sample-paths first");
    const CsvTable t = parse_csv(read_file(ctx.path("paths.csv")));
    PathsFile pf;
    pf.digest = t.digest;
    const int ct = t.col("t");
    require(ct >= 0 && t.col("path_index") == 0, Err::parse, "unrecognized paths csv layout");
    pf.d = int(t.header.size()) - 2;
    std::vector<double> times;
    for (const auto& row : t.rows) {
        if (row[0] != t.rows.front()[0]) break;
        times.push_back(std::stod(row[std::size_t(ct)]));
    }
    pf.times = times;
    require(!times.empty() && t.rows.size() % times.size() == 0, Err::parse,
            "paths csv has ragged time grids");
    pf.n_paths = t.rows.size() / times.size();
    pf.data.resize(t.rows.size() * std::size_t(pf.d));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (int c = 0; c < pf.d; ++c) pf.data[i * std::size_t(pf.d) + c] = std::stod(t.rows[i][2 + std::size_t(c)]);
    return pf;
}

struct DensityData {
    std::vector<DensityEstimate> ests;
    FitConstants fit;
    bool fit_ok = false;
    std::string fit_error;
};

void write_density_csv(const RunContext& ctx, const std::string& file, const DensityData& dd,
                       const JumpKernel& k) {
    CsvBuilder csv({"t", "r_lo", "r_hi", "p_hat", "stderr", "regime", "upper", "lower"});
    const double theta0 = dd.fit_ok ? dd.fit.theta0 : 0.1;
    for (const auto& e : dd.ests) {
        std::vector<RegimeBound> bounds;
        if (dd.fit_ok && e.t >= dd.fit.t0) {
            std::vector<double> mids;
            for (std::size_t s = 0; s + 1 < e.shell_edges.size(); ++s)
                mids.push_back(e.shell_mid(s));
            bounds = bound_curves(k, e.t, mids, dd.fit);
        }
        for (std::size_t s = 0; s + 1 < e.shell_edges.size(); ++s) {
            const double r = e.shell_mid(s);
            std::vector<std::string> row{
                format_full(e.t),
                format_full(e.shell_edges[s]),
                format_full(e.shell_edges[s + 1]),
                format_full(e.p_hat[s]),
                format_full(e.std_err[s]),
                regime_name(classify_regime(e.t, r, k, theta0)),
                bounds.empty() ? "nan" : format_full(bounds[s].upper),
                bounds.empty() || !bounds[s].lower ? "nan" : format_full(*bounds[s].lower)};
            csv.add(std::move(row));
        }
    }
    write_file(ctx.path(file), csv.str(ctx.digest));
}

void write_density_svg(const RunContext& ctx, const std::string& file, const DensityData& dd,
                       const JumpKernel& k) {
    PlotSpec spec;
    spec.title = "radial density vs bounds";
    spec.xlabel = "r";
    spec.ylabel = "p(t,0,r)";
    spec.logx = true;
    spec.logy = true;
    const double theta0 = dd.fit_ok ? dd.fit.theta0 : 0.1;
    int lane = 0;
    for (const auto& e : dd.ests) {
        PlotSeries pts;
        pts.name = "p_hat t=" + format_short(e.t);
        pts.points_only = true;
        std::vector<double> mids;
        for (std::size_t s = 0; s + 1 < e.shell_edges.size(); ++s) {
            const double r = e.shell_mid(s);
            mids.push_back(r);
            if (e.p_hat[s] > 0.0) {
                pts.x.push_back(r);
                pts.y.push_back(e.p_hat[s]);
            }
        }
        spec.series.push_back(std::move(pts));
        if (dd.fit_ok && e.t >= dd.fit.t0) {
            auto bounds = bound_curves(k, e.t, mids, dd.fit);
            PlotSeries up, lo;
            up.name = "upper t=" + format_short(e.t);
            lo.name = "lower t=" + format_short(e.t);
            up.dashed = lo.dashed = true;
            for (const auto& b : bounds) {
                up.x.push_back(b.r);
                up.y.push_back(b.upper);
                if (b.lower) {
                    lo.x.push_back(b.r);
                    lo.y.push_back(*b.lower);
                }
            }
            spec.series.push_back(std::move(up));
            if (!lo.x.empty()) spec.series.push_back(std::move(lo));
        }
        // three labeled regime spans per observation time
        double r_gauss = mids.empty() ? 1.0 : mids.front();
        double r_far = mids.empty() ? 1.0 : mids.back();
        bool saw_gauss = false, saw_far = false;
        for (double r : mids) {
            const Regime reg = classify_regime(e.t, r, k, theta0);
            if (reg == Regime::gaussian && !saw_gauss) {
                r_gauss = r;
                saw_gauss = true;
            }
            if (reg == Regime::far && !saw_far) {
                r_far = r;
                saw_far = true;
            }
        }
        if (!mids.empty()) {
            const std::string ts = " t=" + format_short(e.t);
            spec.spans.push_back(
                {"ondiag" + ts, mids.front(), saw_gauss ? r_gauss : mids.back(), lane, "#2b8a3e"});
            if (saw_gauss)
                spec.spans.push_back(
                    {"gauss" + ts, r_gauss, saw_far ? r_far : mids.back(), lane, "#d45500"});
            if (saw_far) spec.spans.push_back({"far" + ts, r_far, mids.back(), lane, "#a11d33"});
        }
        ++lane;
    }
    write_file(ctx.path(file), render_svg(spec, ctx.digest));
}

Err stage_density(RunContext& ctx) {
    const JumpKernel k = kernel_from_config(ctx.cfg);
    PathsFile pf = load_paths(ctx);
    require(pf.digest == ctx.digest, Err::config,
            "paths file digest mismatch; regenerate with the current config");
    require(pf.d == k.d, Err::config, "paths file dimension mismatch");

    std::vector<double> t_list;
    for (double t : pf.times)
        if (t > 0.0) t_list.push_back(t);
    require(!t_list.empty(), Err::config, "paths file has no positive observation times");

    double shell_max = ctx.cfg.get_double("density.shell_max", 0.0);
    if (shell_max <= 0.0) {
        double sigma2 = 0.0;
        try {
            sigma2 = second_moment(k);
        } catch (const JlError&) {
            sigma2 = 0.0;
        }
        if (sigma2 > 0.0) {
            shell_max = 30.0 * std::sqrt(sigma2 * t_list.back());
        } else {
            double rmax = 1.0;
            for (std::uint64_t p = 0; p < pf.n_paths; ++p)
                for (std::size_t ti = 0; ti < pf.times.size(); ++ti) {
                    const double* x = pf.at(p, ti);
                    double r2 = 0.0;
                    for (int c = 0; c < k.d; ++c) r2 += x[c] * x[c];
                    rmax = std::max(rmax, std::sqrt(r2));
                }
            shell_max = 2.0 * rmax;
        }
    }
    const double shell_min = ctx.cfg.get_double("density.shell_min", 0.5);
    const int per_decade = int(ctx.cfg.get_int("density.shells_per_decade", 16));
    const double h_rel = ctx.cfg.get_double("density.h_rel", 0.25);
    const auto edges = make_shell_edges(shell_min, shell_max, per_decade);

    DensityData dd;
    std::vector<double> buf(pf.n_paths * std::size_t(k.d));
    std::vector<ordered_json> hrel_rows;
    for (double t : t_list) {
        const std::size_t ti =
            std::size_t(std::find(pf.times.begin(), pf.times.end(), t) - pf.times.begin());
        for (std::uint64_t p = 0; p < pf.n_paths; ++p) {
            const double* x = pf.at(p, ti);
            for (int c = 0; c < k.d; ++c) buf[p * std::size_t(k.d) + c] = x[c];
        }
        dd.ests.push_back(
            estimate_radial_density(buf.data(), pf.n_paths, k.d, t, edges, h_rel));
        // on-diagonal sensitivity in the ball radius
        ordered_json row;
        row["t"] = t;
        for (double hr : {0.125, 0.25, 0.5}) {
            std::uint64_t cnt = 0;
            const double h = hr * std::sqrt(t);
            for (std::uint64_t p = 0; p < pf.n_paths; ++p) {
                const double* x = pf.at(p, ti);
                double r2 = 0.0;
                for (int c = 0; c < k.d; ++c) r2 += x[c] * x[c];
                if (std::sqrt(r2) <= h) ++cnt;
            }
            row["h_rel_" + format_short(hr)] =
                double(cnt) / (double(pf.n_paths) * ball_volume(k.d, h));
        }
        hrel_rows.push_back(row);
    }

    try {
        dd.fit = fit_constants(dd.ests, k);
        dd.fit_ok = true;
    } catch (const JlError& e) {
        dd.fit_error = e.what();
    }

    write_density_csv(ctx, "density.csv", dd, k);
    write_density_svg(ctx, "density.svg", dd, k);

    std::vector<CheckResult> checks;
    ordered_json per_t = ordered_json::array();
    for (const auto& e : dd.ests) {
        ordered_json j;
        j["t"] = e.t;
        j["n_samples"] = e.n_samples;
        j["total_mass"] = e.total_mass;
        j["mass_stderr"] = e.mass_stderr;
        j["on_diagonal"] = e.on_diagonal;
        j["on_diagonal_stderr"] = e.on_diagonal_stderr;
        j["ball_radius"] = e.ball_radius;
        per_t.push_back(j);
        const bool ok = e.total_mass >= 0.97 && e.total_mass <= 1.0 + 3.0 * e.mass_stderr;
        checks.push_back({"mass_conservation_t=" + format_short(e.t), ok, e.total_mass});
    }

    ordered_json j;
    j["config_digest"] = digest_hex(ctx.digest);
    j["per_t"] = per_t;
    j["on_diagonal_sensitivity"] = hrel_rows;
    j["fit_ok"] = dd.fit_ok;
    if (dd.fit_ok)
        j["fit"] = ordered_json::parse(dd.fit.to_json(ctx.digest));
    else
        j["fit_error"] = dd.fit_error;
    j["shell_edges"] = edges;
    j["checks"] = checks_json(checks);
    write_file(ctx.path("density_summary.json"), j.dump(2) + "\n");

    if (!all_pass(checks)) {
        ctx.last_error = "check=mass_conservation pass=false";
        return Err::check_failed;
    }
    return Err::ok;
}

FitConstants fit_from_summary(const ordered_json& j) {
    FitConstants f;
    const auto& s = j.at("fit");
    f.c1 = s.at("c1").get<double>();
    f.ondiag_slope = s.at("ondiag_slope").get<double>();
    f.c2 = s.at("c2").get<double>();
    f.gauss_level = s.at("gauss_level").get<double>();
    f.gauss_r2 = s.at("gauss_r2").get<double>();
    f.theta0 = s.at("theta0").get<double>();
    f.t0 = s.at("t0").get<double>();
    f.far_coeff = s.at("far_coeff").get<double>();
    f.margin = s.at("margin").get<double>();
    f.c2_spread = s.at("c2_spread").get<double>();
    f.kappa_far = s.at("kappa_far").get<double>();
    f.n_ondiag = s.at("n_ondiag").get<int>();
    f.n_gauss = s.at("n_gauss").get<int>();
    f.n_far = s.at("n_far").get<int>();
    return f;
}

Err stage_bounds(RunContext& ctx) {
    const JumpKernel k = kernel_from_config(ctx.cfg);
    require(file_exists(ctx.path("density_summary.json")), Err::missing_input,
            "density_summary.json missing; run density first");
    require(file_exists(ctx.path("density.csv")), Err::missing_input,
            "density.csv missing; run density first");
    ordered_json summary = ordered_json::parse(read_file(ctx.path("density_summary.json")));
    require(summary.at("config_digest").get<std::string>() == digest_hex(ctx.digest), Err::config,
            "density_summary.json digest mismatch");
    require(summary.at("fit_ok").get<bool>(), Err::missing_input,
            "density summary lacks fitted constants");
    const FitConstants fit = fit_from_summary(summary);

    const CsvTable table = parse_csv(read_file(ctx.path("density.csv")));
    require(table.has_digest && table.digest == ctx.digest, Err::config,
            "density.csv digest mismatch");
    const int c_t = table.col("t"), c_lo = table.col("r_lo"), c_hi = table.col("r_hi"),
              c_p = table.col("p_hat"), c_se = table.col("stderr");
    require(c_t >= 0 && c_lo >= 0 && c_hi >= 0 && c_p >= 0 && c_se >= 0, Err::parse,
            "density.csv lacks required columns");

    std::map<double, std::uint64_t> n_samples;
    for (const auto& row : summary.at("per_t"))
        n_samples[row.at("t").get<double>()] = row.at("n_samples").get<std::uint64_t>();

    struct Cell {
        double t, r_lo, r_hi, p, se;
        std::uint64_t count;
    };
    std::vector<Cell> cells;
    for (const auto& row : table.rows) {
        Cell c;
        c.t = std::stod(row[std::size_t(c_t)]);
        c.r_lo = std::stod(row[std::size_t(c_lo)]);
        c.r_hi = std::stod(row[std::size_t(c_hi)]);
        c.p = std::stod(row[std::size_t(c_p)]);
        c.se = std::stod(row[std::size_t(c_se)]);
        const double vol = ball_volume(k.d, c.r_hi) - ball_volume(k.d, c.r_lo);
        c.count = std::uint64_t(std::llround(c.p * vol * double(n_samples[c.t])));
        cells.push_back(c);
    }

    // regime-wise curve table (bounds.csv)
    CsvBuilder bcsv({"t", "r_lo", "r_hi", "p_hat", "stderr", "regime", "upper", "lower"});
    std::map<double, std::vector<Cell>> by_t;
    for (const auto& c : cells) by_t[c.t].push_back(c);
    for (auto& [t, tc] : by_t) {
        if (t < fit.t0) continue;
        std::vector<double> mids;
        for (const auto& c : tc) mids.push_back(std::sqrt(std::max(c.r_lo, 1e-12) * c.r_hi));
        auto bounds = bound_curves(k, t, mids, fit);
        for (std::size_t i = 0; i < tc.size(); ++i)
            bcsv.add({format_full(t), format_full(tc[i].r_lo), format_full(tc[i].r_hi),
                      format_full(tc[i].p), format_full(tc[i].se), regime_name(bounds[i].regime),
                      format_full(bounds[i].upper),
                      bounds[i].lower ? format_full(*bounds[i].lower) : "nan"});
    }
    write_file(ctx.path("bounds.csv"), bcsv.str(ctx.digest));

    // Davies strategy table and the dominance check
    DaviesOptions opt;
    opt.theta0 = fit.theta0;
    opt.kappa = fit.kappa_far;
    opt.prefactor = fit.margin * fit.c1;
    CsvBuilder dcsv({"t", "R", "strategy", "lambda", "Lambda", "E", "log_bound", "meyer_term"});
    std::uint64_t n_cells = 0, n_dominated = 0;
    std::vector<double> env_x, env_y, phat_x, phat_y;
    for (auto& [t, tc] : by_t) {
        if (t < fit.t0) continue;
        for (const auto& c : tc) {
            const double R = std::sqrt(std::max(c.r_lo, 1e-12) * c.r_hi);
            if (t >= R * R) continue;  // Davies strategies are off-diagonal
            double envelope = std::numeric_limits<double>::infinity();
            for (DaviesStrategy s :
                 {DaviesStrategy::polynomial, DaviesStrategy::gaussian_regime,
                  DaviesStrategy::far_regime, DaviesStrategy::loglog_refined}) {
                try {
                    const DaviesBound b = davies_bound(k, t, R, s, opt);
                    envelope = std::min(envelope, b.bound_value);
                    dcsv.add({format_full(t), format_full(R), strategy_name(s),
                              format_full(b.lambda_used), format_full(b.Lambda_majorant),
                              format_full(b.E_value), format_full(b.log_bound),
                              format_full(b.meyer_term)});
                } catch (const JlError&) {
                    // outside this strategy's validity range
                }
            }
            if (std::isfinite(envelope)) {
                env_x.push_back(R);
                env_y.push_back(envelope);
                if (c.p > 0.0) {
                    phat_x.push_back(R);
                    phat_y.push_back(c.p);
                }
                if (c.count >= 50) {
                    ++n_cells;
                    if (c.p <= envelope) ++n_dominated;
                }
            }
        }
    }
    write_file(ctx.path("davies.csv"), dcsv.str(ctx.digest));

    std::vector<CheckResult> checks;
    const double coverage = n_cells ? double(n_dominated) / double(n_cells) : 1.0;
    checks.push_back({"davies_envelope_coverage", coverage >= 0.95, coverage});

    if (k.d == 1 && !k.modulation.enabled) {
        CounterRng rng(ctx.digest, 7, 7);
        int bad = 0;
        const int cases = 20;
        for (int i = 0; i < cases; ++i) {
            const double lambda = 0.01 + 1.99 * rng.next_unit();
            const double K = 0.5 + 7.5 * rng.next_unit();
            const double R = 5.0;
            const double x = (2.0 * rng.next_unit() - 1.0) * (R + K);
            TestFunction tf{lambda, R};
            const double exact = gamma_exact_point(k, tf, x, K);
            const double major = gamma_majorant(k, lambda, K);
            if (exact > major * (1.0 + 1e-9) + 1e-12) ++bad;
        }
        checks.push_back({"gamma_majorant_dominance", bad == 0, double(cases - bad)});
    }

    PlotSpec spec;
    spec.title = "density vs davies envelope";
    spec.xlabel = "R";
    spec.ylabel = "p / bound";
    spec.logx = spec.logy = true;
    PlotSeries pe;
    pe.name = "davies envelope";
    pe.x = env_x;
    pe.y = env_y;
    pe.points_only = true;
    PlotSeries pp;
    pp.name = "p_hat";
    pp.x = phat_x;
    pp.y = phat_y;
    pp.points_only = true;
    spec.series.push_back(pp);
    spec.series.push_back(pe);
    write_file(ctx.path("bounds_overlay.svg"), render_svg(spec, ctx.digest));

    ordered_json j;
    j["config_digest"] = digest_hex(ctx.digest);
    j["coverage"] = coverage;
    j["n_cells"] = n_cells;
    j["checks"] = checks_json(checks);
    write_file(ctx.path("bounds_summary.json"), j.dump(2) + "\n");

    if (!all_pass(checks)) {
        ctx.last_error = "check=bounds pass=false";
        return Err::check_failed;
    }
    return Err::ok;
}

Err stage_lil(RunContext& ctx) {
    const JumpKernel k = kernel_from_config(ctx.cfg);
    LilConfig lcfg;
    lcfg.k_min = int(ctx.cfg.get_int("lil.k_min", 8));
    lcfg.k_max = int(ctx.cfg.get_int("lil.k_max", 18));
    lcfg.n_paths = ctx.cfg.get_uint("lil.n_paths", 2000);
    lcfg.observations_per_block = int(ctx.cfg.get_int("lil.obs_per_block", 64));
    lcfg.c_small = ctx.cfg.get_double("lil.c_small", 0.1);
    lcfg.delta = ctx.cfg.get_double("sampler.delta", 0.1);
    lcfg.any_from_k = int(ctx.cfg.get_int("lil.any_from_k", 10));
    if (ctx.cfg.has("lil.C_grid")) {
        lcfg.C_grid = ctx.cfg.get_list("lil.C_grid");
    } else {
        const double sigma = std::sqrt(second_moment(k));
        for (double m : ctx.cfg.get_list("lil.C_mults", {2.0, 4.0, 8.0}))
            lcfg.C_grid.push_back(m * sigma);
    }
    const std::uint64_t seed = ctx.cfg.get_uint("seed", 1);
    const ExceedanceTable tbl = run_lil_experiment(k, lcfg, seed, ctx.threads);

    CsvBuilder csv({"k", "C", "p_hat", "stderr", "bc_partial_sum", "b_k_freq"});
    for (std::size_t ki = 0; ki < tbl.ks.size(); ++ki)
        for (std::size_t ci = 0; ci < tbl.Cs.size(); ++ci)
            csv.add({std::to_string(tbl.ks[ki]), format_full(tbl.Cs[ci]),
                     format_full(tbl.p_hat[ki][ci]), format_full(tbl.std_err[ki][ci]),
                     format_full(tbl.bc_partial[ki][ci]), format_full(tbl.b_freq[ki])});
    write_file(ctx.path("lil.csv"), csv.str(ctx.digest));

    // envelope C2 / k^{1+eps} against the per-block exceedance probabilities
    double eps_env = 1.0;
    if (k.profile.family == ProfileFamily::poly_log || k.profile.family == ProfileFamily::power_law)
        eps_env = k.profile.param;
    PlotSpec spec;
    spec.title = "block exceedance probabilities";
    spec.xlabel = "k";
    spec.ylabel = "p_hat";
    spec.logy = true;
    for (std::size_t ci = 0; ci < tbl.Cs.size(); ++ci) {
        PlotSeries s;
        s.name = "C=" + format_short(tbl.Cs[ci]);
        double c2 = 0.0;
        for (std::size_t ki = 0; ki < tbl.ks.size(); ++ki) {
            if (tbl.p_hat[ki][ci] > 0.0) {
                s.x.push_back(tbl.ks[ki]);
                s.y.push_back(tbl.p_hat[ki][ci]);
                c2 = std::max(c2, tbl.p_hat[ki][ci] * std::pow(double(tbl.ks[ki]), 1.0 + eps_env));
            }
        }
        if (s.x.empty()) continue;
        spec.series.push_back(s);
        PlotSeries env;
        env.name = "C2/k^(1+eps) C=" + format_short(tbl.Cs[ci]);
        env.dashed = true;
        for (int kk = lcfg.k_min; kk <= lcfg.k_max; ++kk) {
            env.x.push_back(kk);
            env.y.push_back(c2 * std::pow(double(kk), -1.0 - eps_env));
        }
        spec.series.push_back(env);
    }
    if (spec.series.empty()) {
        PlotSeries s;
        s.name = "b_k frequency";
        for (std::size_t ki = 0; ki < tbl.ks.size(); ++ki) {
            s.x.push_back(tbl.ks[ki]);
            s.y.push_back(std::max(tbl.b_freq[ki], 1e-12));
        }
        spec.series.push_back(s);
    }
    write_file(ctx.path("lil.svg"), render_svg(spec, ctx.digest));

    std::vector<CheckResult> checks;
    std::vector<std::string> enabled;
    {
        std::istringstream in(ctx.cfg.get_string("lil.checks", ""));
        std::string item;
        while (std::getline(in, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            if (b == std::string::npos) continue;
            const auto e = item.find_last_not_of(" \t");
            enabled.push_back(item.substr(b, e - b + 1));
        }
    }
    ordered_json extra;
    for (const std::string& name : enabled) {
        if (name == "part1") {
            const std::size_t ci = tbl.Cs.size() - 1;  // largest C
            const double frac = tbl.any_exceedance_from_k[ci];
            checks.push_back({"part1_any_exceedance_lt_5pct", frac < 0.05, frac});
            const double last_inc = tbl.p_hat.back()[ci];
            checks.push_back({"part1_bc_increment_lt_1e-2", last_inc < 1e-2, last_inc});
        } else if (name == "part2") {
            const double min_freq = *std::min_element(tbl.b_freq.begin(), tbl.b_freq.end());
            const double floor = ctx.cfg.get_double("lil.part2_min_freq", 0.2);
            checks.push_back({"part2_min_block_freq", min_freq >= floor, min_freq});
        } else if (name == "exit") {
            const auto r_grid = ctx.cfg.get_list("exit.r_grid");
            const auto t_grid = ctx.cfg.get_list("exit.t_grid");
            const std::uint64_t n = ctx.cfg.get_uint("exit.n_paths", 5000);
            const ExitTimeTable et =
                exit_time_bound_check(k, r_grid, t_grid, n, seed, ctx.threads, lcfg.delta);
            CsvBuilder ecsv({"r", "t", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "margin"});
            bool ok = true;
            double worst = std::numeric_limits<double>::infinity();
            for (std::size_t ri = 0; ri < r_grid.size(); ++ri)
                for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
                    const std::size_t i = ri * t_grid.size() + ti;
                    const double slack =
                        3.0 * std::hypot(et.lhs_se[i], et.rhs_se[i]);
                    if (et.margin[i] < -slack) ok = false;
                    worst = std::min(worst, et.margin[i] + slack);
                    ecsv.add({format_full(r_grid[ri]), format_full(t_grid[ti]),
                              format_full(et.lhs[i]), format_full(et.lhs_se[i]),
                              format_full(et.rhs[i]), format_full(et.rhs_se[i]),
                              format_full(et.margin[i])});
                }
            write_file(ctx.path("exit.csv"), ecsv.str(ctx.digest));
            checks.push_back({"exit_time_inequality", ok, worst});
        } else {
            fail(Err::config, "unknown lil check '" + name + "'");
        }
    }

    ordered_json j;
    j["config_digest"] = digest_hex(ctx.digest);
    j["k_range"] = {lcfg.k_min, lcfg.k_max};
    j["C_grid"] = tbl.Cs;
    j["any_exceedance_from_k10"] = tbl.any_exceedance_from_k;
    j["b_freq"] = tbl.b_freq;
    j["checks"] = checks_json(checks);
    write_file(ctx.path("lil_summary.json"), j.dump(2) + "\n");

    if (!all_pass(checks)) {
        ctx.last_error = "check=lil pass=false";
        return Err::check_failed;
    }
    return Err::ok;
}

Err stage_report(RunContext& ctx) {
    const char* files[] = {"kernel_report.json", "stage_sample_paths.json",
                           "density_summary.json", "bounds_summary.json", "lil_summary.json"};
    ordered_json stages = ordered_json::array();
    bool found = false, pass = true;
    ordered_json fit;
    for (const char* f : files) {
        if (!file_exists(ctx.path(f))) continue;
        found = true;
        ordered_json j = ordered_json::parse(read_file(ctx.path(f)));
        require(j.contains("config_digest"), Err::parse, std::string(f) + " lacks a digest");
        require(j["config_digest"].get<std::string>() == digest_hex(ctx.digest), Err::config,
                std::string("digest mismatch in ") + f);
        ordered_json entry;
        entry["file"] = f;
        if (j.contains("checks")) {
            entry["checks"] = j["checks"];
            for (const auto& c : j["checks"])
                if (!c.at("pass").get<bool>()) pass = false;
        }
        if (std::string(f) == "kernel_report.json")
            entry["assumption_A_ok"] = j.at("assumption_A_ok");
        if (std::string(f) == "density_summary.json" && j.at("fit_ok").get<bool>())
            fit = j.at("fit");
        stages.push_back(entry);
    }
    require(found, Err::missing_input, "no stage outputs found; run stages before report");

    ordered_json j;
    j["config_digest"] = digest_hex(ctx.digest);
    j["version"] = kVersion;
    j["stages"] = stages;
    if (!fit.is_null()) j["fitted_constants"] = fit;
    j["all_checks_pass"] = pass;
    j["timings_log"] = "timings.log";
    write_file(ctx.path("run_summary.json"), j.dump(2) + "\n");
    if (!pass) {
        ctx.last_error = "check=aggregate pass=false";
        return Err::check_failed;
    }
    return Err::ok;
}

}  // namespace

RunContext RunContext::open_file(const std::string& config_path) {
    RunContext ctx;
    ctx.cfg = Config::parse_file(config_path);
    ctx.out_dir = ctx.cfg.get_string("output.dir", ".");
    ctx.threads = int(ctx.cfg.get_int("threads", 0));
    ctx.digest = ctx.cfg.digest();
    return ctx;
}

RunContext RunContext::open_text(const std::string& config_text) {
    RunContext ctx;
    ctx.cfg = Config::parse_text(config_text);
    ctx.out_dir = ctx.cfg.get_string("output.dir", ".");
    ctx.threads = int(ctx.cfg.get_int("threads", 0));
    ctx.digest = ctx.cfg.digest();
    return ctx;
}

void RunContext::override_seed(std::uint64_t seed) {
    cfg.set("seed", std::to_string(seed));
    digest = cfg.digest();
}

void RunContext::override_threads(int t) { threads = t; }

void RunContext::override_out_dir(const std::string& dir) { out_dir = dir; }

std::string RunContext::path(const std::string& file) const {
    if (out_dir.empty() || out_dir == ".") return file;
    return out_dir + "/" + file;
}

Err run_stage(RunContext& ctx, const std::string& stage) {
    const auto start = std::chrono::steady_clock::now();
    Err result = Err::unknown;
    try {
        if (stage == "check-kernel")
            result = stage_check_kernel(ctx);
        else if (stage == "sample-paths")
            result = stage_sample_paths(ctx);
        else if (stage == "density")
            result = stage_density(ctx);
        else if (stage == "bounds")
            result = stage_bounds(ctx);
        else if (stage == "lil")
            result = stage_lil(ctx);
        else if (stage == "report")
            result = stage_report(ctx);
        else
            fail(Err::config, "unknown stage '" + stage + "'");
    } catch (const JlError& e) {
        ctx.last_error = std::string("stage=") + stage + " error=" + e.what();
        result = e.code();
    } catch (const std::exception& e) {
        ctx.last_error = std::string("stage=") + stage + " error=" + e.what();
        result = Err::unknown;
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    try {
        log_timing(ctx, stage, ms);
    } catch (...) {
    }
    return result;
}

}  // namespace jumplab
