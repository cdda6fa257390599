#include "kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "quadrature.hpp"

#include <json.hpp>

namespace jumplab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kEE = std::exp(std::exp(1.0));  // e^e

std::string fmt17(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace

const char* family_name(ProfileFamily f) {
    switch (f) {
        case ProfileFamily::power_law: return "power_law";
        case ProfileFamily::poly_log: return "poly_log";
        case ProfileFamily::log_iterated: return "log_iterated";
        case ProfileFamily::exponential: return "exponential";
        case ProfileFamily::constant: return "constant";
        case ProfileFamily::truncated: return "truncated";
    }
    return "?";
}

std::optional<ProfileFamily> family_from_name(const std::string& name) {
    for (ProfileFamily f : {ProfileFamily::power_law, ProfileFamily::poly_log,
                            ProfileFamily::log_iterated, ProfileFamily::exponential,
                            ProfileFamily::constant, ProfileFamily::truncated})
        if (name == family_name(f)) return f;
    return std::nullopt;
}

TailProfile TailProfile::power_law(double eps) { return {ProfileFamily::power_law, eps, 0.0, 0.0}; }
TailProfile TailProfile::poly_log(double eps) { return {ProfileFamily::poly_log, eps, 0.0, 0.0}; }
TailProfile TailProfile::log_iterated(double theta) {
    return {ProfileFamily::log_iterated, theta, 0.0, 0.0};
}
TailProfile TailProfile::exponential(double c, double beta) {
    return {ProfileFamily::exponential, c, beta, 0.0};
}
TailProfile TailProfile::constant() { return {ProfileFamily::constant, 0.0, 0.0, 0.0}; }
TailProfile TailProfile::truncated(double r_max) {
    return {ProfileFamily::truncated, 0.0, 0.0, r_max};
}

void TailProfile::validate() const {
    switch (family) {
        case ProfileFamily::power_law:
        case ProfileFamily::poly_log:
        case ProfileFamily::log_iterated:
            require(param > 0.0, Err::config, "profile parameter must be positive");
            break;
        case ProfileFamily::exponential:
            require(param > 0.0, Err::config, "exponential profile needs c > 0");
            require(param2 > 0.0 && param2 <= 1.0, Err::config,
                    "exponential profile needs beta in (0,1]");
            break;
        case ProfileFamily::constant:
            break;
        case ProfileFamily::truncated:
            require(r_max > 1.0, Err::config, "truncation radius must exceed 1");
            break;
    }
}

double TailProfile::phi(double r) const {
    switch (family) {
        case ProfileFamily::power_law: return std::pow(r, param);
        case ProfileFamily::poly_log: return std::pow(std::log(M_E + r), 1.0 + param);
        case ProfileFamily::log_iterated:
            return std::log(M_E + r) * std::pow(std::log(std::log(kEE + r)), 1.0 + param);
        case ProfileFamily::exponential: return std::exp(param * std::pow(r, param2));
        case ProfileFamily::constant: return 1.0;
        case ProfileFamily::truncated: return r <= r_max ? 1.0 : kInf;
    }
    return 1.0;
}

double TailProfile::phi_log_r(double t) const {
    switch (family) {
        case ProfileFamily::power_law: return std::exp(param * t);
        case ProfileFamily::poly_log: {
            // log(e + e^t) = t + log1p(e e^{-t})
            const double l = t > 30.0 ? t + std::log1p(M_E * std::exp(-t))
                                      : std::log(M_E + std::exp(t));
            return std::pow(l, 1.0 + param);
        }
        case ProfileFamily::log_iterated: {
            const double l1 = t > 30.0 ? t + std::log1p(M_E * std::exp(-t))
                                       : std::log(M_E + std::exp(t));
            const double l2 = t > 30.0 ? t + std::log1p(kEE * std::exp(-t))
                                       : std::log(kEE + std::exp(t));
            return l1 * std::pow(std::log(l2), 1.0 + param);
        }
        case ProfileFamily::exponential: return std::exp(param * std::exp(param2 * t));
        case ProfileFamily::constant: return 1.0;
        case ProfileFamily::truncated: return t <= std::log(r_max) ? 1.0 : kInf;
    }
    return 1.0;
}

double TailProfile::tail_integral(double s) const {
    require(s >= 1.0, Err::domain, "tail integral defined for s >= 1");
    switch (family) {
        case ProfileFamily::power_law:
            return std::pow(s, -param) / param;
        case ProfileFamily::constant:
            return kInf;
        case ProfileFamily::truncated:
            return s < r_max ? std::log(r_max / s) : 0.0;
        case ProfileFamily::poly_log: {
            // w = log(e+r):  I = W^{-eps}/eps + int_W^inf e w^{-1-eps}/(e^w - e) dw,
            // the correction integrand decaying like e^{-w}.
            const double eps = param;
            const double W = std::log(M_E + s);
            auto corr = [eps](double w) {
                return M_E * std::pow(w, -1.0 - eps) / (std::exp(w) - M_E);
            };
            QuadResult q = integrate(corr, W, W + 80.0, 1e-11);
            check_converged(q, "poly_log tail integral");
            return std::pow(W, -eps) / eps + q.value;
        }
        case ProfileFamily::log_iterated: {
            // u = log log(e^e + r):  I = U^{-theta}/theta + int (G(u)-1) u^{-1-theta} du
            // with G(u) - 1 double-exponentially small; cancellation-free form below.
            const double th = param;
            const double U = std::log(std::log(kEE + s));
            const double u_cut = std::log(50.0);  // beyond: x = e^{e^u} makes G-1 < 1e-20
            double corr = 0.0;
            if (U < u_cut) {
                auto g = [th](double u) {
                    const double y = std::exp(u);
                    const double x = std::exp(y);
                    const double lp = std::log1p((M_E - kEE) / x);
                    const double L = y + lp;
                    const double gm1 = (kEE * y - (x - kEE) * lp) / ((x - kEE) * L);
                    return gm1 * std::pow(u, -1.0 - th);
                };
                QuadResult q = integrate(g, U, u_cut, 1e-11);
                check_converged(q, "log_iterated tail integral");
                corr = q.value;
            }
            return std::pow(U, -th) / th + corr;
        }
        case ProfileFamily::exponential: {
            // t = log r: integrand exp(-c e^{beta t}) decays double-exponentially.
            const double c = param, beta = param2;
            const double t0 = std::log(s);
            const double t1 = std::log(745.0 / c) / beta;
            if (t1 <= t0) return 0.0;  // below double-precision resolution
            auto g = [c, beta](double t) { return std::exp(-c * std::exp(beta * t)); };
            QuadResult q = integrate(g, t0, t1, 1e-11);
            check_converged(q, "exponential tail integral");
            return q.value;
        }
    }
    return 0.0;
}

double TailProfile::tail_integral_quad(double s) const {
    require(s >= 1.0, Err::domain, "tail integral defined for s >= 1");
    if (family == ProfileFamily::constant) return kInf;
    if (family == ProfileFamily::truncated)
        return s < r_max ? std::log(r_max / s) : 0.0;
    const double t0 = std::log(s);
    auto g = [this](double t) {
        const double p = phi_log_r(t);
        return std::isinf(p) ? 0.0 : 1.0 / p;
    };
    switch (family) {
        case ProfileFamily::power_law: {
            QuadResult q = integrate(g, t0, t0 + 40.0 / param, 1e-10);
            check_converged(q, "power_law tail quadrature");
            return q.value;
        }
        case ProfileFamily::exponential: {
            const double t1 = std::max(t0, std::log(745.0 / param) / param2);
            QuadResult q = integrate(g, t0, t1, 1e-10);
            check_converged(q, "exponential tail quadrature");
            return q.value;
        }
        case ProfileFamily::log_iterated: {
            // integrand decays only logarithmically in t, so transform once
            // more (t = e^u) before the 1/u tail map
            const double t_star = std::max(t0, 1.0);
            double head = 0.0;
            if (t0 < t_star) {
                QuadResult qh = integrate(g, t0, t_star, 1e-10);
                check_converged(qh, "log_iterated head quadrature");
                head = qh.value;
            }
            // e^u / phi(e^{e^u}) = u^{-1-theta} up to O(e^{-e^u}) corrections
            const double th = param;
            auto h = [this, th](double u) {
                if (u > 30.0) return std::pow(u, -1.0 - th);
                const double t = std::exp(u);
                const double p = phi_log_r(t);
                return std::isinf(p) ? 0.0 : t / p;
            };
            QuadResult q = integrate_to_inf(h, std::log(t_star), 1e-9);
            check_converged(q, "log_iterated tail quadrature");
            return head + q.value;
        }
        default: {
            QuadResult q = integrate_to_inf(g, t0, 1e-9);
            check_converged(q, "profile tail quadrature");
            return q.value;
        }
    }
}

double Modulation::value(const double* x, const double* y, int d) const {
    if (!enabled) return 1.0;
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += x[i] + y[i];
    return lo + (hi - lo) * 0.5 * (1.0 + std::cos(s));
}

void JumpKernel::validate() const {
    require(d >= 1, Err::config, "dimension must be a positive integer");
    require(alpha > 0.0 && alpha < 2.0, Err::config, "alpha must lie in (0,2)");
    require(kappa >= 0.0, Err::config, "kappa must be nonnegative");
    require(c_tail >= 0.0, Err::config, "c_tail must be nonnegative");
    profile.validate();
    if (modulation.enabled)
        require(modulation.lo > 0.0 && modulation.lo <= modulation.hi, Err::config,
                "modulation requires 0 < lo <= hi");
}

std::string JumpKernel::canonical_string() const {
    std::ostringstream os;
    os << "d=" << d << ";alpha=" << fmt17(alpha) << ";kappa=" << fmt17(kappa)
       << ";c_tail=" << fmt17(c_tail) << ";profile=" << family_name(profile.family)
       << ";param=" << fmt17(profile.param) << ";param2=" << fmt17(profile.param2)
       << ";r_max=" << fmt17(profile.r_max);
    if (modulation.enabled)
        os << ";mod_lo=" << fmt17(modulation.lo) << ";mod_hi=" << fmt17(modulation.hi);
    return os.str();
}

double eval_j(const JumpKernel& k, double r) {
    require(r > 0.0, Err::domain, "eval_j needs r > 0");
    if (r < 1.0) return k.kappa * std::pow(r, -double(k.d) - k.alpha);
    const double p = k.profile.phi(r);
    if (std::isinf(p)) return 0.0;
    return k.c_tail * std::pow(r, -double(k.d) - 2.0) / p;
}

PhiValue capital_phi(const TailProfile& p, double s) {
    require(s >= 1.0, Err::domain, "capital_phi needs s >= 1");
    if (p.family == ProfileFamily::constant) return {0.0, true};
    const double I = p.tail_integral(s);
    if (I == 0.0) return {kInf, false};
    return {1.0 / I, false};
}

PhiValue capital_phi_quad(const TailProfile& p, double s) {
    require(s >= 1.0, Err::domain, "capital_phi needs s >= 1");
    if (p.family == ProfileFamily::constant) return {0.0, true};
    const double I = p.tail_integral_quad(s);
    if (I == 0.0) return {kInf, false};
    return {1.0 / I, false};
}

SecondMoment second_moment_parts(const JumpKernel& k) {
    require(k.profile.family != ProfileFamily::constant, Err::domain,
            "second moment diverges for the constant profile");
    SecondMoment m;
    const double w = k.omega();
    m.small = w * k.kappa / (2.0 - k.alpha);
    m.tail = w * k.c_tail * k.profile.tail_integral(1.0);
    m.total = m.small + m.tail;
    m.lower = k.modulation.enabled ? k.modulation.lo * m.total : m.total;
    m.upper = k.modulation.enabled ? k.modulation.hi * m.total : m.total;
    return m;
}

double second_moment(const JumpKernel& k) { return second_moment_parts(k).upper; }

double radial_tail_integral(const TailProfile& p, double K) {
    switch (p.family) {
        case ProfileFamily::power_law:
            return std::pow(K, -2.0 - p.param) / (2.0 + p.param);
        case ProfileFamily::constant:
            return 0.5 / (K * K);
        case ProfileFamily::truncated: {
            if (K >= p.r_max) return 0.0;
            return 0.5 * (1.0 / (K * K) - 1.0 / (p.r_max * p.r_max));
        }
        default: {
            const double t0 = std::log(K);
            auto g = [&p](double t) {
                const double ph = p.phi_log_r(t);
                return std::isinf(ph) ? 0.0 : std::exp(-2.0 * t) / ph;
            };
            QuadResult q = integrate(g, t0, t0 + 40.0, 1e-10);
            check_converged(q, "big-jump tail integral");
            return q.value;
        }
    }
}

double tail_mass(const JumpKernel& k, double K) {
    require(K >= 1.0, Err::domain, "tail_mass needs K >= 1");
    const double scale = k.modulation.enabled ? k.modulation.hi : 1.0;
    return scale * k.omega() * k.c_tail * radial_tail_integral(k.profile, K);
}

LevyRates levy_rates(const JumpKernel& k, double delta) {
    require(delta > 0.0 && delta < 1.0, Err::domain, "delta must lie in (0,1)");
    LevyRates r;
    const double w = k.omega();
    r.lambda_small = w * k.kappa * (std::pow(delta, -k.alpha) - 1.0) / k.alpha;
    r.sigma2_small = w * k.kappa * std::pow(delta, 2.0 - k.alpha) / (2.0 - k.alpha);
    r.lambda_big = w * k.c_tail * radial_tail_integral(k.profile, 1.0);
    require(std::isfinite(r.lambda_big), Err::config, "big-jump rate is not finite");
    return r;
}

KernelReport check_assumption_A(const JumpKernel& k, const std::vector<double>& grid,
                                double gamma) {
    require(grid.size() >= 8, Err::domain, "assumption-A grid needs at least 8 points");
    require(grid.front() >= 1.0, Err::domain, "assumption-A grid must start at s >= 1");
    for (std::size_t i = 1; i < grid.size(); ++i)
        require(grid[i] > grid[i - 1], Err::domain, "assumption-A grid must be strictly increasing");

    KernelReport rep;
    rep.grid = grid;
    rep.gamma_used = gamma;

    const double phi1 = k.profile.phi(1.0);
    rep.j_ratio_at_unit = k.c_tail > 0.0 ? k.kappa / (k.c_tail / phi1) : kInf;

    std::vector<double> phis, Phis;
    bool any_divergent = false;
    for (double s : grid) {
        phis.push_back(k.profile.phi(s));
        PhiValue pv = capital_phi(k.profile, s);
        if (pv.divergent) any_divergent = true;
        Phis.push_back(pv.value);
    }

    rep.phi_monotone_ok = true;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(phis[i] >= phis[i - 1] * (1.0 - 1e-12))) rep.phi_monotone_ok = false;

    rep.Phi_diverges_ok = !any_divergent;
    if (rep.Phi_diverges_ok) {
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (!(Phis[i] > Phis[i - 1])) rep.Phi_diverges_ok = false;
        if (!(Phis.back() >= rep.phi_growth_threshold * Phis.front())) rep.Phi_diverges_ok = false;
    }

    // Monotonicity of the clamped ratio max(log Phi, 1)/s, matching the regime
    // classifier; the raw ratio is not meaningful where Phi <= e.
    rep.logPhi_over_s_decreasing_ok = !any_divergent;
    if (rep.logPhi_over_s_decreasing_ok) {
        double prev = kInf;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double v = std::max(std::log(Phis[i]), 1.0) / grid[i];
            if (!(v <= prev * (1.0 + 1e-9))) rep.logPhi_over_s_decreasing_ok = false;
            prev = v;
        }
    }

    rep.Phi_phi_gamma_bounded_ok = !any_divergent;
    if (rep.Phi_phi_gamma_bounded_ok) {
        std::vector<double> ratio;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (std::isinf(phis[i]) && std::isinf(Phis[i])) continue;  // past a truncation radius
            ratio.push_back(Phis[i] / std::pow(phis[i], gamma));
        }
        for (double q : ratio)
            if (!(q <= rep.gamma_bound_multiplier * ratio.front() * (1.0 + 1e-12)))
                rep.Phi_phi_gamma_bounded_ok = false;
    }

    rep.second_moment_finite = k.profile.family != ProfileFamily::constant;
    if (rep.second_moment_finite) {
        SecondMoment m = second_moment_parts(k);
        rep.second_moment_total = m.total;
        rep.second_moment_lower = m.lower;
        rep.second_moment_upper = m.upper;
    }

    for (double K = 1.0; K <= grid.back() && rep.tail_mass_at.size() < 12; K *= 2.0)
        rep.tail_mass_at.emplace_back(K, tail_mass(k, K));

    return rep;
}

std::string KernelReport::to_json(std::uint64_t config_digest) const {
    nlohmann::ordered_json j;
    char digest[20];
    std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(config_digest));
    j["config_digest"] = digest;
    j["second_moment_finite"] = second_moment_finite;
    if (second_moment_finite) {
        j["second_moment_total"] = second_moment_total;
        j["second_moment_lower"] = second_moment_lower;
        j["second_moment_upper"] = second_moment_upper;
    }
    nlohmann::ordered_json tm = nlohmann::ordered_json::array();
    for (const auto& [K, v] : tail_mass_at) tm.push_back({K, v});
    j["tail_mass_at"] = tm;
    j["grid"] = grid;
    j["gamma_used"] = gamma_used;
    j["phi_monotone_ok"] = phi_monotone_ok;
    j["logPhi_over_s_decreasing_ok"] = logPhi_over_s_decreasing_ok;
    j["log_phi_clamped_at_one"] = true;
    j["Phi_diverges_ok"] = Phi_diverges_ok;
    j["Phi_phi_gamma_bounded_ok"] = Phi_phi_gamma_bounded_ok;
    j["phi_growth_threshold"] = phi_growth_threshold;
    j["gamma_bound_multiplier"] = gamma_bound_multiplier;
    j["j_ratio_at_unit"] = j_ratio_at_unit;
    j["assumption_A_ok"] = assumption_A_ok();
    return j.dump(2) + "\n";
}

}  // namespace jumplab
