#include "davies.hpp"

#include <algorithm>
#include <cmath>

#include "quadrature.hpp"

namespace jumplab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double logsumexp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// sup_{r >= K} j(r); j is decreasing within each piece, so only the piece
// heads matter.
double sup_j_from(const JumpKernel& k, double K) {
    if (K >= 1.0) return eval_j(k, K);
    double s = k.kappa > 0.0 ? eval_j(k, K) : 0.0;
    if (k.c_tail > 0.0) s = std::max(s, k.c_tail / k.profile.phi(1.0));
    return s;
}

}  // namespace

double TestFunction::psi(const double* x, int d) const {
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) n2 += x[i] * x[i];
    return std::max(lambda * (R - std::sqrt(n2)), 0.0);
}

const char* strategy_name(DaviesStrategy s) {
    switch (s) {
        case DaviesStrategy::polynomial: return "polynomial";
        case DaviesStrategy::gaussian_regime: return "gaussian";
        case DaviesStrategy::far_regime: return "far";
        case DaviesStrategy::loglog_refined: return "loglog";
    }
    return "?";
}

double log_gamma_majorant(const JumpKernel& k, double lambda, double K) {
    require(lambda >= 0.0, Err::domain, "gamma majorant needs lambda >= 0");
    require(K > 0.0, Err::domain, "gamma majorant needs K > 0");
    if (lambda == 0.0) return -kInf;

    const double b1 = std::min(1.0, K);
    double log_small = -kInf;
    if (k.kappa > 0.0) {
        const double expo = 1.0 - k.alpha;
        if (2.0 * lambda * b1 <= 500.0) {
            auto f = [&](double r) { return std::pow(r, expo) * std::exp(2.0 * lambda * r); };
            QuadResult q = integrate(f, 0.0, b1, 1e-10);
            check_converged(q, "small-jump majorant integral");
            log_small = std::log(k.kappa * q.value);
        } else {
            // factor out e^{2 lambda b1} so the quadrature stays in range
            auto f = [&](double r) {
                return std::pow(r, expo) * std::exp(2.0 * lambda * (r - b1));
            };
            QuadResult q = integrate(f, 0.0, b1, 1e-10);
            check_converged(q, "small-jump majorant integral");
            log_small = 2.0 * lambda * b1 + std::log(k.kappa * q.value);
        }
    }

    double log_tail = -kInf;
    if (k.c_tail > 0.0 && K > 1.0) {
        auto g = [&](double r) {
            const double p = k.profile.phi(r);
            return std::isinf(p) ? -kInf : 2.0 * lambda * r - std::log(r) - std::log(p);
        };
        // locate the max of the exponent on a probe grid for a stable shift
        double M = -kInf;
        const int probes = 129;
        for (int i = 0; i < probes; ++i) {
            const double r = 1.0 + (K - 1.0) * double(i) / double(probes - 1);
            M = std::max(M, g(r));
        }
        if (M > -kInf) {
            auto f = [&](double r) {
                const double v = g(r);
                return v == -kInf ? 0.0 : std::exp(v - M);
            };
            QuadResult q = integrate(f, 1.0, K, 1e-10);
            check_converged(q, "tail majorant integral");
            if (q.value > 0.0) log_tail = M + std::log(k.c_tail * q.value);
        }
    }

    const double scale = k.modulation.enabled ? k.modulation.hi : 1.0;
    return 2.0 * std::log(lambda) + std::log(scale * k.omega()) + logsumexp(log_small, log_tail);
}

double gamma_majorant(const JumpKernel& k, double lambda, double K) {
    if (lambda == 0.0) return 0.0;
    return std::exp(log_gamma_majorant(k, lambda, K));
}

double gamma_exact_point(const JumpKernel& k, const TestFunction& tf, double x, double K) {
    require(k.d == 1, Err::domain, "gamma_exact_point implements the d = 1 oracle only");
    require(!k.modulation.enabled, Err::domain, "gamma_exact_point needs an unmodulated kernel");
    require(K > 0.0, Err::domain, "gamma_exact_point needs K > 0");
    const double px = tf.psi1(x);
    auto integrand = [&](double y) {
        const double r = std::abs(y - x);
        if (r <= 0.0) return 0.0;
        const double u = tf.psi1(y) - px;
        const double e = std::expm1(u);
        return e * e * eval_j(k, r);
    };
    // Panels touching y = x carry the |y-x|^{1-alpha} singularity; integrate
    // them in w = u^{2-alpha}, where the u powers cancel exactly:
    //   integrand du = kappa (expm1(dpsi)/u)^2 dw / (2-alpha),  u = |y-x| < 1.
    const double q_exp = 2.0 - k.alpha;
    auto singular_piece = [&](double len, double side) {
        if (len <= 0.0 || k.kappa == 0.0) return 0.0;
        auto h = [&](double w) {
            const double u = std::pow(w, 1.0 / q_exp);
            if (u <= 0.0) return 0.0;
            const double ratio = std::expm1(tf.psi1(x + side * u) - px) / u;
            return k.kappa * ratio * ratio / q_exp;
        };
        QuadResult r = integrate(h, 0.0, std::pow(len, q_exp), 1e-10, 1e-14);
        check_converged(r, "gamma_exact_point singular panel");
        return r.value;
    };
    std::vector<double> brk = {x - K, x + K, x, x - 1.0, x + 1.0, -tf.R, 0.0, tf.R};
    if (k.profile.family == ProfileFamily::truncated) {
        brk.push_back(x - k.profile.r_max);
        brk.push_back(x + k.profile.r_max);
    }
    std::sort(brk.begin(), brk.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
        const double a = std::max(brk[i], x - K);
        const double b = std::min(brk[i + 1], x + K);
        if (b <= a) continue;
        if (a == x) {
            total += singular_piece(b - x, +1.0);  // b <= x + 1 by construction
        } else if (b == x) {
            total += singular_piece(x - a, -1.0);
        } else {
            QuadResult q = integrate(integrand, a, b, 1e-10, 1e-14);
            check_converged(q, "gamma_exact_point");
            total += q.value;
        }
    }
    return total;
}

namespace {

double clamped_log_phi(const JumpKernel& k, double s) {
    const PhiValue pv = capital_phi(k.profile, std::max(s, 1.0));
    if (pv.divergent || !(pv.value > 0.0)) return 1.0;
    if (std::isinf(pv.value)) return kInf;
    return std::max(std::log(pv.value), 1.0);
}

}  // namespace

double meyer_combine(double trunc_bound, double t, double K, const JumpKernel& k) {
    require(K >= 1.0, Err::domain, "meyer_combine needs K >= 1");
    require(t >= 0.0, Err::domain, "meyer_combine needs t >= 0");
    const double scale = k.modulation.enabled ? k.modulation.hi : 1.0;
    return trunc_bound + t * scale * eval_j(k, K);
}

DaviesBound davies_bound(const JumpKernel& k, double t, double R, DaviesStrategy s,
                         const DaviesOptions& opt) {
    require(t > 0.0 && R > 0.0, Err::domain, "davies_bound needs t, R > 0");
    DaviesBound out;
    out.strategy = s;
    out.t = t;
    out.R = R;

    switch (s) {
        case DaviesStrategy::polynomial: {
            const double theta = 1.5 * (double(k.d) + 2.0);
            const double K = R / theta;
            require(t <= K * K, Err::domain,
                    "polynomial strategy needs t <= K^2 with K = R/theta");
            out.K_used = K;
            out.lambda_used = std::log(K * K / t) / (3.0 * K);
            break;
        }
        case DaviesStrategy::gaussian_regime: {
            const double K = R;
            const double L = clamped_log_phi(k, R);
            require(t <= R * R, Err::domain, "gaussian strategy needs t <= R^2");
            require(t >= opt.theta0 * R * R / L, Err::domain,
                    "gaussian strategy needs t >= theta0 R^2 / log Phi(R)");
            out.K_used = K;
            double eta = opt.eta;
            if (eta <= 0.0) {
                // largest eta = 2^{-m} keeping the exponent negative:
                // eta (1 - eta C*) > 0 with C* = 2 Lambda / lambda^2.
                for (int m = 1; m <= 16; ++m) {
                    eta = std::pow(2.0, -m);
                    const double lam = eta * K / t;
                    const double cstar =
                        2.0 * std::exp(log_gamma_majorant(k, lam, K) - 2.0 * std::log(lam));
                    if (eta * (1.0 - eta * cstar) > 0.0) break;
                }
            }
            out.eta_used = eta;
            out.lambda_used = eta * K / t;
            break;
        }
        case DaviesStrategy::far_regime: {
            require(opt.kappa >= 1.0, Err::domain, "far strategy needs kappa >= 1");
            const double K = R / opt.kappa;
            require(K >= 1.0, Err::domain, "far strategy needs R >= kappa");
            const double L = clamped_log_phi(k, R);
            require(t <= opt.theta0 * R * R / L, Err::domain,
                    "far strategy needs t <= theta0 R^2 / log Phi(R)");
            const PhiValue pv = capital_phi(k.profile, K);
            require(!pv.divergent && pv.value > 0.0 && std::isfinite(pv.value), Err::domain,
                    "far strategy needs a finite positive Phi(K)");
            out.K_used = K;
            out.lambda_used = std::log(pv.value) / (4.0 * K);
            require(out.lambda_used > 0.0, Err::domain, "far strategy needs Phi(K) > 1");
            break;
        }
        case DaviesStrategy::loglog_refined: {
            const double theta = 3.0 * (double(k.d) + 2.0);
            const double K = R / theta;
            require(K >= 1.0, Err::domain, "loglog strategy needs R >= 3(d+2)");
            const double L = clamped_log_phi(k, R);
            require(t <= opt.theta0 * R * R / L, Err::domain,
                    "loglog strategy needs t <= theta0 R^2 / log Phi(R)");
            const PhiValue pv = capital_phi(k.profile, K);
            require(!pv.divergent && pv.value > 0.0, Err::domain,
                    "loglog strategy needs positive Phi(K)");
            const double inner = std::max(std::log(std::max(pv.value, 1.0)), M_E);
            const double boost = std::pow(std::log(inner), opt.delta);
            require(K * K * boost > t, Err::domain,
                    "loglog strategy needs t < K^2 log^delta log Phi(K)");
            out.K_used = K;
            out.lambda_used = std::log(K * K * boost / t) / (3.0 * K);
            break;
        }
    }

    out.log_Lambda = log_gamma_majorant(k, out.lambda_used, out.K_used);
    out.Lambda_majorant = std::exp(out.log_Lambda);
    out.E_value = 2.0 * t * out.Lambda_majorant - out.lambda_used * R;
    out.log_prefactor = std::log(opt.prefactor) - 0.5 * double(k.d) * std::log(t);
    out.log_trunc_bound = out.log_prefactor + out.E_value;
    out.meyer_term = t * (k.modulation.enabled ? k.modulation.hi : 1.0) * sup_j_from(k, out.K_used);
    out.bound_value = std::exp(out.log_trunc_bound) + out.meyer_term;
    out.log_bound = out.meyer_term > 0.0
                        ? logsumexp(out.log_trunc_bound, std::log(out.meyer_term))
                        : out.log_trunc_bound;
    return out;
}

}  // namespace jumplab
