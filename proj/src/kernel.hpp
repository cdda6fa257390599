#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace jumplab {

// Damping profile phi on [1,inf) applied to the jump intensity tail.
//
//   power_law    phi(r) = r^eps
//   poly_log     phi(r) = log^{1+eps}(e + r)
//   log_iterated phi(r) = log(e + r) * log^{1+theta} log(e^e + r)
//   exponential  phi(r) = exp(c r^beta)
//   constant     phi(r) = 1          (undamped; infinite second moment)
//   truncated    phi(r) = 1 on [1, r_max], +inf beyond (j vanishes there)
enum class ProfileFamily {
    power_law,
    poly_log,
    log_iterated,
    exponential,
    constant,
    truncated,
};

const char* family_name(ProfileFamily f);
std::optional<ProfileFamily> family_from_name(const std::string& name);

struct TailProfile {
    ProfileFamily family = ProfileFamily::power_law;
    double param = 1.0;   // eps (power_law, poly_log), theta (log_iterated), c (exponential)
    double param2 = 0.5;  // beta (exponential only)
    double r_max = 0.0;   // truncated only

    static TailProfile power_law(double eps);
    static TailProfile poly_log(double eps);
    static TailProfile log_iterated(double theta);
    static TailProfile exponential(double c, double beta);
    static TailProfile constant();
    static TailProfile truncated(double r_max);

    void validate() const;

    // phi(r) for r >= 1 (returns +inf past r_max under truncated).
    double phi(double r) const;

    // phi(e^t), stable for t past the overflow point of e^t.
    double phi_log_r(double t) const;

    // I(s) = int_s^inf dr / (r phi(r)).  +inf when divergent (constant family),
    // 0 when the support ends below s (truncated).  Uses per-family substitutions
    // so each quadrature sees a rapidly decaying integrand.
    double tail_integral(double s) const;

    // Same integral by a generic change of variables t = log r and adaptive
    // quadrature of 1/phi(e^t); independent numerical route used for cross-checks.
    double tail_integral_quad(double s) const;

    bool has_closed_phi() const { return family == ProfileFamily::power_law; }
};

// Bounded symmetric multiplier m(x,y) in [lo, hi]; realized as
// lo + (hi-lo) * (1 + cos(sum(x+y))) / 2, symmetric in (x,y) and under point
// reflection, so the modulated process stays symmetric in law.
struct Modulation {
    bool enabled = false;
    double lo = 1.0;
    double hi = 1.0;

    double value(const double* x, const double* y, int d) const;
};

struct JumpKernel {
    int d = 1;
    double alpha = 0.5;
    double kappa = 1.0;
    double c_tail = 1.0;
    TailProfile profile;
    Modulation modulation;

    void validate() const;
    double omega() const { return sphere_surface(d); }

    std::string canonical_string() const;
    std::uint64_t hash() const { return fnv1a(canonical_string()); }
};

// Radial intensity j(r): kappa r^{-d-alpha} on (0,1), c_tail r^{-(d+2)}/phi(r) on [1,inf).
double eval_j(const JumpKernel& k, double r);

struct PhiValue {
    double value = 0.0;      // Phi(s); +inf when the tail integral vanishes
    bool divergent = false;  // defining integral diverges (constant profile)
};

// Phi(s) = (int_s^inf dr/(r phi(r)))^{-1}, s >= 1. Closed form for power_law.
PhiValue capital_phi(const TailProfile& p, double s);
// Pure-quadrature route (no closed forms), for cross-checking.
PhiValue capital_phi_quad(const TailProfile& p, double s);

struct SecondMoment {
    double small = 0.0;  // omega_d kappa / (2 - alpha)
    double tail = 0.0;   // omega_d c_tail int_1^inf dr/(r phi(r))
    double total = 0.0;
    double lower = 0.0;  // m_lo-scaled (equals total when unmodulated)
    double upper = 0.0;  // m_hi-scaled
};

// sup_x int |x-y|^2 J(x,y) dy decomposed by radius; errors out for the
// constant profile (log-divergent tail).
SecondMoment second_moment_parts(const JumpKernel& k);
double second_moment(const JumpKernel& k);  // upper value under modulation

// sup_x int_{|x-y|>K} J(x,y) dy, K >= 1.
double tail_mass(const JumpKernel& k, double K);

// T(K) = int_K^inf r^{-3}/phi(r) dr; the radial form shared by tail_mass and
// the big-jump samplers (the r^{d-1} surface factor cancels j's d-dependence).
double radial_tail_integral(const TailProfile& p, double K);

struct LevyRates {
    double lambda_small = 0.0;  // compound-Poisson rate of jumps in [delta, 1)
    double sigma2_small = 0.0;  // total variance rate of the sub-delta Gaussian surrogate
    double lambda_big = 0.0;    // rate of jumps in [1, inf)
};

LevyRates levy_rates(const JumpKernel& k, double delta);

struct KernelReport {
    double second_moment_total = 0.0;
    bool second_moment_finite = true;
    double second_moment_lower = 0.0;
    double second_moment_upper = 0.0;
    std::vector<std::pair<double, double>> tail_mass_at;  // (K, value)

    std::vector<double> grid;
    double gamma_used = 1.0;
    bool phi_monotone_ok = false;
    bool logPhi_over_s_decreasing_ok = false;  // checked on max(log Phi, 1)/s
    bool Phi_diverges_ok = false;
    bool Phi_phi_gamma_bounded_ok = false;

    double phi_growth_threshold = 4.0;   // Phi(last)/Phi(first) divergence proxy
    double gamma_bound_multiplier = 10.0;
    double j_ratio_at_unit = 0.0;  // kappa / (c_tail / phi(1)); size of the r=1 jump

    bool assumption_A_ok() const {
        return phi_monotone_ok && logPhi_over_s_decreasing_ok && Phi_diverges_ok &&
               Phi_phi_gamma_bounded_ok;
    }

    std::string to_json(std::uint64_t config_digest) const;
};

// Grid audit of the damping-profile conditions the long-time bounds rest on
// (phi monotone, Phi divergent, clamped log Phi(s)/s non-increasing, Phi/phi^gamma
// bounded); grid strictly increasing, min >= 1, size >= 8.
KernelReport check_assumption_A(const JumpKernel& k, const std::vector<double>& grid, double gamma);

}  // namespace jumplab
