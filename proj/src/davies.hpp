#pragma once

#include <string>

#include "kernel.hpp"

namespace jumplab {

// Exponential tilt test function psi(x) = max(lambda (R - |x - y0|), 0),
// centered at the origin by convention; lambda-Lipschitz, psi(0) = lambda R.
struct TestFunction {
    double lambda = 0.0;
    double R = 0.0;

    double psi(const double* x, int d) const;
    double psi1(double x) const { return std::max(lambda * (R - std::abs(x)), 0.0); }
};

// Radial majorant of the tilted carre du champ,
//   lambda^2 omega_d [ kappa int_0^{1^K} r^{1-alpha} e^{2 lambda r} dr
//                    + c int_{1^K}^K e^{2 lambda r} / (r phi(r)) dr ],
// which dominates e^{-2 psi} Gamma_K(e^psi, e^psi) pointwise for every
// lambda-Lipschitz psi. Evaluated in log space once 2 lambda K grows.
double log_gamma_majorant(const JumpKernel& k, double lambda, double K);
double gamma_majorant(const JumpKernel& k, double lambda, double K);

// Direct quadrature of Gamma_K(psi)(x) = int (e^{psi(y)-psi(x)}-1)^2 J dy for
// d = 1 unmodulated kernels; the oracle the majorant is tested against.
double gamma_exact_point(const JumpKernel& k, const TestFunction& tf, double x, double K);

enum class DaviesStrategy { polynomial, gaussian_regime, far_regime, loglog_refined };
const char* strategy_name(DaviesStrategy s);

struct DaviesOptions {
    double theta0 = 0.1;     // regime boundary constant for validity checks
    double kappa = 8.0;      // far-regime scale K = R/kappa
    double eta = 0.0;        // gaussian tilt constant; 0 = solve the constraint
    double delta = 0.5;      // loglog refinement exponent
    double prefactor = 1.0;  // c in c t^{-d/2}
};

struct DaviesBound {
    DaviesStrategy strategy = DaviesStrategy::polynomial;
    double t = 0.0, R = 0.0;
    double K_used = 0.0;
    double lambda_used = 0.0;
    double eta_used = 0.0;        // gaussian strategy only
    double Lambda_majorant = 0.0; // may be +inf when only the log form fits
    double log_Lambda = 0.0;
    double E_value = 0.0;         // 2t Lambda - lambda R (the exponent at 2t)
    double log_prefactor = 0.0;   // log(c t^{-d/2})
    double log_trunc_bound = 0.0; // log_prefactor + E_value
    double meyer_term = 0.0;      // t sup_{|x-y| >= K} J
    double bound_value = 0.0;     // exp(log_trunc_bound) + meyer_term
    double log_bound = 0.0;
};

// One Davies evaluation: picks K and the tilt rate lambda per strategy,
// computes the majorant, the exponent and the Meyer-combined bound. Errors
// name the violated validity inequality.
DaviesBound davies_bound(const JumpKernel& k, double t, double R, DaviesStrategy s,
                         const DaviesOptions& opt = {});

// p <= p_trunc + t sup_{|x-y| >= K} J(x,y); the sup is j(K) for K >= 1.
double meyer_combine(double trunc_bound, double t, double K, const JumpKernel& k);

}  // namespace jumplab
