#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kernel.hpp"
#include "quadrature.hpp"

using namespace jumplab;

namespace {

JumpKernel reference_kernel() {
    JumpKernel k;
    k.d = 1;
    k.alpha = 0.5;
    k.kappa = 1.0;
    k.c_tail = 1.0;
    k.profile = TailProfile::power_law(1.0);
    return k;
}

// Independent oracle: midpoint Riemann sum of int_s^inf dr/(r phi(r)) in
// t = log r over [log s, 60], plus the closed-form remainder for poly_log
// (int_{e^60}^inf dr/(r log^{1+eps} r) = 60^{-eps}/eps, off by < 1e-25 here).
double polylog_tail_oracle(double s, double eps, int n) {
    const double t0 = std::log(s), t1 = 60.0;
    const double h = (t1 - t0) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + (i + 0.5) * h;
        acc += h / std::pow(std::log(M_E + std::exp(t)), 1.0 + eps);
    }
    return acc + std::pow(60.0, -eps) / eps;
}

}  // namespace

TEST_CASE("adaptive quadrature basics") {
    auto sq = [](double x) { return x * x; };
    CHECK(integrate(sq, 0.0, 1.0).value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    auto invsqrt = [](double x) { return 1.0 / std::sqrt(x); };
    CHECK(integrate(invsqrt, 0.0, 1.0, 1e-10).value == doctest::Approx(2.0).epsilon(1e-8));

    auto invsq = [](double r) { return 1.0 / (r * r); };
    CHECK(integrate_to_inf(invsq, 1.0).value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(integrate_to_inf(invsq, 2.0).value == doctest::Approx(0.5).epsilon(1e-9));

    auto gauss = [](double x) { return std::exp(-x * x); };
    CHECK(integrate(gauss, -8.0, 8.0).value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
}

TEST_CASE("eval_j piecewise values") {
    JumpKernel k = reference_kernel();
    CHECK(eval_j(k, 0.25) == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(eval_j(k, 2.0) == doctest::Approx(0.0625).epsilon(1e-14));

    JumpKernel tr = reference_kernel();
    tr.profile = TailProfile::truncated(10.0);
    CHECK(eval_j(tr, 20.0) == 0.0);
    CHECK(eval_j(tr, 5.0) == doctest::Approx(std::pow(5.0, -3.0)).epsilon(1e-14));

    CHECK_THROWS_AS(eval_j(k, 0.0), JlError);
    CHECK_THROWS_AS(eval_j(k, -1.0), JlError);
}

TEST_CASE("eval_j is continuous within each piece and the unit gap is the phi(1) ratio") {
    JumpKernel k = reference_kernel();
    for (double r : {0.1, 0.4, 0.9}) {
        const double h = 1e-7;
        CHECK(eval_j(k, r + h) == doctest::Approx(eval_j(k, r)).epsilon(1e-5));
    }
    for (double r : {1.5, 3.0, 50.0}) {
        const double h = 1e-7;
        CHECK(eval_j(k, r + h) == doctest::Approx(eval_j(k, r)).epsilon(1e-5));
    }
    const double gap = eval_j(k, 1.0 - 1e-12) / eval_j(k, 1.0);
    CHECK(gap == doctest::Approx(k.kappa * k.profile.phi(1.0) / k.c_tail).epsilon(1e-6));
}

TEST_CASE("capital_phi closed form and flags") {
    CHECK(capital_phi(TailProfile::power_law(1.0), 3.0).value == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(capital_phi(TailProfile::power_law(0.5), 4.0).value ==
          doctest::Approx(0.5 * 2.0).epsilon(1e-12));

    const PhiValue c = capital_phi(TailProfile::constant(), 5.0);
    CHECK(c.divergent);
    CHECK(c.value == 0.0);

    // truncated: Phi(s) = 1/log(r_max/s), +inf past the support
    const TailProfile tr = TailProfile::truncated(10.0);
    CHECK(capital_phi(tr, 2.0).value == doctest::Approx(1.0 / std::log(5.0)).epsilon(1e-12));
    CHECK(std::isinf(capital_phi(tr, 10.0).value));

    CHECK_THROWS_AS(capital_phi(TailProfile::power_law(1.0), 0.5), JlError);
}

TEST_CASE("capital_phi power law: quadrature route matches the closed form") {
    for (double eps : {0.5, 1.0, 2.0})
        for (double s : {1.0, 10.0, 100.0}) {
            const double closed = eps * std::pow(s, eps);
            const double quad = capital_phi_quad(TailProfile::power_law(eps), s).value;
            CHECK(std::abs(quad - closed) / closed < 1e-6);
        }
}

TEST_CASE("capital_phi poly_log agrees with a midpoint Riemann oracle") {
    const double eps = 1.0, s = 10.0;
    const double o1 = polylog_tail_oracle(s, eps, 1 << 16);
    const double o2 = polylog_tail_oracle(s, eps, 1 << 17);
    CHECK(std::abs(o1 - o2) < 2e-8);  // oracle self-consistency
    const double impl = TailProfile::poly_log(eps).tail_integral(s);
    CHECK(impl == doctest::Approx(o2).epsilon(1e-7));
    CHECK(capital_phi(TailProfile::poly_log(eps), s).value ==
          doctest::Approx(1.0 / o2).epsilon(1e-7));
}

TEST_CASE("profile tail integrals: decomposed and generic quadrature routes agree") {
    for (const TailProfile& p :
         {TailProfile::poly_log(0.5), TailProfile::poly_log(2.0), TailProfile::log_iterated(1.0),
          TailProfile::exponential(1.0, 0.5), TailProfile::exponential(0.3, 1.0)}) {
        for (double s : {1.0, 3.0, 25.0}) {
            const double a = p.tail_integral(s);
            const double b = p.tail_integral_quad(s);
            CHECK(a == doctest::Approx(b).epsilon(2e-6));
        }
    }
}

TEST_CASE("second moment of the reference kernel is 10/3") {
    // closed-form oracle: omega_1 [kappa int_0^1 r^{1/2} dr + int_1^inf r^{-2} dr]
    //                   = 2 (2/3) + 2 (1) = 10/3
    const double oracle = 2.0 * (2.0 / 3.0) + 2.0;
    const SecondMoment m = second_moment_parts(reference_kernel());
    CHECK(m.total == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(m.small == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(m.tail == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("second moment: constant profile diverges, truncated has a log tail") {
    JumpKernel c = reference_kernel();
    c.profile = TailProfile::constant();
    CHECK_THROWS_AS(second_moment(c), JlError);

    // truncated tail oracle: omega_1 c_J int_1^10 dr/r = 2 log 10
    JumpKernel tr = reference_kernel();
    tr.profile = TailProfile::truncated(10.0);
    const double oracle = 4.0 / 3.0 + 2.0 * std::log(10.0);
    CHECK(second_moment(tr) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("second moment bounds under modulation") {
    JumpKernel k = reference_kernel();
    k.modulation.enabled = true;
    k.modulation.lo = 0.5;
    k.modulation.hi = 2.0;
    const SecondMoment m = second_moment_parts(k);
    CHECK(m.lower == doctest::Approx(0.5 * 10.0 / 3.0));
    CHECK(m.upper == doctest::Approx(2.0 * 10.0 / 3.0));
}

TEST_CASE("tail mass values and the Chebyshev-style inequality") {
    JumpKernel k = reference_kernel();
    // oracle: 2 int_2^inf r^{-4} dr = 2/(3*8) = 1/12
    CHECK(tail_mass(k, 2.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-12));

    JumpKernel tr = reference_kernel();
    tr.profile = TailProfile::truncated(10.0);
    CHECK(tail_mass(tr, 10.0) == 0.0);

    const double sigma2_tail = second_moment_parts(k).tail;
    double prev = std::numeric_limits<double>::infinity();
    for (double K : {1.0, 2.0, 4.0, 16.0, 64.0, 256.0}) {
        const double tm = tail_mass(k, K);
        CHECK(tm <= prev);
        CHECK(tm * K * K <= sigma2_tail * (1.0 + 1e-12));
        prev = tm;
    }
    CHECK(prev < 1e-6);  // K -> inf limit
}

TEST_CASE("levy rates against closed-form antiderivatives") {
    JumpKernel k = reference_kernel();
    const LevyRates r = levy_rates(k, 0.25);
    CHECK(r.lambda_small == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(r.sigma2_small == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(r.lambda_big == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(levy_rates(k, 0.0), JlError);
    CHECK_THROWS_AS(levy_rates(k, 1.0), JlError);
}

TEST_CASE("decomposition conserves the sub-unit second moment") {
    JumpKernel k = reference_kernel();
    const double sub_unit = second_moment_parts(k).small;
    for (double delta : {0.5, 0.1, 0.02}) {
        const LevyRates r = levy_rates(k, delta);
        // independent route: quadrature of the mid-jump second moment
        auto f = [&](double s) { return std::pow(s, 1.0 - k.alpha); };
        const double mid = k.omega() * k.kappa * integrate(f, delta, 1.0, 1e-12).value;
        CHECK(std::abs(r.sigma2_small + mid - sub_unit) / sub_unit < 1e-8);
    }
}

TEST_CASE("assumption (A) report: power law reference kernel passes") {
    JumpKernel k = reference_kernel();
    std::vector<double> grid;
    for (int i = 1; i <= 256; ++i) grid.push_back(i);
    const KernelReport rep = check_assumption_A(k, grid, 1.0);
    CHECK(rep.phi_monotone_ok);
    CHECK(rep.logPhi_over_s_decreasing_ok);
    CHECK(rep.Phi_diverges_ok);
    CHECK(rep.Phi_phi_gamma_bounded_ok);
    CHECK(rep.assumption_A_ok());
    CHECK(rep.second_moment_finite);
    CHECK(rep.second_moment_total == doctest::Approx(10.0 / 3.0));
    CHECK(rep.j_ratio_at_unit == doctest::Approx(1.0));
}

TEST_CASE("assumption (A) report: constant fails, exponential passes") {
    JumpKernel c = reference_kernel();
    c.profile = TailProfile::constant();
    std::vector<double> grid;
    for (int i = 1; i <= 64; ++i) grid.push_back(i);
    const KernelReport rc = check_assumption_A(c, grid, 1.0);
    CHECK_FALSE(rc.Phi_diverges_ok);
    CHECK_FALSE(rc.second_moment_finite);

    JumpKernel e = reference_kernel();
    e.profile = TailProfile::exponential(1.0, 0.5);
    const KernelReport re = check_assumption_A(e, grid, 1.0);
    CHECK(re.assumption_A_ok());
}

TEST_CASE("assumption (A) report: truncated profile violates the ratio monotonicity") {
    JumpKernel tr = reference_kernel();
    tr.profile = TailProfile::truncated(10.0);
    std::vector<double> grid;
    for (int i = 0; i < 16; ++i) grid.push_back(1.0 + 0.5 * i);  // reaches past r_max = 10
    const KernelReport rep = check_assumption_A(tr, grid, 1.0);
    CHECK_FALSE(rep.assumption_A_ok());
}

TEST_CASE("assumption (A) precondition checks") {
    JumpKernel k = reference_kernel();
    CHECK_THROWS_AS(check_assumption_A(k, {1, 2, 3}, 1.0), JlError);           // too short
    CHECK_THROWS_AS(check_assumption_A(k, {0.5, 1, 2, 3, 4, 5, 6, 7}, 1.0), JlError);
    CHECK_THROWS_AS(check_assumption_A(k, {1, 2, 2, 3, 4, 5, 6, 7}, 1.0), JlError);
}

TEST_CASE("clamped log Phi ratio is non-increasing for power law and poly_log") {
    for (const TailProfile& p : {TailProfile::power_law(1.0), TailProfile::power_law(0.5),
                                 TailProfile::poly_log(1.0), TailProfile::poly_log(0.5)}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double s = 1.0; s <= 4096.0; s *= 1.4) {
            const double v = std::max(std::log(capital_phi(p, s).value), 1.0) / s;
            CHECK(v <= prev * (1.0 + 1e-9));
            prev = v;
        }
    }
}

TEST_CASE("kernel validation and canonical hashing") {
    JumpKernel k = reference_kernel();
    CHECK_NOTHROW(k.validate());
    const std::uint64_t h = k.hash();
    JumpKernel k2 = k;
    CHECK(k2.hash() == h);
    k2.alpha = 0.75;
    CHECK(k2.hash() != h);

    JumpKernel bad = reference_kernel();
    bad.alpha = 2.0;
    CHECK_THROWS_AS(bad.validate(), JlError);
    bad = reference_kernel();
    bad.profile = TailProfile::truncated(0.5);
    CHECK_THROWS_AS(bad.validate(), JlError);
}

TEST_CASE("kernel report json round-trips its booleans") {
    JumpKernel k = reference_kernel();
    std::vector<double> grid;
    for (int i = 0; i < 16; ++i) grid.push_back(std::pow(2.0, i * 0.5));
    const KernelReport rep = check_assumption_A(k, grid, 1.0);
    const std::string json = rep.to_json(0x1234);
    CHECK(json.find("\"assumption_A_ok\": true") != std::string::npos);
    CHECK(json.find("config_digest") != std::string::npos);
}
