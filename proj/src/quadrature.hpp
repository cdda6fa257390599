#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "common.hpp"

namespace jumplab {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    bool converged = true;
};

namespace detail {

// Gauss 7 / Kronrod 15 node-weight table on [-1,1]; column 0 abscissa,
// column 1 Gauss weight (0 for Kronrod-only nodes), column 2 Kronrod weight.
inline constexpr double gk15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};

template <class F>
double gk15_panel(const F& f, double a, double b, double& err) {
    const double mid = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double f0 = f(mid);
    double g7 = gk15[0][1] * f0;
    double k15 = gk15[0][2] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = h * gk15[i][0];
        const double fi = f(mid + dx) + f(mid - dx);
        g7 += gk15[i][1] * fi;
        k15 += gk15[i][2] * fi;
    }
    g7 *= h;
    k15 *= h;
    // scale-invariant sharpened error model (reduces to (200 e)^{3/2} at unit scale)
    const double scale = std::abs(k15);
    const double e_raw = std::abs(k15 - g7);
    if (scale > 0.0)
        err = scale * std::pow(std::min(1.0, 200.0 * e_raw / scale), 1.5);
    else
        err = e_raw;
    return k15;
}

}  // namespace detail

// Adaptive Gauss-Kronrod on a finite interval. Bisects the worst panel until
// the summed error estimate meets rel_tol*|value| or abs_tol.
template <class F>
QuadResult integrate(const F& f, double a, double b, double rel_tol = 1e-9, double abs_tol = 1e-300,
                     std::size_t max_panels = 4000) {
    QuadResult out;
    if (a == b) return out;

    struct Panel {
        double a, b, value, err;
    };
    std::vector<Panel> panels;
    panels.reserve(64);
    double err0;
    double v0 = detail::gk15_panel(f, a, b, err0);
    panels.push_back({a, b, v0, err0});

    for (;;) {
        double total = 0.0, total_err = 0.0;
        std::size_t worst = 0;
        double worst_err = -1.0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total += panels[i].value;
            total_err += panels[i].err;
            if (panels[i].err > worst_err) {
                worst_err = panels[i].err;
                worst = i;
            }
        }
        if (total_err <= rel_tol * std::abs(total) || total_err <= abs_tol) {
            out.value = total;
            out.abs_error = total_err;
            return out;
        }
        if (panels.size() >= max_panels || !(worst_err > 0.0)) {
            out.value = total;
            out.abs_error = total_err;
            out.converged = false;
            return out;
        }
        Panel p = panels[worst];
        const double m = 0.5 * (p.a + p.b);
        if (m <= p.a || m >= p.b) {  // interval at floating-point resolution
            out.value = 0.0;
            out.abs_error = 0.0;
            for (const auto& q : panels) {
                out.value += q.value;
                out.abs_error += q.err;
            }
            out.converged = false;
            return out;
        }
        double e1, e2;
        const double v1 = detail::gk15_panel(f, p.a, m, e1);
        const double v2 = detail::gk15_panel(f, m, p.b, e2);
        panels[worst] = {p.a, m, v1, e1};
        panels.push_back({m, p.b, v2, e2});
    }
}

// Integral over [a, infinity) via the substitution r = 1/u on the tail piece:
// int_a^inf f = int_a^c f + int_0^{1/c} f(1/u)/u^2 du with c = max(a, 1).
// The mapped integrand may carry an integrable singularity at u = 0 (slowly
// decaying f), so the tail is resolved over geometrically shrinking panels.
template <class F>
QuadResult integrate_to_inf(const F& f, double a, double rel_tol = 1e-9) {
    const double c = std::max(a, 1.0);
    QuadResult out;
    if (a < c) {
        QuadResult head = integrate(f, a, c, rel_tol);
        out.value = head.value;
        out.abs_error = head.abs_error;
        out.converged = head.converged;
    }
    auto mapped = [&f](double u) {
        const double r = 1.0 / u;
        return f(r) * r * r;
    };
    double b = 1.0 / c;
    for (int j = 0; j < 1000; ++j) {
        QuadResult piece = integrate(mapped, 0.5 * b, b, rel_tol, 1e-300, 400);
        out.value += piece.value;
        out.abs_error += piece.abs_error;
        out.converged = out.converged && piece.converged;
        b *= 0.5;
        if (std::abs(piece.value) <= 0.25 * rel_tol * std::abs(out.value) || b < 1e-300) break;
        if (j == 999) out.converged = false;
    }
    return out;
}

inline void check_converged(const QuadResult& q, const char* what) {
    if (!q.converged)
        fail(Err::numeric, std::string("quadrature did not converge for ") + what +
                               " (achieved abs error " + std::to_string(q.abs_error) + ")");
}

}  // namespace jumplab
