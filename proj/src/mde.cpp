// mde.cpp - damped fixed point + Newton solver for the coupled scalar system,
// eta-continuation density evaluation, support edge bisection
#include "bsg/mde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bsg {

namespace {

constexpr double kEtaFactor = 0.7;
constexpr double kEdgeEta = 1e-12;          // probe height for the inside-support test
constexpr double kEdgeDensityThreshold = 1e-7;
constexpr int kGridBlock = 64;              // warm-start chain length in density()

struct Residuals {
    Complex f1, f2;
    double norm() const { return std::abs(f1) + std::abs(f2); }
};

Residuals eval_residuals(const MdeCoeffs& c, Complex z, Complex m1, Complex m2) {
    return {1.0 + (z - c.a1 + c.b1 * m1 + c.c1 * m2) * m1,
            1.0 + (z - c.a2 + c.b2 * m2 + c.c2 * m1) * m2};
}

bool upper_half(Complex m1, Complex m2) { return m1.imag() > 0.0 && m2.imag() > 0.0; }

// One sweep of the self-consistent map m_i <- -1/(z - a_i + b_i m_i + c_i m_j).
void fixed_point_map(const MdeCoeffs& c, Complex z, Complex m1, Complex m2, Complex& n1,
                     Complex& n2) {
    n1 = -1.0 / (z - c.a1 + c.b1 * m1 + c.c1 * m2);
    n2 = -1.0 / (z - c.a2 + c.b2 * m2 + c.c2 * m1);
}

// Newton on the residual map, with step halving to stay in the upper
// half-plane and to enforce monotone residual decrease.
bool newton_polish(const MdeCoeffs& c, Complex z, Complex& m1, Complex& m2, int max_iter,
                   double tol) {
    double err = eval_residuals(c, z, m1, m2).norm();
    for (int it = 0; it < max_iter; ++it) {
        if (err <= tol) return true;
        const Residuals r = eval_residuals(c, z, m1, m2);
        const Complex j11 = z - c.a1 + 2.0 * c.b1 * m1 + c.c1 * m2;
        const Complex j12 = c.c1 * m1;
        const Complex j21 = c.c2 * m2;
        const Complex j22 = z - c.a2 + 2.0 * c.b2 * m2 + c.c2 * m1;
        const Complex det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-300) return false;
        const Complex d1 = (-r.f1 * j22 + r.f2 * j12) / det;
        const Complex d2 = (-r.f2 * j11 + r.f1 * j21) / det;
        double step = 1.0;
        bool accepted = false;
        while (step > 1e-8) {
            const Complex t1 = m1 + step * d1;
            const Complex t2 = m2 + step * d2;
            if (upper_half(t1, t2)) {
                const double trial = eval_residuals(c, z, t1, t2).norm();
                if (trial < err) {
                    m1 = t1;
                    m2 = t2;
                    err = trial;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) return err <= tol;
    }
    return eval_residuals(c, z, m1, m2).norm() <= tol;
}

}  // namespace

MdeCoeffs mde_coeffs(const ModelParams& p, const FieldPoint& u) {
    const double g = p.gamma;
    return {(p.alpha1 * u.u1 - p.xi1_prime * u.u0) / g,
            p.xi1_dprime / g,
            p.xi1_prime * p.xi2_prime / g,
            (p.alpha2 * u.u2 - p.xi2_prime * u.u0) / (1.0 - g),
            p.xi2_dprime / (1.0 - g),
            p.xi1_prime * p.xi2_prime / (1.0 - g)};
}

StieltjesPair solve_point(const ModelParams& params, const FieldPoint& u, Complex z,
                          const std::optional<StieltjesPair>& warm_start) {
    if (!(z.imag() > 0.0))
        throw SolverError("solve_point requires Im z > 0, got Im z = " +
                          std::to_string(z.imag()));
    const MdeCoeffs c = mde_coeffs(params, u);

    Complex m1{0.0, 1.0}, m2{0.0, 1.0};
    if (warm_start && upper_half(warm_start->m1, warm_start->m2)) {
        m1 = warm_start->m1;
        m2 = warm_start->m2;
    }
    const Complex init1 = m1, init2 = m2;

    constexpr double tol = 1e-13;
    // fast path: Newton usually lands in a few steps, especially warm-started
    if (!newton_polish(c, z, m1, m2, 30, tol)) {
        m1 = init1;
        m2 = init2;
    }
    double damping = 1.0;
    double err = eval_residuals(c, z, m1, m2).norm();
    for (int it = 0; it < 2000 && err > tol; ++it) {
        Complex n1, n2;
        fixed_point_map(c, z, m1, m2, n1, n2);
        Complex t1 = m1 + damping * (n1 - m1);
        Complex t2 = m2 + damping * (n2 - m2);
        // any iterate leaving the upper half-plane is pulled back by halving
        int halvings = 0;
        while (!upper_half(t1, t2) && halvings++ < 60) {
            damping *= 0.5;
            t1 = m1 + damping * (n1 - m1);
            t2 = m2 + damping * (n2 - m2);
        }
        if (!upper_half(t1, t2)) break;
        const double trial = eval_residuals(c, z, t1, t2).norm();
        if (trial <= err)
            damping = std::min(1.0, damping * 1.1);
        else
            damping = std::max(1.0 / 1024.0, damping * 0.5);
        m1 = t1;
        m2 = t2;
        err = trial;
    }
    if (err > tol) newton_polish(c, z, m1, m2, 200, tol);

    StieltjesPair out;
    out.z = z;
    out.m1 = m1;
    out.m2 = m2;
    const Residuals r = eval_residuals(c, z, m1, m2);
    out.residual1 = std::abs(r.f1);
    out.residual2 = std::abs(r.f2);
    if (out.residual1 > kMdeResidualTol || out.residual2 > kMdeResidualTol) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "MDE solver did not converge at z = %.6g + %.3gi (residuals %.3g, %.3g)",
                      z.real(), z.imag(), out.residual1, out.residual2);
        throw SolverError(buf);
    }
    if (!upper_half(m1, m2)) throw SolverError("MDE solution left the upper half-plane");
    return out;
}

Complex stieltjes_transform(const StieltjesPair& pair, const ModelParams& params) {
    return params.gamma * pair.m1 + (1.0 - params.gamma) * pair.m2;
}

StieltjesPair solve_real_axis(const ModelParams& params, const FieldPoint& u, double E,
                              double eta_target) {
    double eta = 1.0;
    StieltjesPair pair = solve_point(params, u, Complex{E, eta});
    while (eta > eta_target) {
        eta = std::max(eta * kEtaFactor, eta_target);
        pair = solve_point(params, u, Complex{E, eta}, pair);
    }
    return pair;
}

double support_bound(const ModelParams& params, const FieldPoint& u) {
    const MdeCoeffs c = mde_coeffs(params, u);
    const double row = std::max(c.b1 + c.c1, c.b2 + c.c2);
    return std::max(std::abs(c.a1), std::abs(c.a2)) + 2.0 * std::sqrt(row);
}

namespace {

double density_at(const ModelParams& params, const FieldPoint& u, double E, double eta) {
    const StieltjesPair pair = solve_real_axis(params, u, E, eta);
    return stieltjes_transform(pair, params).imag() / M_PI;
}

bool inside_support(const ModelParams& params, const FieldPoint& u, double E) {
    return density_at(params, u, E, kEdgeEta) > kEdgeDensityThreshold;
}

double bisect_edge(const ModelParams& params, const FieldPoint& u, double outside, double inside) {
    for (int it = 0; it < 60 && std::abs(inside - outside) > 1e-9; ++it) {
        const double mid = 0.5 * (outside + inside);
        (inside_support(params, u, mid) ? inside : outside) = mid;
    }
    return 0.5 * (outside + inside);
}

// Coarse bracket from a sampled grid, then small-eta bisection refinement.
std::pair<double, double> detect_edges(const ModelParams& params, const FieldPoint& u,
                                       const std::vector<double>& grid,
                                       const std::vector<double>& values) {
    const double peak = *std::max_element(values.begin(), values.end());
    if (peak <= 0.0) throw SolverError("no spectral mass found in window");
    const double thr = std::max(1e-3 * peak, 1e-6);
    std::size_t first = 0, last = values.size() - 1;
    while (first < values.size() && values[first] < thr) ++first;
    while (last > 0 && values[last] < thr) --last;
    if (first > last) throw SolverError("no spectral mass found in window");

    double left;
    if (first == 0)
        left = grid.front();  // support touches the window boundary; caller checks mass
    else
        left = bisect_edge(params, u, grid[first - 1], grid[first]);
    double right;
    if (last == values.size() - 1)
        right = grid.back();
    else
        right = bisect_edge(params, u, grid[last + 1], grid[last]);
    return {left, right};
}

double trapezoid_mass(const std::vector<double>& grid, const std::vector<double>& values) {
    double m = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        m += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    return m;
}

SpectralDensity density_impl(const ModelParams& params, const FieldPoint& u,
                             std::pair<double, double> window, int resolution, double eta_min,
                             bool parallel) {
    if (resolution < 64) throw SolverError("density resolution must be >= 64");
    if (!(window.second > window.first)) throw SolverError("density window is empty");

    SpectralDensity d;
    d.eta_min = eta_min;
    d.grid.resize(resolution);
    d.values.resize(resolution);
    const double step = (window.second - window.first) / (resolution - 1);
    for (int i = 0; i < resolution; ++i) d.grid[i] = window.first + i * step;

    const int nblocks = (resolution + kGridBlock - 1) / kGridBlock;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
    for (int b = 0; b < nblocks; ++b) {
        const int begin = b * kGridBlock;
        const int end = std::min(begin + kGridBlock, resolution);
        std::optional<StieltjesPair> chain;
        for (int i = begin; i < end; ++i) {
            StieltjesPair pair;
            if (parallel && chain) {
                // warm-start chain within the block; full descent on failure
                try {
                    pair = solve_point(params, u, Complex{d.grid[i], eta_min}, chain);
                } catch (const SolverError&) {
                    pair = solve_real_axis(params, u, d.grid[i], eta_min);
                }
            } else {
                pair = solve_real_axis(params, u, d.grid[i], eta_min);
            }
            chain = pair;
            d.values[i] = stieltjes_transform(pair, params).imag() / M_PI;
        }
    }

    d.mass = trapezoid_mass(d.grid, d.values);
    auto [l, r] = detect_edges(params, u, d.grid, d.values);
    d.left_edge = l;
    d.right_edge = r;
    if (d.mass < 0.999 && (d.values.front() > 1e-6 || d.values.back() > 1e-6)) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "window [%g, %g] too small: mass %.6f with boundary density",
                      window.first, window.second, d.mass);
        throw SolverError(buf);
    }
    return d;
}

}  // namespace

std::pair<double, double> support_edges(const ModelParams& params, const FieldPoint& u) {
    const double kappa = support_bound(params, u);
    const std::pair<double, double> window{-kappa - 1.0, kappa + 1.0};
    const int coarse = 512;
    std::vector<double> grid(coarse), values(coarse);
    const double step = (window.second - window.first) / (coarse - 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < coarse; ++i) {
        grid[i] = window.first + i * step;
        values[i] = density_at(params, u, grid[i], kDefaultEtaMin);
    }
    return detect_edges(params, u, grid, values);
}

SpectralDensity density(const ModelParams& params, const FieldPoint& u,
                        std::pair<double, double> window, int resolution, double eta_min) {
    return density_impl(params, u, window, resolution, eta_min, true);
}

SpectralDensity density_reference(const ModelParams& params, const FieldPoint& u,
                                  std::pair<double, double> window, int resolution,
                                  double eta_min) {
    return density_impl(params, u, window, resolution, eta_min, false);
}

SpectralDensity density_auto(const ModelParams& params, const FieldPoint& u, int resolution,
                             double eta_min) {
    const double kappa = support_bound(params, u);
    return density(params, u, {-kappa - 1.0, kappa + 1.0}, resolution, eta_min);
}

}  // namespace bsg
