// mde.hpp - two-variable scalar Dyson equation, spectral density, support edges
#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bsg/model.hpp"

namespace bsg {

using Complex = std::complex<double>;

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The dual variable u = (u0, u1, u2) of the critical-point count.
struct FieldPoint {
    double u0 = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;

    double norm_sq() const { return u0 * u0 + u1 * u1 + u2 * u2; }
    FieldPoint negated() const { return {-u0, -u1, -u2}; }
};

// Solved pair (m1, m2) at one spectral point z, with the absolute residuals
// of the two coupled quadratics evaluated on the returned values.
struct StieltjesPair {
    Complex z;
    Complex m1;
    Complex m2;
    double residual1 = 0.0;
    double residual2 = 0.0;
};

inline constexpr double kMdeResidualTol = 1e-10;

// Discretized density of mu_infty(u) on a uniform grid, with detected
// support edges and trapezoid mass.
struct SpectralDensity {
    std::vector<double> grid;
    std::vector<double> values;
    double left_edge = 0.0;
    double right_edge = 0.0;
    double mass = 0.0;
    double eta_min = 0.0;
};

// The six scalar coefficients of the coupled system at a given u:
//   1 + (z - a1 + b1 m1 + c1 m2) m1 = 0
//   1 + (z - a2 + b2 m2 + c2 m1) m2 = 0
struct MdeCoeffs {
    double a1, b1, c1;
    double a2, b2, c2;
};

MdeCoeffs mde_coeffs(const ModelParams& params, const FieldPoint& u);

// Solves the coupled system at z (Im z > 0) for the unique pair with
// positive imaginary parts. Damped fixed point with Newton fallback.
StieltjesPair solve_point(const ModelParams& params, const FieldPoint& u, Complex z,
                          const std::optional<StieltjesPair>& warm_start = std::nullopt);

// gamma m1 + (1-gamma) m2, the Stieltjes transform of mu_infty(u) at z.
Complex stieltjes_transform(const StieltjesPair& pair, const ModelParams& params);

// Solves at E + i eta_target by geometric continuation in eta (factor 0.7)
// starting from eta = 1, warm-starting each level.
StieltjesPair solve_real_axis(const ModelParams& params, const FieldPoint& u, double E,
                              double eta_target);

inline constexpr double kDefaultEtaMin = 1e-6;
inline constexpr int kDefaultResolution = 2048;

// Support bound kappa(u): max diagonal of |A'(u)| plus twice the square root
// of the row-sum bound on the stability operator.
double support_bound(const ModelParams& params, const FieldPoint& u);

// Edges of supp mu_infty(u), each located by bisection to ~1e-8 using a
// small-eta inside-support predicate.
std::pair<double, double> support_edges(const ModelParams& params, const FieldPoint& u);

// Density on `resolution` uniform points across `window`; rho = Im s /pi at
// eta = eta_min. Parallel over contiguous grid blocks with per-block
// warm-start chains; deterministic for fixed block size.
SpectralDensity density(const ModelParams& params, const FieldPoint& u,
                        std::pair<double, double> window, int resolution,
                        double eta_min = kDefaultEtaMin);

// Serial reference: independent full eta-descent per grid point. Kept for
// testing and benchmarking against the blocked parallel kernel.
SpectralDensity density_reference(const ModelParams& params, const FieldPoint& u,
                                  std::pair<double, double> window, int resolution,
                                  double eta_min = kDefaultEtaMin);

// Density over the default window [-kappa(u)-1, kappa(u)+1].
SpectralDensity density_auto(const ModelParams& params, const FieldPoint& u,
                             int resolution = kDefaultResolution,
                             double eta_min = kDefaultEtaMin);

}  // namespace bsg
