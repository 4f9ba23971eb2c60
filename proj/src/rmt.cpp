// rmt.cpp - finite-N ensemble samplers and Monte Carlo spectral checks
#include "bsg/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bsg::rmt {

namespace {

bool dims_ok(double gamma, int N, int& N1_out) {
    if (N < 4) return false;
    const double x = gamma * (N - 2) + 1.0;
    const long n1 = std::llround(x);
    if (std::abs(x - static_cast<double>(n1)) > 1e-6) return false;
    if (n1 < 2 || N - n1 < 2) return false;
    N1_out = static_cast<int>(n1);
    return true;
}

}  // namespace

BlockDims admissible_dims(double gamma, int N) {
    int N1 = 0;
    if (!dims_ok(gamma, N, N1)) {
        auto [below, above] = nearest_admissible(gamma, N);
        throw ModelError("N = " + std::to_string(N) + " is not admissible for gamma = " +
                         std::to_string(gamma) + " (need gamma*(N-2) integral); nearest are " +
                         std::to_string(below) + " and " + std::to_string(above));
    }
    return {N, N1, N - N1, gamma};
}

std::pair<int, int> nearest_admissible(double gamma, int N) {
    int n1 = 0;
    int below = 0, above = 0;
    for (int d = 1; d < 100000 && (below == 0 || above == 0); ++d) {
        if (below == 0 && N - d >= 4 && dims_ok(gamma, N - d, n1)) below = N - d;
        if (above == 0 && dims_ok(gamma, N + d, n1)) above = N + d;
    }
    return {below, above};
}

double GaussianRng::next() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    double v1, v2, s;
    do {
        v1 = unif(engine_);
        v2 = unif(engine_);
        s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v2 * factor;
    has_cached_ = true;
    return v1 * factor;
}

Eigen::MatrixXd deterministic_part(const ModelParams& p, const BlockDims& dims,
                                   const FieldPoint& u) {
    const int n = dims.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const double d1 = static_cast<double>(dims.N) / dims.N1 * (p.alpha1 * u.u1 - p.xi1_prime * u.u0);
    const double d2 = static_cast<double>(dims.N) / dims.N2 * (p.alpha2 * u.u2 - p.xi2_prime * u.u0);
    a.diagonal().head(dims.block1()).setConstant(d1);
    a.diagonal().tail(dims.block2()).setConstant(d2);
    return a;
}

Eigen::MatrixXd deterministic_part_prime(const ModelParams& p, const BlockDims& dims,
                                         const FieldPoint& u) {
    const int n = dims.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const double d1 = (p.alpha1 * u.u1 - p.xi1_prime * u.u0) / p.gamma;
    const double d2 = (p.alpha2 * u.u2 - p.xi2_prime * u.u0) / (1.0 - p.gamma);
    a.diagonal().head(dims.block1()).setConstant(d1);
    a.diagonal().tail(dims.block2()).setConstant(d2);
    return a;
}

Eigen::MatrixXd sample_w(const ModelParams& p, const BlockDims& dims, std::uint64_t seed) {
    if (!p.nondegenerate()) throw ModelError("sampler requires a nondegenerate model");
    const int n1 = dims.block1();
    const int n2 = dims.block2();
    const int n = n1 + n2;
    Eigen::MatrixXd w(n, n);
    GaussianRng rng(seed);

    // GOE blocks, E[(M)_{ij}^2] = (1 + delta_ij)/(Ni - 1), scaled by
    // sqrt(N (Ni - 1) xi_i'' / Ni^2). Fill order is row-major upper triangle.
    const double scale1 =
        std::sqrt(static_cast<double>(dims.N) * n1 * p.xi1_dprime / (static_cast<double>(dims.N1) * dims.N1));
    for (int i = 0; i < n1; ++i)
        for (int j = i; j < n1; ++j) {
            const double sd = (i == j) ? std::sqrt(2.0 / n1) : std::sqrt(1.0 / n1);
            w(i, j) = w(j, i) = scale1 * sd * rng.next();
        }
    const double scale2 =
        std::sqrt(static_cast<double>(dims.N) * n2 * p.xi2_dprime / (static_cast<double>(dims.N2) * dims.N2));
    for (int i = 0; i < n2; ++i)
        for (int j = i; j < n2; ++j) {
            const double sd = (i == j) ? std::sqrt(2.0 / n2) : std::sqrt(1.0 / n2);
            w(n1 + i, n1 + j) = w(n1 + j, n1 + i) = scale2 * sd * rng.next();
        }
    // cross block, i.i.d. with variance N xi1' xi2' / (N1 N2)
    const double cross_sd = std::sqrt(static_cast<double>(dims.N) * p.xi1_prime * p.xi2_prime /
                                      (static_cast<double>(dims.N1) * dims.N2));
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) w(i, n1 + j) = w(n1 + j, i) = cross_sd * rng.next();
    return w;
}

Eigen::MatrixXd coupling_factors(const BlockDims& dims) {
    const int n1 = dims.block1();
    const int n2 = dims.block2();
    const int n = n1 + n2;
    const double g = dims.gamma;
    const double N = dims.N;
    Eigen::MatrixXd t(n, n);
    const double t11 =
        std::sqrt(static_cast<double>(dims.N1) * dims.N1 / (g * g * N * (dims.N - 2)));
    const double t22 = std::sqrt(static_cast<double>(dims.N2) * dims.N2 /
                                 ((1.0 - g) * (1.0 - g) * N * (dims.N - 2)));
    const double tcross =
        std::sqrt(static_cast<double>(dims.N1) * dims.N2 / (g * N * (dims.N2 - 1)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i < n1 && j < n1)
                t(i, j) = t11;
            else if (i >= n1 && j >= n1)
                t(i, j) = t22;
            else
                t(i, j) = tcross;
        }
    // diagonal entries carry the extra 1/sqrt(1+delta_ij) = 1/sqrt(2)
    for (int i = 0; i < n; ++i) t(i, i) /= std::sqrt(2.0);
    return t;
}

Eigen::MatrixXd sample_h(const ModelParams& p, const BlockDims& dims, const FieldPoint& u,
                         std::uint64_t seed) {
    return deterministic_part(p, dims, u) + sample_w(p, dims, seed);
}

Eigen::MatrixXd sample_h_prime(const ModelParams& p, const BlockDims& dims, const FieldPoint& u,
                               std::uint64_t seed) {
    return deterministic_part_prime(p, dims, u) +
           coupling_factors(dims).cwiseProduct(sample_w(p, dims, seed));
}

EmpiricalSpectrum spectrum(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() != matrix.cols()) throw SolverError("spectrum: matrix not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw SolverError("symmetric eigensolver failed");
    EmpiricalSpectrum s;
    s.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + matrix.rows());
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
    s.lambda_min = s.eigenvalues.front();
    s.lambda_max = s.eigenvalues.back();
    return s;
}

namespace {

double cdf_distance(const EmpiricalSpectrum& spec, const SpectralDensity& density, double cap) {
    const auto& ev = spec.eigenvalues;
    const std::size_t n = ev.size();
    // density CDF at grid points, normalized to total mass one
    std::vector<double> cdf(density.grid.size(), 0.0);
    for (std::size_t i = 1; i < density.grid.size(); ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (density.values[i] + density.values[i - 1]) *
                                  (density.grid[i] - density.grid[i - 1]);
    const double total = cdf.back();
    if (total <= 0.0) throw SolverError("w1_distance: density has no mass");
    for (auto& c : cdf) c /= total;

    auto density_cdf = [&](double x) {
        if (x <= density.grid.front()) return 0.0;
        if (x >= density.grid.back()) return 1.0;
        const auto it = std::upper_bound(density.grid.begin(), density.grid.end(), x);
        const std::size_t i = it - density.grid.begin();
        const double w = (x - density.grid[i - 1]) / (density.grid[i] - density.grid[i - 1]);
        return cdf[i - 1] + w * (cdf[i] - cdf[i - 1]);
    };

    std::vector<double> pts;
    pts.reserve(n + density.grid.size());
    pts.insert(pts.end(), ev.begin(), ev.end());
    pts.insert(pts.end(), density.grid.begin(), density.grid.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    double dist = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const double x0 = pts[k - 1], x1 = pts[k];
        const double L = x1 - x0;
        if (L <= 0.0) continue;
        const double fe =
            static_cast<double>(std::upper_bound(ev.begin(), ev.end(), x0) - ev.begin()) / n;
        const double a = density_cdf(x0) - fe;
        const double b = density_cdf(x1) - fe;
        double piece;
        if (a * b >= 0.0)
            piece = 0.5 * L * (std::abs(a) + std::abs(b));
        else
            piece = 0.5 * L * (a * a + b * b) / (std::abs(a) + std::abs(b));
        dist += std::min(piece, cap * L);
    }
    return dist;
}

}  // namespace

double w1_distance(const EmpiricalSpectrum& spec, const SpectralDensity& density) {
    return cdf_distance(spec, density, std::numeric_limits<double>::infinity());
}

double bl_distance(const EmpiricalSpectrum& spec, const SpectralDensity& density) {
    return cdf_distance(spec, density, 1.0);
}

McEstimate mc_log_determinant(const ModelParams& p, const BlockDims& dims, const FieldPoint& u,
                              int samples, std::uint64_t seed) {
    if (samples < 1) throw ModelError("mc_log_determinant requires samples >= 1");
    std::vector<double> vals(samples);
    bool singular = false;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int s = 0; s < samples; ++s) {
        for (int attempt = 0; attempt < 2; ++attempt) {
            const std::uint64_t sd = seed + static_cast<std::uint64_t>(s) +
                                     (attempt ? 1000003u * (s + 1) : 0u);
            const EmpiricalSpectrum es = spectrum(sample_h(p, dims, u, sd));
            double acc = 0.0;
            bool bad = false;
            for (double lam : es.eigenvalues) {
                if (std::abs(lam) < 1e-300) {
                    bad = true;
                    break;
                }
                acc += std::log(std::abs(lam));
            }
            if (!bad) {
                vals[s] = acc / dims.size();
                break;
            }
            if (attempt == 1) singular = true;
        }
    }
    if (singular) throw SolverError("mc_log_determinant: exactly singular sample after redraw");
    McEstimate est;
    est.samples = samples;
    for (double v : vals) est.mean += v;
    est.mean /= samples;
    double var = 0.0;
    for (double v : vals) var += (v - est.mean) * (v - est.mean);
    est.std_error = samples > 1 ? std::sqrt(var / (samples - 1) / samples) : 0.0;
    return est;
}

double finite_n_prefactor_log(const BlockDims& dims, const ModelParams& p) {
    const double N = dims.N, N1 = dims.N1, N2 = dims.N2;
    double lf = 0.0;
    lf += std::log(2.0) + 0.5 * N1 * std::log(M_PI * N1) - std::lgamma(0.5 * N1);
    lf += std::log(2.0) + 0.5 * N2 * std::log(M_PI * N2) - std::lgamma(0.5 * N2);
    lf += 1.5 * std::log(N / (2.0 * M_PI));
    lf -= 0.5 * ((N - 2.0) * std::log(2.0 * M_PI * N) + (N1 - 1.0) * std::log(p.xi1_prime / N1) +
                 (N2 - 1.0) * std::log(p.xi2_prime / N2));
    return lf / N;
}

EdgeCheckReport edge_check(const ModelParams& p, const BlockDims& dims, const FieldPoint& u,
                           int samples, std::uint64_t seed, double tolerance) {
    if (samples < 1) throw ModelError("edge_check requires samples >= 1");
    EdgeCheckReport report;
    const auto [l, r] = support_edges(p, u);
    report.predicted_left = l;
    report.predicted_right = r;
    report.tolerance = tolerance;
    report.samples.resize(samples);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int s = 0; s < samples; ++s) {
        const EmpiricalSpectrum es = spectrum(sample_h(p, dims, u, seed + s));
        EdgeCheckSample& out = report.samples[s];
        out.lambda_min = es.lambda_min;
        out.lambda_max = es.lambda_max;
        out.within_band =
            std::abs(es.lambda_min - l) <= tolerance && std::abs(es.lambda_max - r) <= tolerance;
    }
    int ok = 0;
    for (const auto& s : report.samples) ok += s.within_band;
    report.fraction_within = static_cast<double>(ok) / samples;
    return report;
}

}  // namespace bsg::rmt
