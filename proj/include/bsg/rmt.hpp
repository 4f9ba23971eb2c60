// rmt.hpp - finite-N Hessian ensembles, spectra, Monte Carlo verification
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bsg/mde.hpp"
#include "bsg/model.hpp"

namespace bsg::rmt {

// Block sizes pinned by (N1-1)/(N-2) = gamma. Matrices have size N-2.
struct BlockDims {
    int N = 0;
    int N1 = 0;
    int N2 = 0;
    double gamma = 0.0;

    int size() const { return N - 2; }
    int block1() const { return N1 - 1; }
    int block2() const { return N2 - 1; }
};

// Throws ModelError naming the nearest admissible N values when
// gamma*(N-2) is not an integer.
BlockDims admissible_dims(double gamma, int N);

// Enumerates admissible N nearest to N (below and above).
std::pair<int, int> nearest_admissible(double gamma, int N);

// Deterministic Gaussian source: mt19937_64 plus Marsaglia polar method.
// Bit-reproducible within this implementation for a fixed seed.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}
    double next();

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Deterministic diagonal A_N(u): (N/Ni)(alpha_i u_i - xi_i' u0) per block.
Eigen::MatrixXd deterministic_part(const ModelParams& params, const BlockDims& dims,
                                   const FieldPoint& u);

// Same with the N-free coefficients 1/gamma, 1/(1-gamma).
Eigen::MatrixXd deterministic_part_prime(const ModelParams& params, const BlockDims& dims,
                                         const FieldPoint& u);

// The noise matrix W_N: GOE diagonal blocks scaled by sqrt(N(Ni-1)xi_i''/Ni^2),
// i.i.d. cross block with entry variance N xi1' xi2'/(N1 N2).
Eigen::MatrixXd sample_w(const ModelParams& params, const BlockDims& dims, std::uint64_t seed);

// Entrywise rescaling factors T_N (all close to one).
Eigen::MatrixXd coupling_factors(const BlockDims& dims);

// H_N(u) = A_N(u) + W_N.
Eigen::MatrixXd sample_h(const ModelParams& params, const BlockDims& dims, const FieldPoint& u,
                         std::uint64_t seed);

// H'_N(u) = A'_N(u) + T_N .* W_N, coupled to sample_h through the same
// Gaussians for equal seeds.
Eigen::MatrixXd sample_h_prime(const ModelParams& params, const BlockDims& dims,
                               const FieldPoint& u, std::uint64_t seed);

struct EmpiricalSpectrum {
    std::vector<double> eigenvalues;  // ascending
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

EmpiricalSpectrum spectrum(const Eigen::MatrixXd& matrix);

// Wasserstein-1 between the empirical measure and the (mass-normalized)
// density, via the integrated CDF difference on a merged grid.
double w1_distance(const EmpiricalSpectrum& spec, const SpectralDensity& density);

// Bounded-Lipschitz variant: same integrand capped at 1.
double bl_distance(const EmpiricalSpectrum& spec, const SpectralDensity& density);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int samples = 0;
};

// Mean over samples of (1/(N-2)) sum log|lambda_i(H_N(u))|. A sample with an
// eigenvalue below 1e-300 in magnitude is redrawn once, then reported as error.
McEstimate mc_log_determinant(const ModelParams& params, const BlockDims& dims,
                              const FieldPoint& u, int samples, std::uint64_t seed);

// (1/N) log f(N1, N2) of the Kac-Rice prefactor, via log-Gamma.
double finite_n_prefactor_log(const BlockDims& dims, const ModelParams& params);

struct EdgeCheckSample {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool within_band = false;
};

struct EdgeCheckReport {
    double predicted_left = 0.0;
    double predicted_right = 0.0;
    double tolerance = 0.0;
    std::vector<EdgeCheckSample> samples;
    double fraction_within = 0.0;
};

// Compares per-sample extreme eigenvalues against the MDE support edges.
EdgeCheckReport edge_check(const ModelParams& params, const BlockDims& dims, const FieldPoint& u,
                           int samples, std::uint64_t seed, double tolerance = 0.15);

}  // namespace bsg::rmt
