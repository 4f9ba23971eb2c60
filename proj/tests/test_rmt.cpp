// finite-N ensembles: sampling, spectra, Monte Carlo checks
#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "bsg/complexity.hpp"
#include "bsg/mde.hpp"
#include "bsg/model.hpp"
#include "bsg/rmt.hpp"

using namespace bsg;
using namespace bsg::rmt;

namespace {

ModelParams pure22() { return derive_params(parse_mixture("pure 2 2"), 0.5); }

double opnorm(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return std::max(std::abs(es.eigenvalues().minCoeff()),
                    std::abs(es.eigenvalues().maxCoeff()));
}

}  // namespace

TEST_CASE("admissible_dims arithmetic") {
    const auto d1 = admissible_dims(0.5, 100);
    CHECK(d1.N1 == 50);
    CHECK(d1.N2 == 50);
    CHECK(d1.size() == 98);
    const auto d2 = admissible_dims(0.4, 102);
    CHECK(d2.N1 == 41);
    CHECK(d2.N2 == 61);
}

TEST_CASE("inadmissible N names the nearest admissible values") {
    try {
        admissible_dims(0.4, 101);
        FAIL("expected ModelError");
    } catch (const ModelError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("97") != std::string::npos);
        CHECK(msg.find("102") != std::string::npos);
    }
    const auto [lo, hi] = nearest_admissible(0.4, 101);
    CHECK(lo == 97);
    CHECK(hi == 102);
}

TEST_CASE("seeded determinism is bit-exact") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 102);
    const FieldPoint u{-1.0, 0.2, 0.3};
    const auto a = sample_h(p, dims, u, 42);
    const auto b = sample_h(p, dims, u, 42);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    const auto c = sample_h(p, dims, u, 43);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("u=0 gives a pure noise matrix") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 102);
    CHECK(deterministic_part(p, dims, {0.0, 0.0, 0.0}).cwiseAbs().maxCoeff() == 0.0);
    CHECK(deterministic_part_prime(p, dims, {0.0, 0.0, 0.0}).cwiseAbs().maxCoeff() == 0.0);
    const auto h = sample_h(p, dims, {0.0, 0.0, 0.0}, 7);
    const auto w = sample_w(p, dims, 7);
    CHECK((h - w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampled matrices are symmetric") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 102);
    const auto h = sample_h(p, dims, {-1.0, 0.4, -0.3}, 11);
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const auto hp = sample_h_prime(p, dims, {-1.0, 0.4, -0.3}, 11);
    CHECK((hp - hp.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("block I1 off-diagonal entrywise variance matches the profile") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 102);
    // target variance N xi1'' / N1^2 = 102*2/51^2, estimated from one fixed
    // off-diagonal entry over many draws
    const double target = 102.0 * 2.0 / (51.0 * 51.0);
    const int draws = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < draws; ++s) {
        const double x = sample_w(p, dims, 1000 + s)(3, 17);  // inside block1 (size 50)
        sum += x;
        sumsq += x * x;
    }
    const double var = sumsq / draws - (sum / draws) * (sum / draws);
    // SE of a variance estimate for a Gaussian: var * sqrt(2/draws)
    const double se = target * std::sqrt(2.0 / draws);
    CHECK(std::abs(var - target) < 3.0 * se);
    CHECK(target == doctest::Approx(0.078431).epsilon(1e-4));
}

TEST_CASE("E[H] equals the deterministic part") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 52);
    const FieldPoint u{-1.5, 0.0, 0.0};
    const int draws = 1000;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(dims.size(), dims.size());
    for (int s = 0; s < draws; ++s) mean += sample_h(p, dims, u, 5000 + s);
    mean /= draws;
    const auto a = deterministic_part(p, dims, u);
    // largest entry sd ~ 0.56 (diagonal GOE / cross entries); the check is a
    // max over ~2.5k entries, so allow the 4.7-sigma envelope of that max
    const double band = 4.7 * 0.56 / std::sqrt(static_cast<double>(draws));
    CHECK((mean - a).cwiseAbs().maxCoeff() < band);
    // the diagonal is block-constant: (N/N1)(-xi1' u0) = (52/26)*3 = 6
    CHECK(a(0, 0) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(a(dims.size() - 1, dims.size() - 1) == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("coupling factors match the displayed entries") {
    const auto dims = admissible_dims(0.5, 102);
    const auto t = coupling_factors(dims);
    // cross-block entry sqrt(N1 N2/(gamma N (N2-1)))
    CHECK(t(0, dims.block1()) == doctest::Approx(1.009950).epsilon(1e-5));
    // all factors close to one
    CHECK((t.array() - 1.0).abs().maxCoeff() < 0.35);  // diagonal carries 1/sqrt2
    for (int i = 1; i < dims.size(); ++i)
        for (int j = 0; j < i; ++j) CHECK(std::abs(t(i, j) - 1.0) < 0.05);
}

TEST_CASE("coupled H and H' stay close in operator norm") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 400);
    const FieldPoint u{-1.0, 0.0, 0.0};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Eigen::MatrixXd diff = sample_h(p, dims, u, seed) - sample_h_prime(p, dims, u, seed);
        CHECK(opnorm(diff) < 0.5);
    }
}

TEST_CASE("coupling tightens as N grows") {
    const auto p = pure22();
    const auto small = admissible_dims(0.5, 202);
    const auto large = admissible_dims(0.5, 802);
    const FieldPoint u{-1.0, 0.0, 0.0};
    double avg_small = 0.0, avg_large = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        avg_small += opnorm(sample_h(p, small, u, seed) - sample_h_prime(p, small, u, seed));
        avg_large += opnorm(sample_h(p, large, u, seed) - sample_h_prime(p, large, u, seed));
    }
    CHECK(avg_large < avg_small);
}

TEST_CASE("spectrum trivial cases") {
    {
        const auto s = spectrum(Eigen::MatrixXd::Identity(4, 4));
        for (double ev : s.eigenvalues) CHECK(ev == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.lambda_min == doctest::Approx(1.0));
        CHECK(s.lambda_max == doctest::Approx(1.0));
    }
    {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
        d(0, 0) = -1.0;
        d(2, 2) = 2.0;
        const auto s = spectrum(d);
        CHECK(s.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(s.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(s.eigenvalues[2] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(s.lambda_min == s.eigenvalues.front());
        CHECK(s.lambda_max == s.eigenvalues.back());
    }
}

TEST_CASE("spectrum trace consistency") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 102);
    const auto h = sample_h(p, dims, {-0.7, 0.0, 0.0}, 3);
    const auto s = spectrum(h);
    double sum = 0.0;
    for (double ev : s.eigenvalues) sum += ev;
    CHECK(std::abs(sum - h.trace()) < 1e-8 * dims.N);
    for (size_t i = 1; i < s.eigenvalues.size(); ++i)
        CHECK(s.eigenvalues[i] >= s.eigenvalues[i - 1]);
}

TEST_CASE("w1 distance trivial cases") {
    // a two-atom empirical measure against a narrow density spike at 1:
    // shifted deltas at 0 vs 1 have W1 = 1
    EmpiricalSpectrum at0;
    at0.eigenvalues = {0.0, 0.0};
    at0.lambda_min = at0.lambda_max = 0.0;
    SpectralDensity spike;
    const int n = 2001;
    for (int i = 0; i < n; ++i) {
        const double lam = 0.9 + 0.2 * i / (n - 1);
        spike.grid.push_back(lam);
        spike.values.push_back(std::abs(lam - 1.0) < 0.001 ? 500.0 : 0.0);
    }
    spike.left_edge = 0.999;
    spike.right_edge = 1.001;
    CHECK(w1_distance(at0, spike) == doctest::Approx(1.0).epsilon(1e-2));
    // empirical measure drawn from the density quantiles: distance ~ spacing
    EmpiricalSpectrum at1;
    at1.eigenvalues = {1.0, 1.0};
    at1.lambda_min = at1.lambda_max = 1.0;
    CHECK(w1_distance(at1, spike) < 2e-3);
    // bounded-Lipschitz never exceeds W1
    CHECK(bl_distance(at0, spike) <= w1_distance(at0, spike) + 1e-12);
}

TEST_CASE("ESD matches the MDE density in W1") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 1002);
    for (double u0 : {0.0, -1.0, -2.5}) {
        const FieldPoint u{u0, 0.0, 0.0};
        const auto s = spectrum(sample_h(p, dims, u, 99));
        const auto d = density_auto(p, u, 1024);
        CHECK(w1_distance(s, d) <= 0.10);
    }
}

TEST_CASE("distributional symmetry u -> -u") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 1002);
    const FieldPoint u{-1.0, 0.0, 0.0};
    const auto spos = spectrum(sample_h(p, dims, u, 5));
    auto sneg = spectrum(sample_h(p, dims, u.negated(), 6));
    // reflect the -u spectrum
    EmpiricalSpectrum refl;
    for (auto it = sneg.eigenvalues.rbegin(); it != sneg.eigenvalues.rend(); ++it)
        refl.eigenvalues.push_back(-*it);
    refl.lambda_min = refl.eigenvalues.front();
    refl.lambda_max = refl.eigenvalues.back();
    // compare both against the same MDE density at u
    const auto d = density_auto(p, u, 1024);
    CHECK(w1_distance(spos, d) <= 0.1);
    CHECK(w1_distance(refl, d) <= 0.1);
}

TEST_CASE("mc_log_determinant against the analytic log-potential") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 402);
    {
        const FieldPoint u{-2.5, 0.0, 0.0};
        const auto est = mc_log_determinant(p, dims, u, 50, 12345);
        const auto d = density_auto(p, u, 2048);
        CHECK(std::abs(est.mean - log_potential(d)) < 0.05);
        CHECK(est.std_error > 0.0);
        CHECK(est.samples == 50);
    }
    {
        const auto est = mc_log_determinant(p, dims, {0.0, 0.0, 0.0}, 50, 999);
        CHECK(std::abs(est.mean - (0.5 * std::log(12.0) - 0.5)) < 0.08);
    }
    // determinism with a single sample
    const auto a = mc_log_determinant(p, dims, {0.0, 0.0, 0.0}, 1, 77);
    const auto b = mc_log_determinant(p, dims, {0.0, 0.0, 0.0}, 1, 77);
    CHECK(a.mean == b.mean);
}

TEST_CASE("finite-N prefactor converges to the limit") {
    const auto p = pure22();
    const double limit = prefactor_limit(p);
    const double at1e4 = finite_n_prefactor_log(admissible_dims(0.5, 10000), p);
    const double at1e5 = finite_n_prefactor_log(admissible_dims(0.5, 100000), p);
    // the O(log N / N) Stirling remainder is ~2.17e-3 at N = 1e4
    CHECK(std::abs(at1e4 - limit) < 3e-3);
    CHECK(std::abs(at1e5 - limit) < std::abs(at1e4 - limit));
    for (int n : {4, 6, 52, 402}) {
        CHECK(std::isfinite(finite_n_prefactor_log(admissible_dims(0.5, n), p)));
    }
}

TEST_CASE("extreme eigenvalues sit at the predicted edges") {
    const auto p = pure22();
    const auto dims = admissible_dims(0.5, 1002);
    const double edge = 4.0 * std::sqrt(3.0);
    {
        const auto rep = edge_check(p, dims, {0.0, 0.0, 0.0}, 10, 21);
        CHECK(rep.fraction_within == 1.0);
        CHECK(rep.predicted_left == doctest::Approx(-edge).epsilon(1e-3));
        CHECK(rep.predicted_right == doctest::Approx(edge).epsilon(1e-3));
        for (const auto& s : rep.samples) {
            CHECK(std::abs(s.lambda_max - edge) < 0.15);
            CHECK(std::abs(s.lambda_min + edge) < 0.15);
        }
    }
    {
        const auto rep = edge_check(p, dims, {-2.5, 0.0, 0.0}, 10, 22);
        CHECK(rep.fraction_within == 1.0);
        for (const auto& s : rep.samples) CHECK(std::abs(s.lambda_min - (10.0 - edge)) < 0.15);
    }
}
