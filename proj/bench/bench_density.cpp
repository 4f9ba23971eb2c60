// bench_density.cpp - blocked parallel density kernel vs serial reference
#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bsg/mde.hpp"
#include "bsg/model.hpp"

int main() {
    using clock = std::chrono::steady_clock;
    const auto spec = bsg::parse_mixture("pure 2 2");
    const auto params = bsg::derive_params(spec, 0.5);
    const bsg::FieldPoint u{-1.0, 0.0, 0.0};
    const double kappa = bsg::support_bound(params, u);
    const std::pair<double, double> window{-kappa - 1.0, kappa + 1.0};

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif
    for (int resolution : {512, 2048, 8192}) {
        auto t0 = clock::now();
        const auto serial = bsg::density_reference(params, u, window, resolution);
        auto t1 = clock::now();
        const auto parallel = bsg::density(params, u, window, resolution);
        auto t2 = clock::now();
        double max_diff = 0.0;
        for (int i = 0; i < resolution; ++i)
            max_diff = std::max(max_diff, std::abs(serial.values[i] - parallel.values[i]));
        const double ms_serial = std::chrono::duration<double, std::milli>(t1 - t0).count();
        const double ms_parallel = std::chrono::duration<double, std::milli>(t2 - t1).count();
        std::printf("resolution %5d: serial %8.2f ms, parallel %8.2f ms, speedup %5.2fx, "
                    "max |diff| %.3g\n",
                    resolution, ms_serial, ms_parallel, ms_serial / ms_parallel, max_diff);
    }
    return 0;
}
