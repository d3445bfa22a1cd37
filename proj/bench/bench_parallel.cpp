// Timing comparison between the OpenMP ensemble/stencil kernels and their
// serial reference implementations.

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hybridyn/ensemble.hpp"

using namespace hybridyn;
namespace chrono = std::chrono;

namespace {

double seconds(chrono::steady_clock::time_point a, chrono::steady_clock::time_point b) {
    return chrono::duration_cast<chrono::duration<double>>(b - a).count();
}

EnsembleSpec bench_spec(const char* scenario, StepMode mode, int n_traj, double dt, double T) {
    EnsembleSpec spec;
    spec.model = build_scenario({scenario, {}});
    spec.mode = mode;
    spec.n_traj = n_traj;
    spec.dt = dt;
    spec.T = T;
    spec.master_seed = 12345;
    spec.rho0 = spec.model.hilbert_dim == 2
                    ? DensityMatrix::plus().matrix()
                    : kron(DensityMatrix::plus().matrix(), DensityMatrix::plus().matrix());
    spec.z0_mean = RealVector::Zero(spec.model.classical_dim);
    spec.z0_std = RealVector::Constant(spec.model.classical_dim, 0.5);
    spec.snapshot_times = {T};
    return spec;
}

void bench_ensemble(const char* scenario, StepMode mode, int n_traj, double dt, double T) {
    const EnsembleSpec spec = bench_spec(scenario, mode, n_traj, dt, T);
    const double total_steps = double(n_traj) * (T / dt);

    auto t0 = chrono::steady_clock::now();
    const EnsembleStats serial = run_ensemble_serial(spec);
    auto t1 = chrono::steady_clock::now();
    const double t_serial = seconds(t0, t1);

    std::printf("%-26s serial        %7.3f s  (%6.0f ns/step)\n", scenario, t_serial,
                1e9 * t_serial / total_steps);
    for (int workers : {1, 2, 4, 8}) {
        t0 = chrono::steady_clock::now();
        const EnsembleStats par = run_ensemble(spec, workers);
        t1 = chrono::steady_clock::now();
        const double t_par = seconds(t0, t1);
        std::printf("%-26s omp x%-2d       %7.3f s  (speedup %4.2f, identical: %s)\n", scenario,
                    workers, t_par, t_serial / t_par,
                    stats_identical(serial, par) ? "yes" : "NO");
    }
}

void bench_pde(int n_cells, int steps) {
    const HybridModel model = build_scenario({"hybrid_linear", {}});
    const Grid1D grid(-6.0, 6.0, n_cells);
    const HybridDensityField f0 =
        gaussian_field(grid, DensityMatrix::plus().matrix(), 0.0, 0.5);
    const double dt = fp_stable_dt(model, grid);

    HybridDensityField f = f0;
    auto t0 = chrono::steady_clock::now();
    for (int s = 0; s < steps; ++s) f = fp_step_serial(model, f, dt);
    auto t1 = chrono::steady_clock::now();
    const double t_serial = seconds(t0, t1);
    std::printf("pde %5d cells          serial        %7.3f s  (%6.2f us/step)\n", n_cells,
                t_serial, 1e6 * t_serial / steps);

    HybridDensityField g = f0;
    t0 = chrono::steady_clock::now();
    for (int s = 0; s < steps; ++s) g = fp_step(model, g, dt, /*parallel=*/true);
    t1 = chrono::steady_clock::now();
    const double t_par = seconds(t0, t1);
    bool same = true;
    for (int i = 0; i < n_cells && same; ++i)
        for (Eigen::Index j = 0; j < f.values[i].size(); ++j)
            if (f.values[i](j) != g.values[i](j)) {
                same = false;
                break;
            }
    std::printf("pde %5d cells          omp           %7.3f s  (speedup %4.2f, identical: %s)\n",
                n_cells, t_par, t_serial / t_par, same ? "yes" : "NO");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("hardware threads: %d\n\n", omp_get_max_threads());
#endif
    bench_ensemble("dephasing_qubit", StepMode::hybrid, 512, 1e-4, 1.0);
    bench_ensemble("hybrid_linear", StepMode::hybrid, 512, 1e-4, 1.0);
    bench_ensemble("markovian_feedback_qubit", StepMode::markovian_feedback, 512, 1e-4, 1.0);
    bench_ensemble("two_qubit_product", StepMode::markovian_feedback, 64, 1e-4, 1.0);
    std::printf("\n");
    bench_pde(600, 400);
    return 0;
}
