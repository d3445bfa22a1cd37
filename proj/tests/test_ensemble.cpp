#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybridyn/ensemble.hpp"
#include "test_helpers.hpp"

using namespace hybridyn;

namespace {

EnsembleSpec dephasing_spec(int n_traj, double dt = 1e-3, double T = 1.0) {
    EnsembleSpec spec;
    spec.model = build_scenario({"dephasing_qubit", {}});
    spec.n_traj = n_traj;
    spec.dt = dt;
    spec.T = T;
    spec.master_seed = 99;
    spec.rho0 = DensityMatrix::plus().matrix();
    spec.snapshot_times = {0.5 * T, T};
    spec.observables = {{"sx", pauli_x()}, {"sz", pauli_z()}};
    return spec;
}

}  // namespace

TEST_CASE("single-trajectory ensemble reproduces the trajectory") {
    EnsembleSpec spec = dephasing_spec(1);
    const EnsembleStats stats = run_ensemble(spec, 1);
    CHECK_FALSE(stats.sem_valid);
    CHECK(stats.snapshots.size() == 2);
    CHECK(stats.snapshots[1].sem_rho.maxCoeff() == 0.0);

    HybridState init{spec.rho0, RealVector::Zero(0), 0.0};
    const TrajectoryRecord rec =
        run_trajectory(spec.model, init, spec.dt, spec.T, RngStream(spec.master_seed, 0));
    CHECK(max_abs(stats.snapshots[1].mean_rho - rec.states.back().rho) == 0.0);
}

TEST_CASE("scheduling invariance: worker counts and serial reference agree bit-exactly") {
    EnsembleSpec spec = dephasing_spec(64, 1e-3, 0.2);
    const EnsembleStats serial = run_ensemble_serial(spec);
    for (int workers : {1, 2, 8}) {
        const EnsembleStats par = run_ensemble(spec, workers);
        CAPTURE(workers);
        CHECK(stats_identical(serial, par));
    }
}

TEST_CASE("standard errors shrink like sqrt(N)") {
    EnsembleSpec small = dephasing_spec(400);
    EnsembleSpec big = dephasing_spec(800);
    big.master_seed = small.master_seed;
    const double se_small = run_ensemble(small).snapshots[1].obs_sem(0);
    const double se_big = run_ensemble(big).snapshots[1].obs_sem(0);
    const double ratio = se_small / se_big;
    CHECK(ratio > std::sqrt(2.0) * 0.8);
    CHECK(ratio < std::sqrt(2.0) * 1.2);
}

TEST_CASE("dephasing ensemble mean matches the closed form") {
    EnsembleSpec spec = dephasing_spec(4000);
    const EnsembleStats stats = run_ensemble(spec);
    const auto& snap = stats.snapshots[1];  // t = 1
    const double expected = std::exp(-2.0);
    CHECK(std::abs(snap.obs_mean(0) - expected) <= 3.0 * snap.obs_sem(0) + 10.0 * spec.dt);
}

TEST_CASE("martingale property: ensemble mean converges to the Lindblad solution") {
    // Frobenius distance <= 5/sqrt(N) + 10 dt at N = 1000 (the N = 10^4 leg
    // runs in the acceptance suite with a tighter threshold)
    EnsembleSpec spec = dephasing_spec(1000);
    const EnsembleStats stats = run_ensemble(spec);
    const RealVector z0 = RealVector::Zero(0);
    const auto gen = averaged_measurement_generator(spec.model.h0.at(z0),
                                                    {spec.model.channels[0].at(z0)});
    const auto series = integrate_lindblad(gen, spec.rho0, 1e-3, spec.T);
    for (const auto& snap : stats.snapshots) {
        const long idx = std::llround(snap.t / 1e-3);
        const double dist = frobenius_distance(snap.mean_rho, series.at(idx));
        CHECK(dist <= 5.0 / std::sqrt(double(spec.n_traj)) + 10.0 * spec.dt);
    }
}

TEST_CASE("comparison against the Lindblad oracle") {
    EnsembleSpec spec = dephasing_spec(4000);
    const RealVector z0 = RealVector::Zero(0);
    const auto gen = averaged_measurement_generator(spec.model.h0.at(z0),
                                                    {spec.model.channels[0].at(z0)});
    const ComparisonReport ok = compare_mean_to_lindblad(spec, gen);
    CHECK(ok.pass);

    // a generator with gamma off by 2x must fail at t = 1
    const auto wrong = averaged_measurement_generator(
        spec.model.h0.at(z0), {MeasurementChannel(std::sqrt(2.0) * pauli_z(), 1.0)});
    const ComparisonReport bad = compare_mean_to_lindblad(spec, wrong);
    CHECK_FALSE(bad.pass);
}

TEST_CASE("born histogram: already-collapsed initial state is exact") {
    EnsembleSpec spec = dephasing_spec(500, 1e-3, 1.0);
    spec.rho0 = DensityMatrix::ground(2).matrix();
    const BornReport rep = born_rule_histogram(spec);
    CHECK(rep.pass);
    CHECK(rep.unresolved_fraction == 0.0);
    // |0><0| is an exact fixed point: frequencies are (0, 1) against the
    // ascending eigenvalue order of sigma_z (|1> has eigenvalue -1)
    CHECK(rep.mean_final_purity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.frequencies[0] + rep.frequencies[1] == doctest::Approx(1.0));
    for (std::size_t j = 0; j < rep.frequencies.size(); ++j)
        CHECK(std::abs(rep.frequencies[j] - rep.born_weights[j]) <= rep.tolerances[j] + 1e-12);

    EnsembleSpec half = spec;
    half.model = build_scenario({"dephasing_qubit", {{"eta", 0.5}}});
    CHECK_THROWS_AS(born_rule_histogram(half), std::invalid_argument);
}

TEST_CASE("trajectory failures propagate with the trajectory index") {
    EnsembleSpec spec = dephasing_spec(8);
    spec.engine.positivity_abort = 0.9;  // impossible: every state trips the monitor
    try {
        run_ensemble(spec);
        FAIL("expected a failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("trajectory 0") != std::string::npos);
    }
}

TEST_CASE("trajectories against the transport equation at matched initial data") {
    EnsembleSpec spec;
    spec.model = build_scenario({"hybrid_linear", {}});
    spec.n_traj = 800;
    spec.dt = 1e-3;
    spec.T = 0.25;
    spec.master_seed = 5;
    spec.rho0 = DensityMatrix::plus().matrix();
    spec.z0_mean = RealVector::Zero(1);
    spec.z0_std = RealVector::Constant(1, 0.5);
    spec.snapshot_times = {0.0, 0.25};

    const Grid1D grid(-5.0, 5.0, 250);
    const HybridDensityField f0 = gaussian_field(grid, spec.rho0, 0.0, 0.5);
    const PdeRun pde = run_pde(spec.model, f0, spec.T, spec.snapshot_times);
    const std::vector<TestFunction> fs = {
        {"1", [](const RealVector&) { return 1.0; }},
        {"z", [](const RealVector& z) { return z(0); }},
    };
    const ComparisonReport rep = compare_to_pde(spec, pde, fs);
    CHECK(rep.pass);
    REQUIRE(rep.lines.size() == 4);

    // mismatched initial conditions are rejected
    EnsembleSpec shifted = spec;
    shifted.z0_mean = RealVector::Constant(1, 1.0);
    CHECK_THROWS_AS(compare_to_pde(shifted, pde, fs), std::invalid_argument);
}

TEST_CASE("histogram counts sum to the trajectory count") {
    EnsembleSpec spec;
    spec.model = build_scenario({"open_qbm", {}});
    spec.n_traj = 300;
    spec.dt = 1e-3;
    spec.T = 0.2;
    spec.master_seed = 17;
    spec.rho0 = DensityMatrix::plus().matrix();
    spec.z0_mean = RealVector::Zero(1);
    spec.z0_std = RealVector::Constant(1, 0.5);
    spec.snapshot_times = {0.2};
    for (int i = 0; i <= 40; ++i) spec.histogram_edges.push_back(-4.0 + 0.2 * i);
    const EnsembleStats stats = run_ensemble(spec);
    CHECK(stats.snapshots[0].hist_counts.sum() == spec.n_traj);
}
