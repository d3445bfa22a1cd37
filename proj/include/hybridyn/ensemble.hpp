#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hybridyn/fokker_planck.hpp"
#include "hybridyn/markovian_limit.hpp"
#include "hybridyn/sde_engine.hpp"

namespace hybridyn {

struct Observable {
    std::string name;
    ComplexMatrix op;  // Hermitian
};

struct TestFunction {
    std::string name;
    std::function<double(const RealVector& z)> f;
};

struct EnsembleSpec {
    HybridModel model;
    StepMode mode = StepMode::hybrid;
    int n_traj = 1000;
    double dt = 1e-4;
    double T = 1.0;
    std::uint64_t master_seed = 0;
    ComplexMatrix rho0;
    RealVector z0_mean;  // classical_dim entries
    RealVector z0_std;   // Gaussian initial spread per dimension
    std::vector<double> snapshot_times;
    std::vector<Observable> observables;
    std::vector<TestFunction> test_functions;  // f(z)-weighted state moments
    std::vector<double> histogram_edges;       // d = 1 only; empty disables
    EngineOptions engine;
};

struct FMoment {
    ComplexMatrix mean;    // E[rho f(z)]
    RealMatrix sem;        // entrywise standard error
};

struct EnsembleSnapshot {
    double t = 0.0;
    ComplexMatrix mean_rho;
    RealMatrix sem_rho;     // entrywise standard error of rho
    RealVector z_mean, z_sem, z2_mean, z2_sem;
    RealVector obs_mean, obs_sem;  // tr(A rho) per observable
    std::vector<FMoment> fmoments;
    Eigen::VectorXi hist_counts;
};

struct EnsembleStats {
    int n_traj = 0;
    bool sem_valid = true;  // false when n_traj == 1
    std::vector<std::string> observable_names;
    std::vector<std::string> f_names;
    std::vector<double> hist_edges;
    std::vector<EnsembleSnapshot> snapshots;
};

/// Parallel Monte Carlo run. Trajectory i consumes stream (master_seed, i);
/// the reduction is a fixed pairwise tree over trajectory index, so results
/// are bit-identical for every worker count (0 = available parallelism).
EnsembleStats run_ensemble(const EnsembleSpec& spec, int num_workers = 0);

/// Plain-loop reference implementation (no OpenMP); bit-identical to
/// run_ensemble by construction.
EnsembleStats run_ensemble_serial(const EnsembleSpec& spec);

bool stats_identical(const EnsembleStats& a, const EnsembleStats& b);

struct ComparisonLine {
    std::string label;
    double t = 0.0;
    double discrepancy = 0.0;
    double stat_error = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct ComparisonReport {
    std::string title;
    std::vector<ComparisonLine> lines;
    bool pass = true;

    void add(ComparisonLine line) {
        pass = pass && line.pass;
        lines.push_back(std::move(line));
    }
};

/// Frobenius distance between the Monte Carlo mean state and the integrated
/// Lindblad solution at each snapshot; threshold 4 * stat_error + 10 * dt.
ComparisonReport compare_mean_to_lindblad(const EnsembleSpec& spec, const LindbladGenerator& gen,
                                          int num_workers = 0);

/// Entrywise comparison of E[rho_t f(z_t)] against the field expectation for
/// each test function; threshold 4 * stat_error + 10 * (dt + dz).
ComparisonReport compare_to_pde(const EnsembleSpec& spec, const PdeRun& pde,
                                const std::vector<TestFunction>& fs, int num_workers = 0);

struct BornReport {
    std::vector<double> frequencies;   // per eigenprojector of the measured operator
    std::vector<double> born_weights;  // from the initial state
    std::vector<double> tolerances;    // 3 sigma binomial
    double unresolved_fraction = 0.0;
    double mean_final_purity = 0.0;
    bool pass = false;
};

/// Collapse statistics for a single Hermitian channel at eta = 1: classify
/// final states by nearest eigenprojector (fidelity > 0.99) and compare the
/// outcome frequencies with the Born weights of the initial state.
BornReport born_rule_histogram(const EnsembleSpec& spec, int num_workers = 0);

}  // namespace hybridyn
