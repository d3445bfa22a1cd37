#pragma once

#include <string>
#include <vector>

#include "hybridyn/ensemble.hpp"
#include "hybridyn/parameterization.hpp"

namespace hybridyn::io {

/// CSV with one row per stored state: t, upper-triangle rho entries
/// (row-major, Re/Im pairs), z components, then dr_k (blank when the channel
/// emits no signal) and dW_k on the row of the state they produced.
void write_trajectory_csv(const TrajectoryRecord& rec, int classical_dim,
                          const std::string& path);

/// CSV field snapshot: z, tr rho(z), upper-triangle Re/Im entries per cell.
void write_field_csv(const HybridDensityField& field, const std::string& path);

/// CSV time series of a deterministic master-equation solution: t,
/// upper-triangle Re/Im entries, purity, then tr(A rho) per observable.
void write_lindblad_csv(const std::vector<ComplexMatrix>& series, double dt,
                        const std::vector<Observable>& observables, const std::string& path);

/// Ensemble statistics as a JSON document.
void write_stats_json(const EnsembleStats& stats, const std::string& path);

/// Histogram as CSV: bin_lo, bin_hi, count per snapshot column.
void write_histograms_csv(const EnsembleStats& stats, const std::string& path);

/// Comparison report as JSON plus a human-readable table next to it (.txt).
void write_report(const ComparisonReport& report, const std::string& json_path);

std::string report_table(const ComparisonReport& report);

/// Diagonal parameter set from a JSON file holding Gamma, eta, G, and L as
/// matrix lists; complex entries are [re, im] pairs.
DiagonalParams read_diagonal_params(const std::string& path);

struct RunConfig {
    std::string scenario = "dephasing_qubit";
    std::map<std::string, double> parameters;
    double dt = 1e-4;
    double T = 1.0;
    int n_traj = 1000;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    std::vector<double> snapshot_times;
    // initial conditions
    std::string rho0 = "plus";  // plus | ground | mixed | tilted
    double rho0_theta = 0.0;    // for tilted
    double z0_mean = 0.0;
    double z0_std = 0.5;
    // PDE grid
    double z_min = -6.0;
    double z_max = 6.0;
    int n_cells = 600;
    double pde_dt = 0.0;  // 0 = stability-bound choice
    int workers = 0;      // 0 = available parallelism / HYBRIDYN_WORKERS
};

/// Parse a JSON config file; unknown keys are an error naming the key.
RunConfig load_config(const std::string& path);

/// Apply defaults-from-file then return the fully resolved config as JSON text
/// (the manifest body, itself loadable via load_config).
std::string manifest_json(const RunConfig& cfg, const std::string& subcommand,
                          const std::string& tool_version);

void write_text(const std::string& path, const std::string& body);

ComplexMatrix initial_state(const RunConfig& cfg, int dim);

}  // namespace hybridyn::io
