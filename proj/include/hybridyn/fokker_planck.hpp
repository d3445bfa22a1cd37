#pragma once

#include <functional>
#include <vector>

#include "hybridyn/model.hpp"

namespace hybridyn {

struct Grid1D {
    double z_min = -5.0;
    double z_max = 5.0;
    int n_cells = 500;

    Grid1D() = default;
    Grid1D(double lo, double hi, int n);

    double dz() const { return (z_max - z_min) / n_cells; }
    double center(int i) const { return z_min + (i + 0.5) * dz(); }
};

/// Grid of unnormalized matrices rho(z_i); tr rho(z_i) is the (unnormalized)
/// classical probability density.
struct HybridDensityField {
    Grid1D grid;
    std::vector<ComplexMatrix> values;
    double t = 0.0;
};

/// rho0 * Gaussian(z; mean, std) sampled at cell centers, normalized to unit
/// total mass by the midpoint rule.
HybridDensityField gaussian_field(const Grid1D& grid, const ComplexMatrix& rho0, double mean,
                                  double stddev);

/// Largest stable step 0.9 * min(dz^2 / (2 max D), dz / max |v|) with
/// D = sum_k G_k^2 / 4 and v the advection speed bound.
double fp_stable_dt(const HybridModel& model, const Grid1D& grid);

/// One explicit Euler step of the hybrid transport equation: pointwise
/// commutator and dissipators, upwind (local Lax-Friedrichs) advection of the
/// flux F rho + sum_k (sqrt(eta_k) G_k / 2)(c_k rho + rho c_k^+), and central
/// second differences of the diffusion payload (sum_k G_k^2/4) rho, with
/// zero-flux boundaries. Errors if dt exceeds the stability bound.
HybridDensityField fp_step(const HybridModel& model, const HybridDensityField& field, double dt,
                           bool parallel = true);

/// Serial reference implementation of fp_step (identical arithmetic).
HybridDensityField fp_step_serial(const HybridModel& model, const HybridDensityField& field,
                                  double dt);

/// Midpoint-rule total mass: integral of tr rho(z) dz.
double total_mass(const HybridDensityField& field);

/// p(z_i) = tr rho(z_i).
RealVector marginal_distribution(const HybridDensityField& field);

/// Normalized cell matrix; errors on negligible-mass cells.
DensityMatrix conditional_state(const HybridDensityField& field, int z_index);

/// Midpoint-rule integral of f(z) rho(z) dz.
ComplexMatrix expectation_against(const HybridDensityField& field,
                                  const std::function<double(double)>& f);

/// Fraction of mass in the outermost cell on each side (truncation monitor).
double boundary_mass_fraction(const HybridDensityField& field);

struct PdeRun {
    std::vector<double> times;
    std::vector<HybridDensityField> snapshots;
    double dt_used = 0.0;
    long steps = 0;
    double max_boundary_mass = 0.0;
};

/// Evolve the field to T, storing snapshots at the requested times (which are
/// rounded to whole steps; dt is chosen to divide the snapshot spacing).
PdeRun run_pde(const HybridModel& model, const HybridDensityField& field0, double T,
               const std::vector<double>& snapshot_times, double dt_request = 0.0,
               bool parallel = true);

}  // namespace hybridyn
