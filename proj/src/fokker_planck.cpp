#include "hybridyn/fokker_planck.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hybridyn {

Grid1D::Grid1D(double lo, double hi, int n) : z_min(lo), z_max(hi), n_cells(n) {
    if (!(z_max > z_min)) throw std::invalid_argument("Grid1D: z_max must exceed z_min");
    if (n_cells < 16) throw std::invalid_argument("Grid1D: n_cells must be at least 16");
}

HybridDensityField gaussian_field(const Grid1D& grid, const ComplexMatrix& rho0, double mean,
                                  double stddev) {
    if (stddev <= 0.0) throw std::invalid_argument("gaussian_field: stddev must be positive");
    HybridDensityField field;
    field.grid = grid;
    field.values.resize(grid.n_cells);
    for (int i = 0; i < grid.n_cells; ++i) {
        const double x = (grid.center(i) - mean) / stddev;
        field.values[i] = rho0 * std::exp(-0.5 * x * x);
    }
    const double mass = total_mass(field);
    if (mass <= 0.0) throw std::invalid_argument("gaussian_field: grid does not cover the peak");
    for (auto& v : field.values) v /= mass;
    return field;
}

namespace {

struct CellCoefficients {
    ComplexMatrix h;                  // H0(z_i)
    std::vector<ComplexMatrix> c;     // channel operators
    std::vector<ComplexMatrix> q;     // c^+ c
    std::vector<double> eta;
    RealVector f;                     // drift, length 1
    RealMatrix g;                     // 1 x n
    double diff = 0.0;                // sum_k G_k^2 / 4
    double speed = 0.0;               // advection speed bound
    double local_rate = 0.0;          // bound on the pointwise generator norm
};

CellCoefficients cell_coefficients(const HybridModel& model, double zc) {
    CellCoefficients out;
    RealVector z(1);
    z(0) = zc;
    out.h = model.h0.at(z);
    const int n = model.num_channels();
    out.c.resize(n);
    out.q.resize(n);
    out.eta.resize(n);
    for (int k = 0; k < n; ++k) {
        out.c[k] = model.channels[k].c.at(z);
        out.q[k] = out.c[k].adjoint() * out.c[k];
        out.eta[k] = model.channels[k].eta.eval(z);
    }
    out.f = model.drift_at(z);
    out.g = model.coupling_at(z);
    out.speed = std::abs(out.f(0));
    out.local_rate = 2.0 * out.h.norm();
    for (int k = 0; k < n; ++k) {
        out.diff += 0.25 * out.g(0, k) * out.g(0, k);
        // |tr[(c+c^+)rho]| <= ||c + c^+||_2 for unit-trace PSD rho
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(out.c[k] + out.c[k].adjoint(),
                                                        Eigen::EigenvaluesOnly);
        const double opnorm = std::max(std::abs(es.eigenvalues()(0)),
                                       std::abs(es.eigenvalues()(es.eigenvalues().size() - 1)));
        out.speed += 0.5 * std::sqrt(out.eta[k]) * std::abs(out.g(0, k)) * opnorm;
        out.local_rate += 2.0 * out.c[k].squaredNorm();
    }
    return out;
}

/// Largest stable explicit step. The upwind (Lax-Friedrichs) flux carries
/// numerical diffusion speed*dz/2 on top of the physical coefficient
/// sum G^2/8, so the combined von Neumann condition is
///   dt * (2 D_eff/dz^2 + 2 speed/dz + local_rate) <= 1,
/// tighter than the advection and diffusion bounds taken separately.
double stable_dt_from(double max_diff, double max_speed, double max_local, double dz) {
    const double rate =
        2.0 * (0.5 * max_diff) / (dz * dz) + 2.0 * max_speed / dz + max_local;
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return 0.9 / rate;
}

/// Advection flux F rho + sum_k (sqrt(eta_k) G_k/2)(c_k rho + rho c_k^+).
ComplexMatrix advection_flux(const CellCoefficients& cc, const ComplexMatrix& rho) {
    ComplexMatrix flux = cc.f(0) * rho;
    for (std::size_t k = 0; k < cc.c.size(); ++k)
        flux += 0.5 * std::sqrt(cc.eta[k]) * cc.g(0, k) *
                (cc.c[k] * rho + rho * ComplexMatrix(cc.c[k].adjoint()));
    return flux;
}

ComplexMatrix local_terms(const CellCoefficients& cc, const ComplexMatrix& rho) {
    ComplexMatrix out = Complex(0, -1) * (cc.h * rho - rho * cc.h);
    for (std::size_t k = 0; k < cc.c.size(); ++k)
        out += cc.c[k] * rho * ComplexMatrix(cc.c[k].adjoint()) -
               0.5 * (cc.q[k] * rho + rho * cc.q[k]);
    return out;
}

HybridDensityField fp_step_impl(const HybridModel& model, const HybridDensityField& field,
                                double dt, bool parallel) {
    if (model.classical_dim != 1)
        throw std::invalid_argument("fp_step: only classical_dim = 1 is supported");
    const int n = field.grid.n_cells;
    if (int(field.values.size()) != n)
        throw std::invalid_argument("fp_step: field/grid size mismatch");
    const double dz = field.grid.dz();

    std::vector<CellCoefficients> cc(n);
    std::string first_error;
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
        try {
            cc[i] = cell_coefficients(model, field.grid.center(i));
        } catch (const std::exception& e) {
#pragma omp critical
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (!first_error.empty()) throw std::invalid_argument("fp_step: " + first_error);

    double max_diff = 0.0, max_speed = 0.0, max_local = 0.0;
    for (int i = 0; i < n; ++i) {
        max_diff = std::max(max_diff, cc[i].diff);
        max_speed = std::max(max_speed, cc[i].speed);
        max_local = std::max(max_local, cc[i].local_rate);
    }
    const double bound = stable_dt_from(max_diff, max_speed, max_local, dz);
    if (dt > bound) {
        std::ostringstream os;
        os << "fp_step: dt=" << dt << " exceeds stability bound " << bound
           << " (dz=" << dz << ", max diffusion " << max_diff << ", max speed " << max_speed
           << ")";
        throw std::invalid_argument(os.str());
    }

    // Cell fluxes and diffusion payloads (payload = (sum_k G_k^2/4) rho).
    std::vector<ComplexMatrix> flux(n), payload(n), local(n);
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
        flux[i] = advection_flux(cc[i], field.values[i]);
        payload[i] = cc[i].diff * field.values[i];
        local[i] = local_terms(cc[i], field.values[i]);
    }

    HybridDensityField out;
    out.grid = field.grid;
    out.t = field.t + dt;
    out.values.resize(n);
    RealVector defects = RealVector::Zero(n);

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
        // Interface advective fluxes (local Lax-Friedrichs upwinding), zero at
        // the domain boundary.
        ComplexMatrix f_right, f_left;
        if (i + 1 < n) {
            const double a = std::max(cc[i].speed, cc[i + 1].speed);
            f_right = 0.5 * (flux[i] + flux[i + 1]) -
                      0.5 * a * (field.values[i + 1] - field.values[i]);
        } else {
            f_right = ComplexMatrix::Zero(model.hilbert_dim, model.hilbert_dim);
        }
        if (i > 0) {
            const double a = std::max(cc[i - 1].speed, cc[i].speed);
            f_left = 0.5 * (flux[i - 1] + flux[i]) -
                     0.5 * a * (field.values[i] - field.values[i - 1]);
        } else {
            f_left = ComplexMatrix::Zero(model.hilbert_dim, model.hilbert_dim);
        }
        // Diffusion gradient fluxes of the payload D rho, zero at the boundary.
        ComplexMatrix g_right = ComplexMatrix::Zero(model.hilbert_dim, model.hilbert_dim);
        ComplexMatrix g_left = g_right;
        if (i + 1 < n) g_right = (payload[i + 1] - payload[i]) / dz;
        if (i > 0) g_left = (payload[i] - payload[i - 1]) / dz;

        ComplexMatrix next =
            field.values[i] +
            dt * (local[i] - (f_right - f_left) / dz + 0.5 * (g_right - g_left) / dz);
        defects(i) = hermiticity_defect(next);
        out.values[i] = 0.5 * (next + next.adjoint().eval());
    }
    const double worst = defects.maxCoeff();
    if (worst > 1e-10)
        throw std::runtime_error("fp_step: Hermiticity defect " + std::to_string(worst));
    return out;
}

}  // namespace

double fp_stable_dt(const HybridModel& model, const Grid1D& grid) {
    const double dz = grid.dz();
    double max_diff = 0.0, max_speed = 0.0, max_local = 0.0;
    for (int i = 0; i < grid.n_cells; ++i) {
        const CellCoefficients cc = cell_coefficients(model, grid.center(i));
        max_diff = std::max(max_diff, cc.diff);
        max_speed = std::max(max_speed, cc.speed);
        max_local = std::max(max_local, cc.local_rate);
    }
    return stable_dt_from(max_diff, max_speed, max_local, dz);
}

HybridDensityField fp_step(const HybridModel& model, const HybridDensityField& field, double dt,
                           bool parallel) {
    return fp_step_impl(model, field, dt, parallel);
}

HybridDensityField fp_step_serial(const HybridModel& model, const HybridDensityField& field,
                                  double dt) {
    return fp_step_impl(model, field, dt, false);
}

double total_mass(const HybridDensityField& field) {
    double m = 0.0;
    for (const auto& v : field.values) m += v.trace().real();
    return m * field.grid.dz();
}

RealVector marginal_distribution(const HybridDensityField& field) {
    RealVector p(field.values.size());
    for (std::size_t i = 0; i < field.values.size(); ++i) p(i) = field.values[i].trace().real();
    return p;
}

DensityMatrix conditional_state(const HybridDensityField& field, int z_index) {
    if (z_index < 0 || z_index >= int(field.values.size()))
        throw std::invalid_argument("conditional_state: index out of range");
    const double mass = total_mass(field);
    const double cell_tr = field.values[z_index].trace().real();
    if (!(cell_tr > 1e-12 * mass))
        throw std::invalid_argument("conditional_state: negligible-mass cell");
    return DensityMatrix(field.values[z_index] / cell_tr, /*psd_tol=*/-1e-6);
}

ComplexMatrix expectation_against(const HybridDensityField& field,
                                  const std::function<double(double)>& f) {
    ComplexMatrix out = ComplexMatrix::Zero(field.values.front().rows(),
                                            field.values.front().cols());
    for (std::size_t i = 0; i < field.values.size(); ++i)
        out += f(field.grid.center(int(i))) * field.values[i];
    return out * field.grid.dz();
}

double boundary_mass_fraction(const HybridDensityField& field) {
    const double mass = total_mass(field);
    if (mass <= 0.0) return 0.0;
    const double edge = (field.values.front().trace().real() +
                         field.values.back().trace().real()) *
                        field.grid.dz();
    return edge / mass;
}

PdeRun run_pde(const HybridModel& model, const HybridDensityField& field0, double T,
               const std::vector<double>& snapshot_times, double dt_request, bool parallel) {
    PdeRun run;
    double dt = fp_stable_dt(model, field0.grid);
    if (dt_request > 0.0) dt = std::min(dt, dt_request);
    if (!std::isfinite(dt) || dt <= 0.0) dt = T;

    // Choose dt so that every snapshot time is a whole number of steps.
    double spacing = T;
    for (double s : snapshot_times)
        if (s > 0.0) spacing = std::min(spacing, s);
    const long per = std::max(1L, long(std::ceil(spacing / dt - 1e-9)));
    dt = spacing / double(per);
    run.dt_used = dt;

    const long n_steps = long(std::llround(T / dt));
    HybridDensityField field = field0;
    auto want = [&](double t) {
        for (double s : snapshot_times)
            if (std::abs(s - t) < 0.5 * dt) return true;
        return false;
    };
    if (want(0.0)) {
        run.times.push_back(0.0);
        run.snapshots.push_back(field);
    }
    run.max_boundary_mass = boundary_mass_fraction(field);
    for (long s = 1; s <= n_steps; ++s) {
        field = fp_step_impl(model, field, dt, parallel);
        run.max_boundary_mass = std::max(run.max_boundary_mass, boundary_mass_fraction(field));
        const double t = double(s) * dt;
        if (want(t)) {
            run.times.push_back(t);
            run.snapshots.push_back(field);
        }
    }
    run.steps = n_steps;
    return run;
}

}  // namespace hybridyn
