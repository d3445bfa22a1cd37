#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybridyn/fokker_planck.hpp"
#include "hybridyn/markovian_limit.hpp"
#include "test_helpers.hpp"

using namespace hybridyn;

namespace {

/// Classical-only model (trivial 1-dim quantum part): dz = f dt + (g/2) dW.
HybridModel classical_model(double f, double g) {
    HybridModel m;
    m.hilbert_dim = 1;
    m.classical_dim = 1;
    m.h0 = ZOperator::fixed(ComplexMatrix::Zero(1, 1));
    if (g != 0.0) {
        m.channels.push_back(
            {ZOperator::fixed(ComplexMatrix::Zero(1, 1)), ZScalar::fixed(1.0)});
        m.coupling_g = [g](const RealVector&, RealMatrix& out) { out(0, 0) = g; };
    }
    m.drift_f = [f](const RealVector&, RealVector& out) { out(0) = f; };
    m.drift_constant = true;
    return m;
}

double gaussian(double z, double mean, double var) {
    return std::exp(-0.5 * (z - mean) * (z - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

std::pair<double, double> marginal_moments(const HybridDensityField& field) {
    const RealVector p = marginal_distribution(field);
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < field.grid.n_cells; ++i) {
        const double z = field.grid.center(i);
        m0 += p(i);
        m1 += p(i) * z;
        m2 += p(i) * z * z;
    }
    m1 /= m0;
    m2 /= m0;
    return {m1, m2 - m1 * m1};
}

}  // namespace

TEST_CASE("grid and field construction") {
    CHECK_THROWS_AS(Grid1D(1.0, 0.0, 100), std::invalid_argument);
    CHECK_THROWS_AS(Grid1D(-1.0, 1.0, 8), std::invalid_argument);
    const Grid1D g(-2.0, 2.0, 100);
    CHECK(g.dz() == doctest::Approx(0.04));
    const HybridDensityField f =
        gaussian_field(g, DensityMatrix::plus().matrix(), 0.0, 0.5);
    CHECK(total_mass(f) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(boundary_mass_fraction(f) < 1e-4);
}

TEST_CASE("all terms vanish: field unchanged") {
    HybridModel m = classical_model(0.0, 0.0);
    const Grid1D grid(-2.0, 2.0, 64);
    const HybridDensityField f0 =
        gaussian_field(grid, ComplexMatrix::Identity(1, 1), 0.0, 0.5);
    const HybridDensityField f1 = fp_step(m, f0, 1e-3);
    for (int i = 0; i < grid.n_cells; ++i)
        CHECK(max_abs(f1.values[i] - f0.values[i]) == 0.0);
}

TEST_CASE("pure advection translates a Gaussian") {
    const double v0 = 0.5, sigma = 0.5;
    const HybridModel m = classical_model(v0, 0.0);
    const Grid1D grid(-5.0, 5.0, 1000);  // dz = 0.01
    HybridDensityField f = gaussian_field(grid, ComplexMatrix::Identity(1, 1), 0.0, sigma);
    const double dt = fp_stable_dt(m, grid);
    const long steps = long(std::ceil(1.0 / dt));
    const double dt_used = 1.0 / double(steps);
    for (long s = 0; s < steps; ++s) f = fp_step(m, f, dt_used);

    double l1 = 0.0;
    const RealVector p = marginal_distribution(f);
    for (int i = 0; i < grid.n_cells; ++i)
        l1 += std::abs(p(i) - gaussian(grid.center(i), v0 * 1.0, sigma * sigma)) * grid.dz();
    CHECK(l1 <= 0.05);
}

TEST_CASE("pure diffusion grows the variance at rate g^2/4") {
    const double g = 1.0, sigma0 = 0.5;
    const HybridModel m = classical_model(0.0, g);
    const Grid1D grid(-6.0, 6.0, 240);  // dz = 0.05
    HybridDensityField f =
        gaussian_field(grid, ComplexMatrix::Identity(1, 1), 0.0, sigma0);
    const double dt = fp_stable_dt(m, grid);
    const long steps = long(std::ceil(1.0 / dt));
    const double dt_used = 1.0 / double(steps);
    for (long s = 0; s < steps; ++s) f = fp_step(m, f, dt_used);

    const auto [mean, var] = marginal_moments(f);
    const double expected = sigma0 * sigma0 + g * g / 4.0;
    CHECK(std::abs(mean) <= 1e-10);  // symmetric
    CHECK(std::abs(var - expected) <= 0.02 * expected);
}

TEST_CASE("mass is conserved by the flux form") {
    const HybridModel m = build_scenario({"hybrid_linear", {}});
    const Grid1D grid(-4.0, 4.0, 64);
    HybridDensityField f = gaussian_field(grid, DensityMatrix::plus().matrix(), 0.0, 0.5);
    const double dt = fp_stable_dt(m, grid);
    for (int s = 0; s < 10000; ++s) f = fp_step(m, f, dt);
    CHECK(std::abs(total_mass(f) - 1.0) <= 1e-6);
    // field scaled by 2 doubles the mass
    HybridDensityField doubled = f;
    for (auto& v : doubled.values) v *= 2.0;
    CHECK(total_mass(doubled) == doctest::Approx(2.0 * total_mass(f)).epsilon(1e-12));
}

TEST_CASE("Hermiticity and conditional positivity along the evolution") {
    const HybridModel m = build_scenario({"hybrid_linear", {}});
    const Grid1D grid(-5.0, 5.0, 200);
    HybridDensityField f = gaussian_field(grid, DensityMatrix::plus().matrix(), 0.0, 0.5);
    const double dt = fp_stable_dt(m, grid);
    int checked = 0;
    for (int s = 0; s < 400; ++s) {
        f = fp_step(m, f, dt);
        if (s % 40 != 0) continue;
        const double mass = total_mass(f);
        for (int i = 0; i < grid.n_cells; ++i) {
            CHECK(hermiticity_defect(f.values[i]) <= 1e-10);
            // deep-tail cells (relative mass below ~1e-8) carry upwinding
            // noise and are excluded; mass-bearing cells must be states
            if (f.values[i].trace().real() > 1e-8 * mass) {
                const DensityMatrix cond = conditional_state(f, i);
                CHECK(min_eigenvalue(cond.matrix()) >= -1e-6);
                ++checked;
            }
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("marginal and expectation utilities") {
    const Grid1D grid(-2.0, 2.0, 64);
    // uniform field of a fixed state: uniform marginal, conditional = rho0
    HybridDensityField f;
    f.grid = grid;
    const ComplexMatrix rho0 = DensityMatrix::plus().matrix();
    for (int i = 0; i < grid.n_cells; ++i) f.values.push_back(rho0 / (grid.z_max - grid.z_min));
    const RealVector p = marginal_distribution(f);
    CHECK((p.array() - p(0)).abs().maxCoeff() <= 1e-15);
    CHECK(max_abs(conditional_state(f, 10).matrix() - rho0) <= 1e-12);

    // f = 1: trace of the expectation equals the mass
    const ComplexMatrix one = expectation_against(f, [](double) { return 1.0; });
    CHECK(one.trace().real() == doctest::Approx(total_mass(f)).epsilon(1e-12));
    // f = z on an even field: zero first moment
    const ComplexMatrix zmom = expectation_against(f, [](double z) { return z; });
    CHECK(max_abs(zmom) <= 1e-10);
    // indicator of the right half-line on a symmetric field: half the mass
    const ComplexMatrix half =
        expectation_against(f, [](double z) { return z > 0.0 ? 1.0 : 0.0; });
    CHECK(half.trace().real() == doctest::Approx(0.5 * total_mass(f)).epsilon(1e-12));

    // delta-like initial cell: unit spike in the marginal
    HybridDensityField spike;
    spike.grid = grid;
    spike.values.assign(grid.n_cells, ComplexMatrix::Zero(2, 2));
    spike.values[32] = rho0 / grid.dz();
    const RealVector ps = marginal_distribution(spike);
    CHECK(ps(32) * grid.dz() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(conditional_state(spike, 0), std::invalid_argument);
}

TEST_CASE("z-averaged field follows the Lindblad equation for z-independent operators") {
    const HybridModel m = build_scenario({"open_qbm", {}});
    const Grid1D grid(-6.0, 6.0, 300);
    HybridDensityField f = gaussian_field(grid, DensityMatrix::plus().matrix(), 0.0, 0.5);
    const double dt = fp_stable_dt(m, grid);
    const long steps = long(std::ceil(1.0 / dt));
    const double dt_used = 1.0 / double(steps);
    for (long s = 0; s < steps; ++s) f = fp_step(m, f, dt_used);

    const RealVector z0 = RealVector::Zero(1);
    const auto gen = averaged_measurement_generator(m.h0.at(z0), {m.channels[0].at(z0)});
    const auto series = integrate_lindblad(gen, DensityMatrix::plus().matrix(), 1e-3, 1.0);
    const ComplexMatrix averaged = expectation_against(f, [](double) { return 1.0; });
    CHECK(frobenius_distance(averaged, series.back()) <= 10.0 * (dt_used + grid.dz()));
    CHECK(boundary_mass_fraction(f) < 1e-4);
}

TEST_CASE("stability guard and dimension guard") {
    const HybridModel m = build_scenario({"hybrid_linear", {}});
    const Grid1D grid(-4.0, 4.0, 64);
    const HybridDensityField f =
        gaussian_field(grid, DensityMatrix::plus().matrix(), 0.0, 0.5);
    const double bound = fp_stable_dt(m, grid);
    CHECK_THROWS_AS(fp_step(m, f, 2.0 * bound), std::invalid_argument);

    const HybridModel d0 = build_scenario({"dephasing_qubit", {}});
    CHECK_THROWS_AS(fp_step(d0, f, 1e-4), std::invalid_argument);
}

TEST_CASE("parallel and serial steps are bit-identical") {
    const HybridModel m = build_scenario({"hybrid_linear", {}});
    const Grid1D grid(-5.0, 5.0, 250);
    HybridDensityField fpar = gaussian_field(grid, DensityMatrix::plus().matrix(), 0.0, 0.5);
    HybridDensityField fser = fpar;
    const double dt = fp_stable_dt(m, grid);
    for (int s = 0; s < 50; ++s) {
        fpar = fp_step(m, fpar, dt, /*parallel=*/true);
        fser = fp_step_serial(m, fser, dt);
    }
    for (int i = 0; i < grid.n_cells; ++i)
        for (Eigen::Index j = 0; j < fpar.values[i].size(); ++j)
            CHECK(fpar.values[i](j) == fser.values[i](j));
}

TEST_CASE("run_pde hits the requested snapshots") {
    const HybridModel m = build_scenario({"hybrid_linear", {}});
    const Grid1D grid(-4.0, 4.0, 100);
    const HybridDensityField f0 =
        gaussian_field(grid, DensityMatrix::plus().matrix(), 0.0, 0.5);
    const PdeRun run = run_pde(m, f0, 1.0, {0.0, 0.5, 1.0});
    REQUIRE(run.times.size() == 3);
    CHECK(run.times[0] == doctest::Approx(0.0));
    CHECK(run.times[1] == doctest::Approx(0.5));
    CHECK(run.times[2] == doctest::Approx(1.0));
    CHECK(run.dt_used <= fp_stable_dt(m, grid) * (1.0 + 1e-12));
}
