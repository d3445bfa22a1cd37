#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybridyn/quantum_core.hpp"
#include "test_helpers.hpp"

using namespace hybridyn;
using testing::random_density;
using testing::random_hermitian;
using testing::random_matrix;

TEST_CASE("dissipator examples") {
    const ComplexMatrix half = 0.5 * ComplexMatrix::Identity(2, 2);
    CHECK(max_abs(dissipator(pauli_z(), half)) <= 1e-14);

    // lowering operator on the excited state, by hand: sm |1><1| sm^+ = |0><0|,
    // sm^+ sm = |1><1|.
    ComplexMatrix excited = ComplexMatrix::Zero(2, 2);
    excited(1, 1) = 1.0;
    ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
    expected(0, 0) = 1.0;
    expected(1, 1) = -1.0;
    CHECK(max_abs(dissipator(sigma_minus(), excited) - expected) <= 1e-14);

    CHECK_THROWS_AS(dissipator(pauli_z(), ComplexMatrix::Identity(3, 3)),
                    std::invalid_argument);
}

TEST_CASE("innovation examples") {
    // eigenprojector of a Hermitian c is a fixed point
    ComplexMatrix p0 = ComplexMatrix::Zero(2, 2);
    p0(0, 0) = 1.0;
    CHECK(max_abs(innovation(pauli_z(), p0)) <= 1e-14);

    // <sigma_z> = 0 on |+><+|, so the innovation reduces to the anticommutator
    const ComplexMatrix plus = DensityMatrix::plus().matrix();
    CHECK(max_abs(innovation(pauli_z(), plus) - pauli_z()) <= 1e-14);
}

TEST_CASE("superoperators are traceless and Hermitian-preserving") {
    RngStream rng(42, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int dim = 2 + int(rng.raw() % 5);  // dims 2..6
        const ComplexMatrix c = random_matrix(rng, dim);
        const ComplexMatrix rho = random_density(rng, dim);
        const ComplexMatrix d = dissipator(c, rho);
        const ComplexMatrix m = innovation(c, rho);
        CHECK(std::abs(d.trace()) <= 1e-12);
        CHECK(std::abs(m.trace()) <= 1e-12);
        CHECK(hermiticity_defect(d) <= 1e-12);
    }
}

TEST_CASE("dissipator is linear, innovation is not") {
    RngStream rng(7, 0);
    const ComplexMatrix c = random_matrix(rng, 3);
    const ComplexMatrix r1 = random_density(rng, 3);
    const ComplexMatrix r2 = random_density(rng, 3);
    const ComplexMatrix mix = 0.5 * (r1 + r2);
    CHECK(max_abs(dissipator(c, mix) - 0.5 * (dissipator(c, r1) + dissipator(c, r2))) <= 1e-12);
    CHECK(max_abs(innovation(c, mix) - 0.5 * (innovation(c, r1) + innovation(c, r2))) > 1e-6);
}

TEST_CASE("hermitian_eigen") {
    const auto [lam_id, v_id] = hermitian_eigen(ComplexMatrix::Identity(3, 3));
    CHECK(max_abs(lam_id.cast<Complex>().asDiagonal().toDenseMatrix() -
                  ComplexMatrix::Identity(3, 3)) <= 1e-12);
    CHECK(max_abs(v_id * v_id.adjoint() - ComplexMatrix::Identity(3, 3)) <= 1e-12);

    const auto [lam_x, v_x] = hermitian_eigen(pauli_x());
    CHECK(lam_x(0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(lam_x(1) == doctest::Approx(1.0).epsilon(1e-12));

    ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
    diag(0, 0) = 2.5;
    diag(1, 1) = -0.5;
    const auto [lam_d, v_d] = hermitian_eigen(diag);
    CHECK(lam_d(0) == doctest::Approx(-0.5));
    CHECK(lam_d(1) == doctest::Approx(2.5));

    // reconstruction property on random Hermitian input
    RngStream rng(3, 0);
    const ComplexMatrix h = random_hermitian(rng, 5);
    const auto [lam, v] = hermitian_eigen(h);
    const ComplexMatrix rebuilt = v * lam.cast<Complex>().asDiagonal() * v.adjoint();
    CHECK(max_abs(rebuilt - h) <= 1e-10 * std::max(1.0, max_abs(h)));

    CHECK_THROWS_AS(hermitian_eigen(random_matrix(rng, 3)), std::invalid_argument);
}

TEST_CASE("exp_antihermitian") {
    RngStream rng(11, 0);
    const ComplexMatrix h = random_hermitian(rng, 4);
    CHECK(max_abs(exp_antihermitian(h, 0.0) - ComplexMatrix::Identity(4, 4)) <= 1e-14);

    const ComplexMatrix u_pi = exp_antihermitian(pauli_z(), M_PI);
    CHECK(max_abs(u_pi + ComplexMatrix::Identity(2, 2)) <= 1e-12);

    const double s = 0.37;
    const ComplexMatrix u = exp_antihermitian(h, s);
    CHECK(max_abs(u * u.adjoint() - ComplexMatrix::Identity(4, 4)) <= 1e-12);
    CHECK(max_abs(u * exp_antihermitian(h, -s) - ComplexMatrix::Identity(4, 4)) <= 1e-12);

    CHECK_THROWS_AS(exp_antihermitian(random_matrix(rng, 3), 1.0), std::invalid_argument);
}

TEST_CASE("kron") {
    const ComplexMatrix i2 = ComplexMatrix::Identity(2, 2);
    CHECK(max_abs(kron(i2, i2) - ComplexMatrix::Identity(4, 4)) <= 1e-15);

    RngStream rng(5, 0);
    const ComplexMatrix a = random_matrix(rng, 2);
    const ComplexMatrix b = random_matrix(rng, 3);
    CHECK(std::abs(kron(a, b).trace() - a.trace() * b.trace()) <= 1e-12);

    // (sz x I)(I x sx) = sz x sx by direct 4x4 multiplication
    const ComplexMatrix lhs = kron(pauli_z(), i2) * kron(i2, pauli_x());
    CHECK(max_abs(lhs - kron(pauli_z(), pauli_x())) <= 1e-14);
}

TEST_CASE("partial trace and purity") {
    RngStream rng(9, 0);
    const ComplexMatrix ra = random_density(rng, 2);
    const ComplexMatrix rb = random_density(rng, 3);
    CHECK(max_abs(partial_trace_second(kron(ra, rb), 2, 3) - ra) <= 1e-12);
    CHECK(purity(DensityMatrix::plus().matrix()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(purity(0.5 * ComplexMatrix::Identity(2, 2)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("DensityMatrix validation") {
    CHECK_NOTHROW(DensityMatrix(DensityMatrix::plus().matrix()));
    CHECK_NOTHROW(DensityMatrix::tilted(M_PI / 8));

    ComplexMatrix bad_trace = 0.7 * ComplexMatrix::Identity(2, 2);
    CHECK_THROWS_AS(DensityMatrix{bad_trace}, std::invalid_argument);

    ComplexMatrix not_herm = DensityMatrix::plus().matrix();
    not_herm(0, 1) += Complex(0, 1e-6);
    CHECK_THROWS_AS(DensityMatrix{not_herm}, std::invalid_argument);

    ComplexMatrix negative(2, 2);
    negative << 1.1, 0, 0, -0.1;
    CHECK_THROWS_AS(DensityMatrix{negative}, std::invalid_argument);
}
