#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybridyn/markovian_limit.hpp"
#include "test_helpers.hpp"

using namespace hybridyn;
using testing::random_density;
using testing::random_hermitian;
using testing::random_matrix;

TEST_CASE("averaged measurement generator") {
    const LindbladGenerator pure_h =
        averaged_measurement_generator(pauli_x(), {});
    CHECK(pure_h.jump_ops.empty());

    // maximally mixed state is a fixed point for Hermitian channels
    const LindbladGenerator gen = averaged_measurement_generator(
        ComplexMatrix::Zero(2, 2), {MeasurementChannel(pauli_z(), 1.0)});
    CHECK(max_abs(lindblad_rhs(gen, 0.5 * ComplexMatrix::Identity(2, 2))) <= 1e-14);
}

TEST_CASE("dephasing decay through integrate_lindblad") {
    const LindbladGenerator gen = averaged_measurement_generator(
        ComplexMatrix::Zero(2, 2), {MeasurementChannel(pauli_z(), 1.0)});
    const auto series = integrate_lindblad(gen, DensityMatrix::plus().matrix(), 1e-3, 1.0);
    const Complex rho01 = series.back()(0, 1);
    CHECK(std::abs(rho01 - 0.5 * std::exp(-2.0)) <= 1e-8);
    for (const auto& r : series) {
        CHECK(std::abs(r.trace().real() - 1.0) <= 1e-12);
        CHECK(hermiticity_defect(r) <= 1e-12);
    }
    // zero generator: constant state
    const LindbladGenerator zero{ComplexMatrix::Zero(2, 2), {}};
    const auto flat = integrate_lindblad(zero, DensityMatrix::plus().matrix(), 1e-3, 0.1);
    CHECK(max_abs(flat.back() - flat.front()) <= 1e-14);
}

TEST_CASE("effective potential examples") {
    const std::vector<MeasurementChannel> chan = {MeasurementChannel(pauli_z(), 1.0)};
    // anticommuting pair: vanishing potential
    CHECK(max_abs(effective_potential(chan, {0.5 * pauli_x()})) <= 1e-15);
    // commuting pair: (mu/2) I
    const ComplexMatrix v = effective_potential(chan, {0.5 * pauli_z()});
    CHECK(max_abs(v - 0.25 * ComplexMatrix::Identity(2, 2)) <= 1e-15);
    // zero feedback
    CHECK(max_abs(effective_potential(chan, {ComplexMatrix::Zero(2, 2)})) == 0.0);
    CHECK(is_hermitian(effective_potential(chan, {0.3 * pauli_y()}), 1e-12));
}

TEST_CASE("feedback generator structure") {
    const std::vector<MeasurementChannel> chan = {MeasurementChannel(pauli_z(), 1.0)};
    // zero feedback reduces to the measurement generator
    const LindbladGenerator gen0 =
        feedback_generator(ComplexMatrix::Zero(2, 2), chan, {ComplexMatrix::Zero(2, 2)});
    CHECK(gen0.jump_ops.size() == 1);
    CHECK(max_abs(gen0.jump_ops[0] - pauli_z()) <= 1e-15);
    CHECK(max_abs(gen0.h_total) <= 1e-15);

    // unit efficiency: single jump c - i b / 2
    const LindbladGenerator gen1 =
        feedback_generator(ComplexMatrix::Zero(2, 2), chan, {pauli_x()});
    REQUIRE(gen1.jump_ops.size() == 1);
    CHECK(max_abs(gen1.jump_ops[0] - (pauli_z() - Complex(0, 0.5) * pauli_x())) <= 1e-15);

    // inefficient channel gains the residual-noise jump sqrt((1-eta)/(4 eta)) b
    const std::vector<MeasurementChannel> half = {MeasurementChannel(pauli_z(), 0.5)};
    const LindbladGenerator gen2 =
        feedback_generator(ComplexMatrix::Zero(2, 2), half, {pauli_x()});
    REQUIRE(gen2.jump_ops.size() == 2);
    CHECK(max_abs(gen2.jump_ops[1] - std::sqrt(0.25) * pauli_x()) <= 1e-15);

    // eta = 0 with nonzero feedback is rejected
    const std::vector<MeasurementChannel> dark = {MeasurementChannel(pauli_z(), 0.0)};
    CHECK_THROWS_AS(feedback_generator(ComplexMatrix::Zero(2, 2), dark, {pauli_x()}),
                    std::invalid_argument);
}

TEST_CASE("averaged feedback equation equals its manifest Lindblad form") {
    RngStream rng(42, 0);
    SUBCASE("qubit example") {
        const std::vector<MeasurementChannel> chan = {MeasurementChannel(pauli_z(), 1.0)};
        const double d = identity_check_eq28(chan, {pauli_x()}, random_density(rng, 2));
        CHECK(d <= 1e-12);
    }
    SUBCASE("zero feedback: both sides are the dissipator sum") {
        const std::vector<MeasurementChannel> chan = {MeasurementChannel(pauli_z(), 1.0)};
        CHECK(identity_check_eq28(chan, {ComplexMatrix::Zero(2, 2)},
                                  random_density(rng, 2)) == 0.0);
    }
    SUBCASE("random sweep over dims 2-4") {
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int dim = 2 + int(rng.raw() % 3);
            std::vector<MeasurementChannel> chans;
            std::vector<ComplexMatrix> fbs;
            const int n = 1 + int(rng.raw() % 2);
            for (int k = 0; k < n; ++k) {
                chans.emplace_back(random_matrix(rng, dim), 0.1 + 0.9 * rng.uniform());
                fbs.push_back(random_hermitian(rng, dim));
            }
            worst = std::max(worst, identity_check_eq28(chans, fbs, random_density(rng, dim)));
        }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("commuting measurement and feedback give no feedback dissipation") {
    // c and b both diagonal: diagonal states stay diagonal under integration
    const std::vector<MeasurementChannel> chan = {MeasurementChannel(pauli_z(), 1.0)};
    const LindbladGenerator gen =
        feedback_generator(ComplexMatrix::Zero(2, 2), chan, {0.8 * pauli_z()});
    ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
    diag(0, 0) = 0.7;
    diag(1, 1) = 0.3;
    const auto series = integrate_lindblad(gen, diag, 1e-3, 1.0);
    double leak = 0.0;
    for (const auto& r : series) leak = std::max(leak, std::abs(r(0, 1)));
    CHECK(leak <= 1e-10);
    CHECK(max_abs(series.back() - diag) <= 1e-10);
}

TEST_CASE("stationary state of the feedback generator is purified") {
    const std::vector<MeasurementChannel> chan = {MeasurementChannel(pauli_z(), 1.0)};
    const LindbladGenerator gen =
        feedback_generator(ComplexMatrix::Zero(2, 2), chan, {0.5 * pauli_x()});
    const StationaryState st = stationary_state(gen);
    CHECK(st.null_dimension == 1);
    CHECK(max_abs(lindblad_rhs(gen, st.rho)) <= 1e-10);
    CHECK(purity(st.rho) > 0.5);

    // measurement-only generator keeps the maximally mixed state stationary
    const LindbladGenerator meas =
        averaged_measurement_generator(ComplexMatrix::Zero(2, 2), chan);
    CHECK(max_abs(lindblad_rhs(meas, 0.5 * ComplexMatrix::Identity(2, 2))) <= 1e-14);
    const StationaryState stm = stationary_state(meas);
    CHECK(stm.null_dimension >= 2);  // all diagonal states
    CHECK(max_abs(stm.rho - 0.5 * ComplexMatrix::Identity(2, 2)) <= 1e-10);
}

TEST_CASE("stationary state agrees with long-time integration") {
    const std::vector<MeasurementChannel> chan = {MeasurementChannel(pauli_z(), 1.0)};
    const LindbladGenerator gen =
        feedback_generator(ComplexMatrix::Zero(2, 2), chan, {0.5 * pauli_x()});
    const StationaryState st = stationary_state(gen);
    const auto series = integrate_lindblad(gen, DensityMatrix::plus().matrix(), 1e-3, 25.0);
    CHECK(std::abs(purity(series.back()) - purity(st.rho)) <= 1e-6);
    CHECK(frobenius_distance(series.back(), st.rho) <= 1e-6);
}

TEST_CASE("superoperator matrix reproduces the generator action") {
    RngStream rng(3, 0);
    LindbladGenerator gen;
    gen.h_total = random_hermitian(rng, 3);
    gen.jump_ops = {random_matrix(rng, 3), random_matrix(rng, 3)};
    const ComplexMatrix sup = superoperator_matrix(gen);
    const ComplexMatrix rho = random_density(rng, 3);
    // vectorize by columns, apply, reshape
    ComplexVector v(9);
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) v(c * 3 + r) = rho(r, c);
    const ComplexVector w = sup * v;
    ComplexMatrix back(3, 3);
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) back(r, c) = w(c * 3 + r);
    CHECK(max_abs(back - lindblad_rhs(gen, rho)) <= 1e-12);
}

TEST_CASE("integrate_lindblad guards the step size") {
    const LindbladGenerator gen = averaged_measurement_generator(
        ComplexMatrix::Zero(2, 2), {MeasurementChannel(10.0 * pauli_z(), 1.0)});
    CHECK_THROWS_AS(integrate_lindblad(gen, DensityMatrix::plus().matrix(), 0.1, 1.0),
                    std::invalid_argument);
}

TEST_CASE("decoherence rate diagnostic") {
    LindbladGenerator gen;
    gen.h_total = ComplexMatrix::Zero(2, 2);
    gen.jump_ops = {pauli_z(), 0.5 * pauli_x()};
    CHECK(decoherence_rate(gen) == doctest::Approx(2.0 + 0.5).epsilon(1e-12));
}
