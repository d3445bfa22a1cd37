#pragma once

#include <vector>

#include "hybridyn/quantum_core.hpp"

namespace hybridyn {

struct LindbladGenerator {
    ComplexMatrix h_total;                 // Hermitian
    std::vector<ComplexMatrix> jump_ops;   // each contributes D[.]
};

/// -i[H, rho] + sum_j D[J_j](rho).
ComplexMatrix lindblad_rhs(const LindbladGenerator& gen, const ComplexMatrix& rho);

/// Generator of the noise-averaged measurement dynamics: H0 with jumps {c_k}.
LindbladGenerator averaged_measurement_generator(const ComplexMatrix& h0,
                                                 const std::vector<MeasurementChannel>& channels);

/// Effective feedback potential V_eff = sum_k (1/4)(b_k c_k + c_k^+ b_k).
/// Requires Hermitian b_k and eta_k > 0 wherever b_k != 0.
ComplexMatrix effective_potential(const std::vector<MeasurementChannel>& channels,
                                  const std::vector<ComplexMatrix>& feedback_ops);

/// Manifest Lindblad form of the Markovian-feedback master equation:
/// H = H0 + V_eff, jumps {c_k - i b_k/2} plus sqrt((1-eta_k)/(4 eta_k)) b_k
/// for each inefficient channel.
LindbladGenerator feedback_generator(const ComplexMatrix& h0,
                                     const std::vector<MeasurementChannel>& channels,
                                     const std::vector<ComplexMatrix>& feedback_ops);

/// Max entrywise discrepancy between the averaged feedback master equation
/// evaluated term by term and the manifest Lindblad form applied to rho.
double identity_check_eq28(const std::vector<MeasurementChannel>& channels,
                           const std::vector<ComplexMatrix>& feedback_ops,
                           const ComplexMatrix& rho);

/// Classical RK4 on the master equation; returns states at every step
/// (index i holds t = i*dt). Each stored state satisfies the density-matrix
/// invariants (positivity within -1e-8).
std::vector<ComplexMatrix> integrate_lindblad(const LindbladGenerator& gen,
                                              const ComplexMatrix& rho0, double dt, double T);

/// Column-stacking superoperator matrix of the generator (dim^2 x dim^2).
ComplexMatrix superoperator_matrix(const LindbladGenerator& gen);

struct StationaryState {
    ComplexMatrix rho;
    int null_dimension = 0;
    double min_singular_value = 0.0;
};

/// Stationary state via dense null space of the vectorized generator
/// (singular-value cutoff 1e-10 relative). For a degenerate stationary
/// manifold the maximally-mixed member is returned.
StationaryState stationary_state(const LindbladGenerator& gen);

/// Total decoherence-rate diagnostic: sum of squared Hilbert-Schmidt norms of
/// the jump operators.
double decoherence_rate(const LindbladGenerator& gen);

}  // namespace hybridyn
