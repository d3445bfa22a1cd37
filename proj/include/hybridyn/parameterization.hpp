#pragma once

#include <vector>

#include "hybridyn/quantum_core.hpp"

namespace hybridyn {

/// Diagonal measurement-feedback parameterization: c_k = sum_a Gamma_ak L_a,
/// detector efficiencies eta, signal coupling G.
struct DiagonalParams {
    ComplexMatrix Gamma;            // m x n
    RealVector eta;                 // n, entries in [0,1]
    RealMatrix G;                   // d x n
    std::vector<ComplexMatrix> L;   // m basis operators, dim x dim

    int m() const { return int(Gamma.rows()); }
    int n() const { return int(Gamma.cols()); }
    int d() const { return int(G.rows()); }

    void check_shapes() const;
    /// c_k built from the expansion.
    ComplexMatrix channel_operator(int k) const;
};

struct NonDiagonalParams {
    ComplexMatrix D0;  // m x m, Hermitian PSD
    ComplexMatrix D1;  // d x m
    RealMatrix D2;     // d x d, symmetric PSD
    RealMatrix sigma;  // d x n
};

struct TradeoffReport {
    double psd_margin = 0.0;  // lambda_min(2 D2 - D1 D0^{-1} D1^+)
    bool saturated = false;
    bool pseudo_inverse_used = false;
    double d0_min_eigenvalue = 0.0;
};

struct DriftEquivalenceReport {
    double quantum_drift_discrepancy = 0.0;
    double quantum_noise_discrepancy = 0.0;    // max over channels
    double classical_drift_discrepancy = 0.0;
    double classical_noise_discrepancy = 0.0;
    double max_discrepancy = 0.0;
};

/// D0 = Gamma Gamma^+, sigma = G/2, D1 = sigma sqrt(eta) Gamma^+, D2 = sigma sigma^T / 2.
///
/// The inverse direction is deliberately not implemented: Gamma is determined
/// only up to a right unitary, so there is no canonical diagonal form. A
/// realization can always be constructed by hand: factor D0 = Gamma Gamma^+
/// (Cholesky or an eigenvalue square root), take G = 2 sigma, and solve
/// sigma diag(sqrt(eta)) Gamma^+ = D1 for the efficiencies (least squares via
/// generalized_inverse when sigma is rectangular); eta = 1 across the board
/// corresponds to a saturated trade-off.
NonDiagonalParams to_nondiagonal(const DiagonalParams& p);

/// Margin of the decoherence-diffusion trade-off 2 D2 >= D1 D0^{-1} D1^+.
/// Falls back to a pseudo-inverse (eigenvalue cutoff 1e-12 * lambda_max) for
/// degenerate D0 and flags it.
TradeoffReport tradeoff_margin(const NonDiagonalParams& q);

/// sigma^{-1} := sigma^T (sigma sigma^T)^{-1}; requires full row rank.
RealMatrix generalized_inverse(const RealMatrix& sigma);

/// Evaluates the SME drift and noise coefficients in diagonal form and in the
/// expanded (D0, D1, sigma) form at (rho, z); reports the discrepancies.
DriftEquivalenceReport drift_equivalence_check(const DiagonalParams& p, const ComplexMatrix& rho,
                                               const RealVector& z);

}  // namespace hybridyn
