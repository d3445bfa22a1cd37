#include "hybridyn/parameterization.hpp"

#include "hybridyn/quantum_core.hpp"

namespace hybridyn {

void DiagonalParams::check_shapes() const {
    if (int(L.size()) != m())
        throw std::invalid_argument("DiagonalParams: L must hold m operators");
    if (eta.size() != n()) throw std::invalid_argument("DiagonalParams: eta must have length n");
    if (G.cols() != n()) throw std::invalid_argument("DiagonalParams: G must be d x n");
    for (int k = 0; k < n(); ++k)
        if (eta(k) < 0.0 || eta(k) > 1.0)
            throw std::invalid_argument("DiagonalParams: eta outside [0,1]");
    const Eigen::Index dim = L.empty() ? 0 : L.front().rows();
    for (const auto& op : L)
        if (op.rows() != dim || op.cols() != dim)
            throw std::invalid_argument("DiagonalParams: L operators must share one dimension");
}

ComplexMatrix DiagonalParams::channel_operator(int k) const {
    const Eigen::Index dim = L.front().rows();
    ComplexMatrix c = ComplexMatrix::Zero(dim, dim);
    for (int a = 0; a < m(); ++a) c += Gamma(a, k) * L[a];
    return c;
}

NonDiagonalParams to_nondiagonal(const DiagonalParams& p) {
    p.check_shapes();
    NonDiagonalParams q;
    q.D0 = p.Gamma * p.Gamma.adjoint();
    q.sigma = 0.5 * p.G;
    q.D1 = ComplexMatrix::Zero(p.d(), p.m());
    for (int a = 0; a < p.d(); ++a)
        for (int al = 0; al < p.m(); ++al)
            for (int k = 0; k < p.n(); ++k)
                q.D1(a, al) += q.sigma(a, k) * std::sqrt(p.eta(k)) * std::conj(p.Gamma(al, k));
    q.D2 = 0.5 * q.sigma * q.sigma.transpose();
    return q;
}

TradeoffReport tradeoff_margin(const NonDiagonalParams& q) {
    TradeoffReport rep;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(q.D0);
    const RealVector& lam = es.eigenvalues();
    rep.d0_min_eigenvalue = lam.size() ? lam(0) : 0.0;
    const double lam_max = lam.size() ? lam(lam.size() - 1) : 0.0;
    rep.pseudo_inverse_used = !(rep.d0_min_eigenvalue > 1e-10);
    const double cutoff = rep.pseudo_inverse_used ? 1e-12 * lam_max : 0.0;

    RealVector inv = RealVector::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        inv(i) = lam(i) > cutoff && lam(i) > 0.0 ? 1.0 / lam(i) : 0.0;
    const ComplexMatrix d0_inv =
        es.eigenvectors() * inv.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();

    ComplexMatrix gap = 2.0 * q.D2.cast<Complex>() - q.D1 * d0_inv * q.D1.adjoint();
    gap = 0.5 * (gap + gap.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> gs(gap, Eigen::EigenvaluesOnly);
    rep.psd_margin = gap.rows() ? gs.eigenvalues()(0) : 0.0;
    rep.saturated = gap.rows() == 0 || max_abs(gap) <= 1e-10;
    return rep;
}

RealMatrix generalized_inverse(const RealMatrix& sigma) {
    const RealMatrix gram = sigma * sigma.transpose();
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(gram, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(es.eigenvalues().size() - 1);
    if (!(lmin > 1e-12 * lmax) || lmax <= 0.0)
        throw std::invalid_argument("generalized_inverse: sigma sigma^T is rank deficient");
    return sigma.transpose() * gram.inverse();
}

DriftEquivalenceReport drift_equivalence_check(const DiagonalParams& p, const ComplexMatrix& rho,
                                               const RealVector& z) {
    p.check_shapes();
    (void)z;  // the parameter matrices are already evaluated at a fixed z
    const Eigen::Index dim = rho.rows();
    const NonDiagonalParams q = to_nondiagonal(p);
    DriftEquivalenceReport rep;

    // Quantum drift: diagonal dissipator sum vs the D0-contracted expansion.
    ComplexMatrix drift_diag = ComplexMatrix::Zero(dim, dim);
    for (int k = 0; k < p.n(); ++k) drift_diag += dissipator(p.channel_operator(k), rho);
    ComplexMatrix drift_exp = ComplexMatrix::Zero(dim, dim);
    for (int a = 0; a < p.m(); ++a) {
        for (int b = 0; b < p.m(); ++b) {
            const ComplexMatrix cross = p.L[b].adjoint() * p.L[a];
            drift_exp +=
                q.D0(a, b) * (p.L[a] * rho * p.L[b].adjoint() - 0.5 * (cross * rho + rho * cross));
        }
    }
    rep.quantum_drift_discrepancy = max_abs(drift_diag - drift_exp);

    // Per-channel noise coefficient: sqrt(eta_k) M[c_k](rho) vs the Gamma expansion.
    std::vector<Complex> mean_l(p.m());
    for (int a = 0; a < p.m(); ++a) mean_l[a] = (p.L[a] * rho).trace();
    for (int k = 0; k < p.n(); ++k) {
        const ComplexMatrix noise_diag =
            std::sqrt(p.eta(k)) * innovation(p.channel_operator(k), rho);
        ComplexMatrix noise_exp = ComplexMatrix::Zero(dim, dim);
        for (int a = 0; a < p.m(); ++a) {
            noise_exp += std::sqrt(p.eta(k)) * p.Gamma(a, k) *
                         (p.L[a] * rho - mean_l[a] * rho);
            noise_exp += std::sqrt(p.eta(k)) * std::conj(p.Gamma(a, k)) *
                         (rho * p.L[a].adjoint() - std::conj(mean_l[a]) * rho);
        }
        rep.quantum_noise_discrepancy =
            std::max(rep.quantum_noise_discrepancy, max_abs(noise_diag - noise_exp));
    }

    // Classical drift of quantum origin: (G sqrt(eta)/2) tr[(c+c^+)rho] vs
    // D1^* <L> + D1 <L^+>.
    for (int a = 0; a < p.d(); ++a) {
        double diag_term = 0.0;
        for (int k = 0; k < p.n(); ++k) {
            const ComplexMatrix c = p.channel_operator(k);
            diag_term += 0.5 * p.G(a, k) * std::sqrt(p.eta(k)) *
                         ((c + ComplexMatrix(c.adjoint())) * rho).trace().real();
        }
        Complex exp_term = 0.0;
        for (int al = 0; al < p.m(); ++al)
            exp_term += std::conj(q.D1(a, al)) * mean_l[al] + q.D1(a, al) * std::conj(mean_l[al]);
        rep.classical_drift_discrepancy =
            std::max(rep.classical_drift_discrepancy, std::abs(diag_term - exp_term));
    }

    // Classical noise coefficient: G/2 vs sigma (definitional).
    rep.classical_noise_discrepancy = (0.5 * p.G - q.sigma).cwiseAbs().maxCoeff();

    rep.max_discrepancy =
        std::max({rep.quantum_drift_discrepancy, rep.quantum_noise_discrepancy,
                  rep.classical_drift_discrepancy, rep.classical_noise_discrepancy});
    return rep;
}

}  // namespace hybridyn
