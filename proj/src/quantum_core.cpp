#include "hybridyn/quantum_core.hpp"

#include <cmath>

namespace hybridyn {

DensityMatrix::DensityMatrix(ComplexMatrix m, double psd_tol) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1)
        throw std::invalid_argument("DensityMatrix: matrix must be square and non-empty");
    if (!all_finite(m_)) throw std::invalid_argument("DensityMatrix: non-finite entries");
    if (hermiticity_defect(m_) > kHermTol)
        throw std::invalid_argument("DensityMatrix: not Hermitian within 1e-12");
    if (std::abs(m_.trace().real() - 1.0) > kTraceTol || std::abs(m_.trace().imag()) > kTraceTol)
        throw std::invalid_argument("DensityMatrix: trace differs from 1 beyond 1e-10");
    if (min_eigenvalue(m_) < psd_tol)
        throw std::invalid_argument("DensityMatrix: negative eigenvalue beyond tolerance");
}

DensityMatrix DensityMatrix::ground(int dim) {
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    m(0, 0) = 1.0;
    return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / double(dim));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& ket) {
    const double n2 = ket.squaredNorm();
    if (n2 <= 0.0) throw std::invalid_argument("DensityMatrix::pure: zero ket");
    return DensityMatrix(ket * ket.adjoint() / n2);
}

DensityMatrix DensityMatrix::plus() {
    ComplexVector k(2);
    k << 1.0, 1.0;
    return pure(k);
}

DensityMatrix DensityMatrix::tilted(double theta) {
    ComplexVector k(2);
    k << std::cos(theta), std::sin(theta);
    return pure(k);
}

MeasurementChannel::MeasurementChannel(ComplexMatrix op, double efficiency)
    : c(std::move(op)), eta(efficiency) {
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("MeasurementChannel: eta must lie in [0,1]");
}

ComplexMatrix dissipator(const ComplexMatrix& c, const ComplexMatrix& rho) {
    if (c.rows() != rho.rows() || c.cols() != rho.cols() || rho.rows() != rho.cols())
        throw std::invalid_argument("dissipator: dimension mismatch");
    const ComplexMatrix q = c.adjoint() * c;
    return c * rho * c.adjoint() - 0.5 * (q * rho + rho * q);
}

ComplexMatrix innovation(const ComplexMatrix& c, const ComplexMatrix& rho) {
    if (c.rows() != rho.rows() || c.cols() != rho.cols() || rho.rows() != rho.cols())
        throw std::invalid_argument("innovation: dimension mismatch");
    const ComplexMatrix sym = c * rho + rho * c.adjoint();
    return sym - sym.trace() * rho;
}

std::pair<RealVector, ComplexMatrix> hermitian_eigen(const ComplexMatrix& m) {
    if (!is_hermitian(m, 1e-10))
        throw std::invalid_argument("hermitian_eigen: input not Hermitian within 1e-10");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("hermitian_eigen: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

ComplexMatrix exp_antihermitian(const ComplexMatrix& h, double s) {
    if (!is_hermitian(h, 1e-12))
        throw std::invalid_argument("exp_antihermitian: h not Hermitian within 1e-12");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    const RealVector& lam = es.eigenvalues();
    ComplexVector phase(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        phase(i) = std::exp(Complex(0.0, -lam(i) * s));
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace hybridyn
