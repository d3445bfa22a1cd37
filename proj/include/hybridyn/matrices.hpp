#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace hybridyn {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline const ComplexMatrix& pauli_x() {
    static const ComplexMatrix m = (ComplexMatrix(2, 2) << 0, 1, 1, 0).finished();
    return m;
}

inline const ComplexMatrix& pauli_y() {
    static const ComplexMatrix m =
        (ComplexMatrix(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished();
    return m;
}

inline const ComplexMatrix& pauli_z() {
    static const ComplexMatrix m = (ComplexMatrix(2, 2) << 1, 0, 0, -1).finished();
    return m;
}

/// sigma_- (lowering operator: maps |1> to |0>).
inline const ComplexMatrix& sigma_minus() {
    static const ComplexMatrix m = (ComplexMatrix(2, 2) << 0, 1, 0, 0).finished();
    return m;
}

inline bool all_finite(const ComplexMatrix& m) { return m.allFinite(); }

/// Max-norm departure from Hermiticity.
inline double hermiticity_defect(const ComplexMatrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = 1e-12) {
    return m.rows() == m.cols() && hermiticity_defect(m) <= tol;
}

inline double frobenius_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    return (a - b).norm();
}

inline double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

/// Kronecker (tensor) product, dim = dim(a)*dim(b).
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Partial trace over the second factor of a dimA*dimB system.
inline ComplexMatrix partial_trace_second(const ComplexMatrix& m, int dim_a, int dim_b) {
    if (m.rows() != Eigen::Index(dim_a) * dim_b || m.cols() != m.rows())
        throw std::invalid_argument("partial_trace_second: dimension mismatch");
    ComplexMatrix out = ComplexMatrix::Zero(dim_a, dim_a);
    for (int i = 0; i < dim_a; ++i)
        for (int j = 0; j < dim_a; ++j)
            for (int k = 0; k < dim_b; ++k) out(i, j) += m(i * dim_b + k, j * dim_b + k);
    return out;
}

inline double purity(const ComplexMatrix& rho) { return (rho * rho).trace().real(); }

/// Smallest eigenvalue of a Hermitian matrix (closed form for dim <= 2).
inline double min_eigenvalue(const ComplexMatrix& m) {
    const Eigen::Index n = m.rows();
    if (n == 1) return m(0, 0).real();
    if (n == 2) {
        const double a = m(0, 0).real();
        const double d = m(1, 1).real();
        const double off = std::norm(m(0, 1));
        const double mid = 0.5 * (a + d);
        return mid - std::sqrt(0.25 * (a - d) * (a - d) + off);
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace hybridyn
