#pragma once

#include <utility>

#include "hybridyn/matrices.hpp"

namespace hybridyn {

/// Validated density matrix: Hermitian, unit trace, positive semidefinite
/// (within the stated tolerances).
class DensityMatrix {
  public:
    static constexpr double kHermTol = 1e-12;
    static constexpr double kTraceTol = 1e-10;
    static constexpr double kPsdTol = -1e-8;

    explicit DensityMatrix(ComplexMatrix m, double psd_tol = kPsdTol);

    const ComplexMatrix& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }

    /// |0><0| in the given dimension.
    static DensityMatrix ground(int dim);
    /// Maximally mixed state I/dim.
    static DensityMatrix maximally_mixed(int dim);
    /// Pure state from a (not necessarily normalized) ket.
    static DensityMatrix pure(const ComplexVector& ket);
    /// |+><+| for a qubit.
    static DensityMatrix plus();
    /// cos(theta)|0> + sin(theta)|1> projector.
    static DensityMatrix tilted(double theta);

  private:
    ComplexMatrix m_;
};

/// Measurement channel: arbitrary operator c with detector efficiency eta in [0,1].
struct MeasurementChannel {
    ComplexMatrix c;
    double eta = 1.0;

    MeasurementChannel() = default;
    MeasurementChannel(ComplexMatrix op, double efficiency);
};

/// D[c](rho) = c rho c^+ - 1/2 {c^+ c, rho}. Traceless for any c, rho.
ComplexMatrix dissipator(const ComplexMatrix& c, const ComplexMatrix& rho);

/// M[c](rho) = c rho + rho c^+ - tr[(c + c^+) rho] rho. Traceless; requires tr rho = 1.
ComplexMatrix innovation(const ComplexMatrix& c, const ComplexMatrix& rho);

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending, V unitary.
std::pair<RealVector, ComplexMatrix> hermitian_eigen(const ComplexMatrix& m);

/// Exactly unitary exp(-i h s) for Hermitian h, via eigendecomposition.
ComplexMatrix exp_antihermitian(const ComplexMatrix& h, double s);

}  // namespace hybridyn
