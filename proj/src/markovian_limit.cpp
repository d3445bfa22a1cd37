#include "hybridyn/markovian_limit.hpp"

#include <cmath>
#include <sstream>

namespace hybridyn {

ComplexMatrix lindblad_rhs(const LindbladGenerator& gen, const ComplexMatrix& rho) {
    ComplexMatrix out = Complex(0, -1) * (gen.h_total * rho - rho * gen.h_total);
    for (const auto& j : gen.jump_ops) out += dissipator(j, rho);
    return out;
}

LindbladGenerator averaged_measurement_generator(const ComplexMatrix& h0,
                                                 const std::vector<MeasurementChannel>& channels) {
    LindbladGenerator gen;
    gen.h_total = h0;
    for (const auto& ch : channels) gen.jump_ops.push_back(ch.c);
    return gen;
}

namespace {

void check_feedback_args(const std::vector<MeasurementChannel>& channels,
                         const std::vector<ComplexMatrix>& feedback_ops) {
    if (channels.size() != feedback_ops.size())
        throw std::invalid_argument("feedback_ops must match channel count");
    for (std::size_t k = 0; k < channels.size(); ++k) {
        if (!is_hermitian(feedback_ops[k]))
            throw std::invalid_argument("feedback operator " + std::to_string(k) +
                                        " is not Hermitian");
        const bool nonzero = max_abs(feedback_ops[k]) > 0.0;
        if (nonzero && channels[k].eta <= 0.0)
            throw std::invalid_argument("feedback on channel " + std::to_string(k) +
                                        " requires eta > 0 (no signal exists at eta = 0)");
    }
}

}  // namespace

ComplexMatrix effective_potential(const std::vector<MeasurementChannel>& channels,
                                  const std::vector<ComplexMatrix>& feedback_ops) {
    check_feedback_args(channels, feedback_ops);
    if (channels.empty())
        throw std::invalid_argument("effective_potential: at least one channel required");
    const Eigen::Index dim = channels.front().c.rows();
    ComplexMatrix v = ComplexMatrix::Zero(dim, dim);
    for (std::size_t k = 0; k < channels.size(); ++k)
        v += 0.25 * (feedback_ops[k] * channels[k].c +
                     ComplexMatrix(channels[k].c.adjoint()) * feedback_ops[k]);
    return 0.5 * (v + v.adjoint().eval());
}

LindbladGenerator feedback_generator(const ComplexMatrix& h0,
                                     const std::vector<MeasurementChannel>& channels,
                                     const std::vector<ComplexMatrix>& feedback_ops) {
    check_feedback_args(channels, feedback_ops);
    LindbladGenerator gen;
    gen.h_total = h0 + effective_potential(channels, feedback_ops);
    for (std::size_t k = 0; k < channels.size(); ++k) {
        gen.jump_ops.push_back(channels[k].c - Complex(0, 0.5) * feedback_ops[k]);
        const double eta = channels[k].eta;
        if (eta < 1.0 && max_abs(feedback_ops[k]) > 0.0)
            gen.jump_ops.push_back(std::sqrt((1.0 - eta) / (4.0 * eta)) * feedback_ops[k]);
    }
    return gen;
}

double identity_check_eq28(const std::vector<MeasurementChannel>& channels,
                           const std::vector<ComplexMatrix>& feedback_ops,
                           const ComplexMatrix& rho) {
    check_feedback_args(channels, feedback_ops);
    const Eigen::Index dim = rho.rows();

    // Averaged feedback master equation, term by term.
    ComplexMatrix lhs = ComplexMatrix::Zero(dim, dim);
    for (std::size_t k = 0; k < channels.size(); ++k) {
        const ComplexMatrix& c = channels[k].c;
        const ComplexMatrix& b = feedback_ops[k];
        const ComplexMatrix sym = c * rho + rho * ComplexMatrix(c.adjoint());
        lhs += Complex(0, -0.5) * (b * sym - sym * b);
        lhs += dissipator(c, rho);
        if (max_abs(b) > 0.0) lhs += dissipator(b, rho) / (4.0 * channels[k].eta);
    }

    // Manifest Lindblad form via the generator builder (H0 = 0 here; the
    // commutator with H0 is common to both sides).
    const ComplexMatrix zero = ComplexMatrix::Zero(dim, dim);
    const ComplexMatrix rhs = lindblad_rhs(feedback_generator(zero, channels, feedback_ops), rho);
    return max_abs(lhs - rhs);
}

std::vector<ComplexMatrix> integrate_lindblad(const LindbladGenerator& gen,
                                              const ComplexMatrix& rho0, double dt, double T) {
    if (dt <= 0.0 || T <= 0.0) throw std::invalid_argument("integrate_lindblad: need dt, T > 0");
    double scale = gen.h_total.norm();
    for (const auto& j : gen.jump_ops) scale += j.squaredNorm();
    if (scale > 0.0 && dt > 1e-2 / scale) {
        std::ostringstream os;
        os << "integrate_lindblad: dt=" << dt << " exceeds heuristic bound 1e-2/||gen|| = "
           << 1e-2 / scale;
        throw std::invalid_argument(os.str());
    }

    const long n = long(std::ceil(T / dt - 1e-9));
    std::vector<ComplexMatrix> out;
    out.reserve(n + 1);
    out.push_back(rho0);
    ComplexMatrix r = rho0, k1, k2, k3, k4;
    for (long i = 0; i < n; ++i) {
        k1 = lindblad_rhs(gen, r);
        k2 = lindblad_rhs(gen, r + 0.5 * dt * k1);
        k3 = lindblad_rhs(gen, r + 0.5 * dt * k2);
        k4 = lindblad_rhs(gen, r + dt * k3);
        r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        r = 0.5 * (r + r.adjoint().eval());
        if (!all_finite(r) || std::abs(r.trace().real() - 1.0) > 1e-10 ||
            min_eigenvalue(r) < -1e-8) {
            std::ostringstream os;
            os << "integrate_lindblad: invariant violation at t=" << (i + 1) * dt;
            throw std::runtime_error(os.str());
        }
        out.push_back(r);
    }
    return out;
}

ComplexMatrix superoperator_matrix(const LindbladGenerator& gen) {
    const Eigen::Index d = gen.h_total.rows();
    const ComplexMatrix id = ComplexMatrix::Identity(d, d);
    // Column-stacking convention: vec(A X B) = (B^T kron A) vec(X).
    ComplexMatrix sup = Complex(0, -1) * (kron(id, gen.h_total) -
                                          kron(gen.h_total.transpose(), id));
    for (const auto& j : gen.jump_ops) {
        const ComplexMatrix q = j.adjoint() * j;
        sup += kron(j.conjugate(), j);
        sup -= 0.5 * kron(id, q);
        sup -= 0.5 * kron(q.transpose(), id);
    }
    return sup;
}

StationaryState stationary_state(const LindbladGenerator& gen) {
    const Eigen::Index d = gen.h_total.rows();
    const ComplexMatrix sup = superoperator_matrix(gen);
    Eigen::JacobiSVD<ComplexMatrix> svd(sup, Eigen::ComputeFullV);
    const RealVector& sv = svd.singularValues();
    const double cutoff = 1e-10 * (sv.size() ? sv(0) : 1.0);

    StationaryState out;
    out.min_singular_value = sv(sv.size() - 1);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) <= cutoff) ++out.null_dimension;
    if (out.null_dimension == 0)
        throw std::runtime_error("stationary_state: no null vector at cutoff 1e-10");

    // Project vec(I/d) onto the null space; for a unique stationary state this
    // reduces to the null vector itself after normalization.
    ComplexVector target(d * d);
    target.setZero();
    for (Eigen::Index i = 0; i < d; ++i) target(i * d + i) = 1.0 / double(d);
    ComplexVector proj = ComplexVector::Zero(d * d);
    for (Eigen::Index i = sv.size() - out.null_dimension; i < sv.size(); ++i) {
        const ComplexVector v = svd.matrixV().col(i);
        proj += v * (v.adjoint() * target);
    }
    ComplexMatrix rho(d, d);
    for (Eigen::Index col = 0; col < d; ++col)
        for (Eigen::Index row = 0; row < d; ++row) rho(row, col) = proj(col * d + row);
    rho = 0.5 * (rho + rho.adjoint().eval());
    const double tr = rho.trace().real();
    if (std::abs(tr) < 1e-12)
        throw std::runtime_error("stationary_state: traceless null-space projection");
    out.rho = rho / tr;
    return out;
}

double decoherence_rate(const LindbladGenerator& gen) {
    double rate = 0.0;
    for (const auto& j : gen.jump_ops) rate += j.squaredNorm();
    return rate;
}

}  // namespace hybridyn
